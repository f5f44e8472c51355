"""
Run tracker for compile, verify and convergence runs.
Keeps dataclass records of each run and optionally saves them as JSON analyses.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


@dataclass
class RunRecord:
    """One command run and its report."""
    kind: str
    label: str
    timestamp: str
    inputs: Dict[str, Any]
    report: Dict[str, Any]
    exit_code: int
    error_message: Optional[str] = None


@dataclass
class RunAnalysis:
    """Summary over the runs recorded in a session."""
    runs: List[RunRecord] = field(default_factory=list)
    failures: int = 0
    worst_distance: Optional[float] = None


class RunTracker:
    """Tracks runs and writes one JSON analysis per run when saving is enabled."""

    def __init__(self, results_dir: str = "./results", auto_save: bool = False):
        self.results_dir = results_dir
        self.auto_save = auto_save
        self.analysis = RunAnalysis()

        if auto_save:
            os.makedirs(results_dir, exist_ok=True)
            logger.info(f"Run tracker saving to {results_dir}")

    def record(
        self,
        kind: str,
        label: str,
        inputs: Dict[str, Any],
        report: Dict[str, Any],
        exit_code: int,
        error_message: Optional[str] = None,
    ) -> RunRecord:
        """Record a run and save it if enabled."""
        run = RunRecord(
            kind=kind,
            label=label,
            timestamp=datetime.now().isoformat(),
            inputs=dict(inputs),
            report=dict(report),
            exit_code=exit_code,
            error_message=error_message,
        )
        self.analysis.runs.append(run)
        if exit_code != 0:
            self.analysis.failures += 1
        distance = report.get("distance")
        if isinstance(distance, (int, float)):
            worst = self.analysis.worst_distance
            self.analysis.worst_distance = distance if worst is None else max(worst, distance)

        logger.debug(f"Recorded {kind} run {label} (exit {exit_code})")
        if self.auto_save:
            self.save(run)
        return run

    def save(self, run: RunRecord) -> str:
        safe_label = "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in run.label)
        filename = f"{run.kind}_{safe_label}_{datetime.now().strftime('%Y%m%d_%H%M%S_%f')}.json"
        filepath = os.path.join(self.results_dir, filename)
        with open(filepath, "w") as f:
            json.dump(asdict(run), f, indent=2, default=str)
        logger.info(f"Run analysis saved to {filepath}")
        return filepath

    def get_summary(self) -> Dict[str, Any]:
        return {
            "total_runs": len(self.analysis.runs),
            "failures": self.analysis.failures,
            "worst_distance": self.analysis.worst_distance,
            "kinds": sorted({r.kind for r in self.analysis.runs}),
        }
