"""
Configuration for the compiler toolkit.
Holds tolerances, resource caps and output settings; values come from
defaults, then oqcc_config.json, then environment variables (.env supported).
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Optional

import psutil
from dotenv import load_dotenv

from src.control.primitive import DEFAULT_REPETITIONS
from src.control.simulator import DEFAULT_BRANCH_CAP
from src.core.channels import COMPLETENESS_TOL, PROBABILITY_FLOOR
from src.core.matcore import PINV_RELCUT

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = "oqcc_config.json"

ENV_BRANCH_CAP = "OQCC_BRANCH_CAP"
ENV_WORKERS = "OQCC_TRAJECTORY_WORKERS"
ENV_CONFIG = "OQCC_CONFIG"


def default_workers() -> int:
    """Physical core count, 1 when psutil cannot tell."""
    cores = psutil.cpu_count(logical=False)
    return cores if cores else 1


@dataclass
class ToolkitConfig:
    """Main configuration for compile / simulate / verify runs."""

    # Tolerances
    completeness_tol: float = COMPLETENESS_TOL
    probability_floor: float = PROBABILITY_FLOOR
    pinv_relcut: float = PINV_RELCUT
    default_verify_tol: float = 1e-8

    # Resources
    branch_cap: int = DEFAULT_BRANCH_CAP
    trajectory_workers: Optional[int] = None

    # Averaging schedules
    averaging_repetitions: int = DEFAULT_REPETITIONS
    schedule_duration: float = 1.0

    # Results
    results_dir: str = "./results"
    auto_save_results: bool = False

    def __post_init__(self):
        if self.trajectory_workers is None:
            self.trajectory_workers = default_workers()


class ToolkitConfigManager:
    """Loads, validates and saves the toolkit configuration."""

    def __init__(self, config_file: Optional[str] = None):
        load_dotenv()
        self.config_file = config_file or os.getenv(ENV_CONFIG, DEFAULT_CONFIG_FILE)
        self.config = self.load_config()

    def load_config(self) -> ToolkitConfig:
        """Load configuration from file, then apply environment overrides."""
        config = ToolkitConfig()
        if os.path.exists(self.config_file):
            try:
                with open(self.config_file, "r") as f:
                    data = json.load(f)
                known = {f.name for f in fields(ToolkitConfig)}
                for key, value in data.items():
                    if key in known:
                        setattr(config, key, value)
                    else:
                        logger.warning(f"Ignoring unknown config key '{key}' in {self.config_file}")
            except (OSError, json.JSONDecodeError) as e:
                logger.error(f"Error loading config {self.config_file}: {e}")
                config = ToolkitConfig()
        self._apply_env(config)
        return config

    def _apply_env(self, config: ToolkitConfig):
        for var, attr in ((ENV_BRANCH_CAP, "branch_cap"), (ENV_WORKERS, "trajectory_workers")):
            raw = os.getenv(var)
            if raw is None or raw == "":
                continue
            try:
                setattr(config, attr, int(raw))
                logger.debug(f"{attr} = {raw} from {var}")
            except ValueError:
                logger.warning(f"Ignoring {var}={raw!r}: not an integer")

    def save_config(self):
        """Save configuration to file."""
        try:
            with open(self.config_file, "w") as f:
                json.dump(asdict(self.config), f, indent=2)
        except OSError as e:
            logger.error(f"Error saving config: {e}")

    def validate_config(self) -> List[str]:
        """Validate configuration and return list of issues."""
        issues = []
        c = self.config

        for name in ("completeness_tol", "probability_floor", "pinv_relcut", "default_verify_tol"):
            value = getattr(c, name)
            if not isinstance(value, (int, float)) or not value > 0:
                issues.append(f"{name} must be a positive number")

        if not isinstance(c.branch_cap, int) or c.branch_cap < 1:
            issues.append("branch_cap must be a positive integer")
        if not isinstance(c.trajectory_workers, int) or c.trajectory_workers < 1:
            issues.append("trajectory_workers must be a positive integer")
        if not isinstance(c.averaging_repetitions, int) or c.averaging_repetitions < 1:
            issues.append("averaging_repetitions must be a positive integer")
        if not isinstance(c.schedule_duration, (int, float)) or not c.schedule_duration > 0:
            issues.append("schedule_duration must be positive")
        if c.auto_save_results and not c.results_dir:
            issues.append("results_dir is required when auto_save_results is enabled")

        return issues

    def get_config_summary(self) -> Dict[str, Any]:
        """Get a summary of the current configuration."""
        issues = self.validate_config()
        summary = asdict(self.config)
        summary.update({
            "config_file": self.config_file,
            "config_valid": len(issues) == 0,
            "validation_issues": issues,
        })
        return summary
