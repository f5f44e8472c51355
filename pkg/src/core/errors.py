"""
Exception and warning types shared by the numerical core, the compiler and the CLI.
The CLI maps the group bases (InputError, SynthesisError, ResourceError) to exit codes.
"""


class OQCCError(Exception):
    """Base class for every error raised by the toolkit."""


class InputError(OQCCError):
    """Invalid user input: malformed files, invalid states or channels."""


class SynthesisError(OQCCError):
    """A target could not be compiled into a control program."""


class ResourceError(OQCCError):
    """A configured resource cap would be exceeded."""


class DimensionMismatchError(InputError, ValueError):
    pass


class NotHermitianError(InputError, ValueError):
    pass


class InvalidStateError(InputError, ValueError):
    """Matrix is not a valid density matrix (trace or positivity violated)."""


class CompletenessViolationError(InputError, ValueError):
    """Kraus operators do not satisfy sum_k A_k^dag A_k = I."""


class NonConvergenceError(OQCCError, ArithmeticError):
    pass


class DomainError(OQCCError, ValueError):
    """A scalar function is undefined on part of a spectrum."""


class ZeroOperatorError(OQCCError, ArithmeticError):
    pass


class MatrixOverflowError(OQCCError, OverflowError):
    pass


class NegativeEigenvalueError(InputError, ValueError):
    pass


class NotTracelessError(InputError, ValueError):
    pass


class NegativeTimeError(InputError, ValueError):
    pass


class NotUnitTraceError(InputError, ValueError):
    pass


class NotPSDError(InputError, ValueError):
    pass


class ProgramStructureError(InputError, ValueError):
    """Control program violates the measure/branch structure rules."""


class SerializationError(InputError, ValueError):
    pass


class CouplingOutOfRangeError(SynthesisError, ValueError):
    pass


class BranchExplosionError(ResourceError, RuntimeError):
    pass


class NonTracelessWarning(UserWarning):
    """A Lindblad operator carried a trace component that was absorbed into H."""


class RankCollapseWarning(UserWarning):
    """A cascade outcome had numerically zero support and was dropped."""
