"""Exception types shared across the package; the CLI maps them to exit codes."""


class UsageError(ValueError):
    """Bad arguments from a caller (exit code 2 at the command line)."""


class DecodeInfeasible(RuntimeError):
    """No perfect matching exists where one was required (exit code 3)."""


class FitDegenerate(RuntimeError):
    """The threshold fit cannot be performed on the supplied data (exit code 4)."""


class InternalError(AssertionError):
    """An invariant that should hold for all valid inputs was violated."""
