"""Error types shared by every module.

Each failure carries a stable machine-readable ``code`` so callers (and the
CLI) can branch on the kind of failure without parsing messages.
"""


class PowerlinError(Exception):
    """Base error: ``code`` names the failure, ``witness`` holds optional data."""

    def __init__(self, code, message="", witness=None):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message
        self.witness = witness


class ObstructionError(PowerlinError):
    """The computation finished and found a mathematical obstruction."""


class PreconditionError(PowerlinError):
    """An input violated a documented precondition."""


OBSTRUCTION_CODES = frozenset({"OBSTRUCTED", "CONDITIONS_VIOLATED"})


def fail(code, message="", witness=None):
    """Raise the error class matching ``code``."""
    cls = ObstructionError if code in OBSTRUCTION_CODES else PreconditionError
    raise cls(code, message, witness)
