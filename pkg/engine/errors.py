# engine/errors.py


class RefinementError(Exception):
    """Base class for every failure raised by the refinement pipeline."""


class InputError(RefinementError, ValueError):
    """Bad input data or configuration (message names the offending record)."""


class ContractViolation(RefinementError, RuntimeError):
    """An internal precondition was broken; signals a bug in the caller."""


class TaskFailure(RefinementError):
    """A pool task raised while refining a batch of clusters."""
