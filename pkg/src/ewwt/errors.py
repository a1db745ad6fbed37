"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
error classes to process exit statuses without a lookup table of its own.
"""


class EWWTError(Exception):
    exit_code = 1


class InvalidInputError(EWWTError, ValueError):
    exit_code = 2


class DimensionMismatchError(InvalidInputError):
    pass


class SymmetryViolationError(InvalidInputError):
    """Raised when a result that must be real carries a large imaginary part."""


class EmptyPartitionError(EWWTError):
    exit_code = 3


class InvalidPartitionError(EWWTError):
    exit_code = 3


class PairingError(EWWTError):
    exit_code = 4


class FrameViolationError(EWWTError):
    exit_code = 4


class BankMismatchError(InvalidInputError):
    pass


class DivergenceError(EWWTError):
    exit_code = 5

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class ArtifactIOError(EWWTError, OSError):
    exit_code = 6
