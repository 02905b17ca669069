"""Exception types shared across the package."""


class NeuralRicciError(Exception):
    """Base class for all package errors."""


class InvalidInputError(NeuralRicciError, ValueError):
    """An argument violates a documented precondition."""


class NumericOverflowError(NeuralRicciError, ArithmeticError):
    """A forward pass produced a non-finite intermediate value."""


class TrainingError(NeuralRicciError, RuntimeError):
    """Training diverged; carries the epoch at which it happened."""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class InfeasibleTransportError(NeuralRicciError, RuntimeError):
    """No finite-cost feasible transport plan exists."""


class ModelFormatError(NeuralRicciError, ValueError):
    """A model file is malformed."""


class ModelVersionError(ModelFormatError):
    """Model file format version is not supported."""


class ModelChecksumError(ModelFormatError):
    """Model file checksum does not match its payload."""


class DataFormatError(NeuralRicciError, ValueError):
    """A dataset file is malformed (bad magic, truncation, count mismatch)."""


class UsageError(NeuralRicciError, ValueError):
    """Bad CLI/config usage; maps to exit code 2."""
