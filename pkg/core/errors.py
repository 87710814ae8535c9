"""Exception types shared across the package.

Everything a user can trigger with bad input is a ValueError underneath, so
the CLI can map it to exit code 1. Numerical blow-ups are ArithmeticErrors.
"""


class MSTGNError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(MSTGNError, ValueError):
    """Invalid configuration: kernel widths, layouts, scales, config keys."""


class DimensionError(MSTGNError, ValueError):
    """Tensor shapes that do not line up."""


class ContractError(MSTGNError, ValueError):
    """A caller broke an operation's precondition."""


class SequenceParseError(MSTGNError, ValueError):
    """A skeleton document could not be read."""


class EmptyInputError(MSTGNError, ValueError):
    """Nothing to work with: zero frames, empty manifest."""


class NonFiniteError(MSTGNError, ArithmeticError):
    """An operation produced NaN or Inf."""


class TrainingDivergedError(NonFiniteError):
    """Loss or gradients went non-finite during training."""

    def __init__(self, epoch: int, batch: int, detail: str):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"training diverged at epoch {epoch}, batch {batch}: {detail}")
