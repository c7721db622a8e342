"""Exception types shared across the toolkit."""


class OctganError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(OctganError, ValueError):
    """Tensor dimensions incompatible with the requested operation."""


class NumericError(OctganError, ArithmeticError):
    """An operation produced non-finite values."""


class ConfigError(OctganError, ValueError):
    """Invalid configuration file, key, or value."""


class DatasetError(OctganError, RuntimeError):
    """No usable images, or a source that cannot be read."""


class CheckpointError(OctganError, RuntimeError):
    """Malformed, truncated, or incompatible checkpoint file."""


class DivergenceError(OctganError, RuntimeError):
    """Training produced a non-finite loss.

    Carries enough context to report where the run broke down.
    """

    def __init__(self, epoch, iteration, loss_d, loss_g):
        self.epoch = epoch
        self.iteration = iteration
        self.loss_d = loss_d
        self.loss_g = loss_g
        super().__init__(
            f"divergence at epoch {epoch}, iteration {iteration}: "
            f"loss_d={loss_d}, loss_g={loss_g}"
        )
