class ScatterShapeError(Exception):
    """Base class for every error raised by scatterShape"""


class ConfigError(ScatterShapeError, ValueError):
    """Invalid or inconsistent configuration"""


class ShapeMismatchError(ScatterShapeError, ValueError):
    """Array dimensions that should chain or agree do not"""


class DomainError(ScatterShapeError, ValueError):
    """Special function evaluated outside its domain"""


class ShearFreeError(ScatterShapeError, ValueError):
    """Elastic system requested for a material without shear stiffness.

    Callers should switch to the fluid-cylinder reduction.
    """


class SingularSystemError(ScatterShapeError, ArithmeticError):
    def __init__(self, order, magnitude):
        self.order = order
        self.magnitude = magnitude
        super().__init__(
            f"singular boundary system at order n={order} (|det|={magnitude:.3e})"
        )


class SolverError(ScatterShapeError, RuntimeError):
    def __init__(self, residual, iterations, frequency_index=None):
        self.residual = residual
        self.iterations = iterations
        self.frequency_index = frequency_index
        where = "" if frequency_index is None else f" at frequency index {frequency_index}"
        super().__init__(
            f"field solve did not converge{where}: residual {residual:.3e} "
            f"after {iterations} iterations"
        )

    def at_frequency(self, index):
        return SolverError(self.residual, self.iterations, index)


class DivergenceError(ScatterShapeError, ArithmeticError):
    def __init__(self, stage, epoch):
        self.stage = stage
        self.epoch = epoch
        super().__init__(f"{stage} training diverged (non-finite loss) at epoch {epoch}")


class FrozenModelError(ScatterShapeError, RuntimeError):
    """A parameter-frozen model changed during training"""


class ShardError(ScatterShapeError, IOError):
    pass


class CrcMismatchError(ShardError):
    pass


class TruncatedShardError(ShardError):
    pass


class UnknownVersionError(ShardError):
    pass


class CheckpointError(ScatterShapeError, IOError):
    pass


class KindMismatchError(CheckpointError):
    pass


class MissingArtifactError(ScatterShapeError, FileNotFoundError):
    """A pipeline stage needs an artifact an earlier stage has not produced"""


class StaleTapeError(ScatterShapeError, RuntimeError):
    """Backward pass requested with a tape recorded before the last parameter update"""
