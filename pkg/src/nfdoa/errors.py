"""Exceptions that the command-line interface maps onto exit codes."""


class ConfigurationError(ValueError):
    """A run configuration could not be parsed or contains unknown keys."""


class PhaseMapDomainError(ValueError):
    """The phase-mapping layer received a non-positive real part."""


class NumericalError(ArithmeticError):
    """A numerical procedure failed to produce a usable result."""


class EigenSolverError(NumericalError):
    """
    The Jacobi eigen-solver did not converge within its sweep cap.

    :param residual: The off-diagonal Frobenius norm when iteration stopped.
    :param threshold: The convergence threshold that was not reached.
    :param sweeps: The number of sweeps performed.
    """

    def __init__(self, residual, threshold, sweeps):
        self.residual = residual
        self.threshold = threshold
        self.sweeps = sweeps
        super().__init__(
            'Jacobi solver did not converge after {} sweeps: off-diagonal '
            'norm {:.3e} > threshold {:.3e}'.format(sweeps, residual,
                                                    threshold))

    def __reduce__(self):
        return (type(self), (self.residual, self.threshold, self.sweeps))


class TrainingDivergedError(NumericalError):
    """The training loss became NaN or infinite."""

    def __init__(self, epoch, batch, loss, max_param):
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
        self.max_param = max_param
        super().__init__(
            'Training diverged at epoch {} batch {}: loss = {}, largest '
            '|parameter| = {:.3e}'.format(epoch, batch, loss, max_param))

    def __reduce__(self):
        return (type(self), (self.epoch, self.batch, self.loss, self.max_param))
