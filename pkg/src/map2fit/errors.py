"""Exception and warning types shared across the package."""


class Map2Error(Exception):
    """Base class for all map2fit errors."""


class SingularMatrix(Map2Error):
    """Matrix inversion or linear solve on a (numerically) singular matrix."""


class ComplexSpectrum(Map2Error):
    """Eigenvalue routine hit a matrix with genuinely complex eigenvalues."""


class ReducibleChain(Map2Error):
    """Stationary distribution requested for a reducible Markov chain."""


class InvalidModel(Map2Error):
    """Model parameters violate the constraints of their representation."""


class EmptySample(Map2Error):
    """Sample has too few observations for the requested statistic."""


class NonpositiveEntry(Map2Error):
    """Interarrival data must be strictly positive."""


class DegenerateVariance(Map2Error):
    """Sample or model variance is (numerically) zero."""


class NonErgodic(Map2Error):
    """The arrival process cannot generate the requested arrivals."""


class DegenerateLikelihood(Map2Error):
    """The model assigns zero density to the observed sequence."""


class NonpositiveScale(Map2Error):
    """Rescaling constants must be strictly positive."""


class NoFeasibleStart(Map2Error):
    """Every multistart candidate failed model validation."""


class OptimizerFailure(Map2Error):
    """Likelihood maximization could not produce a usable estimate."""


class DegenerateChainWarning(UserWarning):
    """The chain sits on a degenerate boundary (identity / non-ergodic)."""
