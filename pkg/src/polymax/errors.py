"""Exception hierarchy shared by all polymax modules."""


class PolymaxError(Exception):
    """Base class for all errors raised by this package."""


# -- moment / cumulant estimation -------------------------------------------

class DegenerateSample(PolymaxError):
    """Sample variance is zero (constant input)."""


class InsufficientData(PolymaxError):
    """Too few observations for the requested estimate."""


class UnsupportedDistribution(PolymaxError):
    """Distribution family not in the built-in catalogue."""


class OrderUnavailable(PolymaxError):
    """Requested moment order exceeds the stored cumulants."""


class InvalidShape(PolymaxError):
    """Shape coefficients violate a moment condition (e.g. 2 + gamma4 <= 0)."""


# -- stochastic polynomial apparatus -----------------------------------------

class DegenerateCorrelantMatrix(PolymaxError):
    """Centered correlant matrix is (numerically) singular: Gram volume ~ 0."""


class DimensionMismatch(PolymaxError):
    """Coefficient vector and correlant matrix sizes disagree."""


class IndexOutOfWindow(PolymaxError):
    """Lag-product basis evaluated before a full lag window is available."""


# -- estimators ---------------------------------------------------------------

class NoConvergence(PolymaxError):
    """Iterative solver exhausted its iteration budget."""


class AsymmetryDetected(PolymaxError):
    """Symmetric-shape precondition violated (|gamma3| too large)."""


class NonFiniteObjective(PolymaxError):
    """Objective evaluated to NaN/inf and damping could not recover."""


# -- Volterra adaptation -------------------------------------------------------

class SignalTooShort(PolymaxError):
    """Input sequence shorter than the kernel memory requires."""


class SingularSystem(PolymaxError):
    """Normal-equation Gram matrix is rank deficient and no ridge was given."""


class LengthMismatch(PolymaxError):
    """Flat coefficient vector length does not match the declared memory."""


# -- signal generation ---------------------------------------------------------

class InvalidSpec(PolymaxError):
    """Signal specification failed validation."""


# -- change-point detection -----------------------------------------------------

class IndistinguishableRegimes(PolymaxError):
    """Pre- and post-change basis means coincide: no score can separate them."""


class DriftViolation(PolymaxError):
    """Score does not drift downward under the pre-change regime."""


# -- harness --------------------------------------------------------------------

class ConfigError(PolymaxError):
    """Experiment configuration is invalid."""


class ParseError(PolymaxError):
    """Result file missing, malformed, or empty."""
