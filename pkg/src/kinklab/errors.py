"""Exception types shared across the package.

Every failure mode that a pipeline can hit maps to one of these, so the CLI
can distinguish configuration problems (exit 1), numerical failures (exit 2),
and validation mismatches (exit 3).
"""


class KinklabError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(KinklabError):
    """Invalid experiment configuration. Carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# --- model -----------------------------------------------------------------

class NonPositivePotentialInterior(KinklabError):
    """F(s) <= 0 detected strictly between the vacua."""


class QuadratureDivergence(KinklabError):
    """Kink profile failed to approach the vacua within the grid."""


# --- coeffs ----------------------------------------------------------------

class EllipticityViolation(KinklabError):
    """Second-order coefficient a(x) is not positive everywhere sampled."""


class NonInvertibleMap(KinklabError):
    """Coordinate change y(x) failed strict monotonicity numerically."""


# --- jost ------------------------------------------------------------------

class NoConvergence(KinklabError):
    """Picard iteration failed to contract within the iteration cap."""


class ThresholdParameter(KinklabError):
    """Spectral parameter at or above the essential-spectrum edge."""


class CrossCheckFailure(KinklabError):
    """Integral-equation and ODE back-integration routes disagree."""


class ParallelSolutions(KinklabError):
    """Companion solution numerically proportional to the one being extended
    (Wronskian below tolerance; the parameter sits at an eigenvalue)."""


class SlowDecayWarning(UserWarning):
    """Coefficients decay too slowly for the threshold theory to be reliable."""


# --- kink ------------------------------------------------------------------

class ZeroEigenvalueDetected(KinklabError):
    """Background operator has (numerically) a zero eigenvalue; the Green's
    function is singular. Carries the measured Wronskian at y = 0."""

    def __init__(self, w0: float, floor: float):
        self.w0 = w0
        self.floor = floor
        super().__init__(
            f"Wronskian at 0 is {w0:.3e}, below floor {floor:.3e}; "
            "zero is (close to) an eigenvalue of the background operator"
        )


class ContractionFailure(KinklabError):
    """Fixed-point map is not contracting. Carries the measured factor."""

    def __init__(self, factor: float):
        self.factor = factor
        super().__init__(f"measured contraction factor {factor:.3f} >= 1")


# --- spectral ----------------------------------------------------------------

class BracketCollision(KinklabError):
    """Two Evans-function roots appear to fall inside one scan cell; raise
    n_scan to separate them."""


class DegenerateResonance(KinklabError):
    """Threshold profile has (numerically) vanishing limits at infinity."""


# --- oracle ------------------------------------------------------------------

class ClusterTooTight(KinklabError):
    """Tridiagonal bisection cannot separate eigenvalues at working precision."""


class NonDifferentiableDrift(KinklabError):
    """No derivative available for the drift coefficient b."""


class UnresolvedThresholdWarning(UserWarning):
    """Requested eigenvalue sits too close to the threshold for the oracle's
    truncated-domain rule to resolve it."""


# --- nlkg --------------------------------------------------------------------

class CFLViolation(KinklabError):
    """Time step exceeds the stability limit of the explicit scheme."""


class NonFiniteField(KinklabError):
    """Field values overflowed or became NaN during time stepping."""
