"""Exception types raised across the package.

Numerical diagnostics (residuals, truncation gaps) are reported on results;
exceptions are reserved for contract violations and hard failures.
"""


class PlanarWalkError(Exception):
    """Base class for all package errors."""


# --- step-law validation ---

class NotNormalized(PlanarWalkError):
    """Probabilities do not sum to 1 within tolerance."""


class NotSymmetric(PlanarWalkError):
    """p(x) != p(-x) for some support point."""


class ZeroProbabilityEntry(PlanarWalkError):
    """A support entry carries probability <= 0."""


class CovarianceMismatch(PlanarWalkError):
    """Covariance differs from the identity and identity was required."""


class NotAperiodic(PlanarWalkError):
    """Law could not be certified strongly aperiodic."""


# --- walking ---

class MaxStepsExceeded(PlanarWalkError):
    """Walk hit the step cap before exiting; either a bug or the cap is
    unreasonably small (expected exit times scale like radius**2)."""


# --- exact solvers ---

class BoxTooSmall(PlanarWalkError):
    """Convolution box loses more probability mass than budgeted."""


class DomainTooLarge(PlanarWalkError):
    """Domain exceeds the configured solver cap."""


class SolverDivergence(PlanarWalkError):
    """Linear solve failed to reach the residual target."""


class GeometryInvalid(PlanarWalkError):
    """Requested points/radii do not satisfy the operation's geometry."""


class TruncationBudgetExceeded(PlanarWalkError):
    """Exterior-domain truncation error exceeds the budget."""


# --- excursions ---

class LadderInvalid(PlanarWalkError):
    """Radii ladder violates its invariants."""


class TraceIncomplete(PlanarWalkError):
    """Excursion trace does not reach the outer exit."""


class InsufficientSamples(PlanarWalkError):
    """Not enough replicas for the requested diagnostic."""


# --- history combinatorics ---

class CapExceeded(PlanarWalkError):
    """Enumeration cap exceeded."""


class OutOfWindow(PlanarWalkError):
    """Arguments fall outside the Stirling-regime window."""


class PrecisionBudgetExceeded(PlanarWalkError):
    """High-precision evaluation could not reach the interval-width target."""


class DegenerateW(PlanarWalkError):
    """Paley-Zygmund bound undefined (mean zero)."""


# --- orchestration ---

class ConfigInvalid(PlanarWalkError):
    """Experiment configuration failed validation."""
