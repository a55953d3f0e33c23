"""Exception hierarchy shared by all neasslab modules."""


class NeassLabError(Exception):
    """Base class for all package-specific errors."""


# -- lattice / Fock construction ------------------------------------------

class DimensionTooLarge(NeassLabError):
    """Requested lattice would exceed the exact-diagonalization Fock cap."""


class SiteOutOfRange(NeassLabError):
    pass


class ModeOutOfRange(NeassLabError):
    pass


class OddOperatorEmbedding(NeassLabError):
    """Only even operators can be embedded into a larger Fock space."""


class OddOperatorInput(NeassLabError):
    pass


class SupportNotContained(NeassLabError):
    pass


# -- interactions ---------------------------------------------------------

class NonHermitianHopping(NeassLabError):
    """Hopping table violates T(-x) = T(x)^dagger."""


class SubBoxTooLarge(NeassLabError):
    pass


# -- spectral analysis ----------------------------------------------------

class DegenerateGroundState(NeassLabError):
    """Ground state splitting below the degeneracy tolerance."""


class InteriorTooLarge(NeassLabError):
    """Operator-space dimension cap exceeded in the bulk-gap quadratic form."""


# -- Liouvillian / generator construction ---------------------------------

class ShapeMismatch(NeassLabError):
    pass


class GapBelowTolerance(NeassLabError):
    pass


class DegreeOverflow(NeassLabError):
    pass


class ResidualTooLarge(NeassLabError):
    """Order-by-order stationarity certificate failed.

    Signals a sign-convention or time-stencil failure; carries the order.
    """

    def __init__(self, order, residual, tolerance):
        self.order = order
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            f"stationarity residual at order {order}: "
            f"{residual:.3e} > tolerance {tolerance:.3e}"
        )


class SignConventionUndetermined(NeassLabError):
    """The orientation pinning protocol found no unique passing convention."""


# -- dynamics -------------------------------------------------------------

class StepLimitExceeded(NeassLabError):
    pass


class UnitarityLost(NeassLabError):
    pass


# -- harness --------------------------------------------------------------

class DynamicRangeTooSmall(NeassLabError):
    pass


class FloorContamination(NeassLabError):
    pass


class IoFailure(NeassLabError):
    pass


class ConfigError(NeassLabError):
    """Config file failed schema validation; message carries the location."""
