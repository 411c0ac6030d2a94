"""Exception types shared across the package."""


class UnsupportedDimensionError(ValueError):
    """Sphere dimension outside the supported range 1..3."""


class UnsupportedEnsembleError(ValueError):
    """Operation not defined for this ensemble kind."""


class SphereDomainError(ValueError):
    """Input point violates a geometric precondition (not on the sphere,
    outside the injectivity radius, past the cut locus)."""


class GridExactnessError(ValueError):
    """Quadrature grid is not exact to the polynomial degree required."""


class BelowResolutionError(RuntimeError):
    """Sample values are too degenerate to resolve at the working resolution."""


class UnreliableCountError(RuntimeError):
    """Topological count carries too many ambiguous cells to be trusted."""


class UnresolvedTopologyError(RuntimeError):
    """Counts never stabilized across the refinement ladder."""


class NonRegularPointError(ValueError):
    """Gradient norm below the regularity threshold; the level set is not a
    manifold there at working precision."""


class DegenerateStratumError(RuntimeError):
    """The whole surface sits inside the target eigenvalue stratum, so
    isolated-point detection is meaningless (transversality fails)."""


class InvalidPatternError(ValueError):
    """Multiplicity pattern does not satisfy sum(i * w_i) == matrix size."""
