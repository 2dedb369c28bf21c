"""Exception types raised across the package."""


class ShadowNetError(Exception):
    pass


class TruncationTooCoarse(ShadowNetError, ValueError):
    """The truncation error eps_sigma(n) exceeds 1/2, so sigma_n is not defined."""


class CombinatorialBlowup(ShadowNetError):
    """Symbolic expansion would exceed the monomial budget."""


class FeatureBlowup(ShadowNetError):
    """Too many monomial features for regression."""


class SingularSystem(ShadowNetError, ValueError):
    pass


class DivergenceError(ShadowNetError, RuntimeError):
    """Training loss blew up."""
