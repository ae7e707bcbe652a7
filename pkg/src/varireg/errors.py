"""Exception types shared across the package."""


class VariregError(Exception):
    """Base class for all library errors."""


class ZeroVariation(VariregError):
    """Curve has (numerically) zero total variation; registration is undefined."""

    def __init__(self, message="curve has zero total variation", curve_id=None):
        super().__init__(message)
        self.curve_id = curve_id


class EmptySample(VariregError):
    """An operation requiring at least one (or two) observations got fewer."""


class GridMismatch(VariregError):
    """Curves expected on a common grid were not."""


class EmptyWindow(VariregError):
    """A kernel window contains no data point; bandwidth too small for the grid."""

    def __init__(self, eval_point, suggested_bandwidth):
        super().__init__(
            f"no grid point within bandwidth at t={eval_point!r}; "
            f"need h > {suggested_bandwidth!r}"
        )
        self.eval_point = eval_point
        self.suggested_bandwidth = suggested_bandwidth


class SingularFit(VariregError):
    """Local least-squares fit is underdetermined at an evaluation point."""

    def __init__(self, eval_point):
        super().__init__(f"singular local fit at t={eval_point!r}")
        self.eval_point = eval_point


class AllCandidatesSingular(VariregError):
    """Every candidate bandwidth failed the leave-one-out window precondition."""


class NonMonotoneInput(VariregError):
    """Samples expected to be nondecreasing were not."""


class NotRankOne(VariregError):
    """Operation defined only for rank-1 latent models."""


class NonSymmetric(VariregError):
    """Matrix expected to be symmetric was not."""
