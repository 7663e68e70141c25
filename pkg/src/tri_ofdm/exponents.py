"""Tail-exponent estimation for persistence lifetime samples.

The decay of feature lifetimes is summarized by the exponent of the power law
Pr(l > eps) ~ C * eps**(-beta), estimated by ordinary least squares on the
log-log empirical survival function around its 80th-percentile scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .persistence import Lifetimes

MIN_LIFETIMES = 20
GRID_SIZE = 16
REFERENCE_PERCENTILE = 80.0


class ExponentError(ValueError):
    """Base class for exponent-estimation failures."""


class UnreliableEstimateError(ExponentError):
    """Too few lifetimes for a trustworthy fit.

    Carries the caller-supplied fallback exponent (the most recent valid
    estimate) so monitoring loops can hold their previous value instead of
    spiking.
    """

    def __init__(self, message: str, fallback_beta: float | None = None):
        super().__init__(message)
        self.fallback_beta = fallback_beta


class ZeroVarianceError(ExponentError):
    """All lifetimes identical: the survival function has no slope."""


@dataclass(frozen=True)
class ExponentEstimate:
    """OLS fit of the lifetime survival tail.

    Attributes
    ----------
    beta : float
        Estimated decay exponent, clamped below at 0.
    epsilon0 : float
        Reference lifetime (80th percentile of the sample).
    n_used : int
        Number of regression abscissae with nonzero survival mass.
    r_squared : float
        Coefficient of determination of the log-log fit.
    """

    beta: float
    epsilon0: float
    n_used: int
    r_squared: float

    def __post_init__(self):
        if self.beta < 0 or not np.isfinite(self.beta):
            raise ExponentError("beta must be finite and non-negative")
        if self.epsilon0 <= 0:
            raise ExponentError("epsilon0 must be positive")
        if self.n_used < 2:
            raise ExponentError("fit needs at least 2 regression points")


def estimate_exponent(
    lifetimes: Lifetimes | np.ndarray,
    fallback_beta: float | None = None,
) -> ExponentEstimate:
    """Estimate the lifetime tail exponent via log-log survival regression.

    The empirical survival function Pr(l > eps) is evaluated at GRID_SIZE
    log-spaced points spanning [eps0/2, 2*eps0] with eps0 the 80th percentile;
    points with zero survival mass are dropped and -slope of the OLS line is
    returned, clamped at 0.

    Raises
    ------
    UnreliableEstimateError
        Fewer than MIN_LIFETIMES strictly positive lifetimes; carries
        ``fallback_beta`` so the caller can hold its previous estimate.
    ZeroVarianceError
        All lifetimes equal (degenerate survival function).
    """
    values = lifetimes.values if isinstance(lifetimes, Lifetimes) else np.asarray(lifetimes, float)
    values = np.sort(values[values > 0])
    if values.size < MIN_LIFETIMES:
        raise UnreliableEstimateError(
            f"need >= {MIN_LIFETIMES} positive lifetimes, got {values.size}",
            fallback_beta=fallback_beta,
        )
    if values[0] == values[-1]:
        raise ZeroVarianceError("all lifetimes equal: survival function is a step")

    eps0 = float(np.percentile(values, REFERENCE_PERCENTILE))
    grid = np.geomspace(eps0 / 2.0, 2.0 * eps0, GRID_SIZE)
    survival = (values.size - np.searchsorted(values, grid, side="right")) / values.size
    keep = survival > 0
    grid, survival = grid[keep], survival[keep]
    if grid.size < 2:
        raise ZeroVarianceError("survival mass vanishes inside the regression window")

    x = np.log(grid)
    y = np.log(survival)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return ExponentEstimate(
        beta=max(0.0, -float(slope)),
        epsilon0=eps0,
        n_used=int(grid.size),
        r_squared=r_squared,
    )
