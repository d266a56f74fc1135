"""Generalized Pareto distribution (GPD) primitives for excess-queue modeling.

Scale/shape parameterization: density (1/sigma) * (1 + xi*m/sigma)^(-1-1/xi)
on m >= 0 (and m <= -sigma/xi when xi < 0), with the exponential limit
(1/sigma) * exp(-m/sigma) as xi -> 0.  The negative log-likelihood here is
always the per-sample mean; per-sample gradients are exposed separately for
stochastic fitting.

All functions are pure and never mutate their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Switch to the xi -> 0 series below this threshold; the general closed form
# loses precision as its 1/xi^2 terms cancel.
XI_LIMIT_SWITCH = 1e-8

# Feasible-set clamps used by project().  sigma stays strictly positive and
# xi strictly below 1 so the mean excess sigma/(1-xi) stays finite.
SIGMA_MIN = 1e-6
XI_MAX = 1.0 - 1e-6
SUPPORT_MARGIN = 1e-9


class GpdError(ValueError):
    """Base class for GPD parameter and domain violations."""


class ParameterError(GpdError):
    """Invalid distribution parameters (non-positive or non-finite scale)."""


class SupportError(GpdError):
    """Sample lies outside the distribution support."""


class UnboundedMeanError(GpdError):
    """Mean excess requested for a shape with no finite mean (xi >= 1)."""


class SingularGradientError(GpdError):
    """Gradient requested at a sample sitting on the support boundary."""


@dataclass(frozen=True)
class GpdParams:
    """Scale/shape pair.  sigma is in the same units as the excess samples."""

    sigma: float
    xi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise ParameterError(f"scale must be finite and positive, got {self.sigma!r}")
        if not math.isfinite(self.xi):
            raise ParameterError(f"shape must be finite, got {self.xi!r}")


def support_upper(params: GpdParams) -> float:
    """Upper end of the support: inf for xi >= 0, -sigma/xi otherwise."""
    if params.xi >= 0.0:
        return math.inf
    return -params.sigma / params.xi


def _check_support(params: GpdParams, m: np.ndarray) -> None:
    if m.size == 0:
        return
    if float(np.min(m)) < 0.0:
        raise SupportError("excess samples must be non-negative")
    hi = support_upper(params)
    if float(np.max(m)) > hi:
        raise SupportError(
            f"sample {float(np.max(m)):g} beyond support upper end {hi:g} "
            f"for sigma={params.sigma:g}, xi={params.xi:g}"
        )


def pdf(params: GpdParams, m):
    """Density at excess m (scalar or array).

    Raises SupportError outside [0, support_upper].
    """
    arr = np.asarray(m, dtype=float)
    _check_support(params, arr)
    x = arr / params.sigma
    if abs(params.xi) < XI_LIMIT_SWITCH:
        # first-order series in xi keeps the branch seam below 1e-8
        log_dens = -x + params.xi * x * (x - 2.0) / 2.0 - math.log(params.sigma)
    else:
        with np.errstate(divide="ignore"):
            log_dens = (-1.0 - 1.0 / params.xi) * np.log1p(params.xi * x) - math.log(params.sigma)
    out = np.exp(log_dens)
    return float(out) if np.isscalar(m) or arr.ndim == 0 else out


def survival(params: GpdParams, m):
    """Tail probability P(M > m); zero beyond the support upper end."""
    arr = np.asarray(m, dtype=float)
    if arr.size and float(np.min(arr)) < 0.0:
        raise SupportError("excess samples must be non-negative")
    x = np.minimum(arr / params.sigma, _x_upper(params.xi))
    if abs(params.xi) < XI_LIMIT_SWITCH:
        log_s = -x + params.xi * x * x / 2.0
    else:
        with np.errstate(divide="ignore"):
            log_s = (-1.0 / params.xi) * np.log1p(params.xi * x)
    out = np.exp(log_s)
    return float(out) if np.isscalar(m) or arr.ndim == 0 else out


def _x_upper(xi: float) -> float:
    return math.inf if xi >= 0.0 else -1.0 / xi


def nll(params: GpdParams, samples) -> float:
    """Mean negative log-likelihood of the samples under params."""
    q = np.asarray(samples, dtype=float).ravel()
    if q.size == 0:
        raise ValueError("nll needs at least one sample")
    _check_support(params, q)
    x = q / params.sigma
    if abs(params.xi) < XI_LIMIT_SWITCH:
        per = x - params.xi * x * (x - 2.0) / 2.0
    else:
        with np.errstate(divide="ignore"):
            per = (1.0 + 1.0 / params.xi) * np.log1p(params.xi * x)
    return math.log(params.sigma) + float(np.mean(per))


def _grad_scalar(sigma: float, xi: float, q: float) -> tuple[float, float]:
    """Per-sample NLL gradient, plain floats (hot path for stochastic steps)."""
    x = q / sigma
    g1 = 1.0 + xi * x
    if g1 <= 0.0:
        raise SingularGradientError(
            f"sample {q:g} on or beyond the support boundary for sigma={sigma:g}, xi={xi:g}"
        )
    d_sigma = (1.0 - x) / (sigma * g1)
    if abs(xi) < XI_LIMIT_SWITCH:
        d_xi = x - x * x / 2.0 + xi * (2.0 * x**3 / 3.0 - x * x)
    else:
        d_xi = (1.0 + 1.0 / xi) * x / g1 - math.log1p(xi * x) / (xi * xi)
    return d_sigma, d_xi


def nll_grad(params: GpdParams, sample: float) -> np.ndarray:
    """Gradient of the per-sample NLL w.r.t. (sigma, xi) at one sample.

    The sample must lie strictly inside the support (the boundary point
    -sigma/xi has a singular gradient).
    """
    if sample < 0.0:
        raise SupportError("excess samples must be non-negative")
    ds, dx = _grad_scalar(params.sigma, params.xi, float(sample))
    return np.array([ds, dx])


def _grad_many(sigma: float, xi: float, q: np.ndarray) -> np.ndarray:
    """Vectorized per-sample gradients, shape (len(q), 2)."""
    x = q / sigma
    g1 = 1.0 + xi * x
    if q.size and float(np.min(g1)) <= 0.0:
        raise SingularGradientError("sample on or beyond the support boundary")
    d_sigma = (1.0 - x) / (sigma * g1)
    if abs(xi) < XI_LIMIT_SWITCH:
        d_xi = x - x * x / 2.0 + xi * (2.0 * x**3 / 3.0 - x * x)
    else:
        d_xi = (1.0 + 1.0 / xi) * x / g1 - np.log1p(xi * x) / (xi * xi)
    return np.stack([d_sigma, d_xi], axis=1)


def mean_excess(params: GpdParams) -> float:
    """E[M] = sigma/(1-xi); defined only for xi < 1."""
    if params.xi >= 1.0:
        raise UnboundedMeanError(f"mean excess is unbounded for xi={params.xi:g}")
    return params.sigma / (1.0 - params.xi)


def _project_scalar(sigma: float, xi: float, q_max: float | None) -> tuple[float, float]:
    sigma = max(sigma, SIGMA_MIN)
    xi = min(xi, XI_MAX)
    if q_max is not None and q_max > 0.0:
        # the fixed margin underflows in 1 + xi*q/sigma once sigma/q_max
        # passes ~1e6, leaving the largest sample numerically on the
        # boundary; widen it with machine epsilon so the interior survives
        # rounding at any scale
        margin = max(SUPPORT_MARGIN, 32.0 * np.finfo(float).eps * sigma / q_max)
        lo = -sigma / q_max + margin
        if xi < lo:
            xi = lo
    return sigma, xi


def project(candidate: Sequence[float], samples=()) -> GpdParams:
    """Clamp a raw (sigma, xi) candidate onto the feasible set.

    sigma is clamped up to SIGMA_MIN, xi down to XI_MAX, and when samples are
    given xi is raised to -sigma/max(samples) + SUPPORT_MARGIN if any sample
    would fall outside the support.  Idempotent.
    """
    q = np.asarray(samples, dtype=float).ravel()
    q_max = float(np.max(q)) if q.size else None
    sigma, xi = _project_scalar(float(candidate[0]), float(candidate[1]), q_max)
    return GpdParams(sigma, xi)


def sample(params: GpdParams, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw excess samples by inverse CDF."""
    u = rng.random(size)
    if abs(params.xi) < XI_LIMIT_SWITCH:
        return -params.sigma * np.log1p(-u)
    return params.sigma * ((1.0 - u) ** -params.xi - 1.0) / params.xi
