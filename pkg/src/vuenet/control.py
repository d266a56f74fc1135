"""Per-pair transmit control: queue updates, DPP weights, water-filling.

The controller trades transmit power against queue backlog with two virtual
queues on top of the physical one: a reliability queue fed by threshold
crossings and an extreme-excess queue fed by how far crossings overshoot the
tail model's expectation.  Each slot reduces to a single coefficient alpha
multiplying the rate, and the power vector solving the per-slot problem is
water-filling over the zone's RBs.

Baselines keep the same machinery with parts removed: baseline2 drops the
extreme-excess queue, baseline1 keeps only backlog, fixed_power ignores the
queues entirely.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .radio import RadioConfig, rate

LN2 = float(np.log(2.0))
POWER_SUM_TOL = 1e-10
BUDGET_SLACK = 1e-9


class ControlError(ValueError):
    """Control parameters outside their domain."""


class Policy(Enum):
    PROPOSED = "proposed"
    BASELINE1 = "baseline1"
    BASELINE2 = "baseline2"
    FIXED_POWER = "fixed_power"


@dataclass(frozen=True)
class QueueState:
    q: float = 0.0
    upsilon: float = 0.0
    a_vq: float = 0.0

    def __post_init__(self):
        if self.q < 0 or self.upsilon < 0 or self.a_vq < 0:
            raise ControlError("queue components must be nonnegative")


@dataclass(frozen=True)
class ControlParams:
    V: float = 1e-3
    epsilon: float = 1e-3
    q0: float = 34720.0
    policy: Policy = Policy.PROPOSED
    fixed_power_w: float = 0.1

    def __post_init__(self):
        if self.V < 0:
            raise ControlError("V must be nonnegative")
        if not 0.0 < self.epsilon < 1.0:
            raise ControlError("epsilon must lie in (0, 1)")
        if self.q0 <= 0:
            raise ControlError("q0 must be positive")
        if self.fixed_power_w < 0:
            raise ControlError("fixed_power_w must be nonnegative")


@dataclass(frozen=True)
class SlotDecision:
    powers: np.ndarray
    lam: float
    rate_bits: float

    def __post_init__(self):
        object.__setattr__(self, "powers", np.asarray(self.powers, dtype=float))
        if (self.powers < 0).any():
            raise ControlError("powers must be nonnegative")


def update_queue(q: float, arrivals_bits: float, served_bits: float) -> float:
    """Backlog recursion q' = [q + a - r]+."""
    if arrivals_bits < 0 or served_bits < 0:
        raise ControlError("arrivals and service must be nonnegative")
    return max(q + arrivals_bits - served_bits, 0.0)


def update_virtual_queues(
    state: QueueState,
    q_next: float,
    params: ControlParams,
    gpd_mean: float,
) -> QueueState:
    """Advance the virtual queues; the crossing indicator reads the old q.

    The reliability queue charges every slot by (indicator - epsilon) times
    the new backlog; the excess queue charges crossings by the overshoot
    beyond the threshold plus the modeled mean excess.  Baselines that do
    not enforce a constraint freeze its queue at zero.
    """
    crossed = 1.0 if state.q > params.q0 else 0.0
    pol = params.policy
    if pol in (Policy.BASELINE1, Policy.FIXED_POWER):
        return QueueState(q=q_next, upsilon=0.0, a_vq=0.0)
    upsilon = max(state.upsilon + (crossed - params.epsilon) * q_next, 0.0)
    if pol is Policy.BASELINE2:
        return QueueState(q=q_next, upsilon=upsilon, a_vq=0.0)
    a_vq = max(state.a_vq + (q_next - params.q0 - gpd_mean) * crossed, 0.0)
    return QueueState(q=q_next, upsilon=upsilon, a_vq=a_vq)


def alpha_coeff(
    state: QueueState,
    params: ControlParams,
    gpd_mean: float,
    W_hz: float,
) -> float:
    """DPP rate weight for the slot's power problem; can be negative."""
    pol = params.policy
    if pol is Policy.FIXED_POWER:
        return 0.0
    if pol is Policy.BASELINE1:
        return (W_hz / LN2) * state.q
    eps = params.epsilon
    crossed = state.q > params.q0
    out = (1.0 + eps * eps) * state.q - eps * state.upsilon
    if crossed:
        bracket = 2.0 * (1.0 - eps) * state.q + state.upsilon - params.q0
        if pol is Policy.PROPOSED:
            bracket += state.a_vq - gpd_mean
        out += bracket
    return (W_hz / LN2) * out


def alpha_coeff_vec(q, upsilon, a_vq, params: ControlParams, gpd_mean, W_hz: float):
    """Per-pair alpha_coeff over state arrays; same arithmetic, same order."""
    q = np.asarray(q, dtype=float)
    pol = params.policy
    if pol is Policy.FIXED_POWER:
        return np.zeros_like(q)
    scale = W_hz / LN2
    if pol is Policy.BASELINE1:
        return scale * q
    upsilon = np.asarray(upsilon, dtype=float)
    eps = params.epsilon
    out = (1.0 + eps * eps) * q - eps * upsilon
    bracket = 2.0 * (1.0 - eps) * q + upsilon - params.q0
    if pol is Policy.PROPOSED:
        bracket = bracket + (np.asarray(a_vq, dtype=float) - gpd_mean)
    return scale * np.where(q > params.q0, out + bracket, out)


def update_virtual_queues_vec(
    q, upsilon, a_vq, q_next, params: ControlParams, gpd_mean
):
    """Vector twin of update_virtual_queues; returns (upsilon', a_vq')."""
    q = np.asarray(q, dtype=float)
    q_next = np.asarray(q_next, dtype=float)
    pol = params.policy
    if pol in (Policy.BASELINE1, Policy.FIXED_POWER):
        return np.zeros_like(q), np.zeros_like(q)
    crossed = (q > params.q0).astype(float)
    ups = np.maximum(
        np.asarray(upsilon, dtype=float) + (crossed - params.epsilon) * q_next, 0.0
    )
    if pol is Policy.BASELINE2:
        return ups, np.zeros_like(q)
    avq = np.maximum(
        np.asarray(a_vq, dtype=float) + (q_next - params.q0 - gpd_mean) * crossed, 0.0
    )
    return ups, avq


_DEAD_INV = 1e300


def _powers_at(lam: float, alpha: float, V: float, inv: np.ndarray, dead: np.ndarray) -> np.ndarray:
    denom = V + lam
    level = np.inf if denom == 0.0 else alpha / denom
    p = np.maximum(level - inv, 0.0)
    p[dead] = 0.0
    return p


def water_filling(alpha: float, gammas, V: float, P0: float) -> SlotDecision:
    """Solve the slot power problem: min V*sum(p) - alpha*sum(ln(1+gamma*p)).

    Closed form p_n = [alpha/(V+lambda) - 1/gamma_n]+ with lambda = 0 when
    the budget is slack, else bisected until |sum(p) - P0| < 1e-10.
    Nonpositive alpha or zero gains draw no power.
    """
    if P0 <= 0:
        raise ControlError("P0 must be positive")
    g = np.asarray(gammas, dtype=float)
    if (g < 0).any():
        raise ControlError("gammas must be nonnegative")
    zeros = np.zeros_like(g)
    if alpha <= 0 or not (g > 0).any():
        return SlotDecision(powers=zeros, lam=0.0, rate_bits=0.0)
    dead = g <= 0
    inv = np.where(dead, _DEAD_INV, 1.0 / np.where(dead, 1.0, g))
    p0_powers = _powers_at(0.0, alpha, V, inv, dead)
    if p0_powers.sum() <= P0:
        return SlotDecision(powers=p0_powers, lam=0.0, rate_bits=0.0)
    lo, hi = 0.0, alpha * float(g.max())
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        total = _powers_at(mid, alpha, V, inv, dead).sum()
        if abs(total - P0) < POWER_SUM_TOL:
            lo = hi = mid
            break
        if total > P0:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    return SlotDecision(powers=_powers_at(lam, alpha, V, inv, dead), lam=lam, rate_bits=0.0)


def batch_water_filling(
    alphas: np.ndarray,
    gammas: np.ndarray,
    V: float,
    P0: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact active-set water-filling over rows of (alpha, gamma vector).

    Sort-and-cumsum twin of water_filling for the slot loop: the water level
    over the m best RBs is (P0 + sum of their 1/gamma)/m, and the active
    count is the largest m whose level clears its m-th inverse gain.
    Returns (powers, lambdas).
    """
    if P0 <= 0:
        raise ControlError("P0 must be positive")
    a = np.asarray(alphas, dtype=float)
    g = np.asarray(gammas, dtype=float)
    u, n = g.shape
    powers = np.zeros((u, n))
    lams = np.zeros(u)
    if u == 0 or n == 0:
        return powers, lams
    live = (a > 0) & (g > 0).any(axis=1)
    if not live.any():
        return powers, lams
    big = _DEAD_INV
    inv = np.where(g > 0, 1.0 / np.where(g > 0, g, 1.0), big)
    inv_sorted = np.sort(inv, axis=1)
    csum = np.cumsum(inv_sorted, axis=1)
    m = np.arange(1, n + 1)
    levels = (P0 + csum) / m
    ok = levels > inv_sorted
    m_star = np.where(ok.any(axis=1), n - 1 - np.argmax(ok[:, ::-1], axis=1), 0)
    rows = np.arange(u)
    level_star = levels[rows, m_star]
    lam_binding = a / level_star - V
    lams = np.where(live, np.maximum(lam_binding, 0.0), 0.0)
    with np.errstate(divide="ignore"):
        water = np.where(V + lams > 0, a / (V + lams), np.inf)
    powers = np.maximum(water[:, None] - inv, 0.0)
    powers[~live] = 0.0
    powers[inv >= big] = 0.0
    return powers, lams


def decide(
    state: QueueState,
    params: ControlParams,
    gains,
    interference_est,
    gpd_mean: float,
    cfg: RadioConfig,
) -> SlotDecision:
    """Pick the slot's power vector for one pair under its policy.

    gamma_n folds the interference estimate into an effective gain; the
    reported rate is the one this allocation would deliver if the estimate
    were exact.
    """
    h = np.asarray(gains, dtype=float)
    i_est = np.asarray(interference_est, dtype=float)
    if params.policy is Policy.FIXED_POWER:
        n = h.shape[0]
        total = min(params.fixed_power_w, cfg.P0_w)
        powers = np.full(n, total / n) if n else np.zeros(0)
        predicted = rate(h, powers, i_est, cfg)
        return SlotDecision(powers=powers, lam=0.0, rate_bits=predicted)
    gammas = h / (i_est + cfg.noise_w)
    alpha = alpha_coeff(state, params, gpd_mean, cfg.W_hz)
    decision = water_filling(alpha, gammas, params.V, cfg.P0_w)
    predicted = rate(h, decision.powers, i_est, cfg)
    return SlotDecision(powers=decision.powers, lam=decision.lam, rate_bits=predicted)
