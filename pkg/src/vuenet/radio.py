"""Channel model for the Manhattan grid: path loss, fading, rates, interference.

Links are classified LOS / WLOS / NLOS from the lane geometry of their
endpoints and mapped to the three-branch power-law path loss.  Small-scale
fading is unit-mean exponential per RB per slot and can be switched off.
All gains are linear; config coefficients are entered in dB.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# below this separation the power law is evaluated at 1 m
NEAR_FIELD_M = 1.0


class RadioConfigError(ValueError):
    """Coefficient set breaks the LOS/NLOS consistency condition."""


class DegenerateGeometryError(ValueError):
    """NLOS evaluation with a zero coordinate difference."""


class LosClass(Enum):
    LOS = "los"
    WLOS = "wlos"
    NLOS = "nlos"


def _db_to_lin(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class RadioConfig:
    """Channel constants; defaults follow the evaluated urban setup."""

    ell_db: float = -68.5
    ell_prime_db: float = -54.5
    c: float = 1.61
    d0_m: float = 15.0
    W_hz: float = 180e3
    N0_dbm_hz: float = -174.0
    P0_w: float = 10.0
    slot_s: float = 1e-3
    fading: bool = True

    def __post_init__(self):
        if self.c <= 0 or self.d0_m <= 0 or self.W_hz <= 0:
            raise RadioConfigError("c, d0_m and W_hz must be positive")
        if self.P0_w <= 0 or self.slot_s <= 0:
            raise RadioConfigError("P0_w and slot_s must be positive")
        # NLOS must sit below LOS at the half-street scale, else the
        # three-branch law is not monotone across class boundaries
        if self.ell_prime_lin >= self.ell_lin * (self.d0_m / 2.0) ** self.c:
            raise RadioConfigError(
                "ell_prime must satisfy ell' < ell * (d0/2)^c in linear scale"
            )

    @property
    def ell_lin(self) -> float:
        return _db_to_lin(self.ell_db)

    @property
    def ell_prime_lin(self) -> float:
        return _db_to_lin(self.ell_prime_db)

    @property
    def noise_w(self) -> float:
        # PSD is dBm/Hz; -30 dB converts to dBW before widening to the RB
        return self.W_hz * _db_to_lin(self.N0_dbm_hz - 30.0)


@dataclass(frozen=True)
class LanePoint:
    """A vehicle position tied to its lane: travel axis and road centerline.

    axis 0 runs along x (road fixes y = road_m), axis 1 along y.
    """

    pos: tuple[float, float]
    axis: int
    road_m: float


@dataclass(frozen=True)
class LinkGain:
    """Linear power gains over the RBs assigned to the link's zone."""

    per_rb: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "per_rb", np.asarray(self.per_rb, dtype=float))
        if (self.per_rb < 0).any():
            raise ValueError("gains must be nonnegative")


def _wrap(delta, side_m):
    """Shortest signed difference on a ring of circumference side_m."""
    if side_m is None:
        return delta
    return delta - side_m * np.round(np.asarray(delta, dtype=float) / side_m)


def los_class(
    tx: LanePoint,
    rx: LanePoint,
    d0_m: float,
    side_m: float | None = None,
) -> LosClass:
    """Classify the tx->rx link from lane geometry.

    Same road (both lanes) is LOS.  Perpendicular roads are WLOS when either
    endpoint is within d0 of their shared intersection, NLOS beyond.
    Parallel distinct roads are NLOS.
    """
    if tx.axis == rx.axis:
        if tx.road_m == rx.road_m:
            return LosClass.LOS
        return LosClass.NLOS
    # exactly one endpoint travels along y; its road fixes the crossing x
    cross_x = tx.road_m if tx.axis == 1 else rx.road_m
    cross_y = tx.road_m if tx.axis == 0 else rx.road_m
    for point in (tx, rx):
        dx = _wrap(point.pos[0] - cross_x, side_m)
        dy = _wrap(point.pos[1] - cross_y, side_m)
        if float(np.hypot(dx, dy)) <= d0_m:
            return LosClass.WLOS
    return LosClass.NLOS


def path_loss(
    tx_pos,
    rx_pos,
    cls: LosClass,
    cfg: RadioConfig,
    side_m: float | None = None,
) -> float:
    """Linear gain of one link under the three-branch power law."""
    dx = float(_wrap(rx_pos[0] - tx_pos[0], side_m))
    dy = float(_wrap(rx_pos[1] - tx_pos[1], side_m))
    if cls is LosClass.LOS:
        d = max(np.hypot(dx, dy), NEAR_FIELD_M)
        return cfg.ell_lin * d ** (-cfg.c)
    if cls is LosClass.WLOS:
        d = max(abs(dx) + abs(dy), NEAR_FIELD_M)
        return cfg.ell_lin * d ** (-cfg.c)
    if dx == 0.0 or dy == 0.0:
        raise DegenerateGeometryError("NLOS link with a zero coordinate difference")
    area = max(abs(dx), NEAR_FIELD_M) * max(abs(dy), NEAR_FIELD_M)
    return cfg.ell_prime_lin * area ** (-cfg.c)


def channel_gain(
    pl: float,
    n_rb: int,
    cfg: RadioConfig,
    rng: np.random.Generator,
) -> LinkGain:
    """Per-RB gains for one slot: path loss times unit-mean fading draws."""
    if not cfg.fading:
        return LinkGain(np.full(n_rb, pl))
    return LinkGain(pl * rng.exponential(1.0, size=n_rb))


def rate(own_gain, powers, interference, cfg: RadioConfig) -> float:
    """Bits delivered in one slot over the link's RBs.

    Sum of W log2(1 + h p / (I + noise)) over RBs, times the slot length.
    """
    h = own_gain.per_rb if isinstance(own_gain, LinkGain) else np.asarray(own_gain, dtype=float)
    p = np.asarray(powers, dtype=float)
    i = np.asarray(interference, dtype=float)
    if p.shape != h.shape or i.shape != h.shape:
        raise ValueError("gain, power and interference vectors must align")
    if (p < 0).any():
        raise ValueError("powers must be nonnegative")
    snr = h * p / (i + cfg.noise_w)
    return float(cfg.slot_s * cfg.W_hz * np.log2(1.0 + snr).sum())


def update_interference_estimate(prev, measured, beta: float):
    """One EWMA step of the per-RB interference tracker."""
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must be in (0, 1]")
    prev = np.asarray(prev, dtype=float)
    measured = np.asarray(measured, dtype=float)
    return (1.0 - beta) * prev + beta * measured


def path_loss_matrix(
    tx_pos: np.ndarray,
    rx_pos: np.ndarray,
    axis: np.ndarray,
    road_m: np.ndarray,
    cfg: RadioConfig,
    side_m: float | None = None,
) -> np.ndarray:
    """All-pairs linear gains; entry [i, j] is transmitter j into receiver i.

    Vectorized twin of los_class + path_loss over the pair arrays.  Lane
    attributes are per pair: receiver i rides the same lane as transmitter i.
    Coordinate differences below the near-field clamp are evaluated at 1 m,
    which also bounds the NLOS branch for momentarily aligned parallel roads.
    """
    axis = np.asarray(axis)
    road_m = np.asarray(road_m, dtype=float)
    u = axis.shape[0]
    ax_r = axis[:, None]
    ax_t = axis[None, :]
    road_r = road_m[:, None]
    road_t = road_m[None, :]

    d = _wrap(tx_pos[None, :, :] - rx_pos[:, None, :], side_m)
    adx = np.abs(d[:, :, 0])
    ady = np.abs(d[:, :, 1])

    same_road = (ax_r == ax_t) & (road_r == road_t)
    perp = ax_r != ax_t

    # crossing point of the two roads in the perpendicular case
    cross_x = np.where(ax_t == 1, road_t, road_r)
    cross_y = np.where(ax_t == 0, road_t, road_r)
    tx_dist = np.hypot(
        _wrap(tx_pos[None, :, 0] - cross_x, side_m),
        _wrap(tx_pos[None, :, 1] - cross_y, side_m),
    )
    rx_dist = np.hypot(
        _wrap(rx_pos[:, None, 0] - cross_x, side_m),
        _wrap(rx_pos[:, None, 1] - cross_y, side_m),
    )
    wlos = perp & (np.minimum(tx_dist, rx_dist) <= cfg.d0_m)

    d2 = np.maximum(np.hypot(d[:, :, 0], d[:, :, 1]), NEAR_FIELD_M)
    d1 = np.maximum(adx + ady, NEAR_FIELD_M)
    area = np.maximum(adx, NEAR_FIELD_M) * np.maximum(ady, NEAR_FIELD_M)

    gain = cfg.ell_prime_lin * area ** (-cfg.c)
    gain = np.where(wlos, cfg.ell_lin * d1 ** (-cfg.c), gain)
    gain = np.where(same_road, cfg.ell_lin * d2 ** (-cfg.c), gain)
    return gain if u else gain.reshape(0, 0)
