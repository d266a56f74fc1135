"""Slot-driven co-simulation of mobility, radio, queueing control and FL.

One run owns a fleet of transmitter/receiver pairs on the road grid.  Every
slot the pairs allocate power from their queue state, interfere with the
other pairs sharing their RB color, serve their queues and log traces.  On
the block cadence each pair turns its recent queue peaks into excess
samples, and on the slower FL cadence the pairs and the aggregator run one
synchronous round over the samples collected since the previous round, so
the tail model sharpens while the run is still going.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .control import (
    ControlParams,
    Policy,
    alpha_coeff_vec,
    batch_water_filling,
    update_virtual_queues_vec,
)
from .federated import LAYOUT, CommsLedger, GlobalModel, federated_round, init_model
from .gpd import mean_excess
from .mobility import GridSpec, assign_zones, init_fleet, step_mobility
from .radio import RadioConfig, path_loss_matrix


class SimulationError(ValueError):
    pass


# power/queue weight that keeps the proposed policy near the 0.1 W operating
# point under the default load; the headline value is recalibrated because a
# tiny V floods every slot with the full 10 W budget and a much larger one
# lets the reliability queues drive an interference feedback loop
DEFAULT_V = 1e11

# queues are tracked in bits; excess samples cross into the tail model in kb,
# the unit the threshold and the (50, 0) initialization are quoted in
EXCESS_UNIT_BITS = 1000.0


@dataclass(frozen=True)
class SimConfig:
    u_pairs: int = 20
    horizon_slots: int = 200_000
    # default load sits near the knee of the fixed-power service curve so the
    # policies separate without saturating the band
    arrival_mean_bits: float = 3000.0
    arrival_process: str = "poisson"
    block_len_w: int = 10
    fl_period_slots: int = 500
    seed: int = 0
    warmup_frac: float = 0.1
    n_rb_total: int = 60
    reuse: int = 2
    zone_cell_m: float = 125.0
    interference_beta: float = 0.05
    # mobility, zones and cross path loss refresh on this cadence; motion per
    # slot is sub-centimeter so the default only skips numerically idle work
    geometry_refresh_slots: int = 25
    fl_step: tuple[float, float] = (50.0, 0.5)
    fl_init_sigma: float = 50.0
    fl_init_xi: float = 0.0
    fl_init_grad: tuple[float, float] = (0.0, 0.0)
    # learner buffers are sliding windows: a pair abstains until it holds
    # fl_min_samples (the per-visit step is step/K_u, so fitting a handful
    # of samples takes strides wild enough to leave the feasible region),
    # and never carries more than fl_buffer_cap samples into a round
    fl_min_samples: int = 8
    fl_buffer_cap: int = 500
    record_flows: bool = False
    radio: RadioConfig = field(default_factory=RadioConfig)
    grid: GridSpec = field(default_factory=GridSpec)
    control: ControlParams = field(default_factory=lambda: ControlParams(V=DEFAULT_V))

    def __post_init__(self):
        if self.u_pairs < 1:
            raise SimulationError("need at least one pair")
        if self.block_len_w < 1:
            raise SimulationError("block length must be positive")
        if self.horizon_slots < self.block_len_w:
            raise SimulationError("horizon must cover at least one block")
        if self.arrival_mean_bits < 0:
            raise SimulationError("arrival mean must be nonnegative")
        if self.arrival_process not in ("poisson", "deterministic"):
            raise SimulationError("arrival_process must be poisson or deterministic")
        if self.fl_period_slots < 1 or self.geometry_refresh_slots < 1:
            raise SimulationError("cadences must be positive")
        if not 0.0 <= self.warmup_frac < 1.0:
            raise SimulationError("warmup_frac must lie in [0, 1)")
        if not 0.0 < self.interference_beta <= 1.0:
            raise SimulationError("interference_beta must lie in (0, 1]")
        if self.fl_min_samples < 1 or self.fl_buffer_cap < self.fl_min_samples:
            raise SimulationError("need fl_buffer_cap >= fl_min_samples >= 1")

    @property
    def warmup_slots(self) -> int:
        return int(self.warmup_frac * self.horizon_slots)


@dataclass
class SimTraces:
    q_bits: np.ndarray
    power_w: np.ndarray
    arrivals_bits: Optional[np.ndarray] = None
    served_bits: Optional[np.ndarray] = None
    samples: list = field(default_factory=list)


@dataclass
class MetricsReport:
    avg_power_w: float
    avg_latency_ms: float
    outage_prob: float
    avg_excess_kb: Optional[float]
    per_vue: dict = field(default_factory=dict)
    comms: CommsLedger = field(default_factory=CommsLedger)
    gpd_sigma: float = float("nan")
    gpd_xi: float = float("nan")
    fl_rounds: int = 0
    traces: Optional[SimTraces] = None


def sample_block_maxima(queue_trace, w: int, q0: float) -> np.ndarray:
    """Nonzero per-block peaks of the excess (q - q0)+ over w-slot windows.

    Only full windows count; blocks that never cross the threshold carry no
    tail information and are dropped.
    """
    q = np.asarray(queue_trace, dtype=float).ravel()
    if w < 1:
        raise SimulationError("block length must be positive")
    if q.size < w:
        raise SimulationError("trace shorter than one block")
    n = q.size // w
    peaks = np.maximum(q[: n * w].reshape(n, w) - q0, 0.0).max(axis=1)
    return peaks[peaks > 0.0]


def _tail_mean(model: GlobalModel, q0: float) -> float:
    # the modeled mean excess feeds the control bracket; back to bits, and
    # capped at the threshold so a heavy-tail estimate cannot flip the
    # weight's sign
    return min(mean_excess(model.params) * EXCESS_UNIT_BITS, q0)


def run(config: SimConfig) -> MetricsReport:
    """Simulate the full horizon and reduce it to a MetricsReport."""
    cfg = config.radio
    ctrl = config.control
    u = config.u_pairs
    horizon = config.horizon_slots
    n_rb = config.n_rb_total // config.reuse if config.reuse == 2 else config.n_rb_total

    ss = np.random.SeedSequence(config.seed)
    seq_mob, seq_fade, seq_xfade, seq_arr = ss.spawn(4)
    rng_mob = np.random.default_rng(seq_mob)
    rng_fade = np.random.default_rng(seq_fade)
    rng_xfade = np.random.default_rng(seq_xfade)
    rng_arr = np.random.default_rng(seq_arr)

    fleet = init_fleet(u, config.grid, rng_mob)
    zones = assign_zones(config.grid, config.n_rb_total, config.reuse, config.zone_cell_m)
    pl_direct = cfg.ell_lin * fleet.gap_m ** -cfg.c

    model = init_model(config.fl_init_sigma, config.fl_init_xi, config.fl_init_grad)
    tail_mean = _tail_mean(model, ctrl.q0)
    ledger = CommsLedger()
    round_index = 0

    q = np.zeros(u)
    upsilon = np.zeros(u)
    a_vq = np.zeros(u)
    i_est = np.zeros((u, n_rb))
    window_peak = np.zeros(u)
    buffers: list[list[float]] = [[] for _ in range(u)]
    all_samples: list[list[float]] = [[] for _ in range(u)]

    q_tr = np.empty((horizon, u))
    p_tr = np.empty((horizon, u))
    a_tr = np.empty((horizon, u)) if config.record_flows else None
    s_tr = np.empty((horizon, u)) if config.record_flows else None

    fixed = ctrl.policy is Policy.FIXED_POWER
    fixed_total = min(ctrl.fixed_power_w, cfg.P0_w)
    beta = config.interference_beta
    noise = cfg.noise_w
    rate_scale = cfg.slot_s * cfg.W_hz
    deterministic = config.arrival_process == "deterministic"
    refresh = config.geometry_refresh_slots

    colors = None
    cross = None
    for t in range(horizon):
        if t % refresh == 0:
            fleet = step_mobility(fleet, cfg.slot_s * refresh, rng_mob)
            tx = fleet.tx_pos()
            rx = fleet.rx_pos()
            colors = zones.color_of(tx)
            cross = path_loss_matrix(
                tx, rx, fleet.axis, fleet.road_m(), cfg, config.grid.side_m
            )
            np.fill_diagonal(cross, 0.0)
            same_color = colors[:, None] == colors[None, :]
            cross = np.where(same_color, cross, 0.0)

        if cfg.fading:
            h = pl_direct * rng_fade.exponential(1.0, size=(u, n_rb))
            gains_x = cross * rng_xfade.exponential(1.0, size=(u, u))
        else:
            h = np.full((u, n_rb), pl_direct)
            gains_x = cross

        if fixed:
            powers = np.full((u, n_rb), fixed_total / n_rb)
        else:
            alphas = alpha_coeff_vec(q, upsilon, a_vq, ctrl, tail_mean, cfg.W_hz)
            gammas = h / (i_est + noise)
            powers, _ = batch_water_filling(alphas, gammas, ctrl.V, cfg.P0_w)

        i_true = np.einsum("ij,jn->in", gains_x, powers, optimize=False)
        served = rate_scale * np.log2(1.0 + h * powers / (i_true + noise)).sum(axis=1)

        if deterministic:
            arrivals = np.full(u, config.arrival_mean_bits)
        else:
            arrivals = rng_arr.poisson(config.arrival_mean_bits, u).astype(float)

        q_next = np.maximum(q + arrivals - served, 0.0)
        upsilon, a_vq = update_virtual_queues_vec(
            q, upsilon, a_vq, q_next, ctrl, tail_mean
        )
        q = q_next
        i_est = (1.0 - beta) * i_est + beta * i_true

        q_tr[t] = q
        p_tr[t] = powers.sum(axis=1)
        if config.record_flows:
            a_tr[t] = arrivals
            s_tr[t] = served

        np.maximum(window_peak, q - ctrl.q0, out=window_peak)
        if (t + 1) % config.block_len_w == 0:
            for i in np.nonzero(window_peak > 0.0)[0]:
                peak_kb = window_peak[i] / EXCESS_UNIT_BITS
                buffers[i].append(peak_kb)
                all_samples[i].append(peak_kb)
            window_peak[:] = 0.0

        if (t + 1) % config.fl_period_slots == 0:
            shards = [
                np.asarray(b[-config.fl_buffer_cap :], dtype=float)
                if len(b) >= config.fl_min_samples
                else np.empty(0)
                for b in buffers
            ]
            model, contributed = federated_round(
                model, shards, config.fl_step, config.seed, round_index
            )
            ledger.downlink_bytes += u * LAYOUT.model_bytes
            ledger.uplink_bytes += contributed * LAYOUT.model_bytes
            ledger.rounds += 1
            round_index += 1
            buffers = [b[-config.fl_buffer_cap :] for b in buffers]
            tail_mean = _tail_mean(model, ctrl.q0)

    traces = SimTraces(
        q_bits=q_tr,
        power_w=p_tr,
        arrivals_bits=a_tr,
        served_bits=s_tr,
        samples=[np.asarray(s, dtype=float) for s in all_samples],
    )
    report = compute_metrics(traces, config)
    report.comms = ledger
    report.gpd_sigma = model.params.sigma
    report.gpd_xi = model.params.xi
    report.fl_rounds = ledger.rounds
    return report


def compute_metrics(traces: SimTraces, config: SimConfig) -> MetricsReport:
    """Reduce post-warmup traces to the headline metrics."""
    warm = config.warmup_slots
    q = traces.q_bits[warm:]
    p = traces.power_w[warm:]
    if q.size == 0:
        raise SimulationError("no post-warmup slots to reduce")
    q0 = config.control.q0
    over = q > q0
    outage = float(over.mean())
    excess = q[over] - q0
    avg_excess_kb = float(excess.mean() / 1e3) if excess.size else None
    slot_ms = config.radio.slot_s * 1e3
    if config.arrival_mean_bits > 0:
        latency = float(q.mean() / config.arrival_mean_bits * slot_ms)
        per_latency = q.mean(axis=0) / config.arrival_mean_bits * slot_ms
    else:
        latency = 0.0
        per_latency = np.zeros(q.shape[1])
    per_vue = {
        "avg_power_w": p.mean(axis=0),
        "outage_prob": over.mean(axis=0),
        "mean_queue_bits": q.mean(axis=0),
        "avg_latency_ms": per_latency,
        "n_tail_samples": np.array([s.size for s in traces.samples]),
    }
    return MetricsReport(
        avg_power_w=float(p.mean()),
        avg_latency_ms=latency,
        outage_prob=outage,
        avg_excess_kb=avg_excess_kb,
        per_vue=per_vue,
        traces=traces,
    )
