"""Federated fitting of tail parameters with variance-reduced local epochs.

Each learner holds its own excess samples and never uploads them.  A round is:
broadcast the global model, every learner runs one permuted pass of projected
SVRG over its buffer, uploads (gradient, params, sample count), and the
aggregator folds the uploads back in with sample-count weights.

Uploaded gradients are per-sample sums, so dividing the pooled upload by the
total sample count gives the mean gradient the next epoch anchors on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gpd import (
    GpdParams,
    SupportError,
    _grad_many,
    _grad_scalar,
    _project_scalar,
    nll,
    project,
)


class NoDataError(ValueError):
    """Aggregation requested with zero samples behind it."""


@dataclass(frozen=True)
class MessageLayout:
    """Wire sizes: IEEE-754 binary64 scalars and 8-byte unsigned counts."""

    scalar_bytes: int = 8
    count_bytes: int = 8

    @property
    def model_bytes(self) -> int:
        # 2 gradient scalars + 2 parameter scalars + 1 sample count
        return 4 * self.scalar_bytes + self.count_bytes

    @property
    def params_bytes(self) -> int:
        return 2 * self.scalar_bytes

    def sample_upload_bytes(self, n_samples: int) -> int:
        return self.scalar_bytes * n_samples


LAYOUT = MessageLayout()


@dataclass(frozen=True)
class LocalModel:
    """One learner's upload: summed per-sample gradients at its params."""

    grad: np.ndarray
    params: GpdParams
    sample_count: int


@dataclass(frozen=True)
class GlobalModel:
    """Aggregator state: mean per-sample gradient over all contributors."""

    grad: np.ndarray
    params: GpdParams
    total_samples: int


@dataclass
class CommsLedger:
    uplink_bytes: int = 0
    downlink_bytes: int = 0
    rounds: int = 0
    # messages that carried raw samples; stays 0 on the federated path
    raw_sample_messages: int = 0

    def as_dict(self) -> dict:
        return {
            "uplink_bytes": self.uplink_bytes,
            "downlink_bytes": self.downlink_bytes,
            "rounds": self.rounds,
            "raw_sample_messages": self.raw_sample_messages,
        }


@dataclass(frozen=True)
class FitResult:
    params: GpdParams
    ledger: CommsLedger
    nll_trace: list[float] = field(default_factory=list)


def aggregate(previous: GlobalModel, local_models: Sequence[LocalModel]) -> GlobalModel:
    """Sample-count-weighted fold of learner uploads into the global model.

    params move by sum_u (K_u / K) * (params_u - previous params); the summed
    gradients divide by the total count to a per-sample mean.  The result is
    projected onto {sigma > 0, xi < 1}.
    """
    if not local_models:
        raise NoDataError("no learner uploads to aggregate")
    total = sum(m.sample_count for m in local_models)
    if total == 0:
        raise NoDataError("all learner uploads carry zero samples")
    prev = np.array([previous.params.sigma, previous.params.xi])
    shift = np.zeros(2)
    grad = np.zeros(2)
    for m in local_models:
        vec = np.array([m.params.sigma, m.params.xi])
        shift += (m.sample_count / total) * (vec - prev)
        grad += np.asarray(m.grad, dtype=float)
    params = project(prev + shift)
    return GlobalModel(grad=grad / total, params=params, total_samples=total)


def local_svrg_epoch(
    samples,
    global_model: GlobalModel,
    step: Sequence[float],
    rng: np.random.Generator,
) -> LocalModel | None:
    """One permuted variance-reduced pass over this learner's buffer.

    Step sizes are per-component and scaled by 1/K.  Every iterate is
    projected back onto the feasible set for these samples.  Returns None
    (abstain) when the buffer is empty.
    """
    q = np.asarray(samples, dtype=float).ravel()
    k = int(q.size)
    if k == 0:
        return None
    q_max = float(q.max())
    sig, xi = _project_scalar(global_model.params.sigma, global_model.params.xi, q_max)
    anchor = _grad_many(sig, xi, q)
    mean_g0 = float(global_model.grad[0])
    mean_g1 = float(global_model.grad[1])
    step_s = float(step[0]) / k
    step_x = float(step[1]) / k
    q_list = q.tolist()
    a0 = anchor[:, 0].tolist()
    a1 = anchor[:, 1].tolist()
    # trust corridor: once an iterate drifts far from the anchor, the
    # variance-reduction terms stop cancelling and act as a constant push
    # per visit, so an unguarded epoch can multiply sigma by 2^K.  Bounding
    # the whole epoch to [sigma0/2, 2*sigma0] keeps the anchor honest while
    # still letting the global model double (or halve) every round.
    sig_lo = 0.5 * sig
    sig_hi = 2.0 * sig
    for i in rng.permutation(k).tolist():
        gs, gx = _grad_scalar(sig, xi, q_list[i])
        sig_next = sig - step_s * (gs - a0[i] + mean_g0)
        xi_next = xi - step_x * (gx - a1[i] + mean_g1)
        sig_next = min(max(sig_next, sig_lo), sig_hi)
        # stop xi halfway to the support boundary; one move onto the floor
        # makes the next gradient ~1/margin and poisons the uploaded anchor
        floor = -sig_next / q_max
        if xi_next < 0.5 * (xi + floor):
            xi_next = 0.5 * (xi + floor)
        sig, xi = _project_scalar(sig_next, xi_next, q_max)
    grad = _grad_many(sig, xi, q).sum(axis=0)
    return LocalModel(grad=grad, params=GpdParams(sig, xi), sample_count=k)


def _epoch_rng(seed: int, learner: int, round_index: int) -> np.random.Generator:
    # stable per-(learner, round) stream regardless of execution order
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(learner, round_index))
    return np.random.default_rng(ss)


def init_model(
    sigma: float = 50.0,
    xi: float = 0.0,
    grad: Sequence[float] = (0.0, 0.0),
) -> GlobalModel:
    """Starting global model shared by both fitting paths.

    The seed gradient is the anchor mean gradient of the very first epoch,
    so every first-epoch step moves by -step/K times it before any data is
    seen.  The zero default keeps that epoch stationary: learners stay at
    the initial params and upload the true gradient there, and descent
    starts on round two from an honest anchor.
    """
    return GlobalModel(
        grad=np.asarray(grad, dtype=float),
        params=GpdParams(sigma, xi),
        total_samples=0,
    )


def initial_global(init: GlobalModel, learner_samples: Sequence) -> GlobalModel:
    """First broadcast model: the configured init with the pool size filled in."""
    total = sum(len(s) for s in learner_samples)
    if total == 0:
        return init
    return GlobalModel(
        grad=np.asarray(init.grad, dtype=float),
        params=init.params,
        total_samples=total,
    )


def federated_round(
    global_model: GlobalModel,
    learner_samples: Sequence,
    step: Sequence[float],
    seed: int,
    round_index: int,
) -> tuple[GlobalModel, int]:
    """One synchronous round: broadcast, parallel epochs, collect, aggregate.

    Learners with empty buffers abstain; a round where everyone abstains
    carries the model forward unchanged.  Returns the new global model and
    the number of contributors.
    """
    uploads = []
    for u, samples in enumerate(learner_samples):
        model = local_svrg_epoch(samples, global_model, step, _epoch_rng(seed, u, round_index))
        if model is not None:
            uploads.append(model)
    if not uploads:
        return global_model, 0
    return aggregate(global_model, uploads), len(uploads)


def _pooled_nll(params: GpdParams, pooled: np.ndarray) -> float:
    if pooled.size == 0:
        return float("nan")
    try:
        return nll(params, pooled)
    except SupportError:
        # the aggregator projects without seeing any samples, so the folded
        # model can land outside the pooled support; zero likelihood there
        return float("inf")


def _round_loop(
    learner_samples: Sequence,
    rounds: int,
    step: Sequence[float],
    init: GlobalModel,
    seed: int,
) -> tuple[GpdParams, list[float], list[int]]:
    pooled = (
        np.concatenate([np.asarray(s, dtype=float).ravel() for s in learner_samples])
        if learner_samples
        else np.empty(0)
    )
    model = initial_global(init, learner_samples)
    trace = [_pooled_nll(model.params, pooled)]
    contributors = []
    for r in range(rounds):
        model, n = federated_round(model, learner_samples, step, seed, r)
        contributors.append(n)
        trace.append(_pooled_nll(model.params, pooled))
    return model.params, trace, contributors


def run_federated(
    learner_samples: Sequence,
    rounds: int,
    step: Sequence[float],
    init: GlobalModel,
    seed: int,
) -> FitResult:
    """Fit by synchronous federated rounds; samples never leave the learners."""
    params, trace, contributors = _round_loop(learner_samples, rounds, step, init, seed)
    ledger = CommsLedger()
    n_learners = len(learner_samples)
    for n in contributors:
        ledger.downlink_bytes += n_learners * LAYOUT.model_bytes
        ledger.uplink_bytes += n * LAYOUT.model_bytes
        ledger.rounds += 1
    return FitResult(params=params, ledger=ledger, nll_trace=trace)


def run_centralized(
    all_samples,
    rounds: int,
    step: Sequence[float],
    init: GlobalModel,
    seed: int,
) -> FitResult:
    """Same dynamics on the pooled buffer (one logical learner owning it all).

    The ledger charges one raw-sample upload of the whole buffer plus one
    final parameter downlink.
    """
    pooled = np.asarray(all_samples, dtype=float).ravel()
    params, trace, contributors = _round_loop([pooled], rounds, step, init, seed)
    ledger = CommsLedger(
        uplink_bytes=LAYOUT.sample_upload_bytes(int(pooled.size)),
        downlink_bytes=LAYOUT.params_bytes,
        rounds=sum(1 for _ in contributors),
        raw_sample_messages=1 if pooled.size else 0,
    )
    return FitResult(params=params, ledger=ledger, nll_trace=trace)


def comms_comparison(
    n_learners: int,
    per_learner_samples: Sequence[int],
    rounds: int,
) -> tuple[int, int]:
    """Total bytes moved by each scheme under the fixed message layout.

    Federated: one model uplink and one model downlink per learner per round
    (independent of sample counts).  Centralized: every learner uploads its
    raw samples once and receives the final parameters once (linear in the
    pooled sample count).
    """
    if len(per_learner_samples) != n_learners:
        raise ValueError("per_learner_samples length must equal n_learners")
    fl_bytes = rounds * n_learners * (2 * LAYOUT.model_bytes)
    central_bytes = sum(
        LAYOUT.sample_upload_bytes(int(k)) for k in per_learner_samples
    ) + n_learners * LAYOUT.params_bytes
    return fl_bytes, central_bytes
