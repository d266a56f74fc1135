"""Machine-readable outputs: JSON reports, CSV traces and sweep tables.

JSON is the canonical report (stable key order, trailing newline); CSVs
carry the bulk series.  Figure rendering is additive sugar on top of the
same data and can be switched off; nothing downstream may depend on it.
"""

from __future__ import annotations

import csv
import json
from typing import Optional, Sequence

import numpy as np

from .config import config_to_dict
from .simulator import MetricsReport, SimConfig, SimTraces

PACKAGE_VERSION = "0.1.0"
# bump when any emitted column set or JSON layout changes
SCHEMA_VERSION = 1

SWEEP_COLUMNS = ("param", "value", "seed", "metric", "metric_value")

# headline metrics emitted per run by sweeps (plus avg_excess_kb when present)
SWEEP_METRICS = (
    "avg_power_w",
    "avg_latency_ms",
    "outage_prob",
    "mean_queue_bits",
    "gpd_sigma",
    "gpd_xi",
    "fl_bytes",
)


def _version_block() -> dict:
    return {"package": PACKAGE_VERSION, "schema": SCHEMA_VERSION}


def report_to_dict(report: MetricsReport, config: SimConfig) -> dict:
    """Everything the run produced except the bulk traces."""
    per_vue = {k: np.asarray(v).tolist() for k, v in report.per_vue.items()}
    return {
        "version": _version_block(),
        "config": config_to_dict(config),
        "metrics": {
            "avg_power_w": report.avg_power_w,
            "avg_latency_ms": report.avg_latency_ms,
            "outage_prob": report.outage_prob,
            "avg_excess_kb": report.avg_excess_kb,
            "fl_rounds": report.fl_rounds,
            "per_vue": per_vue,
        },
        "gpd": {"sigma": report.gpd_sigma, "xi": report.gpd_xi},
        "comms": report.comms.as_dict(),
    }


def write_json(path: str, data: dict) -> None:
    text = json.dumps(data, sort_keys=True, indent=2, allow_nan=True) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def traces_columns(u: int, flows: bool) -> list[str]:
    cols = ["slot"]
    cols += [f"q_bits_{i}" for i in range(u)]
    cols += [f"power_w_{i}" for i in range(u)]
    if flows:
        cols += [f"arrivals_bits_{i}" for i in range(u)]
        cols += [f"served_bits_{i}" for i in range(u)]
    return cols


def write_traces_csv(path: str, traces: SimTraces) -> None:
    """One row per slot, wide over pairs; flow columns only when recorded."""
    q = traces.q_bits
    flows = traces.arrivals_bits is not None
    blocks = [q, traces.power_w]
    if flows:
        blocks += [traces.arrivals_bits, traces.served_bits]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(traces_columns(q.shape[1], flows))
        for t in range(q.shape[0]):
            row = [t]
            for b in blocks:
                row.extend(repr(float(x)) for x in b[t])
            w.writerow(row)


def write_sweep_csv(path: str, rows: Sequence[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow(row)


def sweep_rows(param: str, value, seed: int, report: MetricsReport) -> list[tuple]:
    """Long-format rows for one run of a sweep."""
    mean_queue = float(np.mean(report.per_vue["mean_queue_bits"]))
    values = {
        "avg_power_w": report.avg_power_w,
        "avg_latency_ms": report.avg_latency_ms,
        "outage_prob": report.outage_prob,
        "mean_queue_bits": mean_queue,
        "gpd_sigma": report.gpd_sigma,
        "gpd_xi": report.gpd_xi,
        "fl_bytes": report.comms.uplink_bytes + report.comms.downlink_bytes,
    }
    if report.avg_excess_kb is not None:
        values["avg_excess_kb"] = report.avg_excess_kb
    return [(param, value, seed, k, repr(float(v))) for k, v in values.items()]


def summary_table(rows: Sequence[dict]) -> str:
    """Fixed-width text table for the terminal; one dict per run."""
    cols = ["policy", "seed", "outage_prob", "avg_power_w", "avg_latency_ms",
            "gpd_sigma", "gpd_xi"]
    widths = {c: len(c) for c in cols}
    rendered = []
    for r in rows:
        line = {}
        for c in cols:
            v = r[c]
            line[c] = f"{v:.6g}" if isinstance(v, float) else str(v)
            widths[c] = max(widths[c], len(line[c]))
        rendered.append(line)
    head = "  ".join(c.ljust(widths[c]) for c in cols)
    sep = "  ".join("-" * widths[c] for c in cols)
    body = [
        "  ".join(line[c].ljust(widths[c]) for c in cols) for line in rendered
    ]
    return "\n".join([head, sep] + body)


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


_SAVE_KW = dict(dpi=110, metadata={"Date": None})


def render_run_figure(path: str, traces: SimTraces, q0: float) -> None:
    plt = _plt()
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax1.plot(traces.q_bits.mean(axis=1), lw=0.7)
    ax1.axhline(q0, color="tab:red", lw=0.8, ls="--", label="threshold")
    ax1.set_ylabel("mean queue [bits]")
    ax1.legend(loc="upper right")
    ax2.plot(traces.power_w.mean(axis=1), lw=0.7, color="tab:green")
    ax2.set_ylabel("mean tx power [W]")
    ax2.set_xlabel("slot")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_compare_figure(path: str, ccdf: dict) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.semilogy(ccdf["m_kb"], ccdf["empirical"], ".", ms=3, label="empirical")
    ax.semilogy(ccdf["m_kb"], ccdf["federated"], lw=1.2, label="federated fit")
    ax.semilogy(ccdf["m_kb"], ccdf["centralized"], lw=1.2, ls="--",
                label="centralized fit")
    ax.set_xlabel("excess queue length [kb]")
    ax.set_ylabel("CCDF")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_sweep_figure(path: str, rows: Sequence[tuple]) -> None:
    plt = _plt()
    by_metric: dict[str, dict] = {}
    for param, value, seed, metric, metric_value in rows:
        by_metric.setdefault(metric, {}).setdefault(float(value), []).append(
            float(metric_value)
        )
    metrics = sorted(by_metric)
    fig, axes = plt.subplots(
        len(metrics), 1, figsize=(7, 2.2 * len(metrics)), sharex=True
    )
    if len(metrics) == 1:
        axes = [axes]
    for ax, metric in zip(axes, metrics):
        pts = sorted(by_metric[metric].items())
        xs = [x for x, _ in pts]
        ys = [float(np.mean(v)) for _, v in pts]
        ax.plot(xs, ys, "o-", ms=4)
        ax.set_ylabel(metric, fontsize=8)
    axes[-1].set_xlabel(rows[0][0] if rows else "value")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
