"""Text and CSV emission for analysis results.

Fractions are stored; percentages only appear here.
"""

from __future__ import annotations

import csv
import io
import json

from .analysis import BestAverage, Histogram, PairedSeries, PenaltyMatrix, TransferReport
from .configspace import config_id
from .kernelgen import ALL_OPS, OpKind

OP_LABELS = {
    OpKind.COPY: "BW Copy",
    OpKind.AXPBY: "BW Addition",
    OpKind.DOT: "BW Inner Product",
    OpKind.GEMV: "BW Matrix-Vector",
}


def pct(frac: float) -> str:
    return f"{frac * 100:.1f}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def histogram_csv(hist: Histogram) -> str:
    rows = ((v, f"{lo:.2f}", c) for v, lo, c in hist.rows())
    return _csv(["parameter_value", "bin_lower", "count"], rows)


def scatter_csv(series: PairedSeries) -> str:
    rows = ((config_id(p.config), repr(p.x_rel_bw), repr(p.y_rel_bw)) for p in series)
    return _csv(["config_id", "x", "y"], rows)


def prune_csv(configs, copy_by_cfg: dict) -> str:
    rows = ((config_id(c), repr(copy_by_cfg[config_id(c)].relative_bw)) for c in configs)
    return _csv(["config_id", "copy_relative_bw"], rows)


def _align(rows: list[list[str]]) -> str:
    widths = [max(len(r[k]) for r in rows) for k in range(len(rows[0]))]
    out = []
    for r in rows:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        out.append("  ".join(cells).rstrip())
    return "\n".join(out) + "\n"


def penalty_table(pm: PenaltyMatrix, names: dict | None = None, provenance: str | None = None) -> str:
    """Copy bandwidth in percent.  Rows: device the kernel ran on; columns: device
    whose best configuration was used.  The own-best entry is bracketed."""
    names = names or {}
    header = ["run on \\ best config of"] + pm.devices
    rows = [header]
    for j, dev in enumerate(pm.devices):
        row = [names.get(dev, dev)]
        for i in range(len(pm.devices)):
            v = pct(pm.cell[i][j])
            row.append(f"[{v}]" if i == j else v)
        rows.append(row)
    lines = []
    if provenance:
        lines.append(f"# paper data replay: {provenance}")
    lines.append("# copy bandwidth, percent of theoretical peak")
    return "\n".join(lines) + "\n" + _align(rows)


def best_average_table(results: dict, provenance: str | None = None) -> str:
    """Table of best-average configurations, one column per device.

    Each bandwidth cell reads ``value (best)``.
    """
    devices = list(results)
    rows = [[""] + devices]
    rows.append(["Increment Type"] + [results[d].config.increment.value for d in devices])
    rows.append(["Vector Length"] + [str(results[d].config.vector_width) for d in devices])
    rows.append(["Local Work Size"] + [str(results[d].config.local_size) for d in devices])
    rows.append(["Workgroups"] + [str(results[d].config.num_workgroups) for d in devices])
    for op in ALL_OPS:
        rows.append([OP_LABELS[op]] + [
            f"{pct(results[d].relative_bw[op])} ({pct(results[d].best_relative_bw[op])})"
            for d in devices])
    rows.append(["max gap (points)"] + [
        f"{max(results[d].gaps.values()) * 100:.1f}" for d in devices])
    lines = []
    if provenance:
        lines.append(f"# paper data replay: {provenance}")
    lines.append("# bandwidth in percent of peak; parentheses: best over all configurations")
    return "\n".join(lines) + "\n" + _align(rows)


def best_average_json(results: dict) -> str:
    out = {}
    for d, b in results.items():
        out[d] = {
            "config": config_id(b.config),
            "mean_relative_bw": b.mean_relative_bw,
            "relative_bw": {op.value: v for op, v in b.relative_bw.items()},
            "best_relative_bw": {op.value: v for op, v in b.best_relative_bw.items()},
            "gap": {op.value: v for op, v in b.gaps.items()},
        }
    return json.dumps(out, indent=2) + "\n"


def transfer_text(rep: TransferReport, device: str | None = None) -> str:
    lines = []
    if device:
        lines.append(f"device: {device}")
    lines.append(f"copy threshold: {rep.threshold:.3g}  candidates: {len(rep.candidates)}")
    rows = [["op", "transferred", "rel_bw", "unrestricted", "best_rel_bw", "penalty"]]
    for op, r in rep.results.items():
        rows.append([op.value, config_id(r.config), f"{r.relative_bw:.4f}",
                     config_id(r.best_config), f"{r.best_relative_bw:.4f}",
                     f"{r.penalty:.4f}" + (" (fallback)" if r.fallback else "")])
    return "\n".join(lines) + "\n" + _align(rows)


def transfer_json(rep: TransferReport, device: str | None = None) -> str:
    return json.dumps({
        "device": device,
        "threshold": rep.threshold,
        "candidates": [config_id(c) for c in rep.candidates],
        "fallback": rep.fallback,
        "ops": {op.value: {"config": config_id(r.config), "relative_bw": r.relative_bw,
                           "best_config": config_id(r.best_config),
                           "best_relative_bw": r.best_relative_bw,
                           "penalty": r.penalty, "fallback": r.fallback}
                for op, r in rep.results.items()},
    }, indent=2) + "\n"
