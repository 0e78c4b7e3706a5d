"""Replay datasets of published relative-bandwidth measurements.

Two datasets: a cross-device copy matrix (each device's best copy config
evaluated on every device) and a best-average summary (one config per device
with its bandwidth for all four ops next to each op's own best).

Values are kept as the printed decimal strings and converted to fractions of
peak on load.  Configuration identities of the per-op optima were never
published, so those records use stand-in configurations; only the relative
bandwidth values are measured data.
"""

from __future__ import annotations

import hashlib
from datetime import datetime, timezone
from decimal import Decimal

from .accounting import bytes_moved
from .bench import default_problem
from .configspace import DeviceClass, DeviceSpec, IncrementType, KernelConfig
from .kernelgen import ALL_OPS, OpKind, Precision
from .results import BenchmarkRecord, ResultSet

COPY_MATRIX_TAG = "paper-table-1"
BEST_AVERAGE_TAG = "paper-table-2"
FIXTURES = (COPY_MATRIX_TAG, BEST_AVERAGE_TAG)

# measured bandwidths were only published relative to peak
NOMINAL_PEAK = 1e9
_STAMP = datetime(2014, 5, 12, tzinfo=timezone.utc)

DEVICES = [
    DeviceSpec("A10-5800K", DeviceClass.CPU, 256, NOMINAL_PEAK, True),
    DeviceSpec("HD 5850", DeviceClass.GPU, 256, NOMINAL_PEAK, True),
    DeviceSpec("W9000", DeviceClass.GPU, 256, NOMINAL_PEAK, True),
    DeviceSpec("GTX 285", DeviceClass.GPU, 512, NOMINAL_PEAK, True),
    DeviceSpec("K20m", DeviceClass.GPU, 512, NOMINAL_PEAK, True),
    DeviceSpec("E5-2670", DeviceClass.CPU, 512, NOMINAL_PEAK, True),
    DeviceSpec("Xeon Phi", DeviceClass.ACCELERATOR, 512, NOMINAL_PEAK, True),
]
DEVICE_NAMES = [d.name for d in DEVICES]

LONG_NAMES = {
    "A10-5800K": "AMD A10-5800K CPU",
    "HD 5850": "AMD Radeon HD 5850",
    "W9000": "AMD FirePro W9000",
    "GTX 285": "NVIDIA GeForce GTX 285",
    "K20m": "NVIDIA Tesla K20m",
    "E5-2670": "INTEL Xeon E5-2670 (dual)",
    "Xeon Phi": "INTEL Xeon Phi",
}

# Copy bandwidth in percent of peak.  Outer key: device the kernel ran on;
# inner order: device whose best configuration was used (DEVICE_NAMES order).
COPY_MATRIX_PERCENT = {
    "A10-5800K": ("36.8", "4.3", "2.7", "2.3", "12.7", "18.0", "23.0"),
    "HD 5850":   ("0.1", "72.7", "64.1", "61.3", "55.5", "14.1", "4.2"),
    "W9000":     ("4.4", "73.1", "80.1", "77.7", "46.2", "30.3", "1.2"),
    "GTX 285":   ("2.8", "67.9", "73.3", "85.3", "76.7", "14.2", "0.2"),
    "K20m":      ("9.5", "47.1", "50.5", "61.3", "68.8", "33.1", "1.6"),
    "E5-2670":   ("65.6", "38.1", "41.5", "37.1", "58.6", "72.9", "66.8"),
    "Xeon Phi":  ("14.1", "3.2", "7.7", "4.6", "8.6", "13.9", "19.2"),
}

G, L = IncrementType.GLOBAL, IncrementType.LOCAL

# Best-average configuration per device and, per op, (value, best over all configs).
BEST_AVERAGE_DATA = {
    "A10-5800K": (KernelConfig(L, 2, 1, 256),
                  {"copy": ("36.7", "36.8"), "axpby": ("45.2", "45.8"),
                   "dot": ("60.3", "61.9"), "gemv": ("47.2", "57.3")}),
    "HD 5850": (KernelConfig(G, 8, 128, 1024),
                {"copy": ("59.5", "72.7"), "axpby": ("61.5", "78.5"),
                 "dot": ("84.8", "84.9"), "gemv": ("82.4", "82.4")}),
    "W9000": (KernelConfig(G, 4, 64, 160),
              {"copy": ("73.9", "80.8"), "axpby": ("77.5", "82.2"),
               "dot": ("82.7", "83.1"), "gemv": ("77.3", "80.6")}),
    "GTX 285": (KernelConfig(G, 1, 128, 80),
                {"copy": ("85.3", "85.3"), "axpby": ("88.5", "88.5"),
                 "dot": ("69.0", "69.4"), "gemv": ("32.4", "33.6")}),
    "K20m": (KernelConfig(G, 2, 256, 1024),
             {"copy": ("66.8", "68.9"), "axpby": ("67.1", "68.2"),
              "dot": ("62.6", "66.6"), "gemv": ("61.8", "61.8")}),
    "E5-2670": (KernelConfig(L, 4, 1, 512),
                {"copy": ("69.5", "73.1"), "axpby": ("40.1", "43.0"),
                 "dot": ("80.6", "80.6"), "gemv": ("73.0", "75.9")}),
    "Xeon Phi": (KernelConfig(L, 16, 1, 512),
                 {"copy": ("18.8", "19.2"), "axpby": ("20.3", "20.9"),
                  "dot": ("13.5", "14.7"), "gemv": ("10.3", "12.0")}),
}
del G, L

# Stand-in identities for per-op optima whose configuration is unpublished.
_PER_OP_STANDIN = {
    OpKind.COPY: KernelConfig(IncrementType.GLOBAL, 1, 1, 1),
    OpKind.AXPBY: KernelConfig(IncrementType.GLOBAL, 1, 1, 2),
    OpKind.DOT: KernelConfig(IncrementType.GLOBAL, 1, 1, 4),
    OpKind.GEMV: KernelConfig(IncrementType.GLOBAL, 1, 1, 8),
}

# The copy matrix has no configuration list either; each origin device is
# labelled with its best-average configuration.
COPY_MATRIX_CONFIGS = {name: BEST_AVERAGE_DATA[name][0] for name in DEVICE_NAMES}


def fraction(text: str) -> float:
    return float(Decimal(text) / 100)


def percent_text(frac: float) -> str:
    return f"{frac * 100:.1f}"


def canonical_text() -> str:
    """Stable dump of both tables (guards against accidental edits)."""
    lines = ["copy-matrix"]
    for dev in DEVICE_NAMES:
        lines.append(dev + ":" + ",".join(COPY_MATRIX_PERCENT[dev]))
    lines.append("best-average")
    for dev in DEVICE_NAMES:
        cfg, vals = BEST_AVERAGE_DATA[dev]
        cells = ",".join(f"{op}={v}({b})" for op, (v, b) in vals.items())
        lines.append(f"{dev}:{cfg}:{cells}")
    return "\n".join(lines) + "\n"


def checksum() -> str:
    return hashlib.sha256(canonical_text().encode()).hexdigest()


def _record(device: str, kind: OpKind, cfg: KernelConfig, frac: float) -> BenchmarkRecord:
    op = default_problem(kind)
    nbytes = bytes_moved(op)
    bw = frac * NOMINAL_PEAK
    return BenchmarkRecord(
        device_name=device, op_kind=kind, n=op.n, m=op.m, config=cfg,
        bytes_moved=nbytes, elapsed=nbytes / bw, bandwidth=bw, relative_bw=frac,
        verified=True, repetitions=1, timestamp=_STAMP, precision=Precision.FP64)


def copy_matrix_records() -> dict[str, ResultSet]:
    """Per device: copy records for each device's best configuration."""
    out = {}
    for dev in DEVICE_NAMES:
        recs = [_record(dev, OpKind.COPY, COPY_MATRIX_CONFIGS[origin], fraction(val))
                for origin, val in zip(DEVICE_NAMES, COPY_MATRIX_PERCENT[dev])]
        out[dev] = ResultSet(recs, {"provenance": COPY_MATRIX_TAG, "device": dev, "op": "copy"})
    return out


def best_average_records() -> dict[str, dict[OpKind, ResultSet]]:
    """Per device and op: the best-average config plus a per-op optimum record."""
    out = {}
    for dev in DEVICE_NAMES:
        cfg, vals = BEST_AVERAGE_DATA[dev]
        per_op = {}
        for kind in ALL_OPS:
            value, best = vals[kind.value]
            recs = [_record(dev, kind, cfg, fraction(value))]
            if Decimal(best) > Decimal(value):
                recs.append(_record(dev, kind, _PER_OP_STANDIN[kind], fraction(best)))
            per_op[kind] = ResultSet(recs, {"provenance": BEST_AVERAGE_TAG, "device": dev,
                                            "op": kind.value})
        out[dev] = per_op
    return out


def fixture_resultset(name: str) -> ResultSet:
    """All records of a fixture as one flat ResultSet."""
    if name == COPY_MATRIX_TAG:
        sets = list(copy_matrix_records().values())
    elif name == BEST_AVERAGE_TAG:
        sets = [rs for per_op in best_average_records().values() for rs in per_op.values()]
    else:
        raise ValueError(f"unknown fixture {name!r}; choose from {FIXTURES}")
    out = ResultSet()
    for rs in sets:
        out = out.union(rs)
    return out.with_metadata(provenance=name, device=None, op=None)
