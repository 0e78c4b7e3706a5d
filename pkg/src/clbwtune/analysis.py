"""Portability analyses over result sets.

All functions ignore unverified records.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

from .configspace import (LOCAL_SIZES, VECTOR_WIDTHS, WORKGROUP_COUNTS, IncrementType,
                          KernelConfig, config_id, parse_config_id)
from .kernelgen import ALL_OPS, OpKind
from .results import ResultSet

DEFAULT_BIN_WIDTH = 0.05
HISTOGRAM_UPPER = 1.05
DEFAULT_THRESHOLD = 0.75
FALLBACK_THRESHOLD = 0.60


class AnalysisError(ValueError):
    pass


class MixedSweep(AnalysisError):
    pass


class EmptyJoin(AnalysisError):
    pass


class MissingOp(AnalysisError):
    pass


class EmptyIntersection(AnalysisError):
    pass


class TransferFallbackWarning(UserWarning):
    pass


class Parameter(enum.Enum):
    INCREMENT = "increment"
    VECTOR_WIDTH = "vector-width"
    LOCAL_SIZE = "local-size"
    WORKGROUPS = "workgroups"

    @classmethod
    def parse(cls, text: "str | Parameter") -> "Parameter":
        if isinstance(text, Parameter):
            return text
        key = text.strip().lower().replace("_", "-")
        aliases = {"inc": "increment", "vector": "vector-width", "width": "vector-width",
                   "local": "local-size", "wg": "workgroups", "groups": "workgroups"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown parameter {text!r}; choose from {[p.value for p in cls]}") from None

    def value_of(self, cfg: KernelConfig):
        if self is Parameter.INCREMENT:
            return cfg.increment.value
        if self is Parameter.VECTOR_WIDTH:
            return cfg.vector_width
        if self is Parameter.LOCAL_SIZE:
            return cfg.local_size
        return cfg.num_workgroups

    def domain(self) -> list:
        if self is Parameter.INCREMENT:
            return [IncrementType.GLOBAL.value, IncrementType.LOCAL.value]
        if self is Parameter.VECTOR_WIDTH:
            return list(VECTOR_WIDTHS)
        if self is Parameter.LOCAL_SIZE:
            return list(LOCAL_SIZES)
        return list(WORKGROUP_COUNTS)


def config_rank(cfg: KernelConfig) -> tuple:
    """Tie-break order: smaller width, local size, workgroup count; Global first."""
    return (cfg.vector_width, cfg.local_size, cfg.num_workgroups,
            0 if cfg.increment is IncrementType.GLOBAL else 1)


def _single_sweep(records: ResultSet) -> ResultSet:
    ver = records.verified()
    if len(ver) == 0:
        raise AnalysisError("no verified records")
    if len(ver.devices) > 1 or len(ver.ops) > 1:
        raise MixedSweep(f"records span devices {ver.devices} and ops "
                         f"{[o.value for o in ver.ops]}; select one (device, op) first")
    return ver


# -- histograms -------------------------------------------------------------

@dataclass(frozen=True)
class Histogram:
    parameter: Parameter
    buckets: dict           # parameter value -> list of bin counts
    bin_width: float = DEFAULT_BIN_WIDTH

    @property
    def n_bins(self) -> int:
        return len(next(iter(self.buckets.values()))) if self.buckets else 0

    def bin_lower(self, k: int) -> float:
        return round(k * self.bin_width, 10)

    @property
    def total(self) -> int:
        return sum(sum(c) for c in self.buckets.values())

    def bucket_sizes(self) -> dict:
        return {v: sum(c) for v, c in self.buckets.items()}

    def rows(self):
        """(parameter_value, bin_lower, count) for every bucket and bin."""
        for v, counts in self.buckets.items():
            for k, c in enumerate(counts):
                yield v, self.bin_lower(k), c


def _bin_index(x: float, width: float, n_bins: int) -> int:
    k = math.floor(x / width + 1e-9)
    return min(max(k, 0), n_bins - 1)


def histogram_by_parameter(records: ResultSet, parameter: Parameter | str,
                           bin_width: float = DEFAULT_BIN_WIDTH) -> Histogram:
    parameter = Parameter.parse(parameter)
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    ver = _single_sweep(records)
    n_bins = math.ceil(HISTOGRAM_UPPER / bin_width - 1e-9)
    present = {parameter.value_of(r.config) for r in ver}
    buckets = {v: [0] * n_bins for v in parameter.domain() if v in present}
    for r in ver:
        buckets[parameter.value_of(r.config)][_bin_index(r.relative_bw, bin_width, n_bins)] += 1
    return Histogram(parameter, buckets, bin_width)


# -- pairing ----------------------------------------------------------------

@dataclass(frozen=True)
class PairedPoint:
    config: KernelConfig
    x_rel_bw: float
    y_rel_bw: float

    @property
    def exceeds_peak(self) -> bool:
        return self.x_rel_bw > 1.0 or self.y_rel_bw > 1.0


@dataclass
class PairedSeries:
    points: list
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


def _join(reference: ResultSet, target: ResultSet) -> list[PairedPoint]:
    ref = reference.verified().by_config()
    tgt = target.verified().by_config()
    keys = sorted(ref.keys() & tgt.keys(), key=lambda k: parse_config_id(k).sort_key())
    if not keys:
        raise EmptyJoin("no configuration is verified in both result sets")
    return [PairedPoint(ref[k].config, ref[k].relative_bw, tgt[k].relative_bw) for k in keys]


def scatter_pairs(reference: ResultSet, target: ResultSet) -> PairedSeries:
    """Copy performance (x) against another kernel's performance (y) on one device."""
    ref, tgt = reference.verified(), target.verified()
    if ref.ops and ref.ops != [OpKind.COPY]:
        raise MixedSweep(f"reference must be copy records, got {[o.value for o in ref.ops]}")
    if len(tgt.ops) > 1:
        raise MixedSweep("target spans several ops")
    devices = set(ref.devices) | set(tgt.devices)
    if len(devices) > 1:
        raise MixedSweep(f"scatter_pairs compares kernels on one device, got {sorted(devices)}; "
                         "use cross_device_pairs")
    pts = _join(ref, tgt)
    return PairedSeries(pts, {"reference_op": "copy",
                              "target_op": tgt.ops[0].value if tgt.ops else None,
                              "device": next(iter(devices), None),
                              "flagged_above_peak": sum(p.exceeds_peak for p in pts)})


def cross_device_pairs(reference: ResultSet, target: ResultSet) -> PairedSeries:
    """Same configurations evaluated on two devices (optionally different ops)."""
    ref, tgt = reference.verified(), target.verified()
    for name, s in (("reference", ref), ("target", tgt)):
        if len(s.devices) > 1 or len(s.ops) > 1:
            raise MixedSweep(f"{name} must hold a single (device, op) sweep")
    pts = _join(ref, tgt)
    precs = {p.value for p in ref.precisions} | {p.value for p in tgt.precisions}
    return PairedSeries(pts, {
        "reference_device": ref.devices[0], "target_device": tgt.devices[0],
        "reference_op": ref.ops[0].value, "target_op": tgt.ops[0].value,
        "mixed_precision": len(precs) > 1,
        "flagged_above_peak": sum(p.exceeds_peak for p in pts)})


# -- pruning and transfer ---------------------------------------------------

def prune_by_copy_threshold(copy_records: ResultSet, threshold: float = DEFAULT_THRESHOLD
                            ) -> list[KernelConfig]:
    """Configs whose copy bandwidth exceeds ``threshold`` (fraction of peak), best first.

    An empty list is a valid answer.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    ver = copy_records.verified()
    if ver.ops and ver.ops != [OpKind.COPY]:
        raise MixedSweep("pruning needs copy records")
    chosen = [r for r in ver.by_config().values() if r.relative_bw > threshold]
    chosen.sort(key=lambda r: (-r.relative_bw, r.config.sort_key()))
    return [r.config for r in chosen]


def _argmax(by_cfg: dict, keys) -> str:
    return min(keys, key=lambda k: (-by_cfg[k].relative_bw, config_rank(by_cfg[k].config)))


@dataclass(frozen=True)
class TransferResult:
    op: OpKind
    config: KernelConfig
    relative_bw: float
    best_config: KernelConfig
    best_relative_bw: float
    fallback: bool = False

    @property
    def penalty(self) -> float:
        return self.best_relative_bw - self.relative_bw


@dataclass
class TransferReport:
    threshold: float
    candidates: list
    results: dict           # OpKind -> TransferResult

    @property
    def fallback(self) -> bool:
        return any(r.fallback for r in self.results.values())


def transfer_tune(all_ops_records: dict, threshold: float = DEFAULT_THRESHOLD) -> TransferReport:
    """Tune copy, keep configs above ``threshold``, pick every other op's best among them."""
    recs = {OpKind.parse(k): v for k, v in all_ops_records.items()}
    if OpKind.COPY not in recs:
        raise MissingOp("transfer tuning needs copy records")
    candidates = prune_by_copy_threshold(recs[OpKind.COPY], threshold)
    cand_keys = [config_id(c) for c in candidates]
    results = {}
    for op, rs in recs.items():
        if op is OpKind.COPY:
            continue
        by_cfg = rs.verified().by_config()
        if not by_cfg:
            raise AnalysisError(f"no verified {op.value} records")
        best = _argmax(by_cfg, by_cfg.keys())
        pool = [k for k in cand_keys if k in by_cfg]
        fallback = not pool
        if fallback:
            warnings.warn(f"{op.value}: no candidate above copy threshold {threshold}; "
                          "falling back to the unrestricted best", TransferFallbackWarning,
                          stacklevel=2)
            pool = list(by_cfg)
        pick = _argmax(by_cfg, pool)
        results[op] = TransferResult(op, by_cfg[pick].config, by_cfg[pick].relative_bw,
                                     by_cfg[best].config, by_cfg[best].relative_bw, fallback)
    return TransferReport(threshold, candidates, results)


# -- best average -----------------------------------------------------------

@dataclass(frozen=True)
class BestAverage:
    config: KernelConfig
    mean_relative_bw: float
    relative_bw: dict        # OpKind -> value for the chosen config
    best_relative_bw: dict   # OpKind -> best value among all configs of that op

    @property
    def gaps(self) -> dict:
        return {op: self.best_relative_bw[op] - self.relative_bw[op] for op in self.relative_bw}


def select_best_average(per_op_records: dict) -> BestAverage:
    """Single config maximizing the arithmetic mean relative bandwidth over all four ops."""
    recs = {OpKind.parse(k): v for k, v in per_op_records.items()}
    missing = [op.value for op in ALL_OPS if op not in recs]
    if missing:
        raise MissingOp(f"missing ops: {', '.join(missing)}")
    by_op = {op: recs[op].verified().by_config() for op in ALL_OPS}
    for op, d in by_op.items():
        if not d:
            raise MissingOp(f"no verified {op.value} records")
    common = set.intersection(*(set(d) for d in by_op.values()))
    if not common:
        raise EmptyIntersection("no configuration is verified for all four ops")

    def mean(k):
        return sum(by_op[op][k].relative_bw for op in ALL_OPS) / len(ALL_OPS)

    pick = min(common, key=lambda k: (-mean(k), config_rank(parse_config_id(k))))
    return BestAverage(
        config=parse_config_id(pick),
        mean_relative_bw=mean(pick),
        relative_bw={op: by_op[op][pick].relative_bw for op in ALL_OPS},
        best_relative_bw={op: max(r.relative_bw for r in by_op[op].values()) for op in ALL_OPS},
    )


# -- penalty matrix ---------------------------------------------------------

@dataclass(frozen=True)
class PenaltyMatrix:
    """``cell[i][j]``: relative copy bandwidth of device i's best config run on device j."""

    devices: list
    best_config_per_device: dict
    cell: list

    def diagonal(self) -> list[float]:
        return [self.cell[i][i] for i in range(len(self.devices))]

    def column(self, j: int) -> list[float]:
        return [row[j] for row in self.cell]

    def penalty(self, origin: str, target: str) -> float:
        """Bandwidth lost on ``target`` when using ``origin``'s best config instead of its own."""
        i, j = self.devices.index(origin), self.devices.index(target)
        return self.cell[j][j] - self.cell[i][j]


def penalty_matrix(copy_records_per_device: dict) -> PenaltyMatrix:
    if len(copy_records_per_device) < 2:
        raise AnalysisError("penalty matrix needs at least two devices")
    devices = list(copy_records_per_device)
    by_dev = {}
    for d in devices:
        ver = copy_records_per_device[d].verified()
        if ver.ops and ver.ops != [OpKind.COPY]:
            raise MixedSweep(f"{d}: penalty matrix uses copy records only")
        by_dev[d] = ver.by_config()
    common = set.intersection(*(set(v) for v in by_dev.values()))
    if not common:
        raise EmptyIntersection("devices share no verified configuration")
    best = {d: _argmax(by_dev[d], common) for d in devices}
    cell = [[by_dev[dj][best[di]].relative_bw for dj in devices] for di in devices]
    return PenaltyMatrix(devices, {d: parse_config_id(k) for d, k in best.items()}, cell)
