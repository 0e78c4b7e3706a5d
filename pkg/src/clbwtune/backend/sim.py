"""Deterministic simulated device.

Outputs are computed by a numpy interpreter that walks the same work
distribution as the generated kernel (same index sets per work item, same
sequential private accumulation, horizontal lane sum and local-memory tree
reduction).  Timing is purely model based::

    elapsed = bytes_moved / predicted_bandwidth(model, config)

The two bundled profiles ("gpu-like", "cpu-like") are invented factor tables
shaped after commonly reported trends for GPUs and CPUs.  They are not
models of any particular real device.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..accounting import bytes_moved
from ..configspace import (LOCAL_SIZES, VECTOR_WIDTHS, WORKGROUP_COUNTS, DeviceClass,
                           DeviceSpec, IncrementType, KernelConfig, config_id)
from ..kernelgen import (KernelSource, OpKind, Precision, gemv_rows_for_group,
                         local_block_size)
from .base import (BufferArg, CompileError, ExecutionResult, Fp64Unsupported,
                   LaunchError, LaunchPlan, OutOfResources)

DEFAULT_LOCAL_MEM = 32 * 1024
MAX_NOISE = 0.05


@dataclass(frozen=True)
class SimDeviceModel:
    base: DeviceSpec
    width_efficiency: dict = field(default_factory=dict)
    increment_affinity: dict = field(default_factory=dict)   # (DeviceClass, IncrementType) -> f
    occupancy_curve: dict = field(default_factory=dict)      # (local_size, num_workgroups) -> f
    noise_seed: int = 0
    noise_amplitude: float = 0.0
    # (OpKind, local_size) -> f; extra penalty for reduction kernels
    op_local_factor: dict = field(default_factory=dict)
    local_mem_size: int = DEFAULT_LOCAL_MEM
    profile: str = "custom"

    def __post_init__(self):
        for table in (self.width_efficiency, self.increment_affinity,
                      self.occupancy_curve, self.op_local_factor):
            for key, f in table.items():
                if not 0.0 < f <= 1.0:
                    raise ValueError(f"{self.base.name}: factor {key} = {f} not in (0, 1]")
        if not 0.0 <= self.noise_amplitude <= MAX_NOISE:
            raise ValueError(f"noise amplitude {self.noise_amplitude} not in [0, {MAX_NOISE}]")
        if self.local_mem_size < 1:
            raise ValueError("local_mem_size must be positive")

    @property
    def name(self) -> str:
        return self.base.name

    def factor_product(self, config: KernelConfig, op: OpKind | None = None) -> float:
        """Noiseless relative bandwidth (product of all factors)."""
        cls = self.base.device_class
        inc = self.increment_affinity.get((cls, config.increment))
        if inc is None:
            inc = self.increment_affinity.get((cls.heuristic_class, config.increment), 1.0)
        f = (self.width_efficiency.get(config.vector_width, 1.0)
             * inc
             * self.occupancy_curve.get((config.local_size, config.num_workgroups), 1.0))
        if op is not None:
            f *= self.op_local_factor.get((op, config.local_size), 1.0)
        return f

    def noise_factor(self, config: KernelConfig, op: OpKind | None = None) -> float:
        """Deterministic factor in (1 - amplitude, 1]; 1 when noiseless."""
        if self.noise_seed == 0 or self.noise_amplitude == 0.0:
            return 1.0
        tag = f"{self.noise_seed}|{op.value if op else '-'}|{config_id(config)}"
        digest = hashlib.blake2b(tag.encode(), digest_size=8).digest()
        u = int.from_bytes(digest, "little") / 2.0**64
        return 1.0 - self.noise_amplitude * u

    def with_noise(self, seed: int, amplitude: float) -> "SimDeviceModel":
        return replace(self, noise_seed=seed, noise_amplitude=amplitude)


def predicted_bandwidth(model: SimDeviceModel, config: KernelConfig,
                        op: OpKind | None = None) -> float:
    """Modelled bandwidth in bytes/s; never above the device peak."""
    rel = model.factor_product(config, op) * model.noise_factor(config, op)
    return model.base.peak_bandwidth * min(rel, 1.0)


# -- bundled profiles -------------------------------------------------------

def _log_ramp(g: int, lo: float, saturate_at: int) -> float:
    return min(1.0, lo + (1.0 - lo) * math.log2(g) / math.log2(saturate_at))


def separable_occupancy(local_factor: dict, workgroup_factor) -> dict:
    return {(ls, g): local_factor.get(ls, 1.0) * workgroup_factor(g)
            for ls in LOCAL_SIZES for g in WORKGROUP_COUNTS}


_GPU_LOCAL = {1: 0.12, 2: 0.20, 4: 0.32, 8: 0.48, 16: 0.62, 32: 0.74,
              64: 0.88, 128: 1.0, 256: 1.0, 512: 0.93}
_GPU_WIDTH = {1: 1.0, 2: 0.98, 4: 0.90, 8: 0.65, 16: 0.45}
_GPU_REDUCTION = {1: 0.80, 2: 0.82, 4: 0.85, 8: 0.88, 16: 0.92, 32: 0.95, 64: 0.98}

_CPU_LOCAL = {1: 1.0, 2: 0.98, 4: 0.90, 8: 0.84, 16: 0.80, 32: 0.78,
              64: 0.80, 128: 0.84, 256: 0.90, 512: 0.94}
_CPU_WIDTH = {1: 0.90, 2: 0.95, 4: 1.0, 8: 0.97, 16: 0.93}
_CPU_REDUCTION = {4: 0.97, 8: 0.93, 16: 0.88, 32: 0.82, 64: 0.76,
                  128: 0.70, 256: 0.64, 512: 0.58}


def _reduction_table(per_local: dict) -> dict:
    return {(op, ls): f for op in (OpKind.DOT, OpKind.GEMV) for ls, f in per_local.items()}


def gpu_like(base: DeviceSpec | None = None, noise_seed: int = 1,
             noise_amplitude: float = 0.02) -> SimDeviceModel:
    """Prefers 128/256 work items, many workgroups, scalar types, global increment."""
    base = base or DeviceSpec("sim-gpu", DeviceClass.GPU, 512, 200e9, True)
    return SimDeviceModel(
        base=base,
        width_efficiency=dict(_GPU_WIDTH),
        increment_affinity={(DeviceClass.GPU, IncrementType.GLOBAL): 1.0,
                            (DeviceClass.GPU, IncrementType.LOCAL): 0.96,
                            (DeviceClass.CPU, IncrementType.GLOBAL): 1.0,
                            (DeviceClass.CPU, IncrementType.LOCAL): 0.96},
        occupancy_curve=separable_occupancy(_GPU_LOCAL, lambda g: _log_ramp(g, 0.3, 128)),
        op_local_factor=_reduction_table(_GPU_REDUCTION),
        noise_seed=noise_seed,
        noise_amplitude=noise_amplitude,
        profile="gpu-like",
    )


def cpu_like(base: DeviceSpec | None = None, noise_seed: int = 1,
             noise_amplitude: float = 0.02) -> SimDeviceModel:
    """Prefers local increment, one or two work items per group, mild vector benefit."""
    base = base or DeviceSpec("sim-cpu", DeviceClass.CPU, 512, 50e9, True)
    return SimDeviceModel(
        base=base,
        width_efficiency=dict(_CPU_WIDTH),
        increment_affinity={(c, inc): f for c in (DeviceClass.CPU, DeviceClass.GPU)
                            for inc, f in ((IncrementType.GLOBAL, 0.55),
                                           (IncrementType.LOCAL, 1.0))},
        occupancy_curve=separable_occupancy(_CPU_LOCAL, lambda g: _log_ramp(g, 0.5, 256)),
        op_local_factor=_reduction_table(_CPU_REDUCTION),
        noise_seed=noise_seed,
        noise_amplitude=noise_amplitude,
        profile="cpu-like",
    )


def uniform(base: DeviceSpec) -> SimDeviceModel:
    """All factors 1, noiseless: predicted bandwidth equals peak."""
    return SimDeviceModel(base=base, profile="uniform")


PROFILES = {"gpu-like": gpu_like, "cpu-like": cpu_like}


def _parse_table(text: str, key=int) -> dict:
    out = {}
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        k, v = item.split(":")
        out[key(k.strip())] = float(v)
    return out


def model_from_spec(spec: DeviceSpec, profile: str | None = None) -> SimDeviceModel:
    """Build a simulator model from a device-spec record.

    Recognised extra keys: ``profile``, ``seed``, ``noise``, ``local_mem`` and
    table overrides ``width=1:1.0;2:0.9``, ``increment=global:1.0;local:0.9``,
    ``local=1:0.1;...`` plus ``workgroups=...`` (separable occupancy).
    """
    ex = spec.extra
    profile = profile or ex.get("profile", "uniform")
    if profile == "uniform":
        model = uniform(spec)
    elif profile in PROFILES:
        model = PROFILES[profile](spec)
    else:
        raise ValueError(f"unknown simulator profile {profile!r}; "
                         f"choose from {sorted(PROFILES) + ['uniform']}")
    changes = {}
    if "seed" in ex:
        changes["noise_seed"] = int(ex["seed"])
    if "noise" in ex:
        changes["noise_amplitude"] = float(ex["noise"])
    if "local_mem" in ex:
        changes["local_mem_size"] = int(ex["local_mem"])
    if "width" in ex:
        changes["width_efficiency"] = {**model.width_efficiency, **_parse_table(ex["width"])}
    if "increment" in ex:
        inc = _parse_table(ex["increment"], key=lambda k: IncrementType(k.lower()))
        changes["increment_affinity"] = {**model.increment_affinity,
                                         **{(spec.device_class, k): v for k, v in inc.items()}}
    if "local" in ex or "workgroups" in ex:
        loc = _parse_table(ex.get("local", ""))
        wg = _parse_table(ex.get("workgroups", ""))
        changes["occupancy_curve"] = {
            (ls, g): model.occupancy_curve.get((ls, g), 1.0)
            * loc.get(ls, 1.0) * wg.get(g, 1.0)
            for ls in LOCAL_SIZES for g in WORKGROUP_COUNTS}
    return replace(model, **changes) if changes else model


# -- interpreter ------------------------------------------------------------

def wide_layout(config: KernelConfig, n_wide: int) -> tuple[np.ndarray, np.ndarray]:
    """Wide-element index visited by each work item at each loop step.

    Returns ``(idx, valid)`` of shape ``(steps, global_size)``; column ``k`` is
    the work item with global id ``k``.  Invalid slots mean the loop exited.
    """
    G, ls, ng = config.global_size, config.local_size, config.num_workgroups
    if config.increment is IncrementType.GLOBAL:
        steps = max(1, -(-n_wide // G))
        idx = np.arange(steps, dtype=np.int64)[:, None] * G + np.arange(G, dtype=np.int64)[None, :]
        return idx, idx < n_wide
    block = local_block_size(n_wide, config)
    steps = max(1, block // ls)
    starts = np.minimum(np.arange(ng, dtype=np.int64) * block, n_wide)
    ends = np.minimum(starts + block, n_wide)
    idx = (starts[None, :, None] + np.arange(ls, dtype=np.int64)[None, None, :]
           + (np.arange(steps, dtype=np.int64) * ls)[:, None, None])
    valid = idx < ends[None, :, None]
    return idx.reshape(steps, G), valid.reshape(steps, G)


def _tree_reduce(scratch: np.ndarray) -> np.ndarray:
    """In-place power-of-two tree reduction along the last axis; returns slot 0."""
    stride = scratch.shape[-1] // 2
    while stride > 0:
        scratch[..., :stride] += scratch[..., stride:2 * stride]
        stride //= 2
    return scratch[..., 0]


def _hsum(acc: np.ndarray) -> np.ndarray:
    out = acc[..., 0].copy()
    for lane in range(1, acc.shape[-1]):
        out += acc[..., lane]
    return out


def _private_dot(a: np.ndarray, b: np.ndarray, idx: np.ndarray, valid: np.ndarray,
                 dt: np.dtype) -> tuple[np.ndarray, np.ndarray]:
    """Per-work-item sequential accumulation of a[i] * b[i] over its index slots.

    ``a``/``b`` are (n_wide, width).  Returns (active columns, lane-summed acc).
    """
    active = np.flatnonzero(valid.any(axis=0))
    sub_idx = np.where(valid[:, active], idx[:, active], 0)
    prods = a[sub_idx] * b[sub_idx]
    prods[~valid[:, active]] = 0
    acc = np.cumsum(prods, axis=0, dtype=dt)[-1]
    return active, _hsum(acc)


def interpret(source: KernelSource, plan: LaunchPlan) -> dict[str, np.ndarray]:
    op, cfg, prec = source.op, source.config, source.precision
    dt = prec.dtype
    w = cfg.vector_width
    n_wide = int(plan.scalar("N"))
    outputs = {name: plan.buffer(name).copy() for name in plan.output_names}

    if op.kind in (OpKind.COPY, OpKind.AXPBY):
        idx, valid = wide_layout(cfg, n_wide)
        flat = idx[valid]
        x = outputs["x"].reshape(-1, w)
        y = plan.buffer("y").reshape(-1, w)
        if op.kind is OpKind.COPY:
            x[flat] = y[flat]
        else:
            z = plan.buffer("z").reshape(-1, w)
            alpha, beta = dt.type(plan.scalar("alpha")), dt.type(plan.scalar("beta"))
            x[flat] = alpha * y[flat] + beta * z[flat]
        return outputs

    if op.kind is OpKind.DOT:
        idx, valid = wide_layout(cfg, n_wide)
        a = plan.buffer("x").reshape(-1, w)
        b = plan.buffer("y").reshape(-1, w)
        active, lane_sum = _private_dot(a, b, idx, valid, dt)
        scratch = np.zeros(cfg.global_size, dt)
        scratch[active] = lane_sum
        outputs["partials"][:] = _tree_reduce(scratch.reshape(cfg.num_workgroups, cfg.local_size))
        return outputs

    # gemv: per row, work items stride columns by the local size.  Row results do
    # not depend on which group owns the row, so all rows are evaluated together.
    m = int(plan.scalar("M"))
    ls = cfg.local_size
    A = plan.buffer("A").reshape(m, n_wide, w)
    y = plan.buffer("y").reshape(n_wide, w)
    steps = max(1, -(-n_wide // ls))
    cols = np.arange(steps)[:, None] * ls + np.arange(ls)[None, :]
    valid = cols < n_wide
    active = np.flatnonzero(valid.any(axis=0))
    sub = np.where(valid[:, active], cols[:, active], 0)
    prods = A[:, sub, :] * y[sub]
    prods[:, ~valid[:, active]] = 0
    acc = np.cumsum(prods, axis=1, dtype=dt)[:, -1]
    scratch = np.zeros((m, ls), dt)
    scratch[:, active] = _hsum(acc)
    outputs["x"][:] = _tree_reduce(scratch)
    return outputs


def access_counts(source: KernelSource, n_wide: int, m: int | None = None) -> dict[str, np.ndarray]:
    """How often each scalar element of each operand is touched by one launch.

    Gemv's ``y`` is read once per row, so its counts equal the row count.
    """
    op, cfg = source.op, source.config
    w = cfg.vector_width
    n = n_wide * w

    def expand(wide_counts):
        return np.repeat(wide_counts, w)

    if op.kind is not OpKind.GEMV:
        idx, valid = wide_layout(cfg, n_wide)
        c = expand(np.bincount(idx[valid], minlength=n_wide))
        names = {OpKind.COPY: ("x", "y"), OpKind.AXPBY: ("x", "y", "z"),
                 OpKind.DOT: ("x", "y")}[op.kind]
        return {name: c.copy() for name in names}
    rows = np.zeros(m, np.int64)
    for g in range(cfg.num_workgroups):
        for r in gemv_rows_for_group(m, cfg, g):
            rows[r] += 1
    ls = cfg.local_size
    steps = max(1, -(-n_wide // ls))
    cols = (np.arange(steps)[:, None] * ls + np.arange(ls)[None, :]).ravel()
    col_counts = expand(np.bincount(cols[cols < n_wide], minlength=n_wide))
    A = rows[:, None] * col_counts[None, :]
    return {"A": A.ravel(), "y": col_counts * rows.sum(), "x": rows}


# -- backend ----------------------------------------------------------------

@dataclass(frozen=True)
class SimProgram:
    source: KernelSource
    device_name: str


class SimBackend:
    """Simulated device session."""

    kind = "sim"

    def __init__(self, model: SimDeviceModel):
        self.model = model

    @property
    def device(self) -> DeviceSpec:
        return self.model.base

    def compile(self, source: KernelSource, device: DeviceSpec | None = None) -> SimProgram:
        device = device or self.device
        text = source.source_text
        if text.count("__kernel") != 1:
            raise CompileError(f"expected exactly one __kernel, found {text.count('__kernel')}")
        if f"void {source.entry_point_name}(" not in text:
            raise CompileError(f"error: entry point '{source.entry_point_name}' not defined")
        if text.count("{") != text.count("}") or text.count("(") != text.count(")"):
            raise CompileError("error: unbalanced braces or parentheses")
        if "cl_khr_fp64" in text and not device.supports_fp64:
            raise Fp64Unsupported(f"{device.name} does not support cl_khr_fp64")
        return SimProgram(source, device.name)

    def _check(self, handle: SimProgram, plan: LaunchPlan):
        src = handle.source
        if plan.entry_point != src.entry_point_name:
            raise LaunchError(f"kernel {plan.entry_point!r} not in program "
                              f"(has {src.entry_point_name!r})")
        if plan.local_size > self.device.max_local_size:
            raise LaunchError(f"local size {plan.local_size} exceeds device maximum "
                              f"{self.device.max_local_size}")
        if plan.local_size != src.config.local_size:
            raise LaunchError(f"local size {plan.local_size} differs from required "
                              f"work-group size {src.config.local_size}")
        if plan.num_workgroups != src.config.num_workgroups:
            raise LaunchError("global size does not match the configured workgroup count")
        if plan.scratch_bytes > self.model.local_mem_size:
            raise OutOfResources(f"{plan.scratch_bytes} bytes of local memory requested, "
                                 f"device has {self.model.local_mem_size}")
        for a in plan.args:
            if isinstance(a, BufferArg) and a.array.dtype != plan.precision.dtype:
                raise LaunchError(f"buffer {a.name} has dtype {a.array.dtype}")

    def elapsed(self, handle: SimProgram) -> float:
        src = handle.source
        bw = predicted_bandwidth(self.model, src.config, src.op.kind)
        return bytes_moved(src.op, src.precision) / bw

    def execute(self, handle: SimProgram, plan: LaunchPlan) -> ExecutionResult:
        self._check(handle, plan)
        return ExecutionResult(self.elapsed(handle), interpret(handle.source, plan))

    def measure(self, handle: SimProgram, plan: LaunchPlan, runs: int) -> list[float]:
        self._check(handle, plan)
        t = self.elapsed(handle)
        return [t] * runs
