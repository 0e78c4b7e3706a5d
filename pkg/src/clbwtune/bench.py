"""Timed, verified sweeps over a configuration space."""

from __future__ import annotations

import logging
import statistics
from dataclasses import dataclass

import numpy as np

from .accounting import bytes_moved
from .backend.base import BackendError, DeviceLost, build_plan, kernel_result
from .configspace import DeviceSpec, KernelConfig, config_id
from .kernelgen import OpKind, Operation, Precision, generate, make_inputs, oracle
from .results import BenchmarkRecord, ResultSet, failed_record, utcnow

log = logging.getLogger(__name__)

DEFAULT_N = 2_000_000
DEFAULT_GEMV_SIZE = 2048
DEFAULT_ALPHA = 2.0
DEFAULT_BETA = 3.0
VERIFY_SEED = 20140512

# relative tolerances for accumulation-order differences (dot / gemv)
REDUCTION_RTOL = {Precision.FP64: 1e-10, Precision.FP32: 1e-4}


def default_problem(op_kind: OpKind | str, n: int | None = None, m: int | None = None) -> Operation:
    """Default full-scale problem sizes: 2e6-element vectors, 2048x2048 gemv."""
    kind = OpKind.parse(op_kind)
    if kind is OpKind.GEMV:
        size = n or DEFAULT_GEMV_SIZE
        return Operation(kind, n=size, m=m or size)
    n = n or DEFAULT_N
    if kind is OpKind.AXPBY:
        return Operation(kind, n=n, alpha=DEFAULT_ALPHA, beta=DEFAULT_BETA)
    return Operation(kind, n=n)


@dataclass(frozen=True)
class SweepPlan:
    device: DeviceSpec
    op: Operation
    configs: tuple[KernelConfig, ...]
    repetitions: int = 5
    warmup_runs: int = 2
    precision: Precision = Precision.FP64
    seed: int = VERIFY_SEED

    def __post_init__(self):
        object.__setattr__(self, "configs", tuple(self.configs))
        if self.repetitions < 3 or self.repetitions % 2 == 0:
            raise ValueError(f"repetitions must be odd and >= 3, got {self.repetitions}")
        if self.warmup_runs < 1:
            raise ValueError("at least one warm-up run is required")
        too_big = [c for c in self.configs if c.local_size > self.device.max_local_size]
        if too_big:
            raise ValueError(
                f"{len(too_big)} configs exceed the local size limit "
                f"{self.device.max_local_size} of {self.device.name}, "
                f"e.g. {config_id(too_big[0])}")


def reduction_scale(op: Operation, inputs: dict):
    """Sum of term magnitudes for dot (scalar) or each gemv row (vector)."""
    if op.kind is OpKind.DOT:
        return float(np.sum(np.abs(inputs["x"].astype(np.float64) * inputs["y"])))
    if op.kind is OpKind.GEMV:
        return np.abs(inputs["A"].astype(np.float64)) @ np.abs(inputs["y"].astype(np.float64))
    return None


def verify(op: Operation, result, expected, precision: Precision, scale=None) -> str | None:
    """Compare a kernel result with the host reference; returns an error note or None.

    Copy and axpby must match exactly.  Dot and gemv allow ``rtol`` relative to
    the magnitude sum of the accumulated terms, which bounds any summation-order
    difference (plain relative error is ill-conditioned when the result is ~0).
    """
    result = np.asarray(result)
    expected = np.asarray(expected)
    if result.shape != expected.shape:
        return f"shape {result.shape} != {expected.shape}"
    if not np.all(np.isfinite(result)):
        return "non-finite output"
    if op.kind in (OpKind.COPY, OpKind.AXPBY):
        bad = np.flatnonzero(result != expected)
        if bad.size:
            return f"{bad.size} entries differ (first at {bad[0]})"
        return None
    rtol = REDUCTION_RTOL[precision]
    if scale is None:
        scale = 0.0
    scale = np.maximum(np.maximum(np.abs(expected), scale), np.finfo(np.float64).tiny)
    err = np.abs(result.astype(np.float64) - expected) / scale
    if np.any(err > rtol):
        return f"relative error {float(np.max(err)):.3g} exceeds {rtol:g}"
    return None


def run_sweep(plan: SweepPlan, backend, progress=None) -> ResultSet:
    """Generate, compile, verify and time every config in ``plan``.

    Per-config failures become ``verified=False`` records with an error note;
    only ``DeviceLost`` aborts the sweep.
    """
    op, prec, dev = plan.op, plan.precision, plan.device
    nbytes = bytes_moved(op, prec)
    inputs = make_inputs(op, prec, plan.seed)
    expected = oracle(op, inputs, prec)
    scale = reduction_scale(op, inputs)
    runs = plan.warmup_runs + plan.repetitions
    records = []
    for k, cfg in enumerate(plan.configs):
        def fail(note):
            log.debug("%s %s: %s", op.kind.value, config_id(cfg), note)
            return failed_record(dev.name, op.kind, op.n, op.m, cfg, nbytes, prec,
                                 plan.repetitions, note)
        try:
            src = generate(op, cfg, prec)
            handle = backend.compile(src, dev)
            launch = build_plan(src, inputs)
            res = backend.execute(handle, launch)
            note = verify(op, kernel_result(op, res.outputs), expected, prec, scale)
            times = backend.measure(handle, launch, runs)[plan.warmup_runs:]
        except DeviceLost:
            raise
        except (BackendError, ValueError) as exc:
            records.append(fail(f"{type(exc).__name__}: {exc}"))
            continue
        elapsed = statistics.median(times)
        bw = nbytes / elapsed
        records.append(BenchmarkRecord(
            device_name=dev.name, op_kind=op.kind, n=op.n, m=op.m, config=cfg,
            bytes_moved=nbytes, elapsed=elapsed, bandwidth=bw,
            relative_bw=bw / dev.peak_bandwidth, verified=note is None,
            repetitions=plan.repetitions, timestamp=utcnow(), precision=prec,
            error=None if note is None else f"verification: {note}"))
        if progress is not None:
            progress(k + 1, len(plan.configs))
    meta = {"device": dev.name, "op": op.kind.value, "precision": prec.value,
            "backend": getattr(backend, "kind", type(backend).__name__)}
    return ResultSet(records, meta)
