"""Launch plans, kernel results and the error hierarchy shared by all backends."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence, Union

import numpy as np

from ..kernelgen import KernelSource, OpKind, Operation, Precision, host_finalize_dot


class BackendError(Exception):
    """Base class for per-configuration failures (never abort a sweep)."""


class CompileError(BackendError):
    def __init__(self, diagnostics: str):
        super().__init__(diagnostics)
        self.diagnostics = diagnostics


class Fp64Unsupported(BackendError):
    pass


class LaunchError(BackendError):
    pass


class OutOfResources(BackendError):
    pass


class DeviceLost(Exception):
    """The device went away; sweeps abort on this one."""


@dataclass(frozen=True)
class BufferArg:
    name: str
    array: np.ndarray = field(compare=False)
    output: bool = False


@dataclass(frozen=True)
class ScalarArg:
    name: str
    value: Union[int, float]
    kind: str  # "uint" or "real"


@dataclass(frozen=True)
class ScratchArg:
    nbytes: int


Arg = Union[BufferArg, ScalarArg, ScratchArg]


@dataclass(frozen=True)
class LaunchPlan:
    entry_point: str
    global_size: int
    local_size: int
    args: tuple[Arg, ...]
    precision: Precision = Precision.FP64

    def __post_init__(self):
        if self.local_size < 1 or self.global_size < 1:
            raise ValueError("work sizes must be positive")
        if self.global_size % self.local_size:
            raise ValueError(f"global size {self.global_size} is not a multiple of "
                             f"local size {self.local_size}")

    @property
    def num_workgroups(self) -> int:
        return self.global_size // self.local_size

    @property
    def scratch_bytes(self) -> int:
        return sum(a.nbytes for a in self.args if isinstance(a, ScratchArg))

    def buffer(self, name: str) -> np.ndarray:
        for a in self.args:
            if isinstance(a, BufferArg) and a.name == name:
                return a.array
        raise KeyError(name)

    def scalar(self, name: str):
        for a in self.args:
            if isinstance(a, ScalarArg) and a.name == name:
                return a.value
        raise KeyError(name)

    @property
    def output_names(self) -> list[str]:
        return [a.name for a in self.args if isinstance(a, BufferArg) and a.output]


@dataclass
class ExecutionResult:
    elapsed: float
    outputs: dict[str, np.ndarray]


def build_plan(source: KernelSource, inputs: dict[str, np.ndarray]) -> LaunchPlan:
    """Bind operands in kernel-argument order and allocate output buffers."""
    op, cfg, prec = source.op, source.config, source.precision
    dt = prec.dtype
    w = cfg.vector_width
    n_wide = op.n // w

    def inp(name):
        return BufferArg(name, np.ascontiguousarray(inputs[name], dtype=dt))

    if op.kind is OpKind.COPY:
        args = (BufferArg("x", np.zeros(op.n, dt), True), inp("y"),
                ScalarArg("N", n_wide, "uint"))
    elif op.kind is OpKind.AXPBY:
        args = (BufferArg("x", np.zeros(op.n, dt), True), inp("y"), inp("z"),
                ScalarArg("alpha", op.alpha, "real"), ScalarArg("beta", op.beta, "real"),
                ScalarArg("N", n_wide, "uint"))
    elif op.kind is OpKind.DOT:
        args = (inp("x"), inp("y"),
                BufferArg("partials", np.zeros(cfg.num_workgroups, dt), True),
                ScratchArg(source.scratch_bytes), ScalarArg("N", n_wide, "uint"))
    else:
        args = (inp("A"), inp("y"), BufferArg("x", np.zeros(op.m, dt), True),
                ScratchArg(source.scratch_bytes), ScalarArg("M", op.m, "uint"),
                ScalarArg("N", n_wide, "uint"))
    return LaunchPlan(source.entry_point_name, cfg.global_size, cfg.local_size, args, prec)


def kernel_result(op: Operation, outputs: dict[str, np.ndarray]):
    """Final operation result from kernel outputs (dot partials summed on host)."""
    if op.kind is OpKind.DOT:
        partials = outputs["partials"]
        return partials.dtype.type(host_finalize_dot(partials.tolist()))
    return outputs["x"]


class Backend(Protocol):
    """What a sweep needs from an execution backend.

    One backend instance is one device session with a single in-order stream.
    """

    device: "object"

    def compile(self, source: KernelSource, device=None): ...

    def execute(self, handle, plan: LaunchPlan) -> ExecutionResult: ...

    def measure(self, handle, plan: LaunchPlan, runs: int) -> Sequence[float]: ...
