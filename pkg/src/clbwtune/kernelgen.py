"""OpenCL C source generation for copy, axpby, dot and gemv.

Each (operation, configuration, precision) triple yields one translation unit
with a single ``__kernel``.  The work distribution follows one of two loop
skeletons:

* global increment: work item ``gid`` visits ``gid, gid + G, gid + 2G, ...``
  where ``G`` is the global work size;
* local increment: each workgroup owns a contiguous block of wide elements
  and its work items stride through the block by the local work size.

Sizes are runtime kernel arguments, so the source only depends on the op
kind, the configuration and the precision.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .configspace import IncrementType, KernelConfig, config_id


class OpKind(enum.Enum):
    COPY = "copy"
    AXPBY = "axpby"
    DOT = "dot"
    GEMV = "gemv"

    @classmethod
    def parse(cls, text: "str | OpKind") -> "OpKind":
        if isinstance(text, OpKind):
            return text
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown op {text!r}; choose from {[k.value for k in cls]}") from None

    @property
    def uses_reduction(self) -> bool:
        return self in (OpKind.DOT, OpKind.GEMV)


ALL_OPS = (OpKind.COPY, OpKind.AXPBY, OpKind.DOT, OpKind.GEMV)


class Precision(enum.Enum):
    FP64 = "fp64"
    FP32 = "fp32"

    @classmethod
    def parse(cls, text: "str | Precision") -> "Precision":
        if isinstance(text, Precision):
            return text
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown precision {text!r}; choose fp64 or fp32") from None

    @property
    def itemsize(self) -> int:
        return 8 if self is Precision.FP64 else 4

    @property
    def ctype(self) -> str:
        return "double" if self is Precision.FP64 else "float"

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float64 if self is Precision.FP64 else np.float32)


@dataclass(frozen=True)
class Operation:
    """One of the four kernels with its problem size.

    Operand roles: copy ``x <- y``; axpby ``x <- alpha*y + beta*z``;
    dot ``<x, y>``; gemv ``x <- A y`` with ``A`` of shape ``(m, n)``.
    """

    kind: OpKind
    n: int
    m: int | None = None
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", OpKind.parse(self.kind))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind is OpKind.GEMV:
            if self.m is None or self.m < 1:
                raise ValueError("gemv needs a row count m >= 1")
        if self.kind is OpKind.AXPBY:
            if self.alpha is None or self.beta is None:
                raise ValueError("axpby needs alpha and beta")
            if self.alpha == 0 or self.beta == 0:
                raise ValueError("axpby requires alpha != 0 and beta != 0")

    @property
    def rows(self) -> int:
        return self.m if self.kind is OpKind.GEMV else 1


@dataclass(frozen=True)
class KernelSource:
    entry_point_name: str
    source_text: str
    scratch_bytes: int
    op: Operation
    config: KernelConfig
    precision: Precision


def entry_point_name(kind: OpKind, config: KernelConfig) -> str:
    return f"{kind.value}_{config_id(config).replace('/', '_')}"


# -- work distribution ------------------------------------------------------
# Shared by the code generator (emitted as C) and the simulator (numpy).

def local_block_size(n_wide: int, config: KernelConfig) -> int:
    """Wide elements per workgroup block for the local-increment skeleton.

    ceil(n_wide / groups) rounded up to a multiple of the local size.
    """
    per_group = -(-n_wide // config.num_workgroups)
    return -(-per_group // config.local_size) * config.local_size


def local_block_bounds(n_wide: int, config: KernelConfig, group: int) -> tuple[int, int]:
    block = local_block_size(n_wide, config)
    start = min(group * block, n_wide)
    return start, min(start + block, n_wide)


def gemv_rows_per_group(m: int, config: KernelConfig) -> int:
    return -(-m // config.num_workgroups)


def gemv_rows_for_group(m: int, config: KernelConfig, group: int) -> range:
    """Rows handled by one workgroup.

    Global increment cycles rows with stride ``num_workgroups``; local
    increment gives each group a contiguous run of rows.
    """
    if config.increment is IncrementType.GLOBAL:
        return range(group, m, config.num_workgroups)
    r = gemv_rows_per_group(m, config)
    start = min(group * r, m)
    return range(start, min(start + r, m))


# -- source emission --------------------------------------------------------

def _wide(prec: Precision, width: int) -> str:
    return prec.ctype if width == 1 else f"{prec.ctype}{width}"


def _hsum(var: str, width: int) -> str:
    if width == 1:
        return var
    lanes = [f"{var}.s{k:x}" for k in range(width)]
    return " + ".join(lanes)


def _loop_head(config: KernelConfig, limit: str = "N") -> list[str]:
    if config.increment is IncrementType.GLOBAL:
        return [
            f"  for (unsigned int i = get_global_id(0); i < {limit}; i += get_global_size(0))",
        ]
    return [
        "  unsigned int chunk = (N + get_num_groups(0) - 1) / get_num_groups(0);",
        "  chunk = ((chunk + get_local_size(0) - 1) / get_local_size(0)) * get_local_size(0);",
        "  unsigned int group_start = min((unsigned int)get_group_id(0) * chunk, N);",
        "  unsigned int group_end = min(group_start + chunk, N);",
        "  for (unsigned int i = group_start + get_local_id(0); i < group_end; i += get_local_size(0))",
    ]


_TREE_REDUCTION = [
    "  for (unsigned int stride = get_local_size(0) / 2; stride > 0; stride /= 2)",
    "  {",
    "    barrier(CLK_LOCAL_MEM_FENCE);",
    "    if (get_local_id(0) < stride)",
    "      scratch[get_local_id(0)] += scratch[get_local_id(0) + stride];",
    "  }",
]


def _preamble(prec: Precision) -> list[str]:
    lines = []
    if prec is Precision.FP64:
        lines.append("#pragma OPENCL EXTENSION cl_khr_fp64 : enable")
    # no FMA contraction: axpby must be bit-identical to the host reference
    lines.append("#pragma OPENCL FP_CONTRACT OFF")
    lines.append("")
    return lines


def _signature(name: str, config: KernelConfig, params: list[str]) -> list[str]:
    head = f"__kernel __attribute__((reqd_work_group_size({config.local_size}, 1, 1)))"
    body = [f"void {name}("]
    for k, p in enumerate(params):
        sep = "," if k < len(params) - 1 else ")"
        body.append(f"    {p}{sep}")
    return [head] + body


def _gen_copy(name, config, prec):
    t = _wide(prec, config.vector_width)
    lines = _signature(name, config, [
        f"__global {t} *x",
        f"__global const {t} *y",
        "unsigned int N",
    ])
    lines += ["{"] + _loop_head(config) + ["    x[i] = y[i];", "}"]
    return lines


def _gen_axpby(name, config, prec):
    t = _wide(prec, config.vector_width)
    s = prec.ctype
    lines = _signature(name, config, [
        f"__global {t} *x",
        f"__global const {t} *y",
        f"__global const {t} *z",
        f"{s} alpha",
        f"{s} beta",
        "unsigned int N",
    ])
    lines += ["{"] + _loop_head(config) + ["    x[i] = alpha * y[i] + beta * z[i];", "}"]
    return lines


def _gen_dot(name, config, prec):
    w = config.vector_width
    t = _wide(prec, w)
    s = prec.ctype
    lines = _signature(name, config, [
        f"__global const {t} *x",
        f"__global const {t} *y",
        f"__global {s} *partials",
        f"__local {s} *scratch",
        "unsigned int N",
    ])
    lines += ["{", f"  {t} acc = ({t})(0);"]
    lines += _loop_head(config) + ["    acc += x[i] * y[i];"]
    lines += [f"  scratch[get_local_id(0)] = {_hsum('acc', w)};"]
    lines += _TREE_REDUCTION
    lines += [
        "  if (get_local_id(0) == 0)",
        "    partials[get_group_id(0)] = scratch[0];",
        "}",
    ]
    return lines


def _gen_gemv(name, config, prec):
    w = config.vector_width
    t = _wide(prec, w)
    s = prec.ctype
    lines = _signature(name, config, [
        f"__global const {t} *A",
        f"__global const {t} *y",
        f"__global {s} *x",
        f"__local {s} *scratch",
        "unsigned int M",
        "unsigned int N",
    ])
    lines.append("{")
    if config.increment is IncrementType.GLOBAL:
        lines.append("  for (unsigned int row = get_group_id(0); row < M; row += get_num_groups(0))")
    else:
        lines += [
            "  unsigned int rows_per_group = (M + get_num_groups(0) - 1) / get_num_groups(0);",
            "  unsigned int row_start = min((unsigned int)get_group_id(0) * rows_per_group, M);",
            "  unsigned int row_end = min(row_start + rows_per_group, M);",
            "  for (unsigned int row = row_start; row < row_end; ++row)",
        ]
    lines += [
        "  {",
        f"    {t} acc = ({t})(0);",
        "    for (unsigned int col = get_local_id(0); col < N; col += get_local_size(0))",
        "      acc += A[row * N + col] * y[col];",
        f"    scratch[get_local_id(0)] = {_hsum('acc', w)};",
    ]
    lines += ["  " + ln for ln in _TREE_REDUCTION]
    lines += [
        "    if (get_local_id(0) == 0)",
        "      x[row] = scratch[0];",
        "    barrier(CLK_LOCAL_MEM_FENCE);",
        "  }",
        "}",
    ]
    return lines


_GENERATORS = {
    OpKind.COPY: _gen_copy,
    OpKind.AXPBY: _gen_axpby,
    OpKind.DOT: _gen_dot,
    OpKind.GEMV: _gen_gemv,
}


def generate(op: Operation, config: KernelConfig,
             precision: Precision | str = Precision.FP64) -> KernelSource:
    """Generate the kernel for ``op`` under ``config``.

    ``N`` passed at launch is the length in wide elements (``n / vector_width``);
    for gemv, ``N`` is the wide column count and ``M`` the row count.
    """
    precision = Precision.parse(precision)
    if op.n % config.vector_width:
        raise ValueError(
            f"n={op.n} is not divisible by vector width {config.vector_width}; "
            "tail handling is not generated")
    name = entry_point_name(op.kind, config)
    lines = _preamble(precision) + _GENERATORS[op.kind](name, config, precision)
    scratch = precision.itemsize * config.local_size if op.kind.uses_reduction else 0
    return KernelSource(
        entry_point_name=name,
        source_text="\n".join(lines) + "\n",
        scratch_bytes=scratch,
        op=op,
        config=config,
        precision=precision,
    )


def host_finalize_dot(partials) -> float:
    """Sum per-workgroup partials in ascending index order."""
    total = 0.0
    for p in partials:
        total += p
    return total


# -- host reference ---------------------------------------------------------

def operand_shapes(op: Operation) -> dict[str, tuple[int, ...]]:
    """Input operand shapes (element counts) keyed by operand name."""
    if op.kind is OpKind.COPY:
        return {"y": (op.n,)}
    if op.kind is OpKind.AXPBY:
        return {"y": (op.n,), "z": (op.n,)}
    if op.kind is OpKind.DOT:
        return {"x": (op.n,), "y": (op.n,)}
    return {"A": (op.m, op.n), "y": (op.n,)}


def make_inputs(op: Operation, precision: Precision | str = Precision.FP64,
                seed: int = 20140512) -> dict[str, np.ndarray]:
    """Deterministic uniform [-1, 1] operands for verification runs."""
    precision = Precision.parse(precision)
    rng = np.random.default_rng(seed)
    return {name: rng.uniform(-1.0, 1.0, size=shape).astype(precision.dtype)
            for name, shape in operand_shapes(op).items()}


def oracle(op: Operation, inputs: dict[str, np.ndarray],
           precision: Precision | str = Precision.FP64):
    """Sequential host computation of ``op``.

    Dot and gemv accumulate strictly left to right (``cumsum`` is sequential,
    unlike ``sum`` which is pairwise).
    """
    precision = Precision.parse(precision)
    dt = precision.dtype
    shapes = operand_shapes(op)
    for name, shape in shapes.items():
        if name not in inputs:
            raise ValueError(f"{op.kind.value}: missing operand {name!r}")
        if tuple(np.shape(inputs[name])) != shape:
            raise ValueError(f"{op.kind.value}: operand {name!r} has shape "
                             f"{np.shape(inputs[name])}, expected {shape}")
    if op.kind is OpKind.COPY:
        return np.array(inputs["y"], dtype=dt, copy=True)
    if op.kind is OpKind.AXPBY:
        y = np.asarray(inputs["y"], dtype=dt)
        z = np.asarray(inputs["z"], dtype=dt)
        return dt.type(op.alpha) * y + dt.type(op.beta) * z
    if op.kind is OpKind.DOT:
        x = np.asarray(inputs["x"], dtype=dt)
        y = np.asarray(inputs["y"], dtype=dt)
        return dt.type(np.cumsum(x * y, dtype=dt)[-1])
    A = np.asarray(inputs["A"], dtype=dt)
    y = np.asarray(inputs["y"], dtype=dt)
    return np.cumsum(A * y, axis=1, dtype=dt)[:, -1].copy()

