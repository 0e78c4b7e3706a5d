"""Minimum-bytes model used to turn elapsed times into bandwidth."""

from __future__ import annotations

from .kernelgen import OpKind, Operation, Precision


def bytes_moved(op: Operation, precision: Precision | str = Precision.FP64) -> int:
    """Bytes that must cross the memory interface for ``op``.

    Scalars and dot partials are not counted; gemv assumes the right-hand
    side vector is read once (perfect caching).  Independent of the kernel
    configuration.
    """
    s = Precision.parse(precision).itemsize
    n = op.n
    if op.kind is OpKind.COPY:
        return 2 * n * s
    if op.kind is OpKind.AXPBY:
        return 3 * n * s
    if op.kind is OpKind.DOT:
        return 2 * n * s
    return (op.m * n + n + op.m) * s
