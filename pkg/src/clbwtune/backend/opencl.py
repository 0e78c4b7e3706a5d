"""OpenCL runtime adapter (pyopencl).

Timing uses device profiling events on an in-order queue; host timers are
never used for the timed region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..configspace import DeviceClass, DeviceSpec
from ..kernelgen import KernelSource
from .base import (BufferArg, CompileError, DeviceLost, ExecutionResult, Fp64Unsupported,
                   LaunchError, LaunchPlan, OutOfResources, ScalarArg, ScratchArg)

try:
    import pyopencl as cl
except ImportError:  # pragma: no cover - exercised only without pyopencl
    cl = None


def available() -> bool:
    if cl is None:
        return False
    try:
        return any(p.get_devices() for p in cl.get_platforms())
    except cl.Error:
        return False


def list_devices():
    if cl is None:
        return []
    out = []
    for p in cl.get_platforms():
        try:
            out.extend(p.get_devices())
        except cl.Error:
            continue
    return out


def _class_of(dev) -> DeviceClass:
    t = dev.type
    if t & cl.device_type.GPU:
        return DeviceClass.GPU
    if t & cl.device_type.ACCELERATOR:
        return DeviceClass.ACCELERATOR
    return DeviceClass.CPU


def find_device(spec: DeviceSpec):
    """Pick the runtime device for ``spec``.

    Matches the device record's ``opencl=<substring>`` extra (or its name) against the
    runtime device names; falls back to the only device if there is exactly one.
    """
    devices = list_devices()
    if not devices:
        raise DeviceLost("no OpenCL devices found")
    needle = spec.extra.get("opencl", spec.name).lower()
    hits = [d for d in devices if needle in d.name.lower()]
    if hits:
        return hits[0]
    if len(devices) == 1:
        return devices[0]
    raise LaunchError(f"no OpenCL device matches {needle!r}; have {[d.name for d in devices]}")


def spec_from_device(dev, peak_gbps: float) -> DeviceSpec:
    return DeviceSpec(
        name=dev.name.strip(),
        device_class=_class_of(dev),
        max_local_size=int(dev.max_work_group_size),
        peak_bandwidth=peak_gbps * 1e9,
        supports_fp64=bool(dev.double_fp_config),
    )


@dataclass
class CLProgram:
    source: KernelSource
    program: "object"
    kernel: "object"


_LOST = {-1, -6}  # DEVICE_NOT_FOUND, OUT_OF_HOST_MEMORY
_NO_RESOURCES = -5


class OpenCLBackend:
    kind = "opencl"

    def __init__(self, device_spec: DeviceSpec, cl_device=None):
        if cl is None:
            raise RuntimeError("pyopencl is not installed; pip install pyopencl")
        self.device = device_spec
        self.cl_device = cl_device if cl_device is not None else find_device(device_spec)
        self.context = cl.Context([self.cl_device])
        self.queue = cl.CommandQueue(
            self.context, properties=cl.command_queue_properties.PROFILING_ENABLE)

    @property
    def local_mem_size(self) -> int:
        return int(self.cl_device.local_mem_size)

    def compile(self, source: KernelSource, device: DeviceSpec | None = None) -> CLProgram:
        if "cl_khr_fp64" in source.source_text and not self.cl_device.double_fp_config:
            raise Fp64Unsupported(f"{self.cl_device.name} does not support cl_khr_fp64")
        try:
            prg = cl.Program(self.context, source.source_text).build()
        except cl.Error as exc:
            raise CompileError(str(exc)) from None
        try:
            kernel = cl.Kernel(prg, source.entry_point_name)
        except cl.Error:
            raise CompileError(f"entry point {source.entry_point_name!r} not in program") from None
        return CLProgram(source, prg, kernel)

    def _bind(self, handle: CLProgram, plan: LaunchPlan):
        if plan.entry_point != handle.source.entry_point_name:
            raise LaunchError(f"kernel {plan.entry_point!r} not in program")
        if plan.local_size > self.device.max_local_size:
            raise LaunchError(f"local size {plan.local_size} exceeds device maximum "
                              f"{self.device.max_local_size}")
        if plan.scratch_bytes > self.local_mem_size:
            raise OutOfResources(f"{plan.scratch_bytes} bytes of local memory requested, "
                                 f"device has {self.local_mem_size}")
        mf = cl.mem_flags
        real = plan.precision.dtype.type
        args, outs = [], {}
        for a in plan.args:
            if isinstance(a, BufferArg):
                if a.output:
                    buf = cl.Buffer(self.context, mf.READ_WRITE, size=max(a.array.nbytes, 1))
                    outs[a.name] = (buf, a.array)
                else:
                    buf = cl.Buffer(self.context, mf.READ_ONLY | mf.COPY_HOST_PTR, hostbuf=a.array)
                args.append(buf)
            elif isinstance(a, ScalarArg):
                args.append(np.uint32(a.value) if a.kind == "uint" else real(a.value))
            elif isinstance(a, ScratchArg):
                args.append(cl.LocalMemory(a.nbytes))
        kernel = handle.kernel
        kernel.set_args(*args)
        # the caller must keep ``args`` alive until the launch has completed
        return kernel, outs, args

    def _launch(self, kernel, plan: LaunchPlan) -> float:
        try:
            evt = cl.enqueue_nd_range_kernel(self.queue, kernel, (plan.global_size,),
                                             (plan.local_size,))
            evt.wait()
        except cl.Error as exc:
            code = getattr(exc, "code", None)
            if code in _LOST:
                raise DeviceLost(str(exc)) from None
            if code == _NO_RESOURCES:
                raise OutOfResources(str(exc)) from None
            raise LaunchError(str(exc)) from None
        return (evt.profile.end - evt.profile.start) * 1e-9

    def execute(self, handle: CLProgram, plan: LaunchPlan) -> ExecutionResult:
        kernel, outs, _args = self._bind(handle, plan)
        elapsed = self._launch(kernel, plan)
        outputs = {}
        for name, (buf, like) in outs.items():
            host = np.empty_like(like)
            cl.enqueue_copy(self.queue, host, buf).wait()
            outputs[name] = host
        return ExecutionResult(elapsed, outputs)

    def measure(self, handle: CLProgram, plan: LaunchPlan, runs: int) -> list[float]:
        kernel, _outs, _args = self._bind(handle, plan)
        return [self._launch(kernel, plan) for _ in range(runs)]
