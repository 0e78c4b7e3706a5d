from .base import (Backend, BackendError, BufferArg, CompileError, DeviceLost, ExecutionResult,
                   Fp64Unsupported, LaunchError, LaunchPlan, OutOfResources, ScalarArg,
                   ScratchArg, build_plan, kernel_result)
from .sim import (PROFILES, SimBackend, SimDeviceModel, cpu_like, gpu_like, model_from_spec,
                  predicted_bandwidth, uniform)

__all__ = [
    "Backend", "BackendError", "BufferArg", "CompileError", "DeviceLost", "ExecutionResult",
    "Fp64Unsupported", "LaunchError", "LaunchPlan", "OutOfResources", "ScalarArg", "ScratchArg",
    "build_plan", "kernel_result", "PROFILES", "SimBackend", "SimDeviceModel", "cpu_like",
    "gpu_like", "model_from_spec", "predicted_bandwidth", "uniform",
]
