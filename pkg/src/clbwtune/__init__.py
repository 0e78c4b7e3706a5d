"""Bandwidth-kernel autotuning and portability analysis for OpenCL devices."""

from .configspace import (DeviceClass, DeviceSpec, IncrementType, KernelConfig, config_id,
                          enumerate_configs, parse_config_id)
from .kernelgen import ALL_OPS, KernelSource, OpKind, Operation, Precision, generate
from .results import BenchmarkRecord, ResultSet

__version__ = "0.1.0"

__all__ = [
    "ALL_OPS", "BenchmarkRecord", "DeviceClass", "DeviceSpec", "IncrementType", "KernelConfig",
    "KernelSource", "OpKind", "Operation", "Precision", "ResultSet", "config_id",
    "enumerate_configs", "generate", "parse_config_id",
]
