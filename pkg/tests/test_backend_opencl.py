"""Real OpenCL adapter; skipped when no runtime/device is present."""

import dataclasses

import numpy as np
import pytest

from clbwtune.backend import opencl
from clbwtune.backend.base import CompileError, LaunchError, build_plan, kernel_result
from clbwtune.backend.sim import SimBackend, gpu_like
from clbwtune.bench import SweepPlan, default_problem, reduction_scale, run_sweep, verify
from clbwtune.configspace import parse_config_id
from clbwtune.kernelgen import ALL_OPS, OpKind, Precision, generate, make_inputs, oracle

pytestmark = [pytest.mark.opencl,
              pytest.mark.skipif(not opencl.available(), reason="no OpenCL device")]


@pytest.fixture(scope="module")
def backend():
    dev = opencl.list_devices()[0]
    spec = opencl.spec_from_device(dev, peak_gbps=10.0)
    return opencl.OpenCLBackend(spec, dev)


def desk(kind):
    return default_problem(kind, n=4096, m=64 if kind is OpKind.GEMV else None)


@pytest.mark.parametrize("cid", ["g/v1/l128/w80", "l/v4/l64/w48", "g/v16/l1/w1", "l/v1/l256/w1024"])
@pytest.mark.parametrize("kind", ALL_OPS, ids=lambda k: k.value)
def test_matches_oracle_and_sim(backend, kind, cid):
    op, cfg = desk(kind), parse_config_id(cid)
    src = generate(op, cfg)
    inputs = make_inputs(op)
    plan = build_plan(src, inputs)
    res = backend.execute(backend.compile(src), plan)
    assert res.elapsed > 0
    got = kernel_result(op, res.outputs)
    note = verify(op, got, oracle(op, inputs), Precision.FP64, reduction_scale(op, inputs))
    assert note is None
    sim = SimBackend(gpu_like())
    sim_out = sim.execute(sim.compile(src), build_plan(src, inputs)).outputs
    assert sim_out.keys() == res.outputs.keys()
    for name in sim_out:
        assert sim_out[name].shape == res.outputs[name].shape


def test_fp32_dot(backend):
    op = desk(OpKind.DOT)
    src = generate(op, parse_config_id("g/v4/l64/w16"), "fp32")
    inputs = make_inputs(op, "fp32")
    res = backend.execute(backend.compile(src), build_plan(src, inputs))
    got = kernel_result(op, res.outputs)
    assert verify(op, got, oracle(op, inputs, "fp32"), Precision.FP32,
                  reduction_scale(op, inputs)) is None


def test_compile_error_has_diagnostics(backend):
    src = generate(desk(OpKind.COPY), parse_config_id("g/v1/l1/w1"))
    broken = dataclasses.replace(src, source_text=src.source_text.replace("x[i] = y[i];", "x[i] = ;"))
    with pytest.raises(CompileError) as ei:
        backend.compile(broken)
    assert ei.value.diagnostics


def test_local_size_cap(backend):
    small = dataclasses.replace(backend.device, max_local_size=256)
    be = opencl.OpenCLBackend(small, backend.cl_device)
    op = desk(OpKind.COPY)
    src = generate(op, parse_config_id("g/v1/l512/w1"))
    with pytest.raises(LaunchError):
        be.execute(be.compile(src), build_plan(src, make_inputs(op)))


def test_small_sweep(backend):
    cfgs = [parse_config_id(c) for c in ("g/v1/l64/w16", "l/v2/l32/w8", "g/v8/l128/w80")]
    rs = run_sweep(SweepPlan(backend.device, desk(OpKind.AXPBY), cfgs, repetitions=3,
                             warmup_runs=1), backend)
    assert len(rs) == 3
    assert all(r.verified and r.elapsed > 0 for r in rs)
    assert rs.metadata["backend"] == "opencl"

