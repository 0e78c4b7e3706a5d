import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from clbwtune.backend.base import (CompileError, Fp64Unsupported, LaunchError, LaunchPlan,
                                   OutOfResources, build_plan, kernel_result)
from clbwtune.backend.sim import (MAX_NOISE, SimBackend, SimDeviceModel, cpu_like, gpu_like,
                                  model_from_spec, predicted_bandwidth, uniform)
from clbwtune.bench import default_problem
from clbwtune.configspace import (LOCAL_SIZES, VECTOR_WIDTHS, WORKGROUP_COUNTS, DeviceClass,
                                  DeviceSpec, IncrementType, KernelConfig, parse_config_id,
                                  parse_device_line)
from clbwtune.kernelgen import ALL_OPS, OpKind, Operation, generate, make_inputs, oracle

configs = st.builds(KernelConfig, st.sampled_from(list(IncrementType)),
                    st.sampled_from(VECTOR_WIDTHS), st.sampled_from(LOCAL_SIZES),
                    st.sampled_from(WORKGROUP_COUNTS))

FLAT = DeviceSpec("flat", DeviceClass.GPU, 512, 100e9, True)


def run(backend, op, cfg, prec="fp64"):
    src = generate(op, cfg, prec)
    inputs = make_inputs(op, prec)
    res = backend.execute(backend.compile(src), build_plan(src, inputs))
    return res, inputs


class TestTiming:
    def test_copy_elapsed_example(self):
        be = SimBackend(uniform(FLAT))
        src = generate(default_problem("copy"), parse_config_id("g/v1/l128/w80"))
        handle = be.compile(src)
        # big inputs are not needed to ask for the model time
        assert be.elapsed(handle) == pytest.approx(3.2e-4, rel=1e-15)

    def test_measure_is_deterministic(self):
        be = SimBackend(gpu_like())
        op = Operation("copy", n=64)
        src = generate(op, parse_config_id("l/v2/l32/w8"))
        plan = build_plan(src, make_inputs(op))
        h = be.compile(src)
        assert be.measure(h, plan, 5) == be.measure(h, plan, 5)
        assert SimBackend(gpu_like()).measure(be.compile(src), plan, 1) == be.measure(h, plan, 1)


class TestPredictedBandwidth:
    def test_identity_factors_give_peak(self):
        m = uniform(FLAT)
        for cfg in FLAT.configs()[::37]:
            assert predicted_bandwidth(m, cfg) == 100e9

    @given(configs, st.sampled_from(ALL_OPS), st.integers(0, 10**6),
           st.floats(0.0, MAX_NOISE))
    def test_never_above_peak(self, cfg, op, seed, amp):
        for model in (gpu_like(), cpu_like()):
            m = model.with_noise(seed, amp)
            bw = predicted_bandwidth(m, cfg, op)
            assert 0 < bw <= m.base.peak_bandwidth

    @given(configs)
    def test_gpu_prefers_128_over_1(self, cfg):
        m = gpu_like(noise_seed=0)
        a = predicted_bandwidth(m, dataclasses.replace(cfg, local_size=128))
        b = predicted_bandwidth(m, dataclasses.replace(cfg, local_size=1))
        assert a >= b

    @given(configs)
    def test_cpu_prefers_local_increment(self, cfg):
        m = cpu_like(noise_seed=0)
        a = predicted_bandwidth(m, dataclasses.replace(cfg, increment=IncrementType.LOCAL))
        b = predicted_bandwidth(m, dataclasses.replace(cfg, increment=IncrementType.GLOBAL))
        assert a >= b

    @given(configs, st.integers(1, 10**6))
    def test_noise_deterministic_and_bounded(self, cfg, seed):
        m = gpu_like(noise_seed=seed, noise_amplitude=0.02)
        f = m.noise_factor(cfg, OpKind.COPY)
        assert f == m.noise_factor(cfg, OpKind.COPY)
        assert 0.98 < f <= 1.0

    def test_zero_seed_is_noiseless(self):
        cfg = parse_config_id("g/v1/l128/w128")
        assert gpu_like(noise_seed=0).noise_factor(cfg) == 1.0

    def test_factor_validation(self):
        with pytest.raises(ValueError):
            SimDeviceModel(FLAT, width_efficiency={1: 1.5})
        with pytest.raises(ValueError):
            SimDeviceModel(FLAT, noise_amplitude=0.2)

    def test_model_from_spec_overrides(self):
        spec = parse_device_line("d, GPU, 512, 10.0, yes, profile=uniform, width=1:0.5, "
                                 "local_mem=2048, seed=0")
        m = model_from_spec(spec)
        assert m.local_mem_size == 2048
        cfg = parse_config_id("g/v1/l1/w1")
        assert predicted_bandwidth(m, cfg) == pytest.approx(5e9)
        assert model_from_spec(spec, "gpu-like").profile == "gpu-like"
        with pytest.raises(ValueError, match="profile"):
            model_from_spec(spec, "tpu-like")


class TestCorrectness:
    @pytest.mark.parametrize("cid", ["g/v1/l1/w1", "g/v4/l128/w80", "l/v2/l64/w1024",
                                     "l/v16/l512/w48", "g/v16/l512/w1024", "l/v1/l2/w384"])
    @pytest.mark.parametrize("kind", ALL_OPS, ids=lambda k: k.value)
    def test_matches_oracle(self, kind, cid):
        op = default_problem(kind, n=4096, m=64 if kind is OpKind.GEMV else None)
        res, inputs = run(SimBackend(gpu_like()), op, parse_config_id(cid))
        got = kernel_result(op, res.outputs)
        want = oracle(op, inputs)
        if kind in (OpKind.COPY, OpKind.AXPBY):
            np.testing.assert_array_equal(got, want)
        else:
            np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12 * 4096)

    def test_fp32(self):
        op = default_problem("dot", n=4096)
        res, inputs = run(SimBackend(gpu_like()), op, parse_config_id("g/v4/l64/w16"), "fp32")
        assert res.outputs["partials"].dtype == np.float32
        assert kernel_result(op, res.outputs) == pytest.approx(float(oracle(op, inputs, "fp32")),
                                                               rel=1e-4)

    def test_inputs_untouched(self):
        op = default_problem("copy", n=256)
        src = generate(op, parse_config_id("g/v1/l16/w4"))
        inputs = make_inputs(op)
        plan = build_plan(src, inputs)
        before = plan.buffer("x").copy()
        SimBackend(gpu_like()).execute(SimBackend(gpu_like()).compile(src), plan)
        np.testing.assert_array_equal(plan.buffer("x"), before)


class TestErrors:
    def test_entry_point_mismatch_is_compile_error(self):
        src = generate(Operation("copy", n=16), parse_config_id("g/v1/l1/w1"))
        bad = dataclasses.replace(src, entry_point_name="nope")
        with pytest.raises(CompileError) as ei:
            SimBackend(uniform(FLAT)).compile(bad)
        assert "nope" in ei.value.diagnostics

    def test_fp64_on_fp32_device(self):
        dev = DeviceSpec("f32", DeviceClass.GPU, 512, 1e9, supports_fp64=False)
        src = generate(Operation("copy", n=16), parse_config_id("g/v1/l1/w1"))
        with pytest.raises(Fp64Unsupported):
            SimBackend(uniform(dev)).compile(src)
        fp32 = generate(Operation("copy", n=16), parse_config_id("g/v1/l1/w1"), "fp32")
        SimBackend(uniform(dev)).compile(fp32)

    def test_local_size_above_device_max(self):
        dev = DeviceSpec("amd", DeviceClass.GPU, 256, 1e9, True)
        op = Operation("copy", n=1024)
        src = generate(op, parse_config_id("g/v1/l512/w1"))
        be = SimBackend(uniform(dev))
        with pytest.raises(LaunchError, match="exceeds"):
            be.execute(be.compile(src), build_plan(src, make_inputs(op)))

    def test_scratch_above_local_memory(self):
        m = dataclasses.replace(uniform(FLAT), local_mem_size=2048)
        op = Operation("dot", n=1024)
        src = generate(op, parse_config_id("g/v1/l512/w1"))
        assert src.scratch_bytes == 4096
        be = SimBackend(m)
        with pytest.raises(OutOfResources):
            be.execute(be.compile(src), build_plan(src, make_inputs(op)))

    def test_default_local_memory_fits_full_space(self):
        # 8 * 512 = 4 KiB, comfortably inside 32 KiB
        assert gpu_like().local_mem_size == 32 * 1024

    def test_wrong_local_size_in_plan(self):
        op = Operation("copy", n=64)
        src = generate(op, parse_config_id("g/v1/l8/w2"))
        plan = build_plan(src, make_inputs(op))
        bad = LaunchPlan(plan.entry_point, plan.global_size, 4, plan.args, plan.precision)
        be = SimBackend(uniform(FLAT))
        with pytest.raises(LaunchError):
            be.execute(be.compile(src), bad)


def test_profiles_have_distinct_optima():
    g, c = gpu_like(noise_seed=0), cpu_like(noise_seed=0)
    cfgs = FLAT.configs()
    best_g = max(cfgs, key=lambda k: g.factor_product(k))
    best_c = max(cfgs, key=lambda k: c.factor_product(k))
    assert best_g.increment is IncrementType.GLOBAL and best_g.local_size in (128, 256)
    assert best_c.increment is IncrementType.LOCAL
