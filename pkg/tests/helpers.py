"""Shared helpers for the test-suite."""

from clbwtune.backend.sim import SimBackend
from clbwtune.bench import SweepPlan, default_problem, run_sweep
from clbwtune.configspace import enumerate_configs
from clbwtune.kernelgen import ALL_OPS

DESK_N = 4096
DESK_M = 64


def desk_problem(kind):
    return default_problem(kind, n=DESK_N, m=DESK_M if kind.value == "gemv" else None)


def sweep_all_ops(model, reps=3, warmup=1, cap=None):
    backend = SimBackend(model)
    cfgs = enumerate_configs(cap or model.base.max_local_size)
    return {op: run_sweep(SweepPlan(model.base, desk_problem(op), cfgs, repetitions=reps,
                                    warmup_runs=warmup), backend)
            for op in ALL_OPS}


def synth(device, op, rel_by_cfg, precision=None):
    """ResultSet with one verified record per (config, relative_bw) pair."""
    from clbwtune.accounting import bytes_moved
    from clbwtune.configspace import parse_config_id
    from clbwtune.kernelgen import OpKind, Precision
    from clbwtune.results import BenchmarkRecord, ResultSet

    kind = OpKind.parse(op)
    prec = precision or Precision.FP64
    p = desk_problem(kind)
    nbytes = bytes_moved(p, prec)
    recs = []
    for cfg, rel in rel_by_cfg.items():
        cfg = parse_config_id(cfg) if isinstance(cfg, str) else cfg
        recs.append(BenchmarkRecord(device, kind, p.n, p.m, cfg, nbytes, nbytes / (rel * 1e9),
                                    rel * 1e9, rel, True, 3, precision=prec))
    return ResultSet(recs, {"device": device, "op": kind.value})


def random_records(count, seed=0):
    """Seeded pseudo-random records covering failed and verified variants."""
    import random
    import string
    from datetime import datetime, timedelta, timezone

    from clbwtune.configspace import enumerate_configs
    from clbwtune.kernelgen import OpKind, Precision
    from clbwtune.results import BenchmarkRecord

    rng = random.Random(seed)
    cfgs = enumerate_configs()
    t0 = datetime(2014, 1, 1, tzinfo=timezone.utc)
    alphabet = string.ascii_letters + string.digits + " -_.,\"\\/äé✓"
    out = []
    for _ in range(count):
        kind = rng.choice(list(OpKind))
        ok = rng.random() < 0.8
        elapsed = rng.uniform(1e-7, 10.0)
        out.append(BenchmarkRecord(
            device_name="".join(rng.choice(alphabet) for _ in range(rng.randint(1, 16))),
            op_kind=kind,
            n=rng.randint(1, 10**8),
            m=rng.randint(1, 10**4) if kind is OpKind.GEMV else None,
            config=rng.choice(cfgs),
            bytes_moved=rng.randint(1, 10**11),
            elapsed=elapsed if ok or rng.random() < 0.5 else None,
            bandwidth=rng.uniform(1e6, 1e12) if ok else None,
            relative_bw=rng.uniform(0.0, 1.05) if ok else None,
            verified=ok,
            repetitions=rng.choice([3, 5, 7]),
            timestamp=t0 + timedelta(seconds=rng.uniform(0, 4e8)),
            precision=rng.choice(list(Precision)),
            error=None if ok else "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40))),
        ))
    return out
