#!/usr/bin/env python3
"""Full study on the simulated profiles: sweep all ops, then every analysis.

Writes store files and CSV/text outputs into --out.  Sizes default to the
desk scale (n=4096, gemv 64 x 4096); simulated timing does not depend on n.
"""

import argparse
import logging
import warnings
from pathlib import Path

from clbwtune import analysis, report, store
from clbwtune.backend.sim import PROFILES, SimBackend
from clbwtune.bench import SweepPlan, default_problem, run_sweep
from clbwtune.configspace import enumerate_configs
from clbwtune.kernelgen import ALL_OPS, OpKind

log = logging.getLogger("sim_study")


def sweep_profile(name, seed, noise, n, m, reps):
    model = PROFILES[name](noise_seed=seed, noise_amplitude=noise)
    backend = SimBackend(model)
    out = {}
    for op in ALL_OPS:
        prob = default_problem(op, n=n, m=m if op is OpKind.GEMV else None)
        plan = SweepPlan(model.base, prob, enumerate_configs(model.base.max_local_size),
                         repetitions=reps)
        out[op] = run_sweep(plan, backend)
        log.info("%s %s: %d records", name, op.value, len(out[op]))
    return model.base.name, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("sim-study"))
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--noise", type=float, default=0.02)
    ap.add_argument("--n", type=int, default=4096)
    ap.add_argument("--m", type=int, default=64)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--threshold", type=float, default=analysis.DEFAULT_THRESHOLD)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args.out.mkdir(parents=True, exist_ok=True)

    results = {}
    for name in PROFILES:
        dev, per_op = sweep_profile(name, args.seed, args.noise, args.n, args.m, args.reps)
        results[dev] = per_op
        path = args.out / f"{dev}.jsonl"
        path.unlink(missing_ok=True)
        for rs in per_op.values():
            store.append(path, rs)

    for dev, per_op in results.items():
        for param in analysis.Parameter:
            for op, rs in per_op.items():
                h = analysis.histogram_by_parameter(rs, param)
                (args.out / f"hist_{dev}_{op.value}_{param.value}.csv").write_text(
                    report.histogram_csv(h))
        for op in ALL_OPS[1:]:
            s = analysis.scatter_pairs(per_op[OpKind.COPY], per_op[op])
            (args.out / f"scatter_{dev}_copy_{op.value}.csv").write_text(report.scatter_csv(s))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rep = analysis.transfer_tune(per_op, args.threshold)
        for w in caught:
            print("warning:", w.message)
        print(report.transfer_text(rep, dev))

    devs = list(results)
    cross = analysis.cross_device_pairs(results[devs[0]][OpKind.COPY], results[devs[1]][OpKind.COPY])
    (args.out / "cross_device_copy.csv").write_text(report.scatter_csv(cross))
    pm = analysis.penalty_matrix({d: results[d][OpKind.COPY] for d in devs})
    print(report.penalty_table(pm))
    best = {d: analysis.select_best_average(results[d]) for d in devs}
    print(report.best_average_table(best))
    print(f"outputs in {args.out}/")


if __name__ == "__main__":
    main()
