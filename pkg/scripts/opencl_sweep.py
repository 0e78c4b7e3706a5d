#!/usr/bin/env python3
"""Sweep the configuration space on a real OpenCL device.

The theoretical peak bandwidth cannot be queried from the runtime and has to
be passed with --peak (GB/s).  Without --configs every admissible config is
run, which takes a while on CPU runtimes; --sample picks a random subset.
"""

import argparse
import logging
import random
import sys

from clbwtune import store
from clbwtune.backend import opencl
from clbwtune.bench import SweepPlan, default_problem, run_sweep
from clbwtune.configspace import enumerate_configs, parse_config_id
from clbwtune.kernelgen import ALL_OPS, OpKind


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--peak", type=float, required=True, help="theoretical peak in GB/s")
    ap.add_argument("--device-index", type=int, default=0)
    ap.add_argument("--op", action="append", choices=[k.value for k in OpKind],
                    help="repeatable; default: all four")
    ap.add_argument("--n", type=int)
    ap.add_argument("--m", type=int)
    ap.add_argument("--sample", type=int, help="run a random subset of this many configs")
    ap.add_argument("--configs", nargs="*", help="explicit config ids")
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("-o", "--output", required=True)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    if not opencl.available():
        sys.exit("no OpenCL device available")
    dev = opencl.list_devices()[args.device_index]
    spec = opencl.spec_from_device(dev, args.peak)
    backend = opencl.OpenCLBackend(spec, dev)
    cap = min(spec.max_local_size, 512)
    cfgs = ([parse_config_id(c) for c in args.configs] if args.configs
            else enumerate_configs(cap))
    if args.sample:
        cfgs = sorted(random.Random(args.seed).sample(cfgs, args.sample),
                      key=lambda c: c.sort_key())
    ops = [OpKind.parse(o) for o in args.op] if args.op else ALL_OPS
    print(f"{spec.name}: {len(cfgs)} configs x {len(ops)} ops, local mem {backend.local_mem_size} B")
    for kind in ops:
        prob = default_problem(kind, n=args.n, m=args.m)
        plan = SweepPlan(spec, prob, cfgs, repetitions=args.reps)
        rs = run_sweep(plan, backend,
                       progress=lambda k, t: k % 50 == 0 and print(f"  {kind.value} {k}/{t}"))
        store.append(args.output, rs)
        ver = rs.verified()
        best = max(ver, key=lambda r: r.relative_bw) if len(ver) else None
        print(f"{kind.value}: {len(ver)}/{len(rs)} verified"
              + (f", best {best.bandwidth / 1e9:.2f} GB/s ({best.config_key})" if best else ""))


if __name__ == "__main__":
    main()
