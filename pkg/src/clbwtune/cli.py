"""Command-line interface: devices, gen, sweep, analyze, tune."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import analysis, fixtures, report, store
from .bench import SweepPlan, default_problem, run_sweep
from .configspace import (DeviceSpec, bundled_device_spec_path, config_id, enumerate_configs,
                          load_device_specs, parse_config_id)
from .kernelgen import ALL_OPS, OpKind, Precision, generate
from .results import ResultSet

log = logging.getLogger("clbwtune")

OP_CHOICES = [k.value for k in OpKind]


class CLIError(Exception):
    pass


def _write(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _spec_path(args) -> Path:
    return Path(args.device_spec) if args.device_spec else bundled_device_spec_path()


def _resolve_device(args) -> DeviceSpec:
    path = _spec_path(args)
    try:
        devices = load_device_specs(path)
    except OSError as exc:
        raise CLIError(f"cannot read device spec file {path}: {exc}") from None
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    name = args.device
    if name is None:
        backend = args.backend or "sim:gpu-like"
        defaults = {"sim:gpu-like": "sim-gpu", "sim:cpu-like": "sim-cpu",
                    "sim:uniform": "sim-uniform"}
        name = defaults.get(backend)
        if name is None:
            raise CLIError("--device is required for this backend")
    if name not in devices:
        raise CLIError(f"device {name!r} is not defined in {path} "
                       f"(known: {', '.join(devices)})")
    return devices[name]


def _make_backend(choice: str, device: DeviceSpec):
    if choice == "opencl":
        from .backend import opencl
        if not opencl.available():
            raise CLIError("no OpenCL runtime available (install pyopencl and an ICD)")
        return opencl.OpenCLBackend(device)
    if choice.startswith("sim"):
        from .backend.sim import SimBackend, model_from_spec
        _, _, profile = choice.partition(":")
        try:
            return SimBackend(model_from_spec(device, profile or None))
        except ValueError as exc:
            raise CLIError(str(exc)) from None
    raise CLIError(f"unknown backend {choice!r}; use 'opencl' or 'sim:<profile>'")


# -- subcommands ------------------------------------------------------------

def cmd_devices(args) -> int:
    path = _spec_path(args)
    try:
        devices = load_device_specs(path)
    except (OSError, ValueError) as exc:
        raise CLIError(f"{path}: {exc}") from None
    print(f"# {path}")
    for d in devices.values():
        extra = " ".join(f"{k}={v}" for k, v in d.extra.items())
        print(f"{d.name}\t{d.device_class.value}\tmax_local={d.max_local_size}\t"
              f"peak={d.peak_bandwidth / 1e9:.1f} GB/s\tfp64={'yes' if d.supports_fp64 else 'no'}"
              + (f"\t{extra}" if extra else ""))
    if args.opencl:
        from .backend import opencl
        for dev in opencl.list_devices():
            print(f"opencl\t{dev.name.strip()}\tmax_local={dev.max_work_group_size}\t"
                  f"local_mem={dev.local_mem_size}\tfp64={'yes' if dev.double_fp_config else 'no'}")
    return 0


def cmd_gen(args) -> int:
    try:
        cfg = parse_config_id(args.config)
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    op = default_problem(args.op, n=args.n, m=args.m)
    try:
        src = generate(op, cfg, args.precision)
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    sys.stdout.write(src.source_text)
    return 0


def cmd_sweep(args) -> int:
    device = _resolve_device(args)
    backend = _make_backend(args.backend or f"sim:{device.extra.get('profile', 'gpu-like')}",
                            device)
    cap = min(device.max_local_size, args.local_size_cap or device.max_local_size)
    configs = enumerate_configs(cap)
    op = default_problem(args.op, n=args.n, m=args.m)
    try:
        plan = SweepPlan(device, op, configs, repetitions=args.reps, warmup_runs=args.warmup,
                         precision=Precision.parse(args.precision))
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    rs = run_sweep(plan, backend)
    out = args.output
    try:
        store.append(out, rs)
    except OSError as exc:
        raise CLIError(f"cannot write {out}: {exc}") from None
    ver = rs.verified()
    if len(ver):
        best = max(ver, key=lambda r: r.relative_bw)
        best_txt = f"best relative_bw {best.relative_bw:.4f} ({best.config_key})"
    else:
        best_txt = "no verified record"
    print(f"{device.name} {op.kind.value}: {len(rs)} records, {len(ver)} verified, "
          f"{best_txt} -> {out}")
    return 0


def _load_inputs(args) -> ResultSet:
    if not args.stores:
        raise CLIError("no input store given (pass store files or --fixture)")
    try:
        return store.read_many(args.stores)
    except OSError as exc:
        raise CLIError(str(exc)) from None
    except store.StoreFormatError as exc:
        raise CLIError(f"bad store: {exc}") from None


def _pick(rs: ResultSet, device: str | None, op: str | None, what: str) -> ResultSet:
    sel = rs.select(device=device, op=op)
    if len(sel) == 0:
        raise CLIError(f"no {what} records for device={device or '*'} op={op or '*'}; "
                       f"store has devices {rs.devices} and ops {[o.value for o in rs.ops]}")
    if len(sel.devices) > 1:
        raise CLIError(f"several devices in input ({', '.join(sel.devices)}); pass --device")
    if len(sel.ops) > 1:
        raise CLIError(f"several ops in input ({', '.join(o.value for o in sel.ops)}); pass --op")
    return sel


def _per_op(rs: ResultSet, device: str) -> dict:
    sel = rs.select(device=device)
    missing = [op.value for op in ALL_OPS if len(sel.select(op=op)) == 0]
    if missing:
        raise CLIError(f"device {device!r} lacks records for op(s): {', '.join(missing)}")
    return {op: sel.select(op=op) for op in ALL_OPS}


def cmd_analyze(args) -> int:
    kind = args.kind
    if args.fixture and args.fixture not in fixtures.FIXTURES:
        raise CLIError(f"unknown fixture {args.fixture!r}; choose from {fixtures.FIXTURES}")

    if kind == "penalty":
        if args.fixture == fixtures.COPY_MATRIX_TAG:
            per_dev, prov = fixtures.copy_matrix_records(), args.fixture
            names = fixtures.LONG_NAMES
        elif args.fixture:
            raise CLIError("penalty replays paper-table-1 only")
        else:
            rs = _load_inputs(args).select(op="copy")
            if len(rs.devices) < 2:
                raise CLIError(f"penalty matrix needs copy records for >= 2 devices, "
                               f"found {rs.devices}")
            per_dev, prov, names = {d: rs.select(device=d) for d in rs.devices}, None, None
        pm = analysis.penalty_matrix(per_dev)
        _write(report.penalty_table(pm, names, prov), args.emit)
        return 0

    if kind == "best-average":
        if args.fixture == fixtures.BEST_AVERAGE_TAG:
            data, prov = fixtures.best_average_records(), args.fixture
            results = {d: analysis.select_best_average(per_op) for d, per_op in data.items()}
        elif args.fixture:
            raise CLIError("best-average replays paper-table-2 only")
        else:
            rs, prov = _load_inputs(args), None
            devs = [args.device] if args.device else rs.devices
            results = {d: analysis.select_best_average(_per_op(rs, d)) for d in devs}
        text = (report.best_average_json(results) if args.json
                else report.best_average_table(results, prov))
        _write(text, args.emit)
        return 0

    if args.fixture:
        rs = fixtures.fixture_resultset(args.fixture)
    else:
        rs = _load_inputs(args)

    if kind == "histogram":
        if not args.param:
            raise CLIError("histogram needs --param")
        sel = _pick(rs, args.device, args.op, "input")
        hist = analysis.histogram_by_parameter(sel, args.param, args.bin_width)
        _write(report.histogram_csv(hist), args.emit)
    elif kind == "scatter":
        target_op = args.target_op or args.op
        if not target_op:
            raise CLIError("scatter needs --target-op (compared against copy)")
        ref = _pick(rs, args.device, "copy", "copy")
        tgt = _pick(rs, ref.devices[0], target_op, target_op)
        _write(report.scatter_csv(analysis.scatter_pairs(ref, tgt)), args.emit)
    elif kind == "cross-device":
        if not (args.device and args.target_device):
            raise CLIError("cross-device needs --device and --target-device")
        ref_op = args.op or "copy"
        ref = _pick(rs, args.device, ref_op, ref_op)
        tgt = _pick(rs, args.target_device, args.target_op or ref_op, args.target_op or ref_op)
        series = analysis.cross_device_pairs(ref, tgt)
        if series.metadata.get("mixed_precision"):
            log.warning("reference and target differ in precision")
        _write(report.scatter_csv(series), args.emit)
    elif kind == "prune":
        ref = _pick(rs, args.device, "copy", "copy")
        cands = analysis.prune_by_copy_threshold(ref, args.threshold)
        _write(report.prune_csv(cands, ref.by_config()), args.emit)
    return 0


def cmd_tune(args) -> int:
    rs = _load_inputs(args)
    device = args.device
    if device is None:
        if len(rs.devices) != 1:
            raise CLIError(f"store holds several devices ({', '.join(rs.devices)}); pass --device")
        device = rs.devices[0]
    per_op = _per_op(rs, device)
    import warnings
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", analysis.TransferFallbackWarning)
        rep = analysis.transfer_tune(per_op, args.threshold)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    sys.stdout.write(report.transfer_text(rep, device))
    if args.emit:
        _write(report.transfer_json(rep, device), args.emit)
    return 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clbwtune", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def spec_arg(sp):
        sp.add_argument("--device-spec", help="device spec file (default: bundled sim devices)")

    d = sub.add_parser("devices", help="list device specs")
    spec_arg(d)
    d.add_argument("--opencl", action="store_true", help="also list OpenCL runtime devices")
    d.set_defaults(func=cmd_devices)

    g = sub.add_parser("gen", help="print generated kernel source")
    g.add_argument("op", choices=OP_CHOICES)
    g.add_argument("config", help="config id, e.g. g/v1/l128/w80")
    g.add_argument("--precision", default="fp64", choices=["fp64", "fp32"])
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("sweep", help="benchmark every configuration of one op")
    spec_arg(s)
    s.add_argument("--device", help="device name in the --device-spec file")
    s.add_argument("--backend", help="opencl or sim:<profile> (gpu-like, cpu-like, uniform)")
    s.add_argument("--op", required=True, choices=OP_CHOICES)
    s.add_argument("--n", type=int, help="vector length (gemv: columns)")
    s.add_argument("--m", type=int, help="gemv rows")
    s.add_argument("--reps", type=int, default=5)
    s.add_argument("--warmup", type=int, default=2)
    s.add_argument("--precision", default="fp64", choices=["fp64", "fp32"])
    s.add_argument("--local-size-cap", type=int)
    s.add_argument("-o", "--output", "--emit", dest="output", required=True,
                   help="store file to append to")
    s.set_defaults(func=cmd_sweep)

    a = sub.add_parser("analyze", help="histograms, scatter data, pruning, tables")
    a.add_argument("kind", choices=["histogram", "scatter", "cross-device", "prune",
                                    "best-average", "penalty"])
    a.add_argument("stores", nargs="*")
    a.add_argument("--fixture", help="replay published data: paper-table-1 or paper-table-2")
    a.add_argument("--param", help="increment, vector-width, local-size or workgroups")
    a.add_argument("--device")
    a.add_argument("--target-device")
    a.add_argument("--op", choices=OP_CHOICES)
    a.add_argument("--target-op", choices=OP_CHOICES)
    a.add_argument("--threshold", type=float, default=analysis.DEFAULT_THRESHOLD)
    a.add_argument("--bin-width", type=float, default=analysis.DEFAULT_BIN_WIDTH)
    a.add_argument("--json", action="store_true", help="best-average as JSON")
    a.add_argument("--emit", help="output path (default: stdout)")
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("tune", help="transfer tuning from copy to the other ops")
    t.add_argument("stores", nargs="+")
    t.add_argument("--device")
    t.add_argument("--threshold", type=float, default=analysis.DEFAULT_THRESHOLD)
    t.add_argument("--emit", help="write machine-readable JSON here")
    t.set_defaults(func=cmd_tune)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"clbwtune: error: {exc}", file=sys.stderr)
        return 1
    except analysis.AnalysisError as exc:
        print(f"clbwtune: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"clbwtune: error: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        sys.stderr.close()
        return 0


if __name__ == "__main__":
    sys.exit(main())
