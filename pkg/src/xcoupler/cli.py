"""Command-line front end: ``xcoupler {synth,respond,extract,fit,convert}``.

Exit status: 0 on success, 1 on data/model errors (one line on stderr),
2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .extraction import band_metrics, extract_coupling, extract_qext_group_delay, extract_qu, ExtractionReport
from .fitter import FitOptions, FitProblem, fit_matrix
from .iofmt import (
    TouchstoneOptions,
    parse_csv,
    parse_touchstone,
    read_mask_json,
    read_matrix_json,
    report_json,
    write_csv,
    write_fit_json,
    write_matrix_json,
    write_touchstone,
)
from .matrix import TopologyMask
from .prototype import reconfigure, synthesize_polynomials, transversal_matrix
from .response import FrequencyPlan, LossSpec, normalized_frequency, sparams


class CLIError(Exception):
    pass


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _read_sweep(path: str):
    suffix = Path(path).suffix.lower()
    if suffix == ".s2p":
        return parse_touchstone(_read_text(path))
    if suffix == ".csv":
        return parse_csv(_read_text(path))
    raise CLIError(f"unsupported input extension {suffix!r} (expected .s2p or .csv)")


def _write_sweep(path: str, sweep, fmt: str, unit: str) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".s2p":
        _write_text(path, write_touchstone(sweep, TouchstoneOptions(unit, "S", fmt)))
    elif suffix == ".csv":
        _write_text(path, write_csv(sweep))
    else:
        raise CLIError(f"unsupported output extension {suffix!r} (expected .s2p or .csv)")


def _plan(args, fallback: FrequencyPlan | None = None, required: bool = True) -> FrequencyPlan | None:
    if args.f0 is not None or args.bw is not None:
        if args.f0 is None or args.bw is None:
            raise CLIError("--f0 and --bw must be given together")
        return FrequencyPlan(args.f0, args.bw)
    if fallback is None and required:
        raise CLIError("a frequency plan is required: pass --f0 and --bw or use a matrix file with a plan")
    return fallback


def _mask(spec: str, order: int) -> TopologyMask:
    if spec == "fig7":
        if order != 4:
            raise CLIError(f"the fig7 topology is fourth order, got order {order}")
        return TopologyMask.fig7()
    if spec == "transversal":
        return TopologyMask.transversal(order)
    mask = read_mask_json(_read_text(spec))
    if mask.order != order:
        raise CLIError(f"mask order {mask.order} does not match order {order}")
    return mask


def cmd_synth(args) -> None:
    tz = list(args.tz_omega or [])
    plan = None
    if args.tz_f or args.f0 is not None or args.bw is not None:
        if args.f0 is None or args.bw is None:
            raise CLIError("--tz-f needs --f0 and --bw")
        plan = FrequencyPlan(args.f0, args.bw)
        tz += [normalized_frequency(plan, f) for f in args.tz_f or []]
    cp = synthesize_polynomials(args.order, args.rl, tz)
    m = transversal_matrix(cp)
    if args.topology != "transversal":
        m = reconfigure(m, _mask(args.topology, args.order))
    _write_text(args.output, write_matrix_json(m, plan))


def cmd_respond(args) -> None:
    m, file_plan = read_matrix_json(_read_text(args.matrix))
    plan = _plan(args, file_plan)
    fstart = args.fstart if args.fstart is not None else plan.f0 - 1.5 * plan.bw
    fstop = args.fstop if args.fstop is not None else plan.f0 + 1.5 * plan.bw
    if not 0 < fstart < fstop:
        raise CLIError(f"invalid sweep range {fstart:g}..{fstop:g} Hz")
    if args.points < 2:
        raise CLIError("--points must be at least 2")
    loss = LossSpec() if not args.qu else LossSpec(args.qu)
    sweep = sparams(m, plan, np.linspace(fstart, fstop, args.points), loss)
    _write_sweep(args.output, sweep, args.format, args.unit)


def cmd_extract(args) -> None:
    sweep = _read_sweep(args.input)
    m = file_plan = None
    if args.matrix:
        m, file_plan = read_matrix_json(_read_text(args.matrix))
    kind = args.kind
    if kind == "kij":
        report = extract_coupling(sweep, _plan(args, file_plan, required=False), args.k_method)
    elif kind == "qext":
        f0 = args.f0 if args.f0 is not None else (file_plan.f0 if file_plan else None)
        if f0 is None:
            raise CLIError("qext extraction needs --f0")
        report = ExtractionReport(q_ext=extract_qext_group_delay(sweep, f0),
                                  diagnostics="peak S11 group delay, singly loaded")
    elif kind == "qu":
        if m is None:
            raise CLIError("qu extraction needs --matrix")
        plan = _plan(args, file_plan)
        report = ExtractionReport(q_u=extract_qu(sweep, m, plan, args.il_mode),
                                  diagnostics=f"midband IL matched on the uniform-loss model ({args.il_mode})")
    else:
        plan = _plan(args, file_plan)
        report = band_metrics(sweep, plan, args.edge_db, args.spur_db, args.edge_rl)
    _write_text(args.output, report_json(report))


def cmd_fit(args) -> None:
    init, file_plan = read_matrix_json(_read_text(args.init))
    plan = _plan(args, file_plan)
    target = _read_sweep(args.target)
    mask = _mask(args.mask, init.order)
    opts = FitOptions(max_iters=args.max_iters, tol=args.tol, multistart_count=args.starts, seed=args.seed)
    result = fit_matrix(FitProblem(mask, init, plan, target), opts)
    _write_text(args.output, write_fit_json(result, plan))
    if not result.converged:
        print(f"xcoupler: warning: fit did not reach tol (cost {result.cost:.3g})", file=sys.stderr)


def cmd_convert(args) -> None:
    sweep = _read_sweep(args.input)
    _write_sweep(args.output, sweep, args.format, args.unit)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xcoupler", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"xcoupler {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def plan_flags(sp):
        sp.add_argument("--f0", type=float, help="center frequency, Hz")
        sp.add_argument("--bw", type=float, help="absolute bandwidth, Hz")

    sp = sub.add_parser("synth", help="synthesize a coupling matrix")
    sp.add_argument("--order", type=int, required=True)
    sp.add_argument("--rl", type=float, required=True, help="return loss, dB")
    sp.add_argument("--tz-f", type=float, action="append", help="transmission zero, Hz (repeatable)")
    sp.add_argument("--tz-omega", type=float, action="append", help="normalized transmission zero (repeatable)")
    plan_flags(sp)
    sp.add_argument("--topology", default="transversal", help="transversal, fig7, or a mask JSON file")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("respond", help="compute S-parameters of a matrix")
    sp.add_argument("--matrix", required=True)
    plan_flags(sp)
    sp.add_argument("--qu", type=float, default=0.0, help="unloaded Q; 0 means lossless")
    sp.add_argument("--fstart", type=float)
    sp.add_argument("--fstop", type=float)
    sp.add_argument("--points", type=int, default=1001)
    sp.add_argument("--format", choices=("RI", "MA", "DB"), default="RI")
    sp.add_argument("--unit", choices=("Hz", "kHz", "MHz", "GHz"), default="GHz")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_respond)

    sp = sub.add_parser("extract", help="extract parameters from a sweep")
    sp.add_argument("kind", choices=("kij", "qext", "qu", "band"))
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--matrix")
    plan_flags(sp)
    sp.add_argument("--edge-db", type=float, default=3.0, help="band-edge drop below midband |S21|, dB")
    sp.add_argument("--edge-rl", type=float, help="use return-loss band edges at this level, dB")
    sp.add_argument("--spur-db", type=float, default=-20.0, help="spurious-band threshold, dB")
    sp.add_argument("--k-method", choices=("split", "geometric"), default="split")
    sp.add_argument("--il-mode", choices=("nearest", "band_average", "dissipative"), default="nearest")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("fit", help="fit matrix entries on a mask to a target sweep")
    sp.add_argument("--target", required=True)
    sp.add_argument("--mask", required=True, help="mask JSON file, fig7, or transversal")
    sp.add_argument("--init", required=True)
    plan_flags(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--starts", type=int, default=8)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iters", type=int, default=5000)
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("convert", help="convert between .s2p and .csv")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", dest="output", required=True)
    sp.add_argument("--format", choices=("RI", "MA", "DB"), default="RI")
    sp.add_argument("--unit", choices=("Hz", "kHz", "MHz", "GHz"), default="GHz")
    sp.set_defaults(func=cmd_convert)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001 - no tracebacks on the command line
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"xcoupler: error: {msg}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
