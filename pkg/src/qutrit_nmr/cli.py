"""Command-line interface: ``qutrit prep|op|run|verify``.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import _kernels
from .pulse_engine import DEFAULT_DT, MODES
from .pulse_lang import Acquire, CompileError, ParseError, PulseProgram, parse, run_program
from .readout import DEFAULT_LINEWIDTH, DEFAULT_TIP, READOUT_MODES, DoubletReadout, detect, synth_spectrum
from .sequences import OPERATION_NAMES, PPS_NAMES, TARGETS, emit_source, program_for
from .spin_model import DEFAULT_SPLITTING_HZ, DeviationState, SpinSystem, equilibrium_deviation, read_config

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
IDEAL_TOL = 1e-9
SHAPED_TOL = 0.05
INITIAL_STATES = ("equilibrium",) + PPS_NAMES


class UsageError(Exception):
    pass


def relative_error(observed: float, expected: float) -> float:
    return abs(observed - expected) / max(1.0, abs(expected))


@dataclass
class RunReport:
    mode: str
    parameters: dict
    initial_populations: list
    final_populations: list
    readout: DoubletReadout
    target: str | None = None
    source: str | None = None
    expected: tuple | None = None
    relative_error: tuple | None = field(default=None, init=False)

    def __post_init__(self):
        if self.expected is not None:
            self.relative_error = tuple(
                relative_error(o, e) for o, e in zip(self.readout.intensities, self.expected)
            )

    def to_dict(self) -> dict:
        pair = lambda v: None if v is None else {"i12": float(v[0]), "i01": float(v[1])}  # noqa: E731
        return {
            "target": self.target,
            "source": self.source,
            "mode": self.mode,
            "parameters": self.parameters,
            "initial_populations": [float(x) for x in self.initial_populations],
            "final_populations": [float(x) for x in self.final_populations],
            "readout": self.readout.to_dict(),
            "expected": pair(self.expected),
            "relative_error": pair(self.relative_error),
        }

    def to_table(self) -> str:
        fmt = lambda xs: "(" + ", ".join(f"{x:+.6f}" for x in xs) + ")"  # noqa: E731
        rows = [
            ("target", self.target or "-"),
            ("source", self.source or "-"),
            ("mode", self.mode),
            ("splitting", f"{self.parameters['splitting_hz']:g} Hz"),
            ("initial populations", fmt(self.initial_populations)),
            ("final populations", fmt(self.final_populations)),
            ("readout (i12, i01)", fmt(self.readout.intensities)),
        ]
        if self.expected is not None:
            rows.append(("expected (i12, i01)", fmt(self.expected)))
            rows.append(("relative error", ", ".join(f"{e:.3e}" for e in self.relative_error)))
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)

    def to_csv(self) -> str:
        d = self.to_dict()
        row = {
            "target": d["target"] or "",
            "mode": d["mode"],
            "i12": d["readout"]["i12"],
            "i01": d["readout"]["i01"],
            "expected_i12": "" if d["expected"] is None else d["expected"]["i12"],
            "expected_i01": "" if d["expected"] is None else d["expected"]["i01"],
            "p0": d["final_populations"][0],
            "p1": d["final_populations"][1],
            "p2": d["final_populations"][2],
        }
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(row), lineterminator="\n")
        writer.writeheader()
        writer.writerow(row)
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(self.to_dict(), indent=2)
        if fmt == "csv":
            return self.to_csv().rstrip("\n")
        return self.to_table()


@dataclass
class Settings:
    system: SpinSystem
    mode: str
    dt: float
    fmt: str
    linewidth: float

    def parameters(self) -> dict:
        return {
            "splitting_hz": self.system.splitting,
            "lambda_hz": self.system.lambda_eff,
            "dt_s": self.dt,
            "backend": _kernels.BACKEND,
        }


def _settings(args) -> Settings:
    config = {}
    if args.config:
        try:
            config = read_config(args.config)
        except OSError as err:
            raise UsageError(f"cannot read config {args.config}: {err}") from err

    def pick(flag, key, default):
        if flag is not None:
            return flag
        return config.get(key, default)

    mode = pick(args.mode, "mode", "ideal")
    if mode not in MODES:
        raise UsageError(f"unknown mode {mode!r}")
    fmt = pick(args.format, "format", "table")
    if fmt not in ("table", "json", "csv"):
        raise UsageError(f"unknown format {fmt!r}")
    try:
        system = SpinSystem.from_splitting(float(pick(args.splitting, "splitting_hz", DEFAULT_SPLITTING_HZ)))
    except ValueError as err:
        raise UsageError(str(err)) from err
    dt = float(pick(args.dt, "dt", DEFAULT_DT))
    if not dt > 0:
        raise UsageError(f"--dt must be positive, got {dt:g}")
    return Settings(system, mode, dt, fmt, float(pick(args.linewidth, "linewidth", DEFAULT_LINEWIDTH)))


def _initial_state(name: str, s: Settings) -> DeviationState:
    if name == "equilibrium":
        return equilibrium_deviation(s.system)
    if name not in PPS_NAMES:
        raise UsageError(f"unknown initial state {name!r}; expected one of {', '.join(INITIAL_STATES)}")
    return run_program(program_for(name, acquire=None), s.system, equilibrium_deviation(s.system), s.mode, s.dt).final


def _run(program: PulseProgram, s: Settings, initial: DeviationState, target=None, source=None) -> RunReport:
    try:
        ex = run_program(program, s.system, initial, s.mode, s.dt)
    except (CompileError, ValueError) as err:
        raise UsageError(str(err)) from err
    readout = ex.readout
    if readout is None:
        readout = detect(ex.final, s.system, DEFAULT_TIP, "linear")
    expected = TARGETS[target].expected if target in TARGETS else None
    return RunReport(
        mode=s.mode,
        parameters=s.parameters(),
        initial_populations=initial.populations.tolist(),
        final_populations=ex.final.populations.tolist(),
        readout=readout,
        target=target,
        source=source,
        expected=expected,
    )


def _emit(report: RunReport, s: Settings, args, out) -> int:
    print(report.render(s.fmt), file=out)
    if getattr(args, "spectrum", None):
        trace = synth_spectrum(report.readout, s.system, linewidth=s.linewidth)
        Path(args.spectrum).write_text(trace.to_csv(), encoding="utf-8")
    return EXIT_OK


def _acquire_from_args(args):
    tip = DEFAULT_TIP if args.tip is None else math.radians(args.tip)
    return Acquire(tip, args.readout or "linear")


def cmd_prep(args, out=None) -> int:
    out = out or sys.stdout
    s = _settings(args)
    if args.emit_source:
        print(emit_source(args.target, not args.no_crush, *_acquire_args(args)), end="", file=out)
        return EXIT_OK
    program = program_for(args.target, crush_between=not args.no_crush, acquire=_acquire_from_args(args))
    return _emit(_run(program, s, equilibrium_deviation(s.system), target=args.target), s, args, out)


def cmd_op(args, out=None) -> int:
    out = out or sys.stdout
    s = _settings(args)
    if args.emit_source:
        print(emit_source(args.name, not args.no_crush, *_acquire_args(args)), end="", file=out)
        return EXIT_OK
    program = program_for(args.name, crush_between=not args.no_crush, acquire=_acquire_from_args(args))
    return _emit(_run(program, s, equilibrium_deviation(s.system), target=args.name), s, args, out)


def _acquire_args(args):
    acq = _acquire_from_args(args)
    return acq.tip_angle, acq.mode


def cmd_run(args, out=None, err=None, stdin=None) -> int:
    out, err, stdin = out or sys.stdout, err or sys.stderr, stdin or sys.stdin
    s = _settings(args)
    name = args.file
    try:
        if name == "-":
            text = stdin.read()
            name = "<stdin>"
        else:
            text = Path(name).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        print(f"error: cannot read {name}: {e}", file=err)
        return EXIT_USAGE
    try:
        program = parse(text, name=name)
    except ParseError as e:
        print(str(e), file=err)
        return EXIT_USAGE
    initial = _initial_state(args.initial or "equilibrium", s)
    if args.expect is not None and args.expect not in TARGETS:
        raise UsageError(f"unknown target {args.expect!r}")
    return _emit(_run(program, s, initial, target=args.expect, source=name), s, args, out)


@dataclass
class VerifyRow:
    name: str
    expected: tuple
    observed: tuple
    error: float
    passed: bool


def verify(mode: str = "ideal", dt: float = DEFAULT_DT, system: SpinSystem | None = None) -> list[VerifyRow]:
    """Run every named target from equilibrium and compare against its expected doublet."""
    system = system or SpinSystem.from_splitting()
    tol = IDEAL_TOL if mode == "ideal" else SHAPED_TOL
    rows = []
    for name, target in TARGETS.items():
        ex = run_program(program_for(name), system, equilibrium_deviation(system), mode, dt)
        obs = ex.readout.intensities
        error = max(relative_error(o, e) for o, e in zip(obs, target.expected))
        rows.append(VerifyRow(name, target.expected, obs, error, error <= tol))
    return rows


def cmd_verify(args, out=None) -> int:
    out = out or sys.stdout
    s = _settings(args)
    try:
        rows = verify(s.mode, s.dt, s.system)
    except ValueError as e:
        raise UsageError(str(e)) from e
    n_pass = sum(r.passed for r in rows)
    if s.fmt == "json":
        payload = {
            "mode": s.mode,
            "parameters": s.parameters(),
            "tolerance": IDEAL_TOL if s.mode == "ideal" else SHAPED_TOL,
            "passed": n_pass,
            "total": len(rows),
            "rows": [
                {
                    "target": r.name,
                    "expected": {"i12": r.expected[0], "i01": r.expected[1]},
                    "observed": {"i12": r.observed[0], "i01": r.observed[1]},
                    "error": r.error,
                    "pass": r.passed,
                }
                for r in rows
            ],
        }
        print(json.dumps(payload, indent=2), file=out)
    elif s.fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["target", "expected_i12", "expected_i01", "observed_i12", "observed_i01", "error", "pass"])
        for r in rows:
            writer.writerow([r.name, *r.expected, *(f"{x:.9f}" for x in r.observed), f"{r.error:.3e}", r.passed])
    else:
        print(f"{'target':<12} {'expected':>14} {'observed':>22} {'error':>10}  result", file=out)
        for r in rows:
            exp = f"{r.expected[0]:g}:{r.expected[1]:g}"
            obs = f"{r.observed[0]:.4f}:{r.observed[1]:.4f}"
            print(f"{r.name:<12} {exp:>14} {obs:>22} {r.error:>10.2e}  {'PASS' if r.passed else 'FAIL'}", file=out)
        print(f"{n_pass}/{len(rows)} pass ({s.mode} mode)", file=out)
    return EXIT_OK if n_pass == len(rows) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=MODES, default=None, help="pulse fidelity mode (default ideal)")
    common.add_argument("--dt", type=float, default=None, help="integration step in seconds for shaped mode")
    common.add_argument("--splitting", type=float, default=None, help="doublet splitting in Hz (default 240)")
    common.add_argument("--format", choices=("table", "json", "csv"), default=None)
    common.add_argument("--config", default=None, help="key = value config file; flags win")

    readout = argparse.ArgumentParser(add_help=False)
    readout.add_argument("--spectrum", metavar="OUT.CSV", default=None, help="write a synthesized spectrum")
    readout.add_argument("--linewidth", type=float, default=None, help="Lorentzian FWHM in Hz (default 5)")

    named = argparse.ArgumentParser(add_help=False)
    named.add_argument("--emit-source", action="store_true", help="print the pulse program instead of running it")
    named.add_argument("--no-crush", action="store_true", help="omit the crusher after each pulse")
    named.add_argument("--tip", type=float, default=None, help="readout tip angle in degrees (default 5)")
    named.add_argument("--readout", choices=READOUT_MODES, default=None)

    parser = argparse.ArgumentParser(prog="qutrit", description="Spin-1 qutrit NMR simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep", parents=[common, readout, named], help="prepare a pseudopure state")
    p.add_argument("target", choices=PPS_NAMES)
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("op", parents=[common, readout, named], help="apply a named qutrit operation")
    p.add_argument("name", choices=OPERATION_NAMES)
    p.set_defaults(func=cmd_op)

    p = sub.add_parser("run", parents=[common, readout], help="run a .qp pulse program ('-' for stdin)")
    p.add_argument("file")
    p.add_argument("--from", dest="initial", choices=INITIAL_STATES, default=None)
    p.add_argument("--expect", default=None, help="named target whose expected readout to compare against")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", parents=[common], help="check every named target against its expected doublet")
    p.set_defaults(func=cmd_verify, linewidth=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
