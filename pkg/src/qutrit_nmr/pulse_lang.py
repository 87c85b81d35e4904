"""
Line-oriented pulse-program language (``.qp`` files).

Grammar, one instruction per line, ``#`` starts a comment::

    pulse sel <i> <j> <angle> [phase=<deg>] [shape=ideal|gauss|rect] [dur=<ms>]
    pulse hard <angle> [phase=<deg>]
    crush [strength=<x>]
    delay <ms>
    acquire [tip=<deg>] [mode=linear|exact]

``<angle>`` is ``pi``, ``pi/2`` or ``<number>deg``. Radians are not
accepted. ``strength`` on ``crush`` is parsed and ignored.

Example::

    # |1> pseudopure state
    pulse sel 1 2 pi/2
    crush
    pulse sel 0 1 pi
    crush
    acquire tip=5
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .pulse_engine import DEFAULT_DT, Propagator, PulseSpec, apply, compile_pulse, crusher, free_evolution
from .readout import DEFAULT_TIP, READOUT_MODES, DoubletReadout, detect
from .spin_model import DIM, DeviationState, SpinSystem

_SHAPE_NAMES = {"ideal": "ideal", "gauss": "gaussian", "rect": "rectangular"}
_SHAPE_TOKENS = {v: k for k, v in _SHAPE_NAMES.items()}
_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


@dataclass(frozen=True)
class Pulse:
    spec: PulseSpec


@dataclass(frozen=True)
class Crusher:
    pass


@dataclass(frozen=True)
class Delay:
    seconds: float

    def __post_init__(self):
        if not self.seconds >= 0:
            raise ValueError(f"delay must be non-negative, got {self.seconds!r}")


@dataclass(frozen=True)
class Acquire:
    tip_angle: float = DEFAULT_TIP
    mode: str = "linear"


Instruction = Pulse | Crusher | Delay | Acquire


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str

    def __str__(self):
        return f"{self.line}:{self.column}: {self.message}"


class ParseError(ValueError):
    """Raised by `parse`; carries every diagnostic found in the source."""

    def __init__(self, diagnostics: list[Diagnostic], name: str = "<source>"):
        self.diagnostics = list(diagnostics)
        self.name = name
        super().__init__("\n".join(f"{name}:{d}" for d in self.diagnostics))


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class PulseProgram:
    name: str = ""
    instructions: tuple = ()
    spans: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        instrs = tuple(self.instructions)
        object.__setattr__(self, "instructions", instrs)
        object.__setattr__(self, "spans", tuple(self.spans))
        acquires = [k for k, ins in enumerate(instrs) if isinstance(ins, Acquire)]
        if len(acquires) > 1 or (acquires and acquires[0] != len(instrs) - 1):
            raise ValueError("a program holds at most one acquire, and it must be last")

    def __len__(self):
        return len(self.instructions)

    @property
    def acquire(self) -> Acquire | None:
        if self.instructions and isinstance(self.instructions[-1], Acquire):
            return self.instructions[-1]
        return None

    def structurally_equal(self, other: "PulseProgram", rel_tol: float = 1e-12) -> bool:
        """Equality up to float round-off in angles and times; names ignored."""
        if len(self) != len(other):
            return False
        return all(_same(a, b, rel_tol) for a, b in zip(self.instructions, other.instructions))


def _close(a, b, rel_tol):
    if a is None or b is None:
        return a is b
    return math.isclose(a, b, rel_tol=rel_tol, abs_tol=1e-15)


def _same(a, b, rel_tol) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Pulse):
        x, y = a.spec, b.spec
        return (
            x.kind == y.kind
            and x.levels == y.levels
            and x.shape == y.shape
            and _close(x.flip_angle, y.flip_angle, rel_tol)
            and _close(x.phase, y.phase, rel_tol)
            and _close(x.duration, y.duration, rel_tol)
            and _close(x.carrier_offset, y.carrier_offset, rel_tol)
        )
    if isinstance(a, Delay):
        return _close(a.seconds, b.seconds, rel_tol)
    if isinstance(a, Acquire):
        return a.mode == b.mode and _close(a.tip_angle, b.tip_angle, rel_tol)
    return True


# ---------------------------------------------------------------- parsing


class _LineError(Exception):
    def __init__(self, column, message):
        self.column = column
        self.message = message


def _parse_number(tok, col, what, suffix=None) -> float:
    text = tok
    if suffix and text.endswith(suffix):
        text = text[: -len(suffix)]
    if not _NUMBER.match(text):
        raise _LineError(col, f"malformed {what} {tok!r}")
    return float(text)


def parse_angle(tok: str, col: int = 1) -> float:
    """``pi`` | ``pi/2`` | ``<number>deg`` -> radians in (0, 2π]."""
    if tok == "pi":
        value = math.pi
    elif tok == "pi/2":
        value = math.pi / 2
    elif tok.endswith("deg") and _NUMBER.match(tok[:-3]):
        value = math.radians(float(tok[:-3]))
    else:
        raise _LineError(col, f"malformed angle {tok!r} (expected pi, pi/2 or <number>deg)")
    if not 0 < value <= 2 * math.pi + 1e-12:
        raise _LineError(col, f"angle {tok!r} outside (0, 360deg]")
    return value


def _options(tokens, allowed):
    out = {}
    for tok, col in tokens:
        key, sep, value = tok.partition("=")
        if not sep:
            raise _LineError(col, f"unexpected trailing token {tok!r}")
        if key not in allowed:
            raise _LineError(col, f"unknown option {key!r} (allowed: {', '.join(allowed)})")
        if key in out:
            raise _LineError(col, f"duplicate option {key!r}")
        if not value:
            raise _LineError(col + len(key) + 1, f"option {key!r} has no value")
        out[key] = (value, col + len(key) + 1)
    return out


def _level(tok, col) -> int:
    if not re.fullmatch(r"\d+", tok):
        raise _LineError(col, f"level index must be an integer, got {tok!r}")
    k = int(tok)
    if k >= DIM:
        raise _LineError(col, f"level index {k} outside {{0, 1, 2}}")
    return k


def _need(tokens, n, col_end, usage):
    if len(tokens) < n:
        raise _LineError(col_end, f"missing argument; usage: {usage}")


def _parse_pulse(tokens, end_col) -> Pulse:
    _need(tokens, 2, end_col, "pulse sel <i> <j> <angle> | pulse hard <angle>")
    kind, kcol = tokens[1]
    if kind == "sel":
        usage = "pulse sel <i> <j> <angle> [phase=<deg>] [shape=ideal|gauss|rect] [dur=<ms>]"
        _need(tokens, 5, end_col, usage)
        i = _level(*tokens[2])
        j = _level(*tokens[3])
        if i == j or abs(i - j) != 1:
            raise _LineError(
                tokens[2][1],
                f"levels {i} and {j} are not adjacent: only single-quantum (Δm = ±1) transitions can be driven",
            )
        angle = parse_angle(*tokens[4])
        opts = _options(tokens[5:], ("phase", "shape", "dur"))
        kwargs = {}
        if "phase" in opts:
            kwargs["phase"] = math.radians(_parse_number(*opts["phase"], "phase", suffix="deg"))
        if "shape" in opts:
            value, col = opts["shape"]
            if value not in _SHAPE_NAMES:
                raise _LineError(col, f"unknown shape {value!r} (expected ideal, gauss or rect)")
            kwargs["shape"] = _SHAPE_NAMES[value]
        if "dur" in opts:
            ms = _parse_number(*opts["dur"], "duration", suffix="ms")
            if not ms > 0:
                raise _LineError(opts["dur"][1], "duration must be positive")
            kwargs["duration"] = ms * 1e-3
        return Pulse(PulseSpec.selective(i, j, angle, **kwargs))
    if kind == "hard":
        _need(tokens, 3, end_col, "pulse hard <angle> [phase=<deg>]")
        angle = parse_angle(*tokens[2])
        opts = _options(tokens[3:], ("phase",))
        kwargs = {}
        if "phase" in opts:
            kwargs["phase"] = math.radians(_parse_number(*opts["phase"], "phase", suffix="deg"))
        return Pulse(PulseSpec.hard(angle, **kwargs))
    raise _LineError(kcol, f"unknown pulse type {kind!r} (expected sel or hard)")


def _parse_line(tokens, end_col):
    keyword, col = tokens[0]
    if keyword == "pulse":
        return _parse_pulse(tokens, end_col)
    if keyword == "crush":
        opts = _options(tokens[1:], ("strength",))
        if "strength" in opts:
            _parse_number(*opts["strength"], "strength")
        return Crusher()
    if keyword == "delay":
        _need(tokens, 2, end_col, "delay <ms>")
        ms = _parse_number(*tokens[1], "delay", suffix="ms")
        if ms < 0:
            raise _LineError(tokens[1][1], "delay must be non-negative")
        if len(tokens) > 2:
            raise _LineError(tokens[2][1], f"unexpected trailing token {tokens[2][0]!r}")
        return Delay(ms * 1e-3)
    if keyword == "acquire":
        opts = _options(tokens[1:], ("tip", "mode"))
        kwargs = {}
        if "tip" in opts:
            value, tcol = opts["tip"]
            deg = _parse_number(value, tcol, "tip angle", suffix="deg")
            if not 0 < deg < 90:
                raise _LineError(tcol, f"tip angle must lie in (0, 90) degrees, got {deg:g}")
            kwargs["tip_angle"] = math.radians(deg)
        if "mode" in opts:
            value, mcol = opts["mode"]
            if value not in READOUT_MODES:
                raise _LineError(mcol, f"unknown readout mode {value!r} (expected linear or exact)")
            kwargs["mode"] = value
        return Acquire(**kwargs)
    raise _LineError(col, f"unknown keyword {keyword!r}")


def parse(source: str, name: str = "") -> PulseProgram:
    """Parse program text.

    Raises
    ------
    ParseError
        With one positioned `Diagnostic` per offending line. Parsing continues
        past errors so every problem in the file is reported at once.
    """
    instructions, spans, diagnostics = [], [], []
    if source.startswith("\ufeff"):
        source = source[1:]
    for lineno, raw in enumerate(source.split("\n"), start=1):
        line = raw.rstrip("\r")
        code = line.split("#", 1)[0]
        tokens = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", code)]
        if not tokens:
            continue
        try:
            ins = _parse_line(tokens, len(code.rstrip()) + 1)
        except _LineError as err:
            diagnostics.append(Diagnostic(lineno, err.column, err.message))
            continue
        except ValueError as err:  # domain checks from PulseSpec
            diagnostics.append(Diagnostic(lineno, tokens[0][1], str(err)))
            continue
        instructions.append(ins)
        spans.append(SourceSpan(lineno, tokens[0][1]))

    acquires = [k for k, ins in enumerate(instructions) if isinstance(ins, Acquire)]
    for k in acquires[1:]:
        diagnostics.append(Diagnostic(spans[k].line, spans[k].column, "second acquire; a program may acquire once"))
    if acquires and acquires[0] != len(instructions) - 1:
        k = acquires[0]
        diagnostics.append(Diagnostic(spans[k].line, spans[k].column, "acquire must be the last instruction"))
    if diagnostics:
        diagnostics.sort(key=lambda d: (d.line, d.column))
        raise ParseError(diagnostics, name or "<source>")
    return PulseProgram(name, tuple(instructions), tuple(spans))


# ---------------------------------------------------------------- printing


def _fmt(x: float) -> str:
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def format_angle(angle: float) -> str:
    if angle == math.pi:
        return "pi"
    if angle == math.pi / 2:
        return "pi/2"
    return f"{_fmt(math.degrees(angle))}deg"


def format_instruction(ins) -> str:
    if isinstance(ins, Pulse):
        p = ins.spec
        if p.carrier_offset is not None:
            raise ValueError("carrier offsets have no source syntax")
        if p.kind == "hard":
            if p.shape != "ideal" or p.duration is not None:
                raise ValueError("hard pulses carry no shape or duration in source form")
            words = ["pulse", "hard", format_angle(p.flip_angle)]
        else:
            words = ["pulse", "sel", str(p.levels[0]), str(p.levels[1]), format_angle(p.flip_angle)]
        if p.phase:
            words.append(f"phase={_fmt(math.degrees(p.phase))}")
        if p.shape != "ideal":
            words.append(f"shape={_SHAPE_TOKENS[p.shape]}")
        if p.duration is not None:
            words.append(f"dur={_fmt(p.duration * 1e3)}")
        return " ".join(words)
    if isinstance(ins, Crusher):
        return "crush"
    if isinstance(ins, Delay):
        return f"delay {_fmt(ins.seconds * 1e3)}"
    if isinstance(ins, Acquire):
        return f"acquire tip={_fmt(math.degrees(ins.tip_angle))} mode={ins.mode}"
    raise TypeError(f"not an instruction: {ins!r}")


def format_program(program: PulseProgram, header: str | None = None) -> str:
    """Source text for ``program``; `parse` of the result is structurally equal."""
    lines = []
    if header:
        lines += [f"# {h}" for h in header.splitlines()]
    lines += [format_instruction(ins) for ins in program.instructions]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- compile / run


def compile_program(
    program: PulseProgram, sys: SpinSystem, mode: str = "ideal", dt: float = DEFAULT_DT
) -> list:
    """Turn instructions into `Propagator` objects plus `Crusher` / `Acquire` markers.

    Pulses compile through `compile_pulse`; delays become free evolution
    under the quadrupolar Hamiltonian. Order is preserved.
    """
    out = []
    for k, ins in enumerate(program.instructions):
        if isinstance(ins, Pulse):
            try:
                out.append(compile_pulse(ins.spec, sys, mode, dt))
            except ValueError as err:
                where = program.spans[k] if k < len(program.spans) else None
                prefix = f"{where.line}:{where.column}: " if where else ""
                raise CompileError(prefix + str(err)) from err
        elif isinstance(ins, Delay):
            out.append(free_evolution(sys, ins.seconds))
        elif isinstance(ins, (Crusher, Acquire)):
            out.append(ins)
        else:
            raise TypeError(f"not an instruction: {ins!r}")
    return out


@dataclass(frozen=True)
class Execution:
    initial: DeviationState
    final: DeviationState
    readout: DoubletReadout | None


def execute(compiled: list, initial: DeviationState, sys: SpinSystem | None = None) -> Execution:
    """Run a compiled program; the readout is taken only if it ends in an acquire."""
    state = initial
    readout = None
    for step in compiled:
        if isinstance(step, Propagator):
            state = apply(step, state)
        elif isinstance(step, Crusher):
            state = crusher(state)
        elif isinstance(step, Acquire):
            readout = detect(state, sys, step.tip_angle, step.mode)
        else:
            raise TypeError(f"cannot execute {step!r}")
    return Execution(initial, state, readout)


def run_program(
    program: PulseProgram,
    sys: SpinSystem,
    initial: DeviationState,
    mode: str = "ideal",
    dt: float = DEFAULT_DT,
) -> Execution:
    return execute(compile_program(program, sys, mode, dt), initial, sys)


def total_propagator(compiled: list) -> np.ndarray:
    """Product of every propagator in ``compiled`` (crushers ignored)."""
    u = np.eye(DIM, dtype=complex)
    for step in compiled:
        if isinstance(step, Propagator):
            u = step.matrix @ u
    return u
