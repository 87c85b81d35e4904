"""
Named procedures: pseudopure-state preparations and the six qutrit permutations.

Permutations are tuples ``perm`` with ``perm[k]`` the image of ``|k>``. The
population action of a permutation moves the population of level ``k`` to
level ``perm[k]``.

Operator matrices are stored as printed in the operations table, where row
``k`` holds a 1 in column ``perm[k]``; the ket map ``|k> -> |perm[k]>`` is its
transpose.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .pulse_engine import SELECTIVE_DURATION, PulseSpec, ideal_selective, hard_pulse
from .pulse_lang import Acquire, Crusher, Pulse, PulseProgram, format_program
from .readout import DEFAULT_TIP

PI = math.pi
OPERATION_NAMES = ("U1", "U2", "U3", "U4", "U5", "U6")
PPS_NAMES = ("pps0", "pps1", "pps2m")


def _sel(i, j, angle, shaped=True):
    if shaped:
        return PulseSpec.selective(i, j, angle, shape="gaussian", duration=SELECTIVE_DURATION)
    return PulseSpec.selective(i, j, angle)


def _pi12(shaped=True):
    return _sel(1, 2, PI, shaped)


def _pi01(shaped=True):
    return _sel(0, 1, PI, shaped)


_PERMUTATIONS = {
    "U1": (0, 1, 2),
    "U2": (0, 2, 1),
    "U3": (1, 0, 2),
    "U4": (2, 1, 0),
    "U5": (1, 2, 0),
    "U6": (2, 0, 1),
}

_OPERATION_PULSES = {
    "U1": lambda s: [],
    "U2": lambda s: [_pi12(s)],
    "U3": lambda s: [_pi01(s)],
    "U4": lambda s: [PulseSpec.hard(PI)],
    "U5": lambda s: [_pi12(s), _pi01(s)],
    "U6": lambda s: [_pi01(s), _pi12(s)],
}


def _check_op(name):
    if name not in _PERMUTATIONS:
        raise KeyError(f"unknown operation {name!r}; expected one of {', '.join(OPERATION_NAMES)}")


def permutation_of(name: str) -> tuple[int, int, int]:
    _check_op(name)
    return _PERMUTATIONS[name]


def operator_matrix(name: str) -> np.ndarray:
    """0/1 operator as printed in the operations table (row = input state)."""
    perm = permutation_of(name)
    m = np.zeros((3, 3), dtype=int)
    for k, image in enumerate(perm):
        m[k, image] = 1
    return m


def operation_sequence(name: str, shaped: bool = True) -> list[PulseSpec]:
    """Pulse list for U1..U6, applied left to right.

    With ``shaped=True`` the selective pulses carry the 6 ms Gaussian shape so
    they can be played in either fidelity mode.
    """
    _check_op(name)
    return _OPERATION_PULSES[name](shaped)


def alternative_u4_sequences(shaped: bool = True) -> tuple[list[PulseSpec], list[PulseSpec]]:
    """The two three-transposition decompositions of the |0> <-> |2> swap."""
    return (
        [_pi12(shaped), _pi01(shaped), _pi12(shaped)],
        [_pi01(shaped), _pi12(shaped), _pi01(shaped)],
    )


@dataclass(frozen=True)
class NamedOperation:
    name: str
    pulses: tuple
    permutation: tuple
    operator: np.ndarray

    @classmethod
    def get(cls, name: str) -> "NamedOperation":
        return cls(name, tuple(operation_sequence(name)), permutation_of(name), operator_matrix(name))

    def ideal_unitary(self) -> np.ndarray:
        return ideal_unitary(self.pulses)


def ideal_unitary(pulses) -> np.ndarray:
    """Product of the ideal propagators of ``pulses`` (first pulse acts first)."""
    u = np.eye(3, dtype=complex)
    for p in pulses:
        if p.kind == "selective":
            step = ideal_selective(*p.levels, p.flip_angle, p.phase)
        else:
            step = hard_pulse(p.flip_angle, p.phase)
        u = step.matrix @ u
    return u


def population_action(pulses) -> np.ndarray:
    """Transfer matrix of the pulses with a crusher after each one."""
    t = np.eye(3)
    for p in pulses:
        t = np.abs(ideal_unitary([p])) ** 2 @ t
    return t


def permute_populations(perm, populations) -> np.ndarray:
    p = np.asarray(populations, dtype=float)
    out = np.empty_like(p)
    out[list(perm)] = p
    return out


def compose(first, second) -> tuple[int, ...]:
    """Permutation for ``first`` followed by ``second``."""
    return tuple(second[first[k]] for k in range(len(first)))


def permutation_name(perm) -> str:
    for name, p in _PERMUTATIONS.items():
        if tuple(perm) == p:
            return name
    raise KeyError(f"{perm!r} is not a qutrit permutation")


def cayley_table() -> dict[tuple[str, str], str]:
    """``(a, b) -> c`` where running b's pulses after a's acts like c."""
    table = {}
    for a, b in itertools.product(OPERATION_NAMES, repeat=2):
        t = np.abs(ideal_unitary(operation_sequence(a) + operation_sequence(b))) ** 2
        perm = tuple(int(np.argmax(t[:, k])) for k in range(3))
        table[(a, b)] = permutation_name(perm)
    return table


@dataclass(frozen=True)
class PpsTarget:
    label: str
    ket: str
    expected_populations: tuple[float, float, float]


PPS_TARGETS = {
    "pps0": PpsTarget("pps0", "|0>", (1.0, -0.5, -0.5)),
    "pps1": PpsTarget("pps1", "|1>", (-0.5, 1.0, -0.5)),
    "pps2m": PpsTarget("pps2m", "-|2>", (0.5, 0.5, -1.0)),
}


def _pps_pulses(label, shaped):
    if label == "pps0":
        return [_sel(1, 2, PI / 2, shaped)]
    if label == "pps1":
        return [_sel(1, 2, PI / 2, shaped), _sel(0, 1, PI, shaped)]
    if label == "pps2m":
        return [_sel(0, 1, PI / 2, shaped)]
    raise KeyError(f"unknown pseudopure target {label!r}; expected one of {', '.join(PPS_NAMES)}")


def pps_sequence(target: str | PpsTarget, shaped: bool = True) -> list:
    """Instructions preparing a pseudopure state from equilibrium.

    Each pulse is followed by a crusher, so every preparation ends on one.
    """
    label = target.label if isinstance(target, PpsTarget) else target
    out = []
    for p in _pps_pulses(label, shaped):
        out += [Pulse(p), Crusher()]
    return out


def _with_crushers(pulses, crush_between):
    out = []
    for p in pulses:
        out.append(Pulse(p))
        if crush_between:
            out.append(Crusher())
    return out


def program_for(
    name: str, crush_between: bool = True, acquire: Acquire | None = Acquire(), shaped: bool = True
) -> PulseProgram:
    """Executable program for a named target (equilibrium, pps*, U*)."""
    if name == "equilibrium":
        body = []
    elif name in PPS_TARGETS:
        body = pps_sequence(name, shaped) if crush_between else _with_crushers(_pps_pulses(name, shaped), False)
    else:
        body = _with_crushers(operation_sequence(name, shaped), crush_between)
    if acquire is not None:
        body.append(acquire)
    return PulseProgram(name, tuple(body))


def emit_source(name: str, crush_between: bool = True, tip_angle: float = DEFAULT_TIP, mode: str = "linear") -> str:
    program = program_for(name, crush_between, Acquire(tip_angle, mode))
    return format_program(program, header=f"{name}: start from thermal equilibrium")


@dataclass(frozen=True)
class Target:
    name: str
    description: str
    expected: tuple[float, float]


# doublet intensities (i12, i01) relative to equilibrium
TARGETS = {
    t.name: t
    for t in (
        Target("equilibrium", "thermal equilibrium", (1.0, 1.0)),
        Target("pps0", "|0> pseudopure", (0.0, 1.5)),
        Target("pps1", "|1> pseudopure", (1.5, -1.5)),
        Target("pps2m", "-|2> pseudopure", (1.5, 0.0)),
        Target("U1", "identity", (1.0, 1.0)),
        Target("U2", "swap |1>,|2>", (-1.0, 2.0)),
        Target("U3", "swap |0>,|1>", (2.0, -1.0)),
        Target("U4", "swap |0>,|2> (hard pi)", (-1.0, -1.0)),
        Target("U5", "rotate up", (1.0, -2.0)),
        Target("U6", "rotate down", (-2.0, 1.0)),
    )
}
