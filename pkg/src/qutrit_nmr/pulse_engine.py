"""
RF pulses as 3x3 propagators.

Two fidelity modes are supported:

``ideal``
    Transition-selective pulses are exact SU(2) rotations on a two-level
    block; hard pulses are exact spin-1 rotations.
``shaped``
    Pulses are integrated in time under the quadrupolar Hamiltonian plus a
    shaped RF field, so selective pulses leak onto the neighbouring
    transition exactly as a finite-length pulse would.

Gradients are idealized: `crusher` erases every coherence and keeps the
populations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .spin_model import DIM, OPS, DeviationState, SpinSystem, build_hamiltonian, transition_frequency

MODES = ("ideal", "shaped")
SHAPES = ("ideal", "gaussian", "rectangular")

# spin-1 single-quantum matrix element 1/sqrt(2) -> on-transition nutation is sqrt(2) faster
SELECTIVE_NUTATION_FACTOR = math.sqrt(2.0)
# half-width of the Gaussian envelope in units of sigma (sigma = duration / (2 * truncation))
GAUSSIAN_TRUNCATION = 1.36
SELECTIVE_DURATION = 6e-3
HARD_DURATION = 42e-6
MIN_STEPS = 200
DEFAULT_DT = 1e-6


@dataclass(frozen=True)
class PulseSpec:
    """One RF event.

    Parameters
    ----------
    kind : {"selective", "hard"}
    flip_angle : float
        Radians, in (0, 2π]. For selective pulses this is the nutation angle on
        the addressed two-level subspace.
    levels : (int, int), optional
        Adjacent level pair for selective pulses; stored sorted.
    phase : float
        RF phase in radians; 0 rotates about x.
    shape : {"ideal", "gaussian", "rectangular"}
    duration : float, optional
        Seconds. Needed only when the pulse is simulated in shaped mode.
    carrier_offset : float, optional
        Hz. Defaults to the addressed transition's offset (selective) or 0 (hard).
    """

    kind: str
    flip_angle: float
    levels: tuple[int, int] | None = None
    phase: float = 0.0
    shape: str = "ideal"
    duration: float | None = None
    carrier_offset: float | None = None
    truncation: float = field(default=GAUSSIAN_TRUNCATION, compare=False)

    def __post_init__(self):
        if self.kind not in ("selective", "hard"):
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if self.shape not in SHAPES:
            raise ValueError(f"unknown pulse shape {self.shape!r}")
        if not (0.0 < self.flip_angle <= 2 * math.pi + 1e-12):
            raise ValueError(f"flip angle must lie in (0, 2π], got {self.flip_angle!r}")
        if self.duration is not None and not self.duration > 0:
            raise ValueError(f"pulse duration must be positive, got {self.duration!r}")
        if self.kind == "selective":
            if self.levels is None or len(self.levels) != 2:
                raise ValueError("selective pulse needs a level pair")
            i, j = (int(x) for x in self.levels)
            _check_transition(i, j)
            object.__setattr__(self, "levels", (min(i, j), max(i, j)))
        elif self.levels is not None:
            raise ValueError("hard pulses act on all levels; levels must be None")

    @classmethod
    def selective(cls, i: int, j: int, flip_angle: float, **kwargs) -> "PulseSpec":
        return cls("selective", flip_angle, levels=(i, j), **kwargs)

    @classmethod
    def hard(cls, flip_angle: float, **kwargs) -> "PulseSpec":
        return cls("hard", flip_angle, **kwargs)

    def describe(self) -> str:
        where = f"{self.levels[0]}<->{self.levels[1]}" if self.kind == "selective" else "hard"
        return f"({math.degrees(self.flip_angle):g} deg){where}"


@dataclass(frozen=True, eq=False)
class Propagator:
    """A compiled 3x3 unitary plus a note on the pulse(s) that produced it."""

    matrix: np.ndarray
    provenance: str = ""

    def __matmul__(self, other: "Propagator") -> "Propagator":
        # self after other
        return Propagator(self.matrix @ other.matrix, f"{other.provenance} {self.provenance}".strip())

    @classmethod
    def identity(cls) -> "Propagator":
        return cls(np.eye(DIM, dtype=complex), "identity")

    def population_action(self) -> np.ndarray:
        """Transfer matrix ``T[k, l] = |U[k, l]|²`` with ``p_out = T @ p_in``.

        Exact for diagonal input states once coherences are crushed.
        """
        return np.abs(self.matrix) ** 2

    def unitarity_error(self) -> float:
        return float(np.max(np.abs(self.matrix @ self.matrix.conj().T - np.eye(DIM))))


def _check_transition(i: int, j: int):
    for k in (i, j):
        if k not in range(DIM):
            raise ValueError(f"level index {k} outside 0..{DIM - 1}")
    if i == j:
        raise ValueError(f"selective pulse needs two distinct levels, got {i} and {j}")
    if abs(i - j) != 1:
        raise ValueError(f"levels {i} and {j} differ by {abs(i - j)}: only Δm = ±1 transitions can be driven")


def ideal_selective(i: int, j: int, flip_angle: float, phase: float = 0.0) -> Propagator:
    """Exact rotation on the {i, j} subspace, identity on the third level."""
    _check_transition(i, j)
    i, j = min(i, j), max(i, j)
    c, s = math.cos(flip_angle / 2), math.sin(flip_angle / 2)
    u = np.eye(DIM, dtype=complex)
    u[i, i] = u[j, j] = c
    u[i, j] = -1j * np.exp(-1j * phase) * s
    u[j, i] = -1j * np.exp(1j * phase) * s
    return Propagator(u, f"({math.degrees(flip_angle):g} deg){i}<->{j}")


def hard_pulse(flip_angle: float, phase: float = 0.0) -> Propagator:
    gen = OPS.ix * math.cos(phase) + OPS.iy * math.sin(phase)
    return Propagator(_kernels.expm_hermitian(gen, flip_angle), f"({math.degrees(flip_angle):g} deg)hard")


def free_evolution(sys: SpinSystem, duration: float) -> Propagator:
    if duration < 0:
        raise ValueError(f"delay must be non-negative, got {duration!r}")
    return Propagator(_kernels.expm_hermitian(build_hamiltonian(sys), duration), f"delay {duration:g}s")


def envelope(shape: str, n_steps: int, truncation: float = GAUSSIAN_TRUNCATION) -> np.ndarray:
    """Unnormalized envelope sampled at the midpoints of ``n_steps`` equal steps."""
    x = (np.arange(n_steps) + 0.5) / n_steps  # fraction of the pulse
    if shape == "rectangular":
        return np.ones(n_steps)
    if shape == "gaussian":
        # pulse spans ±truncation sigma
        z = (2 * x - 1) * truncation
        return np.exp(-0.5 * z**2)
    raise ValueError(f"no envelope for shape {shape!r}")


def shaped_selective(pulse: PulseSpec, sys: SpinSystem, dt: float = DEFAULT_DT) -> Propagator:
    """Integrate a shaped pulse under quadrupolar + RF Hamiltonian.

    The RF term is ``2π ν1(t) [Ix cos(2π δ t + φ) + Iy sin(2π δ t + φ)]`` with
    carrier offset δ. The envelope is scaled so the nutation on the addressed
    transition equals ``flip_angle`` (factor sqrt(2) for selective pulses, 1
    for hard pulses). Each step uses the exact exponential of the Hamiltonian
    at the step midpoint, which is second order in ``dt``.

    Raises
    ------
    ValueError
        If the shape is ``ideal``, duration is missing, or ``dt`` exceeds
        ``duration / 200``.
    """
    if pulse.shape not in ("gaussian", "rectangular"):
        raise ValueError(f"shaped integration needs a gaussian or rectangular pulse, got {pulse.shape!r}")
    if pulse.duration is None:
        raise ValueError("shaped pulse needs a duration")
    if not dt > 0 or dt > pulse.duration / MIN_STEPS * (1 + 1e-9):
        raise ValueError(
            f"time step {dt:g} s too coarse for a {pulse.duration:g} s pulse (need dt <= duration/{MIN_STEPS})"
        )
    n = int(math.ceil(pulse.duration / dt - 1e-9))
    step = pulse.duration / n

    env = envelope(pulse.shape, n, pulse.truncation)
    area = env.sum() * step
    if area <= 0:
        raise ValueError("pulse envelope integrates to zero")
    if pulse.kind == "selective":
        kappa = SELECTIVE_NUTATION_FACTOR
        offset = transition_frequency(sys, *pulse.levels) if pulse.carrier_offset is None else pulse.carrier_offset
    else:
        kappa = 1.0
        offset = 0.0 if pulse.carrier_offset is None else pulse.carrier_offset
    amp = env * (pulse.flip_angle / (kappa * area))  # rad/s
    t_mid = (np.arange(n) + 0.5) * step
    phase = 2 * np.pi * offset * t_mid + pulse.phase

    u = _kernels.piecewise_propagator(
        np.asarray(build_hamiltonian(sys)), np.asarray(OPS.ix), np.asarray(OPS.iy), amp, phase, step
    )
    return Propagator(u, f"{pulse.describe()} {pulse.shape} {pulse.duration * 1e3:g}ms")


def compile_pulse(pulse: PulseSpec, sys: SpinSystem, mode: str = "ideal", dt: float = DEFAULT_DT) -> Propagator:
    """Propagator for one pulse in the requested fidelity mode.

    In shaped mode a selective pulse written with ``shape="ideal"`` is played
    as a Gaussian and must carry a duration; hard pulses default to a
    rectangular pulse of `HARD_DURATION`, integrated with at least 200 steps.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if mode == "ideal":
        if pulse.kind == "selective":
            return ideal_selective(*pulse.levels, pulse.flip_angle, pulse.phase)
        return hard_pulse(pulse.flip_angle, pulse.phase)

    if pulse.kind == "selective":
        if pulse.duration is None:
            raise ValueError(f"shaped mode needs a duration for selective pulse {pulse.describe()}")
        shape = "gaussian" if pulse.shape == "ideal" else pulse.shape
        return shaped_selective(replace(pulse, shape=shape), sys, dt)
    duration = HARD_DURATION if pulse.duration is None else pulse.duration
    shape = "rectangular" if pulse.shape == "ideal" else pulse.shape
    return shaped_selective(replace(pulse, shape=shape, duration=duration), sys, min(dt, duration / MIN_STEPS))


def apply(p: Propagator, s: DeviationState) -> DeviationState:
    """Conjugate the state: ``U σ U†``."""
    u = p.matrix
    return DeviationState(u @ s.matrix @ u.conj().T)


def crusher(state: DeviationState) -> DeviationState:
    """Idealized gradient: zero every off-diagonal element."""
    return DeviationState(np.diag(state.matrix.diagonal()))
