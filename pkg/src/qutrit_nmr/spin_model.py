"""
Spin-1 operator algebra and the rotating-frame quadrupolar Hamiltonian.

Basis ordering
--------------
The logical qutrit states map onto magnetic quantum numbers as

    |0> <-> m = +1,   |1> <-> m = 0,   |2> <-> m = -1

so that ``Iz = diag(1, 0, -1)``. All frequencies are offsets from the Larmor
frequency (the Zeeman term is removed by the rotating frame).

Units
-----
Frequencies on `SpinSystem` are in Hz; Hamiltonians are returned in rad/s.
Deviation states are dimensionless and normalized so the thermal equilibrium
populations are ``(1, 0, -1)``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPIN = 1
DIM = 3
# magnetic quantum number of |0>, |1>, |2>
BASIS_M = (1, 0, -1)
# readout order: first line is |1><->|2>, second is |0><->|1>
LINE_ORDER = ((1, 2), (0, 1))

DEFAULT_SPLITTING_HZ = 240.0


@dataclass(frozen=True)
class SpinOperators:
    """Cartesian spin-1 operators in the |0>,|1>,|2> basis."""

    iz: np.ndarray
    ix: np.ndarray
    iy: np.ndarray
    i_squared: np.ndarray

    @property
    def i_plus(self) -> np.ndarray:
        return self.ix + 1j * self.iy

    @property
    def i_minus(self) -> np.ndarray:
        return self.ix - 1j * self.iy


def spin_operators() -> SpinOperators:
    """Build Ix, Iy, Iz and I^2 for spin 1.

    The raising operator carries ``sqrt(I(I+1) - m(m+1)) = sqrt(2)`` on both
    single-quantum elements, so every ``<m|Ix|m±1>`` equals ``1/sqrt(2)``.
    """
    m = np.array(BASIS_M, dtype=float)
    iz = np.diag(m).astype(complex)
    ip = np.zeros((DIM, DIM), dtype=complex)
    for k in range(DIM - 1):
        # ip[k, k+1] raises m[k+1] to m[k]
        ip[k, k + 1] = math.sqrt(SPIN * (SPIN + 1) - m[k + 1] * (m[k + 1] + 1))
    ix = 0.5 * (ip + ip.conj().T)
    iy = -0.5j * (ip - ip.conj().T)
    i_sq = ix @ ix + iy @ iy + iz @ iz
    for a in (iz, ix, iy, i_sq):
        a.setflags(write=False)
    return SpinOperators(iz=iz, ix=ix, iy=iy, i_squared=i_sq)


OPS = spin_operators()


@dataclass(frozen=True)
class SpinSystem:
    """Physical parameters of the oriented spin-1 nucleus.

    Parameters
    ----------
    lambda_eff : float
        Effective quadrupolar coupling in Hz. The doublet splitting is
        ``6 * lambda_eff``.
    larmor_hz, order_parameter, quadrupolar_coupling_hz : float, optional
        Documentation only; they never enter the dynamics.
    """

    lambda_eff: float = DEFAULT_SPLITTING_HZ / 6.0
    larmor_hz: float | None = field(default=None, compare=False)
    order_parameter: float | None = field(default=None, compare=False)
    quadrupolar_coupling_hz: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.lambda_eff > 0 and math.isfinite(self.lambda_eff)):
            raise ValueError(f"lambda_eff must be a positive finite frequency, got {self.lambda_eff!r}")

    @classmethod
    def from_splitting(cls, splitting_hz: float = DEFAULT_SPLITTING_HZ, **kwargs) -> "SpinSystem":
        return cls(lambda_eff=splitting_hz / 6.0, **kwargs)

    @classmethod
    def from_config(cls, path: str | Path) -> "SpinSystem":
        return cls.from_splitting(read_config(path).get("splitting_hz", DEFAULT_SPLITTING_HZ))

    @property
    def splitting(self) -> float:
        """Doublet separation in Hz."""
        return 6.0 * self.lambda_eff

    @property
    def basis_map(self) -> dict[int, int]:
        return dict(enumerate(BASIS_M))

    @property
    def line_order(self) -> tuple[tuple[int, int], ...]:
        return LINE_ORDER


def read_config(path: str | Path) -> dict[str, float | str]:
    """Read a ``key = value`` config file (no section headers, ``#`` comments).

    Numeric values are converted to float, anything else is kept as text.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    text = Path(path).read_text(encoding="utf-8")
    parser.read_string("[qutrit]\n" + text)
    out: dict[str, float | str] = {}
    for key, value in parser["qutrit"].items():
        try:
            out[key] = float(value)
        except ValueError:
            out[key] = value
    return out


@dataclass(frozen=True, eq=False)
class DeviationState:
    """Traceless Hermitian deviation density matrix.

    The identity part of the full density matrix never evolves and is not
    represented. Construction checks Hermiticity and tracelessness.
    """

    matrix: np.ndarray
    atol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (DIM, DIM):
            raise ValueError(f"deviation matrix must be 3x3, got shape {m.shape}")
        if not np.allclose(m, m.conj().T, atol=self.atol, rtol=0):
            raise ValueError("deviation matrix is not Hermitian")
        if abs(np.trace(m)) > self.atol:
            raise ValueError(f"deviation matrix is not traceless (trace={np.trace(m):.3g})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_populations(cls, populations) -> "DeviationState":
        p = np.asarray(populations, dtype=float)
        return cls(np.diag(p - p.mean()).astype(complex))

    @property
    def populations(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()

    def __eq__(self, other):
        if not isinstance(other, DeviationState):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix)

    def isclose(self, other: "DeviationState", atol: float = 1e-9) -> bool:
        return np.allclose(self.matrix, other.matrix, atol=atol, rtol=0)


def _lambda(sys, lambda_eff):
    return sys.lambda_eff if lambda_eff is None else float(lambda_eff)


def level_energies_hz(sys: SpinSystem | None = None, lambda_eff: float | None = None) -> np.ndarray:
    """Rotating-frame level energies ``Λ(3m² - 2)`` in Hz."""
    m = np.array(BASIS_M, dtype=float)
    return _lambda(sys, lambda_eff) * (3 * m**2 - SPIN * (SPIN + 1))


def build_hamiltonian(sys: SpinSystem | None = None, lambda_eff: float | None = None) -> np.ndarray:
    """Rotating-frame quadrupolar Hamiltonian ``2πΛ(3Iz² - I²)`` in rad/s.

    ``lambda_eff`` overrides ``sys`` and may be zero (isotropic limit), which
    `SpinSystem` itself does not allow.
    """
    return 2 * np.pi * _lambda(sys, lambda_eff) * (3 * OPS.iz @ OPS.iz - OPS.i_squared)


def equilibrium_deviation(sys: SpinSystem | None = None) -> DeviationState:
    """High-temperature equilibrium, deviation population proportional to m."""
    return DeviationState(np.diag(np.array(BASIS_M, dtype=complex)))


def transition_frequency(sys: SpinSystem | None, i: int, j: int, lambda_eff: float | None = None) -> float:
    """Rotating-frame offset (Hz) of the single-quantum line between levels i, j.

    Defined as ``E_lo - E_hi`` with lo/hi the smaller/larger level index; this
    is the carrier offset at which an RF field drives the transition.
    """
    lo, hi = sorted((i, j))
    if hi - lo != 1:
        raise ValueError(f"levels {i} and {j} are not connected by a single-quantum transition")
    e = level_energies_hz(sys, lambda_eff)
    return float(e[lo] - e[hi])


def transition_offsets(sys: SpinSystem | None = None, lambda_eff: float | None = None) -> tuple[float, float]:
    """Offsets ``(freq_12, freq_01)`` in Hz, i.e. ``(-3Λ, +3Λ)``."""
    return tuple(transition_frequency(sys, i, j, lambda_eff) for i, j in LINE_ORDER)
