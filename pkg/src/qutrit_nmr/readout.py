"""
Small-angle detection and doublet spectra.

Intensities are reported in line order ``(i12, i01)``: first the |1>-|2>
line, then the |0>-|1> line. Both are normalized so thermal equilibrium
reads ``(1, 1)``. A positive intensity means the lower-index level is the
more populated one.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .pulse_engine import apply, hard_pulse
from .spin_model import LINE_ORDER, DeviationState, SpinSystem, equilibrium_deviation, transition_offsets

DEFAULT_TIP = math.radians(5.0)
READOUT_MODES = ("linear", "exact")
DEFAULT_LINEWIDTH = 5.0


@dataclass(frozen=True)
class DoubletReadout:
    i12: float
    i01: float
    mode: str = "linear"
    tip_angle: float = DEFAULT_TIP

    @property
    def intensities(self) -> tuple[float, float]:
        return (self.i12, self.i01)

    def to_dict(self) -> dict:
        return {"i12": float(self.i12), "i01": float(self.i01), "mode": self.mode, "tip_deg": math.degrees(self.tip_angle)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _coherence_signal(state: DeviationState, tip_angle: float) -> np.ndarray:
    # imaginary part of the single-quantum coherences after an x pulse
    rotated = apply(hard_pulse(tip_angle, 0.0), state).matrix
    return np.array([rotated[i, j].imag for i, j in LINE_ORDER])


def detect(
    state: DeviationState, sys: SpinSystem | None = None, tip_angle: float = DEFAULT_TIP, mode: str = "linear"
) -> DoubletReadout:
    """Line intensities after a non-selective small-angle pulse.

    ``linear`` returns the population differences ``(p1 - p2, p0 - p1)``
    directly. ``exact`` rotates the state by ``tip_angle`` about x and reads
    the single-quantum coherences, normalized by the equilibrium response
    computed the same way.
    """
    if mode not in READOUT_MODES:
        raise ValueError(f"unknown readout mode {mode!r}; expected one of {READOUT_MODES}")
    if not 0 < tip_angle < math.pi / 2:
        raise ValueError(f"tip angle must lie in (0, π/2), got {tip_angle!r}")
    if mode == "linear":
        p = state.matrix.diagonal().real
        i12, i01 = (p[i] - p[j] for i, j in LINE_ORDER)
    else:
        ref = _coherence_signal(equilibrium_deviation(sys), tip_angle)
        i12, i01 = _coherence_signal(state, tip_angle) / ref
    return DoubletReadout(float(i12), float(i01), mode, tip_angle)


@dataclass(frozen=True)
class SpectrumTrace:
    freq_hz: np.ndarray
    amplitude: np.ndarray
    linewidth: float
    sweep: float

    @property
    def n_points(self) -> int:
        return len(self.freq_hz)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.freq_hz.tolist(), self.amplitude.tolist()))

    def to_csv(self, precision: int = 6) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["freq_hz", "amplitude"])
        for f, a in zip(self.freq_hz, self.amplitude):
            writer.writerow([f"{f:.{precision}f}", f"{a:.{precision}f}"])
        return buf.getvalue()


def lorentzian(freq, center, linewidth):
    """Absorptive Lorentzian of unit height and full width ``linewidth`` at half maximum."""
    hw = 0.5 * linewidth
    return hw**2 / ((np.asarray(freq) - center) ** 2 + hw**2)


def synth_spectrum(
    r: DoubletReadout,
    sys: SpinSystem,
    linewidth: float = DEFAULT_LINEWIDTH,
    sweep: float | None = None,
    n_points: int = 2048,
) -> SpectrumTrace:
    """Render the doublet as two Lorentzians centred on the transition offsets.

    Each line's peak height equals its intensity; the frequency axis runs
    symmetrically over ``sweep`` Hz (default: twice the splitting).
    """
    if sweep is None:
        sweep = 2 * sys.splitting
    if not linewidth > 0:
        raise ValueError(f"linewidth must be positive, got {linewidth!r}")
    if not sweep > sys.splitting:
        raise ValueError(f"sweep ({sweep:g} Hz) must exceed the splitting ({sys.splitting:g} Hz)")
    if n_points < 2:
        raise ValueError(f"need at least 2 points, got {n_points}")
    freq = np.linspace(-sweep / 2, sweep / 2, n_points)
    amp = np.zeros(n_points)
    for intensity, center in zip(r.intensities, transition_offsets(sys)):
        amp += intensity * lorentzian(freq, center, linewidth)
    return SpectrumTrace(freq, amp, linewidth, sweep)
