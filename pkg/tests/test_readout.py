import math

import numpy as np
import pytest

from qutrit_nmr.pulse_engine import apply, crusher, hard_pulse
from qutrit_nmr.readout import DoubletReadout, detect, lorentzian, synth_spectrum
from qutrit_nmr.spin_model import DeviationState

NAMED_STATES = {
    "equilibrium": ((1, 0, -1), (1, 1)),
    "pps0": ((1, -0.5, -0.5), (0, 1.5)),
    "pps1": ((-0.5, 1, -0.5), (1.5, -1.5)),
    "pps2m": ((0.5, 0.5, -1), (1.5, 0)),
    "U2": ((1, -1, 0), (-1, 2)),
    "U3": ((0, 1, -1), (2, -1)),
    "U4": ((-1, 0, 1), (-1, -1)),
    "U5": ((-1, 1, 0), (1, -2)),
    "U6": ((0, -1, 1), (-2, 1)),
}


def state(p):
    return DeviationState.from_populations(p)


@pytest.mark.parametrize("name", list(NAMED_STATES))
def test_linear_readout_of_named_states(name):
    p, expected = NAMED_STATES[name]
    assert detect(state(p)).intensities == pytest.approx(expected, abs=1e-12)


def test_zero_state_reads_zero():
    assert detect(DeviationState(np.zeros((3, 3)))).intensities == (0.0, 0.0)


@pytest.mark.parametrize("name", list(NAMED_STATES))
def test_exact_matches_linear_at_5deg(name):
    p, expected = NAMED_STATES[name]
    exact = detect(state(p), mode="exact").intensities
    for e, x in zip(exact, expected):
        assert abs(e - x) / max(1, abs(x)) <= 0.01


def test_exact_closed_form():
    # x-rotation of a diagonal state: i01 = p0 - p1 + 3 sin²(θ/2) p1 for traceless p
    th = math.radians(20)
    p = np.array([0.3, 0.5, -0.8])
    r = detect(state(p), tip_angle=th, mode="exact")
    eps = math.sin(th / 2) ** 2
    assert r.i01 == pytest.approx(p[0] - p[1] + 3 * eps * p[1], rel=1e-12)
    assert r.i12 == pytest.approx(p[1] - p[2] - 3 * eps * p[1], rel=1e-12)


def test_exact_converges_quadratically():
    p = (-0.5, 1, -0.5)
    errs = []
    for deg in (10, 5, 2.5):
        r = detect(state(p), tip_angle=math.radians(deg), mode="exact")
        errs.append(max(abs(a - b) for a, b in zip(r.intensities, detect(state(p)).intensities)))
        assert errs[-1] <= math.radians(deg) ** 2
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.02)


def test_linear_ignores_coherences_and_identity(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    h = a + a.conj().T
    s = DeviationState(h - np.trace(h) / 3 * np.eye(3))
    assert detect(s).intensities == detect(crusher(s)).intensities
    shifted = np.diag(s.matrix).real + 4.2
    assert detect(state(shifted)).intensities == pytest.approx(detect(s).intensities)


def test_detect_validation(eq):
    with pytest.raises(ValueError):
        detect(eq, tip_angle=math.pi / 2)
    with pytest.raises(ValueError):
        detect(eq, mode="quadrature")


def test_json_record(eq):
    d = detect(eq).to_dict()
    assert set(d) == {"i12", "i01", "mode", "tip_deg"}
    assert d["tip_deg"] == pytest.approx(5.0)


def test_spectrum_equal_peaks(system):
    tr = synth_spectrum(DoubletReadout(1, 1), system, linewidth=5, sweep=480, n_points=4801)
    f, a = tr.freq_hz, tr.amplitude
    hi = a[np.argmin(abs(f - 120))]
    lo = a[np.argmin(abs(f + 120))]
    # evaluate Lorentzian sum at the centres: own peak 1 plus tail of the other line
    tail = lorentzian(240.0, 0.0, 5.0)
    assert hi == pytest.approx(1 + tail) and lo == pytest.approx(1 + tail)
    assert tr.n_points == 4801


def test_spectrum_peak_ratio_tracks_readout(system):
    r = DoubletReadout(-1.0, 2.0)
    tr = synth_spectrum(r, system, linewidth=system.splitting / 10, sweep=600, n_points=6001)
    f, a = tr.freq_hz, tr.amplitude
    ratio = a[np.argmin(abs(f + 120))] / a[np.argmin(abs(f - 120))]
    assert ratio == pytest.approx(r.i12 / r.i01, rel=0.01)


def test_spectrum_single_line_and_flat(system):
    tr = synth_spectrum(DoubletReadout(0.0, 1.5), system)
    assert tr.amplitude.max() == pytest.approx(1.5, rel=1e-3)
    assert tr.amplitude[np.argmin(abs(tr.freq_hz + 120))] < 0.01
    flat = synth_spectrum(DoubletReadout(0.0, 0.0), system)
    assert np.all(flat.amplitude == 0)


def test_spectrum_csv(system):
    text = synth_spectrum(DoubletReadout(1, 1), system, n_points=5).to_csv()
    lines = text.splitlines()
    assert lines[0] == "freq_hz,amplitude"
    assert len(lines) == 6
    assert lines[1].startswith("-240.000000,")


def test_spectrum_validation(system):
    with pytest.raises(ValueError):
        synth_spectrum(DoubletReadout(1, 1), system, linewidth=0)
    with pytest.raises(ValueError):
        synth_spectrum(DoubletReadout(1, 1), system, sweep=200)
    with pytest.raises(ValueError):
        synth_spectrum(DoubletReadout(1, 1), system, n_points=1)
