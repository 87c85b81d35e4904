import itertools
import math

import numpy as np
import pytest

from qutrit_nmr.pulse_lang import Crusher, Pulse, format_program, parse, run_program
from qutrit_nmr.sequences import (
    OPERATION_NAMES,
    PPS_TARGETS,
    TARGETS,
    NamedOperation,
    alternative_u4_sequences,
    cayley_table,
    compose,
    emit_source,
    ideal_unitary,
    operation_sequence,
    operator_matrix,
    permutation_of,
    permute_populations,
    population_action,
    pps_sequence,
    program_for,
)
from qutrit_nmr.spin_model import DeviationState

TABLE_OPERATORS = {
    "U1": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
    "U2": [[1, 0, 0], [0, 0, 1], [0, 1, 0]],
    "U3": [[0, 1, 0], [1, 0, 0], [0, 0, 1]],
    "U4": [[0, 0, 1], [0, 1, 0], [1, 0, 0]],
    "U5": [[0, 1, 0], [0, 0, 1], [1, 0, 0]],
    "U6": [[0, 0, 1], [1, 0, 0], [0, 1, 0]],
}


def run(name, system, eq, mode="ideal"):
    return run_program(program_for(name), system, eq, mode, 30e-6)


@pytest.mark.parametrize("name", OPERATION_NAMES)
def test_operator_matches_table(name):
    np.testing.assert_array_equal(operator_matrix(name), TABLE_OPERATORS[name])


@pytest.mark.parametrize("name", OPERATION_NAMES)
def test_composed_unitary_modulus(name):
    # table rows index the input state, so |U| is the transpose
    op = NamedOperation.get(name)
    np.testing.assert_allclose(np.abs(op.ideal_unitary()), op.operator.T, atol=1e-14)


def test_operators_exhaust_s3():
    perms = {permutation_of(n) for n in OPERATION_NAMES}
    assert perms == set(itertools.permutations(range(3)))


def test_pulse_counts():
    counts = {n: len(operation_sequence(n)) for n in OPERATION_NAMES}
    assert counts == {"U1": 0, "U2": 1, "U3": 1, "U4": 1, "U5": 2, "U6": 2}
    assert all(p.kind == "selective" and p.flip_angle == math.pi for n in ("U2", "U3", "U5", "U6") for p in operation_sequence(n))
    (u4,) = operation_sequence("U4")
    assert u4.kind == "hard" and u4.flip_angle == math.pi
    assert [p.levels for p in operation_sequence("U5")] == [(1, 2), (0, 1)]
    assert [p.levels for p in operation_sequence("U6")] == [(0, 1), (1, 2)]


def test_permutations():
    assert permutation_of("U1") == (0, 1, 2)
    assert permutation_of("U5") == (1, 2, 0)
    assert compose(permutation_of("U2"), permutation_of("U3")) == permutation_of("U5")
    with pytest.raises(KeyError):
        permutation_of("U7")


@pytest.mark.parametrize(
    "name, pops, readout",
    [
        ("U2", (1, -1, 0), (-1, 2)),
        ("U4", (-1, 0, 1), (-1, -1)),
        ("U6", (0, -1, 1), (-2, 1)),
        ("U5", (-1, 1, 0), (1, -2)),
    ],
)
def test_operations_from_equilibrium(system, eq, name, pops, readout):
    ex = run(name, system, eq)
    np.testing.assert_allclose(ex.final.populations, pops, atol=1e-12)
    assert ex.readout.intensities == pytest.approx(readout, abs=1e-12)


@pytest.mark.parametrize("label", list(PPS_TARGETS))
def test_pps_preparations(system, eq, label):
    ex = run(label, system, eq)
    np.testing.assert_allclose(ex.final.populations, PPS_TARGETS[label].expected_populations, atol=1e-12)
    assert ex.readout.intensities == pytest.approx(TARGETS[label].expected, abs=1e-12)
    seq = pps_sequence(label)
    assert isinstance(seq[-1], Crusher)


def test_pps_targets_have_one_distinguished_population():
    for t in PPS_TARGETS.values():
        values = sorted(t.expected_populations)
        assert (values[0] == values[1]) != (values[1] == values[2])


def test_pps_unknown():
    with pytest.raises(KeyError):
        pps_sequence("pps3")


def test_alternative_u4(system, eq):
    alt1, alt2 = alternative_u4_sequences()
    hard = population_action(operation_sequence("U4"))
    for alt in (alt1, alt2):
        np.testing.assert_allclose(np.abs(ideal_unitary(alt)), TABLE_OPERATORS["U4"], atol=1e-14)
        np.testing.assert_allclose(population_action(alt), hard, atol=1e-14)
    for p in itertools.permutations([1.0, 0.0, -1.0]):
        a = population_action(alt1) @ np.array(p)
        b = population_action(alt2) @ np.array(p)
        np.testing.assert_array_equal(a, b)
        np.testing.assert_allclose(a, permute_populations(permutation_of("U4"), p), atol=1e-14)


def test_cayley_table_is_s3():
    table = cayley_table()
    assert len(table) == 36
    for (a, b), c in table.items():
        assert permutation_of(c) == compose(permutation_of(a), permutation_of(b))


@pytest.mark.parametrize("name", list(TARGETS))
def test_emitted_source_round_trips_and_runs(system, eq, name):
    src = emit_source(name)
    prog = parse(src)
    assert prog.structurally_equal(program_for(name))
    ex = run_program(prog, system, eq)
    assert ex.readout.intensities == pytest.approx(TARGETS[name].expected, abs=1e-12)


def test_no_crush_option(system, eq):
    prog = program_for("U5", crush_between=False)
    assert not any(isinstance(i, Crusher) for i in prog.instructions)
    # permutation pulses make no coherence from a diagonal state, so populations agree
    ex = run_program(prog, system, eq)
    assert ex.readout.intensities == pytest.approx((1, -2), abs=1e-12)
    # but a π/2 preparation without crushers keeps its coherence
    ex = run_program(program_for("pps0", crush_between=False), system, eq)
    assert abs(ex.final.matrix[1, 2]) == pytest.approx(0.5)
