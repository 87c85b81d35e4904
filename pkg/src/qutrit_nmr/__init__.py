"""Spin-1 (qutrit) NMR simulator.

Pseudopure-state preparation and single-qutrit permutations driven by
transition-selective pulses on a quadrupolar spin-1 nucleus, with a small
pulse-program language and doublet readout.
"""

from ._kernels import BACKEND
from .pulse_engine import (
    Propagator,
    PulseSpec,
    apply,
    compile_pulse,
    crusher,
    free_evolution,
    hard_pulse,
    ideal_selective,
    shaped_selective,
)
from .pulse_lang import (
    Acquire,
    CompileError,
    Crusher,
    Delay,
    Diagnostic,
    ParseError,
    Pulse,
    PulseProgram,
    compile_program,
    execute,
    format_program,
    parse,
    run_program,
)
from .readout import DoubletReadout, SpectrumTrace, detect, synth_spectrum
from .sequences import (
    TARGETS,
    NamedOperation,
    PpsTarget,
    alternative_u4_sequences,
    operation_sequence,
    permutation_of,
    pps_sequence,
    program_for,
)
from .spin_model import (
    OPS,
    DeviationState,
    SpinOperators,
    SpinSystem,
    build_hamiltonian,
    equilibrium_deviation,
    transition_offsets,
)

__version__ = "0.1.0"
