"""Quantum Turing machines, halting spaces and a strongly universal encoder."""

from .bundled import fixture_names, load_fixture
from .coding import PrefixCode, blind_prefix_code, code_lengths_from_dims, kraft_holds
from .halting import (
    HaltingSpectrum,
    approx_halting_space,
    exact_halting_space,
    exact_spectrum,
    is_eps_t_halting,
)
from .machine import Machine, load_machine, parse_machine, serialize_machine, validate_machine
from .qubits import QubitString
from .sim import apply_machine, build_space, evolve, initial_state, read_output
from .subspace import Subspace, compress, compression_map, decompress, trace_distance
from .universal import EncodedProgram, decode, embed_variable_length, encode

__all__ = [
    "EncodedProgram",
    "HaltingSpectrum",
    "Machine",
    "PrefixCode",
    "QubitString",
    "Subspace",
    "apply_machine",
    "approx_halting_space",
    "blind_prefix_code",
    "build_space",
    "code_lengths_from_dims",
    "compress",
    "compression_map",
    "decode",
    "decompress",
    "embed_variable_length",
    "encode",
    "evolve",
    "exact_halting_space",
    "exact_spectrum",
    "fixture_names",
    "initial_state",
    "is_eps_t_halting",
    "kraft_holds",
    "load_fixture",
    "load_machine",
    "parse_machine",
    "read_output",
    "serialize_machine",
    "trace_distance",
    "validate_machine",
]
