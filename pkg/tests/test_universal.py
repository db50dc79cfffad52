from fractions import Fraction

import numpy as np
import pytest

from qtmlab.approx import ToyModeError
from qtmlab.halting import exact_spectrum
from qtmlab.qubits import QubitString, total_dim
from qtmlab.sim import NotHalting
from qtmlab.subspace import trace_distance
from qtmlab.universal import (
    DecodeError,
    EncodedProgram,
    HeterogeneousHalting,
    best_upper_bound,
    build_fine_tuner,
    complexity_upper_bound,
    decode,
    decode_with_trace,
    direct_output,
    embed_variable_length,
    encode,
    epsilon_zero,
    gamma_decode,
    gamma_encode,
    machine_tag,
    read_machine_tag,
    required_levels,
    restrict_fixed_length,
    tail_bound,
)

from conftest import HALTING_FIXTURES, unit


def test_gamma_roundtrip():
    for k in range(1, 300):
        bits = gamma_encode(k) + "101"
        assert gamma_decode(bits) == (k, len(gamma_encode(k)))
    assert gamma_encode(1) == "1" and gamma_encode(4) == "00100"


def test_machine_tag_self_delimiting(machines):
    m = machines["delay-by-first-bit"]
    tag = machine_tag(m)
    back, pos = read_machine_tag(tag + "0110")
    assert back == m and pos == len(tag)


def test_encode_move_to_output(machines):
    p = encode(machines["move-to-output"], QubitString.basis("01"), 10)
    assert p.code_word == "0"
    assert p.payload_qubits == 2
    assert np.allclose(np.abs(p.payload), [0, 1, 0, 0])
    assert p.quantum_length == 3


def test_encode_delay(machines):
    p = encode(machines["delay-by-first-bit"], QubitString.basis("00"), 10)
    assert len(p.code_word) == 2 and p.payload_qubits == 1
    q = encode(machines["delay-by-first-bit"], QubitString.basis("10"), 10)
    assert q.code_word != p.code_word and len(q.code_word) == 2


def test_encode_non_halting(machines):
    with pytest.raises(NotHalting):
        encode(machines["loop-forever"], QubitString.basis("01"), 6)


def test_encode_heterogeneous_mixture(machines):
    rho = np.diag([0.5, 0, 0.5, 0]).astype(complex)
    with pytest.raises(HeterogeneousHalting):
        encode(machines["delay-by-first-bit"], rho, 6)


def test_decode_move_to_output(machines):
    m = machines["move-to-output"]
    out = decode(encode(m, QubitString.basis("01"), 10), Fraction(1, 100), 10)
    assert trace_distance(out, QubitString.basis("01")) <= 1e-8


def test_decode_hadamard_to_output(machines):
    m = machines["hadamard-to-output"]
    out = decode(encode(m, QubitString.basis("0"), 6), Fraction(1, 100), 6)
    plus = QubitString.from_amplitudes({"0": 2**-0.5, "1": 2**-0.5})
    assert trace_distance(out, plus) < 0.01


def test_corrupted_code_word_never_silently_wrong(machines):
    m = machines["delay-by-first-bit"]
    psi = QubitString.basis("10")
    p = encode(m, psi, 8)
    for i in range(len(p.code_word)):
        flipped = p.code_word[:i] + ("1" if p.code_word[i] == "0" else "0") + p.code_word[i + 1:]
        bad = EncodedProgram(p.machine_tag, flipped, p.payload, p.n)
        try:
            tr = decode_with_trace(bad, Fraction(1, 100), 8)
        except DecodeError:
            continue
        # a different valid branch: the matched word is the flipped one, not the original
        assert tr.code.words[-1] == flipped[: len(tr.code.words[-1])]
        assert tr.code.words[-1] != p.code_word


def test_wrong_length_rejected(machines):
    p = encode(machines["move-halt"], QubitString.basis("01"), 4)
    bad = EncodedProgram(p.machine_tag, p.code_word + "0", p.payload, p.n)
    with pytest.raises(DecodeError):
        decode(bad, Fraction(1, 10), 4)


def test_no_match_within_horizon(machines):
    m = machines["delay-by-first-bit"]
    p = encode(m, QubitString.basis("10"), 8)
    with pytest.raises(DecodeError):
        decode(p, Fraction(1, 10), 2)


def test_container_roundtrip(machines, rng):
    m = machines["hadamard-to-output"]
    p = encode(m, unit(rng, 2), 6)
    q = EncodedProgram.from_bytes(p.to_bytes())
    assert q.machine_tag == p.machine_tag and q.code_word == p.code_word
    assert np.array_equal(q.payload, p.payload)
    assert len(p.to_bits()) % 8 == 0


@pytest.mark.parametrize("name", HALTING_FIXTURES)
def test_length_law_and_roundtrip(machines, rng, name):
    m = machines[name]
    for n in (1, 2, 3):
        spec = exact_spectrum(m, n, 10)
        headers = set()
        for t, space in spec.entries:
            psi = space.basis @ unit(rng, space.dim)
            p = encode(m, psi, 10)
            headers.add(p.header_length)
            assert p.quantum_length == n + 1
            for delta in (Fraction(1, 20), Fraction(1, 100)):
                out = decode(p, delta, 10)
                assert trace_distance(out, direct_output(m, psi, 10)) < delta
        assert len(headers) <= 1


def test_online_soundness(machines):
    from qtmlab.coding import blind_prefix_code, code_lengths_from_dims

    m = machines["delay-by-first-bit"]
    spec = exact_spectrum(m, 2, 10)
    full = blind_prefix_code(code_lengths_from_dims(2, spec.dims))
    for t, psi in ((2, "00"), (3, "10")):
        tr = decode_with_trace(encode(m, QubitString.basis(psi), 10), Fraction(1, 10), 10)
        assert tr.tau == t
        assert tr.code.words == full.words[: len(tr.code.words)]


def test_mixed_input_linearity(machines, rng):
    m = machines["hadamard-to-output"]
    a, b = unit(rng, 2), unit(rng, 2)
    lam = 0.3
    rho = lam * np.outer(a, a.conj()) + (1 - lam) * np.outer(b, b.conj())
    mixed = decode(encode(m, rho, 6), Fraction(1, 100), 6)
    oa = decode(encode(m, a, 6), Fraction(1, 100), 6)
    ob = decode(encode(m, b, 6), Fraction(1, 100), 6)
    k = max(mixed.max_len, oa.max_len, ob.max_len)
    expect = lam * oa.resize(k).rho + (1 - lam) * ob.resize(k).rho
    assert np.allclose(mixed.resize(k).rho, expect, atol=1e-8)


def test_embedding_examples():
    for s, target in (("", "00"), ("0", "01"), ("1", "10")):
        e = embed_variable_length(QubitString.basis(s, 1), 1)
        assert np.allclose(e.rho, QubitString.basis(target).rho)
    q = QubitString.from_amplitudes({"0": 2**-0.5, "11": 2**-0.5})
    e = embed_variable_length(q, 2)
    assert e.is_fixed_length(3) and e.trace == pytest.approx(1.0)
    with pytest.raises(ValueError):
        embed_variable_length(QubitString.basis("101"), 2)


def test_embedding_inverse(rng):
    for n in range(4):
        s = QubitString.from_vector(unit(rng, total_dim(n)), n)
        back = restrict_fixed_length(embed_variable_length(s, n), n)
        assert np.allclose(back.rho, s.rho, atol=1e-12)
        assert back.base_length == s.base_length


def test_embedded_input_runs_through_pipeline(machines):
    m = machines["copy-halt"]
    e = embed_variable_length(QubitString.basis("1"), 1)
    out = decode(encode(m, e, 10), Fraction(1, 100), 10)
    assert trace_distance(out, QubitString.basis("10")) <= 1e-8


def test_complexity_bound(machines):
    m = machines["move-to-output"]
    b = complexity_upper_bound(m, QubitString.basis("01"), Fraction(1, 100), 10)
    assert b.length == len(machine_tag(m)) + 3
    assert b.certified and b.distance <= 1e-8
    others = [complexity_upper_bound(m, QubitString.basis(s), Fraction(1, 100), 10) for s in ("00", "10", "11")]
    assert {o.header_length for o in others} == {b.header_length}


def test_best_bound_takes_minimum(machines):
    target = QubitString.basis("01")
    best, all_bounds = best_upper_bound(
        [(machines["move-to-output"], target), (machines["copy-halt"], target)], Fraction(1, 100), 10
    )
    assert len(all_bounds) == 2
    assert best.length == min(b.length for b in all_bounds)


def test_fine_tuner_move_halt_n0(machines):
    ft = build_fine_tuner(machines["move-halt"], 0, 1, 3)
    assert ft.epsilons[0] == epsilon_zero(0) == Fraction(1, 81)
    assert ft.schedule_holds()
    assert all(s.dim == 1 for s in ft.spaces)
    assert ft.composed.defect <= ft.composed.bound + 1e-12
    assert np.allclose(ft.forward, np.eye(1))
    assert ft.tail_bound == pytest.approx(tail_bound(0, 3))


def test_fine_tuner_move_halt_n1_one_level(machines):
    ft = build_fine_tuner(machines["move-halt"], 1, 1, 1, cover_cap=10**7)
    assert [s.dim for s in ft.spaces] == [2, 2]
    assert np.allclose(ft.forward, np.eye(2), atol=1e-10)
    assert ft.schedule_holds()


def test_fine_tuner_k0_and_degenerate(machines):
    ft = build_fine_tuner(machines["move-halt"], 1, 1, 0)
    assert ft.levels == () and ft.tail_bound == pytest.approx(tail_bound(1, 0))
    dead = build_fine_tuner(machines["loop-forever"], 0, 2, 1)
    assert dead.degenerate and dead.domain.dim == 0


def test_fine_tuner_gates(machines):
    with pytest.raises(ToyModeError):
        build_fine_tuner(machines["move-halt"], 2, 1, 0)
    with pytest.raises(ToyModeError):
        build_fine_tuner(machines["move-halt"], 1, 1, 1)  # level-1 covering exceeds the default cap


def test_tail_bound_decreases():
    vals = [tail_bound(1, k) for k in range(10)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert tail_bound(1, required_levels(1, Fraction(1, 100))) >= 0


def test_approx_mode_roundtrip(machines):
    for name, s in (("move-halt", "0"), ("delay-by-first-bit", "1"), ("hadamard-to-output", "1")):
        m = machines[name]
        x = QubitString.basis(s)
        p = encode(m, x, 4, mode="approx")
        assert p.quantum_length == 2
        tr = decode_with_trace(p, Fraction(1, 20), 4)
        assert trace_distance(tr.output, direct_output(m, x, 4)) < 0.05
        assert tr.levels_required > tr.levels_used  # truncation is reported, not hidden
        assert tr.notes
