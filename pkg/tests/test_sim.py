import numpy as np
import pytest

from qtmlab.qubits import QubitString, string_index
from qtmlab.sim import (
    HorizonError,
    NotHalting,
    SizeGuardError,
    apply_machine,
    build_space,
    evolve,
    halting_overlap,
    initial_state,
    isometry_defect,
    read_output,
    step_operator,
)

from conftest import FIXTURES, unit


@pytest.mark.parametrize("name", FIXTURES)
@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_step_is_isometry(machines, name, n):
    assert isometry_defect(build_space(machines[name], n, 6)) <= 1e-10


def test_mutated_machine_is_not_isometric(mutated):
    assert isometry_defect(build_space(mutated, 1, 3)) > 0.1


def test_window_and_initial_configs(machines):
    # with n = 0 the head still reaches cell t_max on the right
    sp = build_space(machines["move-halt"], 0, 1)
    assert sp.window == (-1, 1)
    sp = build_space(machines["move-halt"], 2, 3)
    assert sp.window == (-3, 4)
    for s in ("00", "01", "10", "11"):
        assert sp.initial_index(s) == sp.config_index("q0", s, "", 0)


def test_size_guard(machines, monkeypatch):
    monkeypatch.setenv("QTMLAB_DIM_CAP", "3")
    with pytest.raises(SizeGuardError):
        build_space(machines["copy-halt"], 3, 9)


def test_move_halt_is_signed_permutation(machines):
    s = step_operator(build_space(machines["move-halt"], 2, 3)).toarray()
    nz = s[np.abs(s) > 0]
    assert np.allclose(np.abs(nz), 1)
    assert np.all(np.count_nonzero(s, axis=0) <= 1)


def test_hadamard_column_has_two_entries(machines):
    sp = build_space(machines["hadamard-halt"], 1, 2)
    col = step_operator(sp)[:, sp.initial_index("0")].toarray().ravel()
    nz = col[np.abs(col) > 1e-12]
    assert len(nz) == 2
    assert np.allclose(np.abs(nz), 2**-0.5)


@pytest.mark.parametrize("name", FIXTURES)
def test_norm_preserved(machines, rng, name):
    sp = build_space(machines[name], 2, 5)
    st = initial_state(sp, unit(rng, 4))
    for _ in range(5):
        st = evolve(st)
        assert np.linalg.norm(st.vector) == pytest.approx(1.0, abs=1e-10)


def test_semigroup(machines, rng):
    sp = build_space(machines["hadamard-to-output"], 2, 6)
    st = initial_state(sp, unit(rng, 4))
    a = evolve(evolve(st, t=2), t=3)
    b = evolve(st, t=5)
    assert np.allclose(a.vector, b.vector, atol=1e-9)
    assert np.array_equal(evolve(st, t=0).vector, st.vector)


def test_horizon_error(machines):
    st = initial_state(build_space(machines["move-halt"], 1, 2), np.array([1, 0]))
    with pytest.raises(HorizonError):
        evolve(st, t=3)


def test_halting_overlap_examples(machines):
    mh = machines["move-halt"]
    st = initial_state(build_space(mh, 2, 3), QubitString.basis("01"))
    assert halting_overlap(st) == 0
    assert halting_overlap(evolve(st)) == pytest.approx(1.0)
    d = machines["delay-by-first-bit"]
    st = initial_state(build_space(d, 2, 4), QubitString.basis("10"))
    assert halting_overlap(evolve(st, t=2)) == pytest.approx(0.0)
    assert halting_overlap(evolve(st, t=3)) == pytest.approx(1.0)


def test_padded_input_superposition(machines):
    sp = build_space(machines["move-halt"], 2, 2)
    q = QubitString.from_amplitudes({"0": 2**-0.5, "11": 2**-0.5}, 2)
    v = initial_state(sp, q).vector
    assert abs(v[sp.config_index("q0", "0", "", 0)]) ** 2 == pytest.approx(0.5)
    assert abs(v[sp.config_index("q0", "11", "", 0)]) ** 2 == pytest.approx(0.5)


def test_mixed_input_is_an_ensemble(machines):
    sp = build_space(machines["move-halt"], 2, 2)
    rho = np.zeros((7, 7), dtype=complex)
    rho[string_index("00"), string_index("00")] = 0.5
    rho[string_index("11"), string_index("11")] = 0.5
    st = initial_state(sp, QubitString(2, rho))
    assert not st.is_pure
    assert st.trace == pytest.approx(1.0)
    d = st.density()
    assert np.count_nonzero(np.abs(d) > 1e-12) == 2


@pytest.mark.parametrize("bits", ["", "0", "01", "110"])
def test_copy_and_move_write_input_to_output(machines, bits):
    for name in ("copy-halt", "move-to-output"):
        t, out = apply_machine(machines[name], QubitString.basis(bits), 10, n=len(bits))
        assert t == len(bits) + 3
        assert np.allclose(out.rho, QubitString.basis(bits, out.max_len).rho)


def test_hadamard_to_output_reads_plus(machines):
    t, out = apply_machine(machines["hadamard-to-output"], QubitString.basis("0"), 5)
    assert t == 2
    plus = QubitString.from_amplitudes({"0": 2**-0.5, "1": 2**-0.5})
    assert np.allclose(out.rho, plus.rho, atol=1e-12)


def test_reading_superposition_keeps_coherence(machines):
    # move-to-output blanks the input track, so both branches share one residue
    q = QubitString.from_amplitudes({"00": 2**-0.5, "11": 2**-0.5})
    _, out = apply_machine(machines["move-to-output"], q, 10)
    assert out.pure_vector() is not None
    assert out.rho[string_index("00"), string_index("11")] == pytest.approx(0.5)


def test_reading_drops_coherence_across_residues(machines):
    # copy-halt leaves the input on the input track, which the reading traces out
    q = QubitString.from_amplitudes({"00": 2**-0.5, "11": 2**-0.5})
    _, out = apply_machine(machines["copy-halt"], q, 10)
    assert out.pure_vector() is None
    assert out.rho[string_index("00"), string_index("11")] == pytest.approx(0.0)
    assert out.rho[string_index("00"), string_index("00")] == pytest.approx(0.5)


def test_untouched_output_track_reads_empty(machines):
    sp = build_space(machines["hadamard-halt"], 1, 1)
    out = read_output(evolve(initial_state(sp, np.array([1, 0])), t=1))
    assert out.rho[0, 0] == pytest.approx(1.0)


@pytest.mark.parametrize("name", FIXTURES)
def test_read_output_is_trace_preserving(machines, rng, name):
    sp = build_space(machines[name], 2, 4)
    st = evolve(initial_state(sp, unit(rng, 4)), t=4)
    out = read_output(st)
    assert out.trace == pytest.approx(1.0, abs=1e-10)
    assert np.min(np.linalg.eigvalsh(out.rho)) >= -1e-10


def test_apply_machine_rejects_non_halting(machines):
    with pytest.raises(NotHalting):
        apply_machine(machines["loop-forever"], QubitString.basis("0"), 6)
    # a superposition of different halting times is neither 0 nor 1 at t=2
    q = QubitString.from_amplitudes({"00": 2**-0.5, "10": 2**-0.5})
    with pytest.raises(NotHalting):
        apply_machine(machines["delay-by-first-bit"], q, 6)


@pytest.mark.parametrize("name", FIXTURES)
def test_control_state_stability(machines, rng, name):
    from qtmlab.halting import halting_profile
    from qtmlab.subspace import trace_distance

    m = machines[name]
    for n in (1, 2):
        for _ in range(10):
            psi, phi = unit(rng, 1 << n), unit(rng, 1 << n)
            a, b = halting_profile(m, psi, 10), halting_profile(m, phi, 10)
            assert np.all(np.abs(a - b) <= trace_distance(psi, phi) + 1e-10)
            v = psi * rng.uniform(0.2, 2.0)
            pv, p0 = halting_profile(m, v, 10), halting_profile(m, psi, 10)
            assert np.all(np.abs(pv - p0) <= abs(1 - np.vdot(v, v).real) + 1e-10)
