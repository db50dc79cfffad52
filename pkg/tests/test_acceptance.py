"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict that is printed in the pytest
terminal summary, then asserts it.
"""

import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from qtmlab.approx import approx_halting_space, approx_spectrum
from qtmlab.coding import blind_prefix_code, code_lengths_from_dims, kraft_holds
from qtmlab.halting import check_spectrum_bound, exact_spectrum, halting_profile, is_eps_t_halting
from qtmlab.selftest import random_kraft_lengths
from qtmlab.sim import build_space, isometry_defect
from qtmlab.subspace import (
    Subspace,
    compose_isometries,
    compress,
    compression_map,
    decompress,
    operator_norm,
    similar_isometry_bound,
    similar_isometry_cap,
    similar_subspace_isometry,
    trace_distance,
)
from qtmlab.universal import decode, direct_output, encode

from conftest import ACCEPTANCE, FIXTURES, HALTING_FIXTURES, unit

N_MAX = 3
T_MAX = 20


def record(k: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def spectra(machines):
    return {(name, n): exact_spectrum(machines[name], n, T_MAX) for name in FIXTURES for n in range(N_MAX + 1)}


def test_criterion_01_isometry(machines, mutated):
    t0 = time.perf_counter()
    worst = max(
        isometry_defect(build_space(m, n, 6), m) for m in machines.values() for n in range(N_MAX + 1)
    )
    bad = isometry_defect(build_space(mutated, 2, 6), mutated)
    dt = time.perf_counter() - t0
    ok = len(machines) >= 4 and worst <= 1e-10 and bad > 1e-10 and dt < 10
    record(1, ok, f"{len(machines)} fixtures, worst defect {worst:.2e}, mutated {bad:.2e}, {dt:.1f}s")


def test_criterion_02_orthogonality(machines):
    t0 = time.perf_counter()
    worst, pairs = 0.0, 0
    for name in FIXTURES:
        for n in range(N_MAX + 1):
            es = exact_spectrum(machines[name], n, T_MAX).entries
            for i in range(len(es)):
                for j in range(i + 1, len(es)):
                    g = es[i][1].basis.conj().T @ es[j][1].basis
                    worst = max(worst, float(np.abs(g).max()))
                    pairs += 1
    dt = time.perf_counter() - t0
    record(2, worst <= 1e-8 and dt < 60, f"{pairs} pairs, max overlap {worst:.2e}, {dt:.1f}s")


def test_criterion_03_closure(machines, spectra, rng):
    spaces = [(name, t, s) for (name, n), sp in spectra.items() if n >= 1 for t, s in sp.entries]
    failures = 0
    for i in range(200):
        name, t, s = spaces[i % len(spaces)]
        psi = s.basis @ unit(rng, s.dim)
        failures += not is_eps_t_halting(machines[name], psi, 1e-8, t, slack=0.0)
    record(3, failures == 0, f"200 superpositions over {len(spaces)} spaces, {failures} failures")


def test_criterion_04_dimension_bound(machines, spectra):
    exact_ok = all(check_spectrum_bound(sp) for sp in spectra.values())
    delta = Fraction(1, 400)
    assert delta < Fraction(1, 80) * Fraction(1, 4)
    approx = {name: approx_spectrum(machines[name], 1, 4, delta).dims for name in FIXTURES}
    approx_ok = all(sum(d) <= 2 for d in approx.values())
    record(4, exact_ok and approx_ok, f"exact spectra ok={exact_ok}, toy n=1 delta=1/400 dims {approx}")


def test_criterion_05_kraft(spectra):
    worst = None
    ok = True
    for (name, n), sp in spectra.items():
        good, slack = kraft_holds(code_lengths_from_dims(n, sp.dims))
        ok &= good
        worst = slack if worst is None else min(worst, slack)
    record(5, ok, f"{len(spectra)} spectra, minimum exact slack {worst}")


def test_criterion_06_blind_coding():
    rng = np.random.default_rng(6)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(1000):
        lengths = random_kraft_lengths(rng)
        code = blind_prefix_code(lengths)
        cut = int(rng.integers(len(lengths) + 1))
        bad += not (
            code.lengths == lengths
            and code.is_prefix_free()
            and blind_prefix_code(lengths[:cut]).words == code.words[:cut]
        )
    dt = time.perf_counter() - t0
    record(6, bad == 0 and dt < 10, f"1000 sequences, {bad} failures, {dt:.1f}s")


def test_criterion_07_compression(spectra, rng):
    worst, count = 0.0, 0
    for sp in spectra.values():
        for _, s in sp.entries:
            cm = compression_map(s)
            for _ in range(100):
                psi = s.basis @ unit(rng, s.dim)
                worst = max(worst, float(np.linalg.norm(decompress(cm, compress(cm, psi)) - psi)))
                count += 1
    record(7, worst <= 1e-9, f"{count} vectors, worst error {worst:.2e}")


def _rotation(rng, d, angle):
    h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = (h + h.conj().T) / 2
    h /= operator_norm(h)
    w, v = np.linalg.eigh(h)
    return v @ np.diag(np.exp(1j * angle * w)) @ v.conj().T


def test_criterion_08_inequalities(machines, rng):
    slack = 1e-10
    gaps = []
    # trace distance of pure states is at most their vector distance
    for _ in range(1000):
        d = int(rng.integers(2, 9))
        a, b = unit(rng, d), unit(rng, d)
        gaps.append(trace_distance(a, b) - float(np.linalg.norm(a - b)))
    norm_gap = max(gaps)
    # control-state stability: overlaps move by at most the trace distance, and
    # for unnormalized vectors by at most the change of squared norm
    stab_gap = -np.inf
    for m in machines.values():
        for n in (1, 2):
            for _ in range(5):
                psi, phi = unit(rng, 1 << n), unit(rng, 1 << n)
                a, b = halting_profile(m, psi, 10), halting_profile(m, phi, 10)
                stab_gap = max(stab_gap, float(np.max(np.abs(a - b))) - trace_distance(psi, phi))
                v = psi * rng.uniform(0.2, 2.0)
                pv = halting_profile(m, v, 10)
                stab_gap = max(stab_gap, float(np.max(np.abs(pv - a))) - abs(1 - np.vdot(v, v).real))
    # telescoping bound for products of near-identity unitaries
    comp_gap = -np.inf
    for _ in range(200):
        d = int(rng.integers(2, 6))
        ops = [_rotation(rng, d, float(rng.uniform(0, 0.05))) for _ in range(int(rng.integers(1, 10)))]
        c = compose_isometries(ops)
        comp_gap = max(comp_gap, c.defect - c.bound)
    # similar subspaces: the constructed isometry stays within the stated bound
    sim_gap = -np.inf
    for _ in range(100):
        k = int(rng.integers(1, 4))
        v = Subspace.span([unit(rng, 6) for _ in range(k)])
        w = Subspace.span(list((_rotation(rng, 6, 1e-4) @ v.basis).T))
        resid = v.basis - w.basis @ (w.basis.conj().T @ v.basis)
        r = float(np.linalg.svd(resid, compute_uv=False).max())
        eps = float(np.sqrt(2 * r * r / (1 + np.sqrt(1 - r * r))))
        if eps > similar_isometry_cap(k):
            continue
        rep = similar_subspace_isometry(v, w, eps)
        sim_gap = max(sim_gap, rep.norm_defect - similar_isometry_bound(eps, k))
    worst = max(norm_gap, stab_gap, comp_gap, sim_gap)
    record(
        8,
        worst <= slack,
        f"gaps: norm {norm_gap:.1e}, stability {stab_gap:.1e}, composition {comp_gap:.1e}, similar {sim_gap:.1e}",
    )


def test_criterion_09_universality(machines, rng):
    t0 = time.perf_counter()
    delta = Fraction(1, 100)
    horizon = 12
    worst, count, bad_len, bad_header = 0.0, 0, 0, 0
    for name in HALTING_FIXTURES:
        m = machines[name]
        headers = set()
        for n in (1, 2, 3):
            es = exact_spectrum(m, n, horizon).entries
            for _ in range(50):
                _, s = es[int(rng.integers(len(es)))]
                psi = s.basis @ unit(rng, s.dim)
                prog = encode(m, psi, horizon)
                out = decode(prog, delta, horizon)
                worst = max(worst, trace_distance(out, direct_output(m, psi, horizon)))
                bad_len += prog.quantum_length != n + 1
                headers.add(prog.header_length)
                count += 1
        bad_header += len(headers) != 1
    dt = time.perf_counter() - t0
    ok = worst < float(delta) and bad_len == 0 and bad_header == 0 and dt < 300
    record(9, ok, f"{count} inputs, worst distance {worst:.2e}, length errors {bad_len}, "
                  f"header changes {bad_header}, {dt:.1f}s")


def test_criterion_10_approx_properties(machines, rng):
    t0 = time.perf_counter()
    n, horizon = 1, 4
    worst = {"halting": 0.0, "approximation": 0.0, "orthogonality": 0.0}
    ok = True
    for delta in (Fraction(1, 5), Fraction(1, 20)):
        dl = float(delta)
        for name in FIXTURES:
            m = machines[name]
            spaces = {t: approx_halting_space(m, n, t, delta)[0] for t in range(1, horizon + 1)}
            exact = exact_spectrum(m, n, horizon)
            for t, u in spaces.items():
                for _ in range(20):
                    if u.dim:
                        psi = u.basis @ unit(rng, u.dim)
                        prof = halting_profile(m, psi, t)
                        eps = max(float(prof[:t].max()), 1 - float(prof[t]))
                        worst["halting"] = max(worst["halting"], eps / (20 * dl))
                    e = exact.space(t)
                    if e.dim:
                        phi = e.basis @ unit(rng, e.dim)
                        worst["approximation"] = max(worst["approximation"], u.dist(phi) / (5.5 * dl))
            for t, u in spaces.items():
                for t2, w in spaces.items():
                    if t < t2 and u.dim and w.dim:
                        ov = float(np.linalg.svd(u.basis.conj().T @ w.basis, compute_uv=False).max())
                        worst["orthogonality"] = max(worst["orthogonality"], ov / (4 * np.sqrt(5 * dl)))
        ok &= all(v <= 1 for v in worst.values())
        loop = [approx_halting_space(machines["loop-forever"], n, t, delta)[0].dim for t in range(1, horizon + 1)]
        ok &= all(d in (0, 2) for d in loop)
    strict = [approx_halting_space(machines["loop-forever"], n, t, Fraction(1, 20))[0].dim for t in range(1, 5)]
    ok &= strict == [0, 0, 0, 0]
    dt = time.perf_counter() - t0
    ok &= dt < 120
    ratios = ", ".join(f"{k} {v:.2f}" for k, v in worst.items())
    record(10, ok, f"worst ratio to bound: {ratios}; never-halting fixture terminates; {dt:.1f}s")


def test_criterion_11_determinism():
    cmd = [sys.executable, "-m", "qtmlab", "selftest", "--seed", "7"]
    a = subprocess.run(cmd, capture_output=True, check=False)
    b = subprocess.run(cmd, capture_output=True, check=False)
    ok = a.returncode == 0 and a.stdout == b.stdout and len(a.stdout) > 0
    record(11, ok, f"two runs, {len(a.stdout)} bytes, identical={a.stdout == b.stdout}, exit {a.returncode}")
