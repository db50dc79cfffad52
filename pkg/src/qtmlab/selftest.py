"""Seeded invariant suites behind ``qtmlab selftest``.

Every suite draws its randomness from one ``numpy.random.Generator``
derived from the seed and the suite name, so a run depends only on the
seed.  Reported numbers are formatted to a fixed precision and no timing
information is included, which keeps reports byte-identical across runs.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bundled import fixture_names, load_fixture
from .coding import blind_prefix_code, code_lengths_from_dims, kraft_holds
from .halting import check_spectrum_bound, exact_spectrum, is_eps_t_halting
from .machine import BLANK, Amplitude, Branch, Machine, Symbol, validate_machine
from .qubits import QubitString, total_dim
from .sim import build_space, isometry_defect
from .subspace import compress, compression_map, decompress, trace_distance
from .universal import decode, direct_output, embed_variable_length, encode, restrict_fixed_length

N_MAX = 2
T_MAX = 10


@dataclass
class SuiteResult:
    name: str
    passed: bool = True
    checks: int = 0
    worst: float = 0.0
    failures: list[str] = field(default_factory=list)

    def check(self, ok: bool, what: str = "", value: float = 0.0) -> None:
        self.checks += 1
        self.worst = max(self.worst, float(value))
        if not ok:
            self.passed = False
            if len(self.failures) < 5:
                self.failures.append(what)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checks": self.checks,
            "worst": f"{self.worst:.3e}",
            "failures": self.failures,
        }


def mutated_machine(m: Machine) -> Machine:
    """Copy of ``m`` whose start-state row on (0, blank) has its first amplitude set to 1/2.

    That row is read on the first step of every input starting with 0, so
    both the local conditions and the global isometry check fail.
    """
    delta = dict(m.delta)
    key = (m.start, Symbol("0", BLANK))
    first, *rest = delta[key]
    delta[key] = (Branch(Amplitude(Fraction(1, 2)), first.state, first.symbol, first.move), *rest)
    return Machine(f"mutated-{m.name}", m.states, m.start, m.final, delta)


def random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_kraft_lengths(rng: np.random.Generator, max_len: int = 12, max_count: int = 64) -> list[int]:
    """A random length sequence whose sum of 2^-l stays at most 1."""
    count = int(rng.integers(1, max_count + 1))
    out: list[int] = []
    slack = Fraction(1)
    for _ in range(count):
        ell = int(rng.integers(1, max_len + 1))
        while ell <= max_len and Fraction(1, 1 << ell) > slack:
            ell += 1
        if ell > max_len:
            break
        out.append(ell)
        slack -= Fraction(1, 1 << ell)
    return out


def random_halting_input(rng: np.random.Generator, spec) -> tuple[int, np.ndarray]:
    """(halting time, random unit vector) from a random nonempty halting space."""
    t, space = spec.entries[int(rng.integers(len(spec.entries)))]
    return t, space.basis @ random_unit(rng, space.dim)


def _rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(name.encode())])


def _spectra(machines):
    return {(m.name, n): exact_spectrum(m, n, T_MAX) for m in machines for n in range(N_MAX + 1)}


def suite_machine_isometry(machines, spectra, rng) -> SuiteResult:
    r = SuiteResult("machine-isometry")
    for m in machines:
        rep = validate_machine(m)
        r.check(rep.ok, f"{m.name}: {'; '.join(rep.violations[:2])}")
        for n in range(N_MAX + 1):
            d = isometry_defect(build_space(m, n, 6), m)
            r.check(d <= 1e-10, f"{m.name} n={n}: defect {d:.3g}", d)
    return r


def suite_orthogonality(machines, spectra, rng) -> SuiteResult:
    r = SuiteResult("halting-orthogonality")
    for (name, n), spec in spectra.items():
        es = spec.entries
        for i in range(len(es)):
            for j in range(i + 1, len(es)):
                ov = es[i][1].max_overlap(es[j][1])
                r.check(ov <= 1e-8, f"{name} n={n} t={es[i][0]},{es[j][0]}", ov)
    return r


def suite_closure(machines, spectra, rng) -> SuiteResult:
    r = SuiteResult("halting-closure")
    by_name = {m.name: m for m in machines}
    for (name, n), spec in spectra.items():
        for t, space in spec.entries:
            for _ in range(5):
                psi = space.basis @ random_unit(rng, space.dim)
                r.check(is_eps_t_halting(by_name[name], psi, 1e-8, t), f"{name} n={n} t={t}")
    return r


def suite_dimension_bound(machines, spectra, rng) -> SuiteResult:
    r = SuiteResult("dimension-bound")
    for (name, n), spec in spectra.items():
        r.check(check_spectrum_bound(spec), f"{name} n={n}: dims {spec.dims}")
    return r


def suite_kraft_chain(machines, spectra, rng) -> SuiteResult:
    r = SuiteResult("kraft-chain")
    for (name, n), spec in spectra.items():
        ok, slack = kraft_holds(code_lengths_from_dims(n, spec.dims))
        r.check(ok, f"{name} n={n}: slack {slack}")
    return r


def suite_blind_coding(machines, spectra, rng) -> SuiteResult:
    r = SuiteResult("blind-coding")
    for _ in range(200):
        lengths = random_kraft_lengths(rng)
        code = blind_prefix_code(lengths)
        r.check(code.lengths == lengths and code.is_prefix_free(), f"lengths {lengths}")
        cut = int(rng.integers(len(lengths) + 1))
        r.check(blind_prefix_code(lengths[:cut]).words == code.words[:cut], f"online {lengths}")
    return r


def suite_compression(machines, spectra, rng) -> SuiteResult:
    r = SuiteResult("compression")
    for (name, n), spec in spectra.items():
        for t, space in spec.entries:
            cm = compression_map(space)
            for _ in range(5):
                psi = space.basis @ random_unit(rng, space.dim)
                err = float(np.linalg.norm(decompress(cm, compress(cm, psi)) - psi))
                r.check(err <= 1e-9, f"{name} n={n} t={t}", err)
    return r


def suite_norm_inequalities(machines, spectra, rng) -> SuiteResult:
    r = SuiteResult("norm-inequalities")
    for _ in range(200):
        d = int(rng.integers(2, 9))
        a, b = random_unit(rng, d), random_unit(rng, d)
        gap = trace_distance(a, b) - float(np.linalg.norm(a - b))
        r.check(gap <= 1e-12, "trace distance exceeds vector distance", max(gap, 0.0))
    return r


def suite_embedding(machines, spectra, rng) -> SuiteResult:
    r = SuiteResult("fixed-length-embedding")
    for n in range(4):
        for _ in range(10):
            s = QubitString.from_vector(random_unit(rng, total_dim(n)), n)
            e = embed_variable_length(s, n)
            back = restrict_fixed_length(e, n)
            err = float(np.max(np.abs(back.rho - s.rho)))
            r.check(e.is_fixed_length(n + 1) and err <= 1e-12, f"n={n}", err)
    return r


def suite_roundtrip(machines, spectra, rng) -> SuiteResult:
    r = SuiteResult("universal-roundtrip")
    for m in machines:
        headers = set()
        for n in (1, 2):
            spec = spectra[(m.name, n)]
            if not spec.entries:
                continue
            for _ in range(3):
                _, psi = random_halting_input(rng, spec)
                prog = encode(m, psi, T_MAX)
                dist = trace_distance(decode(prog, Fraction(1, 100), T_MAX), direct_output(m, psi, T_MAX))
                headers.add(prog.header_length)
                r.check(prog.quantum_length == n + 1, f"{m.name} n={n}: length {prog.quantum_length}")
                r.check(dist < 0.01, f"{m.name} n={n}: distance {dist:.3g}", dist)
        r.check(len(headers) <= 1, f"{m.name}: header lengths {sorted(headers)}")
    return r


SUITES = (
    suite_machine_isometry,
    suite_orthogonality,
    suite_closure,
    suite_dimension_bound,
    suite_kraft_chain,
    suite_blind_coding,
    suite_compression,
    suite_norm_inequalities,
    suite_embedding,
    suite_roundtrip,
)


def run_selftest(seed: int = 0, force_failure: bool = False) -> dict:
    """Run every suite; with ``force_failure`` a mutated fixture joins the machines."""
    machines = [load_fixture(name) for name in fixture_names()]
    well_formed = list(machines)
    if force_failure:
        machines.append(mutated_machine(load_fixture("move-halt")))
    spectra = _spectra(well_formed)
    results = []
    for suite in SUITES:
        name = suite.__name__.removeprefix("suite_")
        ms = machines if suite is suite_machine_isometry else well_formed
        results.append(suite(ms, spectra, _rng(seed, name)).as_dict())
    failed = [s["name"] for s in results if not s["passed"]]
    return {"seed": seed, "passed": not failed, "failed": failed, "suites": results}


def render(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
