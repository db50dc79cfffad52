"""Encoder and decoder of the strongly universal construction.

An input psi of length n for machine M is turned into a program made of a
self-delimiting machine description, the classical code word of psi's
halting number and the standard compression of psi inside the reference
halting space of its halting time.  The code word and the compressed
payload together occupy exactly n + 1 qubits.  The decoder recomputes the
reference spaces for t = 1, 2, ..., builds the blind prefix code online,
stops at the first word that matches, decompresses, optionally applies the
fine-tuning isometry and simulates M for the recovered number of steps.

Two reference families are supported:

* ``exact``: the exact halting spaces.  This is the default.
* ``approx``: the approximate halting spaces at accuracy
  eps_0 = 2^(-2n) / 81 together with a truncated fine-tuning chain.  Only
  available for n <= 1, where the covering algorithm is feasible.

Container layout (bits, most significant first, zero-padded to whole
bytes)::

    gamma(L) | L bytes of the serialized machine       <- machine tag
    gamma(c + 1) | c code word bits
    gamma(p + 1) | p bytes of UTF-8 payload JSON

``gamma`` is the Elias gamma code of a positive integer.  The payload
JSON holds n, the mode, the number of fine-tuning levels, the qubit
count and either ``amplitudes`` (pure payload) or ``matrix`` (mixed
payload) as [re, im] pairs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .approx import COVER_CAP, Covering, ToyModeError, _toy_gate, approx_halting_space, as_fraction
from .coding import PrefixCode, blind_prefix_code, ceil_log2, code_lengths_from_dims
from .halting import _spectrum_pass, halting_profile
from .machine import Machine, parse_machine, serialize_machine
from .qubits import QubitString, total_dim
from .sim import NotHalting, build_space, evolve, initial_state, read_output, apply_machine
from .subspace import (
    Composition,
    IsometryReport,
    Subspace,
    _complete_basis,
    compose_isometries,
    compress,
    compression_map,
    decompress,
    similar_isometry_cap,
    similar_subspace_isometry,
    trace_distance,
)

HALT_TOL = 1e-8
FINE_TUNER_K_CAP = 6
MODES = ("exact", "approx")


class EncodeError(ValueError):
    pass


class HeterogeneousHalting(EncodeError):
    """Convex components of a mixed input halt at different times."""


class DecodeError(ValueError):
    pass


# ----------------------------------------------------------------------------
# self-delimiting machine description


def gamma_encode(k: int) -> str:
    """Elias gamma code of k >= 1."""
    if k < 1:
        raise ValueError("gamma code is defined for positive integers")
    b = format(k, "b")
    return "0" * (len(b) - 1) + b


def gamma_decode(bits: str, pos: int = 0) -> tuple[int, int]:
    """Read one gamma-coded integer starting at ``pos``; return (value, new pos)."""
    zeros = 0
    while pos + zeros < len(bits) and bits[pos + zeros] == "0":
        zeros += 1
    end = pos + 2 * zeros + 1
    if end > len(bits):
        raise DecodeError("truncated gamma code")
    return int(bits[pos + zeros : end], 2), end


def _bytes_to_bits(data: bytes) -> str:
    return "".join(format(b, "08b") for b in data)


def _bits_to_bytes(bits: str) -> bytes:
    if len(bits) % 8:
        raise DecodeError("bit field is not a whole number of bytes")
    return bytes(int(bits[i : i + 8], 2) for i in range(0, len(bits), 8))


def machine_tag(m: Machine) -> str:
    """Length-prefixed serialized machine; depends on nothing but ``m``."""
    doc = serialize_machine(m).encode("utf-8")
    return gamma_encode(len(doc)) + _bytes_to_bits(doc)


def read_machine_tag(bits: str, pos: int = 0) -> tuple[Machine, int]:
    size, pos = gamma_decode(bits, pos)
    end = pos + 8 * size
    if end > len(bits):
        raise DecodeError("truncated machine description")
    return parse_machine(_bits_to_bytes(bits[pos:end]).decode("utf-8")), end


# ----------------------------------------------------------------------------
# fixed-length reduction


def _embedding_matrix(n: int) -> np.ndarray:
    """V_n: i-th basis vector of H_{<=n} to the i-th basis vector of H_{n+1}."""
    return np.eye(1 << (n + 1), total_dim(n), dtype=complex)


def embed_variable_length(psi: QubitString, n: int) -> QubitString:
    """Isometric image of a string with base length <= n in H_{n+1}."""
    if psi.base_length > n:
        raise ValueError(f"base length {psi.base_length} exceeds n={n}")
    rho = psi.resize(n).rho
    v = _embedding_matrix(n)
    return QubitString.from_fixed_density(v @ rho @ v.conj().T, n + 1)


def restrict_fixed_length(phi: QubitString, n: int, tol: float = 1e-10) -> QubitString:
    """Inverse of ``embed_variable_length`` on its range."""
    if not phi.is_fixed_length(n + 1, tol):
        raise ValueError(f"expected a fixed-length string of length {n + 1}")
    block = phi.block(n + 1)
    if abs(block[-1, -1]) > tol:
        raise ValueError("state has weight outside the range of the embedding")
    v = _embedding_matrix(n)
    return QubitString(n, v.conj().T @ block @ v)


# ----------------------------------------------------------------------------
# inputs and halting times


def input_components(psi) -> tuple[int, list[tuple[float, np.ndarray]]]:
    """Length n and an ensemble of unit vectors of H_n for a fixed-length input.

    Accepts a ``QubitString`` supported on a single length, a state vector
    of length 2^n or a density matrix on H_n.
    """
    if isinstance(psi, QubitString):
        n = psi.base_length
        if not psi.is_fixed_length(n):
            raise EncodeError("input is not a fixed-length qubit string; embed it first")
        pure = psi.pure_vector()
        if pure is not None:
            vec = pure[(1 << n) - 1 : (1 << (n + 1)) - 1]
            return n, [(1.0, vec / np.linalg.norm(vec))]
        rho = psi.block(n)
    else:
        arr = np.asarray(psi, dtype=complex)
        n = (arr.shape[0] - 1).bit_length()
        if arr.shape[0] != 1 << n:
            raise EncodeError("input dimension is not a power of two")
        if arr.ndim == 1:
            return n, [(1.0, arr / np.linalg.norm(arr))]
        rho = arr
    w, v = np.linalg.eigh(rho / np.real(np.trace(rho)))
    comps = [(float(w[i]), v[:, i]) for i in range(len(w) - 1, -1, -1) if w[i] > 1e-12]
    return n, comps


def halting_time(m: Machine, vec: np.ndarray, horizon: int, tol: float = HALT_TOL) -> int:
    """First t <= horizon at which ``vec`` halts, by simulated overlaps."""
    prof = halting_profile(m, vec, horizon)
    for t in range(1, horizon + 1):
        if prof[t] >= 1 - tol:
            return t
        if prof[t] > tol:
            raise NotHalting(f"halting overlap {prof[t]:.3g} at t={t} is neither 0 nor 1")
    raise NotHalting(f"input does not halt within horizon {horizon}")


# ----------------------------------------------------------------------------
# reference spaces


def epsilon_zero(n: int) -> Fraction:
    return Fraction(1, 81 * 4**n)


@lru_cache(maxsize=256)
def _approx_level(m: Machine, n: int, t: int, delta: Fraction, cover_cap: int):
    try:
        cover = Covering(n, float(delta), cap=cover_cap)
    except RuntimeError as exc:
        raise ToyModeError(str(exc)) from exc
    return approx_halting_space(m, n, t, delta, cover)


def reference_spaces(m: Machine, n: int, horizon: int, mode: str = "exact"):
    """Yield (t, reference space) for t = 1..horizon in increasing order."""
    if mode == "exact":
        for t, basis in _spectrum_pass(m, n, horizon):
            yield t, Subspace(1 << n, basis)
    elif mode == "approx":
        _toy_gate(n)
        for t in range(1, horizon + 1):
            yield t, _approx_level(m, n, t, epsilon_zero(n), COVER_CAP)[0]
    else:
        raise ValueError(f"unknown mode {mode!r}")


# ----------------------------------------------------------------------------
# fine tuning


@dataclass(frozen=True)
class FineTuner:
    """Truncated chain of isometries between successive approximate spaces.

    ``spaces[k]`` is the approximate halting space at accuracy
    ``epsilons[k]``; ``levels[k-1]`` carries the adjoint of the restricted
    isometry from level k to level k-1, so that ``composed.product`` maps the
    restricted reference space ``domain`` towards the exact halting space.
    """

    n: int
    t: int
    epsilons: tuple[Fraction, ...]
    spaces: tuple[Subspace, ...]
    truncation_K: int
    levels: tuple[IsometryReport, ...]
    composed: Composition
    domain: Subspace
    const_n: float
    tail_bound: float
    nominal_bounds: tuple[float, ...] = ()
    degenerate: bool = False

    @property
    def forward(self) -> np.ndarray:
        """The fine-tuning map U on the ambient space (supported on ``domain``)."""
        return self.composed.product @ self.domain.projector()

    @property
    def inverse(self) -> np.ndarray:
        """U^-1 on the range of U (zero on its orthogonal complement)."""
        return self.forward.conj().T

    def unitary(self) -> np.ndarray:
        """A unitary on H_n that agrees with U on ``domain``."""
        dim = 1 << self.n
        if self.domain.dim == 0:
            return np.eye(dim, dtype=complex)
        src = _complete_basis(self.domain.basis)
        img = _complete_basis(self.forward @ self.domain.basis)
        return img @ src.conj().T

    def schedule_holds(self) -> bool:
        """eps_k <= (18/80)^k eps_0 for every computed level."""
        e0 = self.epsilons[0]
        return all(e <= Fraction(18, 80) ** k * e0 for k, e in enumerate(self.epsilons))


def fine_tuner_constant(n: int) -> float:
    """const_n with ||U_k - 1|| <= const_n (18/80)^(k/2) along the schedule."""
    e0 = float(epsilon_zero(n))
    return (8 / 3) * math.sqrt(5.5 * e0) * 2.5 ** (1 << n) * math.sqrt(80 / 18)


def tail_bound(n: int, K: int) -> float:
    """sum_{k > K} const_n (18/80)^(k/2)."""
    q = math.sqrt(18 / 80)
    return fine_tuner_constant(n) * q ** (K + 1) / (1 - q)


def required_levels(n: int, delta) -> int:
    """Smallest N whose truncation tail is below half the decoder's target.

    The target accuracy is (delta/3) / (2 (10 sqrt(2^n))^(2^n)).
    """
    d = float(as_fraction(delta))
    target = (d / 3) / (2 * (10 * math.sqrt(1 << n)) ** (1 << n))
    k = 0
    while tail_bound(n, k) >= target / 2:
        k += 1
    return k


def _restrict(report: IsometryReport, sub: Subspace) -> np.ndarray:
    return report.matrix @ sub.projector()


def build_fine_tuner(
    m: Machine, n: int, t: int, K: int, cover_cap: int = COVER_CAP
) -> FineTuner:
    """Epsilon schedule, per-level isometries and their composition.

    eps_0 = 2^(-2n) / 81 and eps_k = eps_M(n, eps_{k-1}, t) / 80.  Level k
    is matched to level k-1 by ``similar_subspace_isometry`` with the
    measured matching distance as its eps parameter.
    """
    _toy_gate(n)
    if not 0 <= K <= FINE_TUNER_K_CAP:
        raise ValueError(f"K must lie in [0, {FINE_TUNER_K_CAP}]")
    dim = 1 << n
    eps = [epsilon_zero(n)]
    spaces = []
    for k in range(K + 1):
        space, meta = _approx_level(m, n, t, eps[k], cover_cap)
        spaces.append(space)
        if k < K:
            eps.append(meta.epsilon / 80)

    raw: list[IsometryReport] = []
    nominal = []
    for k in range(1, K + 1):
        v, w = spaces[k], spaces[k - 1]
        nominal.append((8 / 3) * math.sqrt(5.5 * float(eps[k - 1])) * 2.5 ** dim)
        if v.dim > w.dim:
            raise ValueError(f"level {k} has larger dimension than level {k - 1}")
        match = max((w.dist(b) for b in v.basis.T), default=0.0)
        if v.dim and match > similar_isometry_cap(v.dim):
            raise ValueError(
                f"level {k}: matching distance {match:.3g} exceeds the cap "
                f"{similar_isometry_cap(v.dim):.3g}"
            )
        raw.append(similar_subspace_isometry(v, w, max(match, 1e-15)))

    # restricted chain: tilde H_K = H_K, tilde H_{k-1} = U_k tilde H_k
    tilde = [None] * (K + 1)
    tilde[K] = spaces[K]
    for k in range(K, 0, -1):
        tilde[k - 1] = Subspace.span(list((raw[k - 1].matrix @ tilde[k].basis).T), dim)
    adjoints = []
    for k in range(1, K + 1):
        u_tilde = _restrict(raw[k - 1], tilde[k])
        adj = u_tilde.conj().T
        defect = (
            float(np.linalg.norm((adj - np.eye(dim)) @ tilde[k - 1].basis, 2))
            if tilde[k - 1].dim
            else 0.0
        )
        adjoints.append(IsometryReport(adj, defect, raw[k - 1].bound, raw[k - 1].matching))
    composed = compose_isometries(adjoints, dim=dim, domain=tilde[0])
    return FineTuner(
        n=n,
        t=t,
        epsilons=tuple(eps),
        spaces=tuple(spaces),
        truncation_K=K,
        levels=tuple(adjoints),
        composed=composed,
        domain=tilde[0],
        const_n=fine_tuner_constant(n),
        tail_bound=tail_bound(n, K),
        nominal_bounds=tuple(nominal),
        degenerate=spaces[0].dim == 0,
    )


# ----------------------------------------------------------------------------
# program container


@dataclass(frozen=True)
class EncodedProgram:
    machine_tag: str
    code_word: str
    payload: np.ndarray  # vector of length 2^k, or a 2^k x 2^k density matrix
    n: int
    mode: str = "exact"
    levels: int = 0

    @property
    def payload_qubits(self) -> int:
        return (self.payload.shape[0] - 1).bit_length()

    @property
    def quantum_length(self) -> int:
        """Length of code word plus payload; n + 1 for a well-formed program."""
        return len(self.code_word) + self.payload_qubits

    @property
    def header_length(self) -> int:
        return len(self.machine_tag)

    @property
    def total_length(self) -> int:
        return self.header_length + self.quantum_length

    def payload_density(self) -> np.ndarray:
        p = self.payload
        return np.outer(p, p.conj()) if p.ndim == 1 else p

    def _payload_json(self) -> str:
        doc = {"n": self.n, "mode": self.mode, "levels": self.levels, "qubits": self.payload_qubits}
        if self.payload.ndim == 1:
            doc["amplitudes"] = [[float(a.real), float(a.imag)] for a in self.payload]
        else:
            doc["matrix"] = [[[float(x.real), float(x.imag)] for x in row] for row in self.payload]
        return json.dumps(doc, sort_keys=True)

    def to_bits(self) -> str:
        code = gamma_encode(len(self.code_word) + 1) + self.code_word
        pj = self._payload_json().encode("utf-8")
        bits = self.machine_tag + code + gamma_encode(len(pj) + 1) + _bytes_to_bits(pj)
        return bits + "0" * (-len(bits) % 8)

    def to_bytes(self) -> bytes:
        return _bits_to_bytes(self.to_bits())

    @classmethod
    def from_bytes(cls, data: bytes) -> EncodedProgram:
        bits = _bytes_to_bits(data)
        _, pos = read_machine_tag(bits)
        tag = bits[:pos]
        c, pos = gamma_decode(bits, pos)
        code = bits[pos : pos + c - 1]
        pos += c - 1
        p, pos = gamma_decode(bits, pos)
        doc = json.loads(_bits_to_bytes(bits[pos : pos + 8 * (p - 1)]).decode("utf-8"))
        if "amplitudes" in doc:
            payload = np.array([complex(re, im) for re, im in doc["amplitudes"]])
        else:
            payload = np.array([[complex(re, im) for re, im in row] for row in doc["matrix"]])
        return cls(tag, code, payload, int(doc["n"]), doc["mode"], int(doc["levels"]))

    def describe(self) -> dict:
        return {
            "n": self.n,
            "mode": self.mode,
            "levels": self.levels,
            "code_word": self.code_word,
            "payload_qubits": self.payload_qubits,
            "quantum_length": self.quantum_length,
            "header_length": self.header_length,
            "total_length": self.total_length,
        }


# ----------------------------------------------------------------------------
# encoder


def encode(
    m: Machine,
    psi,
    horizon: int,
    mode: str = "exact",
    levels: int = 0,
    cover_cap: int = COVER_CAP,
) -> EncodedProgram:
    """Classical code word of psi's halting number plus its standard compression."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    n, comps = input_components(psi)
    times = {halting_time(m, v, horizon) for _, v in comps}
    if len(times) > 1:
        raise HeterogeneousHalting(f"components halt at different times {sorted(times)}")
    tau = times.pop()

    # the code word of halting number i depends only on the first i lengths
    dims, ref = [], None
    for t, space in reference_spaces(m, n, tau, mode):
        if space.dim:
            dims.append(space.dim)
        if t == tau:
            ref = space
    if ref is None or ref.dim == 0:
        raise EncodeError(f"reference space at the halting time {tau} is empty")
    code = blind_prefix_code(code_lengths_from_dims(n, dims))
    word = code.words[-1]

    pre = np.eye(1 << n, dtype=complex)
    if mode == "approx":
        tuner = build_fine_tuner(m, n, tau, levels, cover_cap)
        if tuner.domain.dim == 0:
            raise EncodeError("fine-tuning chain is degenerate at the halting time")
        pre = tuner.inverse
    cm = compression_map(ref)
    packed = []
    for w, v in comps:
        x = ref.project(pre @ v)
        norm = np.linalg.norm(x)
        if norm < 0.5:
            raise EncodeError("input is far from the reference space")
        packed.append((w, compress(cm, x / norm)))
    if len(packed) == 1:
        payload = packed[0][1]
    else:
        payload = sum(w * np.outer(c, c.conj()) for w, c in packed)
    return EncodedProgram(machine_tag(m), word, payload, n, mode, levels if mode == "approx" else 0)


# ----------------------------------------------------------------------------
# decoder


@dataclass
class DecodeTrace:
    output: QubitString
    tau: int
    halting_number: int
    code: PrefixCode
    levels_used: int = 0
    levels_required: int = 0
    fine_tune_bound: float = 0.0
    notes: list[str] = field(default_factory=list)


def _decompression_matrix(cm, qubits: int) -> np.ndarray:
    if qubits != cm.target_len:
        raise DecodeError(
            f"payload has {qubits} qubits but the reference space needs {cm.target_len}"
        )
    return np.column_stack([decompress(cm, e) for e in np.eye(1 << qubits, dtype=complex)])


def decode_with_trace(prog: EncodedProgram, delta, horizon: int) -> DecodeTrace:
    """Run the decoder and keep the intermediate data."""
    d = as_fraction(delta)
    if not 0 < d < 1:
        raise ValueError("delta must lie in (0, 1)")
    m, _ = read_machine_tag(prog.machine_tag)
    n = prog.n
    if prog.quantum_length != n + 1:
        raise DecodeError(f"quantum part has length {prog.quantum_length}, expected {n + 1}")

    lengths: list[int] = []
    code = PrefixCode(())
    match = None
    for t, space in reference_spaces(m, n, horizon, prog.mode):
        if space.dim == 0:
            continue
        lengths.append(n + 1 - ceil_log2(space.dim))
        code = blind_prefix_code(lengths)
        w = code.words[-1]
        # only the classical prefix is compared; payload qubits are never read
        if len(w) <= len(prog.code_word) and prog.code_word.startswith(w):
            match = (t, space, w)
            break
    if match is None:
        raise DecodeError(f"no code word matches within horizon {horizon}")
    tau, ref, w = match

    # classical bits beyond the matched word belong to the quantum remainder
    rest = prog.code_word[len(w):]
    rho = prog.payload_density()
    if rest:
        e = np.zeros((1 << len(rest), 1 << len(rest)))
        e[int(rest, 2), int(rest, 2)] = 1
        rho = np.kron(e, rho)
    cm = compression_map(ref)
    dmat = _decompression_matrix(cm, (rho.shape[0] - 1).bit_length())
    rho = dmat @ rho @ dmat.conj().T

    trace = DecodeTrace(QubitString(0, np.zeros((1, 1))), tau, len(lengths), code)
    if prog.mode == "approx":
        tuner = build_fine_tuner(m, n, tau, prog.levels)
        u = tuner.unitary()
        rho = u @ rho @ u.conj().T
        trace.levels_used = prog.levels
        trace.levels_required = required_levels(n, d)
        trace.fine_tune_bound = tuner.tail_bound
        if trace.levels_required > prog.levels:
            trace.notes.append(
                f"fine tuning truncated at K={prog.levels}; "
                f"the certified tail needs K={trace.levels_required}"
            )

    space = build_space(m, n, horizon)
    state = evolve(initial_state(space, QubitString.from_fixed_density(rho, n)), t=tau)
    trace.output = read_output(state)
    return trace


def decode(prog: EncodedProgram, delta, horizon: int) -> QubitString:
    """Output of the universal decoder on ``prog`` at accuracy ``delta``."""
    return decode_with_trace(prog, delta, horizon).output


# ----------------------------------------------------------------------------
# complexity upper bounds


@dataclass(frozen=True)
class ComplexityBound:
    machine: str
    length: int
    header_length: int
    quantum_length: int
    distance: float
    delta: Fraction
    certified: bool

    def as_dict(self) -> dict:
        return {
            "machine": self.machine,
            "length": self.length,
            "header_length": self.header_length,
            "quantum_length": self.quantum_length,
            "distance": self.distance,
            "delta": str(self.delta),
            "certified": self.certified,
        }


def direct_output(m: Machine, psi, horizon: int) -> QubitString:
    n, comps = input_components(psi)
    rho = sum(w * np.outer(v, v.conj()) for w, v in comps)
    return apply_machine(m, QubitString.from_fixed_density(rho, n), horizon, n=n)[1]


def complexity_upper_bound(m: Machine, psi, delta, horizon: int, mode: str = "exact") -> ComplexityBound:
    """Length of the encoded program, certified by decoding it.

    The certificate is the trace distance between the decoder's output and
    the machine's direct output; the bound counts only when it is below
    ``delta``.
    """
    prog = encode(m, psi, horizon, mode)
    out = decode(prog, delta, horizon)
    dist = trace_distance(out, direct_output(m, psi, horizon))
    d = as_fraction(delta)
    return ComplexityBound(
        m.name, prog.total_length, prog.header_length, prog.quantum_length, dist, d, dist < d
    )


def best_upper_bound(witnesses, delta, horizon: int) -> tuple[ComplexityBound, list[ComplexityBound]]:
    """Smallest certified bound over (machine, input) witnesses for one target."""
    bounds = [complexity_upper_bound(m, psi, delta, horizon) for m, psi in witnesses]
    good = [b for b in bounds if b.certified]
    if not good:
        raise EncodeError("no witness reproduces its target within delta")
    return min(good, key=lambda b: (b.length, b.machine)), bounds


__all__ = [
    "ComplexityBound",
    "DecodeError",
    "DecodeTrace",
    "EncodeError",
    "EncodedProgram",
    "FineTuner",
    "HeterogeneousHalting",
    "best_upper_bound",
    "build_fine_tuner",
    "complexity_upper_bound",
    "decode",
    "decode_with_trace",
    "direct_output",
    "embed_variable_length",
    "encode",
    "epsilon_zero",
    "gamma_decode",
    "gamma_encode",
    "halting_time",
    "input_components",
    "machine_tag",
    "read_machine_tag",
    "reference_spaces",
    "required_levels",
    "restrict_fixed_length",
    "tail_bound",
]
