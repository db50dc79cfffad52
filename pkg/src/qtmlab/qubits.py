"""Indeterminate-length qubit strings.

A qubit string of maximal length K is a density operator on
H_{<=K} = H_0 + H_1 + ... + H_K.  Basis strings are ordered by length and
then lexicographically (lambda, 0, 1, 00, 01, ...), so the string ``s``
sits at index ``2**len(s) - 1 + int(s, 2)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product

import numpy as np

BASE_LENGTH_THRESHOLD = 1e-12


def string_index(s: str) -> int:
    return (1 << len(s)) - 1 + (int(s, 2) if s else 0)


def index_string(i: int) -> str:
    length = (i + 1).bit_length() - 1
    offset = i - ((1 << length) - 1)
    return format(offset, f"0{length}b") if length else ""


def strings_up_to(k: int) -> list[str]:
    """All binary strings of length <= k in canonical order."""
    return [index_string(i) for i in range((1 << (k + 1)) - 1)]


def strings_of_length(n: int) -> list[str]:
    return ["".join(bits) for bits in product("01", repeat=n)]


def total_dim(k: int) -> int:
    return (1 << (k + 1)) - 1


@dataclass(frozen=True)
class QubitString:
    """Density operator on H_{<=max_len}."""

    max_len: int
    rho: np.ndarray

    def __post_init__(self):
        if self.rho.shape != (total_dim(self.max_len),) * 2:
            raise ValueError("density matrix has the wrong shape for max_len")

    @classmethod
    def from_vector(cls, vec, max_len: int) -> QubitString:
        vec = np.asarray(vec, dtype=complex)
        return cls(max_len, np.outer(vec, vec.conj()))

    @classmethod
    def from_fixed(cls, vec, n: int, max_len: int | None = None) -> QubitString:
        """Embed a vector of H_n (length 2**n) as a qubit string."""
        vec = np.asarray(vec, dtype=complex)
        if vec.shape != (1 << n,):
            raise ValueError(f"expected a vector of length {1 << n}")
        k = n if max_len is None else max_len
        full = np.zeros(total_dim(k), dtype=complex)
        full[(1 << n) - 1:(1 << (n + 1)) - 1] = vec
        return cls.from_vector(full, k)

    @classmethod
    def from_fixed_density(cls, rho, n: int, max_len: int | None = None) -> QubitString:
        rho = np.asarray(rho, dtype=complex)
        k = n if max_len is None else max_len
        full = np.zeros((total_dim(k),) * 2, dtype=complex)
        sl = slice((1 << n) - 1, (1 << (n + 1)) - 1)
        full[sl, sl] = rho
        return cls(k, full)

    @classmethod
    def from_amplitudes(cls, amps: dict[str, complex], max_len: int | None = None) -> QubitString:
        k = max((len(s) for s in amps), default=0) if max_len is None else max_len
        vec = np.zeros(total_dim(k), dtype=complex)
        for s, a in amps.items():
            vec[string_index(s)] += a
        return cls.from_vector(vec, k)

    @classmethod
    def basis(cls, s: str, max_len: int | None = None) -> QubitString:
        return cls.from_amplitudes({s: 1.0}, max_len)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    @property
    def base_length(self) -> int:
        diag = np.real(np.diag(self.rho))
        support = np.nonzero(diag > BASE_LENGTH_THRESHOLD)[0]
        if support.size == 0:
            return 0
        return len(index_string(int(support[-1])))

    def block(self, k: int) -> np.ndarray:
        sl = slice((1 << k) - 1, (1 << (k + 1)) - 1)
        return self.rho[sl, sl]

    def is_fixed_length(self, n: int, tol: float = 1e-10) -> bool:
        return abs(np.real(np.trace(self.block(n))) - self.trace) <= tol

    def resize(self, max_len: int) -> QubitString:
        """Pad with zeros or drop (zero) blocks above ``max_len``."""
        d = total_dim(max_len)
        if max_len >= self.max_len:
            out = np.zeros((d, d), dtype=complex)
            out[: self.dim, : self.dim] = self.rho
            return QubitString(max_len, out)
        if self.base_length > max_len:
            raise ValueError("qubit string is longer than the requested max_len")
        return QubitString(max_len, self.rho[:d, :d].copy())

    def pure_vector(self, tol: float = 1e-10) -> np.ndarray | None:
        """Return a state vector if the string is pure, else None."""
        w, v = np.linalg.eigh(self.rho)
        if w[-1] < self.trace - tol:
            return None
        vec = v[:, -1] * np.sqrt(max(w[-1], 0.0))
        # fix the global phase on the largest entry for reproducibility
        j = int(np.argmax(np.abs(vec)))
        return vec * np.exp(-1j * np.angle(vec[j]))

    def ensemble(self, tol: float = 1e-12) -> list[tuple[float, np.ndarray]]:
        """Eigen-decomposition as a list of (weight, unit vector)."""
        w, v = np.linalg.eigh(self.rho)
        return [(float(w[i]), v[:, i]) for i in range(len(w) - 1, -1, -1) if w[i] > tol]

    def to_json(self) -> str:
        labels = strings_up_to(self.max_len)
        pure = self.pure_vector()
        doc: dict = {"n": self.max_len, "basis": labels}
        if pure is not None:
            doc["amplitudes"] = [[float(a.real), float(a.imag)] for a in pure]
        else:
            doc["matrix"] = [[[float(x.real), float(x.imag)] for x in row] for row in self.rho]
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> QubitString:
        doc = json.loads(text)
        if not isinstance(doc, dict) or "n" not in doc or not ("amplitudes" in doc or "matrix" in doc):
            raise ValueError("qubit-string JSON needs 'n' and 'amplitudes' or 'matrix'")
        k = int(doc["n"])
        labels = doc.get("basis") or strings_up_to(k)
        if "matrix" in doc:
            m = np.array([[complex(re, im) for re, im in row] for row in doc["matrix"]])
            full = np.zeros((total_dim(k),) * 2, dtype=complex)
            idx = [string_index(s) for s in labels]
            full[np.ix_(idx, idx)] = m
            return cls(k, full)
        amps = {s: complex(re, im) for s, (re, im) in zip(labels, doc["amplitudes"])}
        return cls.from_amplitudes(amps, k)


def parse_input(text: str, n: int | None = None) -> QubitString:
    """Parse a command-line input: a bit string, ``a|s> + b|t>`` or JSON."""
    text = text.strip()
    if text.startswith("{"):
        return QubitString.from_json(text)
    if all(c in "01" for c in text):
        return QubitString.basis(text, n)
    amps: dict[str, complex] = {}
    for term in text.replace("-", "+-").split("+"):
        term = term.strip()
        if not term:
            continue
        coeff, _, ket = term.partition("|")
        s = ket.rstrip(">").strip()
        coeff = coeff.strip().rstrip("*")
        c = complex(coeff) if coeff not in ("", "-") else (1.0 if coeff == "" else -1.0)
        amps[s] = amps.get(s, 0) + c
    norm = np.sqrt(sum(abs(a) ** 2 for a in amps.values()))
    return QubitString.from_amplitudes({s: a / norm for s, a in amps.items()}, n)
