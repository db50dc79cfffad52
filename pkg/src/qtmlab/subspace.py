"""Subspaces of H_n, standard (de)compression and norm inequalities.

Conventions
-----------
``trace_distance`` is half the trace norm, 1/2 Tr|rho - sigma|, the
convention under which the trace distance of two pure states equals
sqrt(1 - |<psi|phi>|^2).  Operator norms are spectral norms.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .qubits import QubitString

GS_DROP_TOL = 1e-9
RANK_RTOL = 1e-9


@dataclass(frozen=True)
class Subspace:
    """A subspace given by an orthonormal basis stored as matrix columns."""

    ambient_dim: int
    basis: np.ndarray  # shape (ambient_dim, dim)

    def __post_init__(self):
        if self.basis.ndim != 2 or self.basis.shape[0] != self.ambient_dim:
            raise ValueError("basis must have shape (ambient_dim, dim)")

    @classmethod
    def zero(cls, ambient_dim: int) -> Subspace:
        return cls(ambient_dim, np.zeros((ambient_dim, 0), dtype=complex))

    @classmethod
    def full(cls, ambient_dim: int) -> Subspace:
        return cls(ambient_dim, np.eye(ambient_dim, dtype=complex))

    @classmethod
    def span(cls, vectors, ambient_dim: int | None = None, rtol: float = RANK_RTOL) -> Subspace:
        """Orthonormalized span of the given vectors (SVD rank decision)."""
        vecs = [np.asarray(v, dtype=complex) for v in vectors]
        if not vecs:
            if ambient_dim is None:
                raise ValueError("ambient_dim is required for an empty span")
            return cls.zero(ambient_dim)
        a = np.column_stack(vecs)
        u, s, _ = np.linalg.svd(a, full_matrices=False)
        rank = int(np.sum(s > rtol * max(1.0, s[0]))) if s.size else 0
        return cls(a.shape[0], u[:, :rank])

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def project(self, psi) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex)
        return self.basis @ (self.basis.conj().T @ psi)

    def dist(self, psi) -> float:
        """inf over u in the subspace of ||u - psi||."""
        psi = np.asarray(psi, dtype=complex)
        return float(np.linalg.norm(psi - self.project(psi)))

    def dist_sphere(self, psi) -> float:
        """Distance from psi to the unit sphere of the subspace."""
        psi = np.asarray(psi, dtype=complex)
        if self.dim == 0:
            return float("inf")
        p = self.project(psi)
        pn = np.linalg.norm(p)
        if pn == 0:
            return float(np.sqrt(1 + np.vdot(psi, psi).real))
        return float(np.linalg.norm(psi - p / pn))

    def contains(self, psi, tol: float = 1e-8) -> bool:
        return self.dist(psi) <= tol * max(1.0, float(np.linalg.norm(psi)))

    def is_orthonormal(self, tol: float = 1e-10) -> bool:
        g = self.basis.conj().T @ self.basis
        return bool(np.max(np.abs(g - np.eye(self.dim)), initial=0.0) <= tol)

    def max_overlap(self, other: Subspace) -> float:
        """Largest |<a|b>| over unit vectors a, b of the two subspaces."""
        if self.dim == 0 or other.dim == 0:
            return 0.0
        return float(np.linalg.norm(self.basis.conj().T @ other.basis, 2))

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "basis": [[[float(z.real), float(z.imag)] for z in col] for col in self.basis.T],
        }


def gram_schmidt(vectors, drop_tol: float = GS_DROP_TOL) -> np.ndarray:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Vectors whose residual norm falls below ``drop_tol`` are dropped.
    Returns the orthonormal vectors as matrix columns.
    """
    out: list[np.ndarray] = []
    for v in vectors:
        w = np.array(v, dtype=complex)
        for _ in range(2):
            for e in out:
                w -= np.vdot(e, w) * e
        nrm = np.linalg.norm(w)
        if nrm > drop_tol:
            out.append(w / nrm)
    if not out:
        length = len(vectors[0]) if len(vectors) else 0
        return np.zeros((length, 0), dtype=complex)
    return np.column_stack(out)


def standard_basis(u: Subspace, drop_tol: float = GS_DROP_TOL) -> np.ndarray:
    """Gram-Schmidt of P_U e_1, P_U e_2, ... in computational order."""
    if u.dim == 0:
        raise ValueError("the standard basis of the zero space is empty")
    p = u.projector()
    basis = gram_schmidt([p[:, i] for i in range(u.ambient_dim)], drop_tol)
    if basis.shape[1] != u.dim:
        raise ArithmeticError("standard basis does not match the subspace dimension")
    return basis


def standard_basis_exact(projector) -> list[tuple[list[tuple[Fraction, Fraction]], Fraction]]:
    """Exact Gram-Schmidt over Q + iQ for a rational projector.

    ``projector`` is a square matrix whose entries are rationals or pairs
    (re, im) of rationals.  Returns the orthogonal (unnormalized) standard
    basis vectors together with their exact squared norms; normalizing
    gives the floating-point standard basis.
    """

    def as_pair(z):
        if isinstance(z, tuple):
            return Fraction(z[0]), Fraction(z[1])
        return Fraction(z), Fraction(0)

    def mul(a, b):
        return a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]

    def inner(x, y):  # <x|y>
        re = sum(a[0] * b[0] + a[1] * b[1] for a, b in zip(x, y))
        im = sum(a[0] * b[1] - a[1] * b[0] for a, b in zip(x, y))
        return re, im

    rows = [[as_pair(z) for z in row] for row in projector]
    d = len(rows)
    out: list[tuple[list, Fraction]] = []
    for i in range(d):
        w = [rows[r][i] for r in range(d)]
        for e, nrm2 in out:
            c = inner(e, w)
            coef = (c[0] / nrm2, c[1] / nrm2)
            w = [(x[0] - y[0], x[1] - y[1]) for x, y in zip(w, (mul(coef, ek) for ek in e))]
        n2 = inner(w, w)[0]
        if n2 != 0:
            out.append((w, n2))
    return out


def _complete_basis(cols: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a unitary by continuing Gram-Schmidt on e_i."""
    d = cols.shape[0]
    full = gram_schmidt(list(cols.T) + list(np.eye(d, dtype=complex)))
    return full[:, :d]


@dataclass(frozen=True)
class CompressionMap:
    source: Subspace
    target_len: int
    standard_basis: np.ndarray  # columns u_1..u_N
    unitary: np.ndarray  # completed standard basis, columns u_1..u_{2^n}

    @property
    def matrix(self) -> np.ndarray:
        """Isometry source -> H_{target_len}: u_i -> f_i."""
        n_out = 1 << self.target_len
        f = np.eye(n_out, self.source.dim, dtype=complex)
        return f @ self.standard_basis.conj().T


def compression_map(u: Subspace) -> CompressionMap:
    if u.dim == 0:
        raise ValueError("cannot compress the zero space")
    sb = standard_basis(u)
    target = (u.dim - 1).bit_length()
    return CompressionMap(u, target, sb, _complete_basis(sb))


def compress(cm: CompressionMap, psi, tol: float = 1e-8) -> np.ndarray:
    """Standard compression: coordinates in the standard basis, padded with zeros."""
    psi = np.asarray(psi, dtype=complex)
    if cm.source.dist(psi) > tol * max(1.0, float(np.linalg.norm(psi))):
        raise ValueError("vector lies outside the source subspace")
    out = np.zeros(1 << cm.target_len, dtype=complex)
    out[: cm.source.dim] = cm.standard_basis.conj().T @ psi
    return out


def decompress(cm: CompressionMap, phi, tol: float = 1e-9) -> np.ndarray:
    """Isometric left inverse of ``compress``.

    The input is embedded into H_n by prepending zeros (it occupies the
    first 2**target_len coordinates) and the completed standard-basis
    unitary is applied.
    """
    phi = np.asarray(phi, dtype=complex)
    if phi.shape != (1 << cm.target_len,):
        raise ValueError("payload has the wrong number of qubits")
    embedded = np.zeros(cm.source.ambient_dim, dtype=complex)
    embedded[: phi.size] = phi
    return cm.unitary @ embedded


def _as_density(x) -> np.ndarray:
    if isinstance(x, QubitString):
        return x.rho
    a = np.asarray(x, dtype=complex)
    return np.outer(a, a.conj()) if a.ndim == 1 else a


def trace_distance(rho, sigma) -> float:
    """1/2 sum |lambda_i| over the eigenvalues of rho - sigma."""
    if isinstance(rho, QubitString) and isinstance(sigma, QubitString):
        k = max(rho.max_len, sigma.max_len)
        rho, sigma = rho.resize(k), sigma.resize(k)
    a, b = _as_density(rho), _as_density(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    w = np.linalg.eigvalsh(a - b)
    return float(0.5 * np.sum(np.abs(w)))


def operator_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a), 2))


def overlap_dimension_bound(vectors) -> int:
    """Largest N such that the first N vectors have pairwise |<.|.>| < 1/(N-1).

    Such N unit vectors certify that the ambient dimension is at least N.
    """
    vecs = [np.asarray(v, dtype=complex) for v in vectors]
    if not vecs:
        return 0
    g = np.abs(np.column_stack(vecs).conj().T @ np.column_stack(vecs))
    best = 1
    for n in range(2, len(vecs) + 1):
        block = g[:n, :n] - np.diag(np.diag(g[:n, :n]))
        if np.max(block) < 1.0 / (n - 1):
            best = n
        else:
            break
    return best


def similar_isometry_cap(dim_v: int) -> float:
    """Largest eps for which the similar-subspace isometry bound applies."""
    return (1 / 36) * 2.5 ** (2 - 2 * dim_v)


def similar_isometry_bound(eps: float, dim_v: int) -> float:
    return (8 / 3) * np.sqrt(eps) * 2.5**dim_v


@dataclass(frozen=True)
class IsometryReport:
    matrix: np.ndarray  # operator on the ambient space, supported on V
    norm_defect: float  # ||(U - 1)|_V||
    bound: float
    matching: tuple[float, ...]  # ||v_i - w_i|| for each basis vector


def similar_subspace_isometry(v: Subspace, w: Subspace, eps: float) -> IsometryReport:
    """Isometry V -> W close to the identity, built by eps-matching and Gram-Schmidt.

    Each basis vector v_i of V is matched to the closest unit vector w_i of
    W; the w_i are orthonormalized in order and v_i is sent to the i-th
    result.
    """
    if v.ambient_dim != w.ambient_dim:
        raise ValueError("subspaces live in different spaces")
    if v.dim == 0:
        z = np.zeros((v.ambient_dim, v.ambient_dim), dtype=complex)
        return IsometryReport(z, 0.0, 0.0, ())
    if eps > similar_isometry_cap(v.dim):
        raise ValueError(
            f"eps={eps:.3g} exceeds the precondition cap {similar_isometry_cap(v.dim):.3g}"
        )
    matched, dists = [], []
    for vi in v.basis.T:
        p = w.project(vi)
        pn = np.linalg.norm(p)
        wi = p / pn if pn > 0 else None
        d = float(np.linalg.norm(vi - wi)) if wi is not None else float("inf")
        if d > eps + 1e-12:
            raise ValueError(f"no unit vector of W within eps of a basis vector of V (distance {d:.3g})")
        matched.append(wi)
        dists.append(d)
    e = gram_schmidt(matched, drop_tol=0.0)
    u = e @ v.basis.conj().T
    defect = operator_norm(e - v.basis)
    return IsometryReport(u, defect, similar_isometry_bound(eps, v.dim), tuple(dists))


@dataclass(frozen=True)
class Composition:
    product: np.ndarray
    defect: float  # ||prod U_k - 1||
    bound: float  # sum ||U_k - 1||


def compose_isometries(ops, dim: int | None = None, domain: Subspace | None = None) -> Composition:
    """Product U_N ... U_1 with the telescoping bound sum ||U_k - 1||.

    Entries may be square matrices or ``IsometryReport`` values; for the
    latter the defect is measured on the report's own domain, and the
    product defect is then measured on ``domain`` (the domain of U_1).
    """
    mats, defects = [], []
    for o in ops:
        if isinstance(o, IsometryReport):
            mats.append(o.matrix)
            defects.append(o.norm_defect)
        else:
            m = np.asarray(o, dtype=complex)
            mats.append(m)
            defects.append(None)
    if not mats:
        if dim is None:
            raise ValueError("dim is required for an empty chain")
        return Composition(np.eye(dim, dtype=complex), 0.0, 0.0)
    d = mats[0].shape[0]
    for m in mats:
        if m.shape != (d, d):
            raise ValueError("chain mismatch: operators must act on one common space")
    eye = np.eye(d, dtype=complex)
    prod = eye.copy()
    bound = 0.0
    for m, dk in zip(mats, defects):
        prod = m @ prod
        bound += operator_norm(m - eye) if dk is None else dk
    if domain is not None:
        defect = operator_norm((prod - eye) @ domain.basis) if domain.dim else 0.0
    else:
        defect = operator_norm(prod - eye)
    return Composition(prod, defect, bound)
