"""Toy-mode approximate halting spaces (inputs with 2^n <= 2).

The covering-based algorithm only ever needs phase-invariant quantities:
the halting overlap of a unit vector and the distance from a vector to a
subspace do not change under psi -> e^{i theta} psi.  A covering of the
unit sphere S_n is therefore built as a product of a covering of the
projective space (the Bloch sphere for n = 1, a single point for n = 0)
with a lattice of rational phases.  The phase lattice only enters through
its covering radius; every quantity is computed once per projective class.

Ball tester B
-------------
``method="net"`` is the literal construction: a cubic lattice of spacing
3*eps/64 in real coordinates, kept where it lies within 3*eps/64 of the
ball-sphere intersection, with the acceptance rule
|a(t') - [t' = t]| <= 5*eps/8.

``method="adaptive"`` certifies the same contract by branch and bound.  On
n = 1 the overlaps are affine functions of the Bloch vector with gradient
norm at most 1/2, so f(b) = max_t' |a_t'(b) - [t' = t]| is 1/2-Lipschitz in
geodesic distance.  The intersection of a ball with S_1 is a Bloch cap,
parametrized by azimuthal-equidistant coordinates (a 1-Lipschitz map).
A cell is accepted when a point of the cap with f <= 5*eps/8 is found and
discarded when its Lipschitz lower bound exceeds eps/4.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .machine import Machine
from .subspace import Subspace

NET_CAP = 2_000_000
COVER_CAP = 3_000_000
MAX_HALVINGS = 200


class ToyModeError(ValueError):
    """Raised outside the toy regime 2^n <= 2."""


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _toy_gate(n: int) -> None:
    if (1 << n) > 2:
        raise ToyModeError("covering-based algorithms are limited to 2^n <= 2 (n <= 1)")


# ----------------------------------------------------------------------------
# Bloch-sphere helpers


def bloch_to_vec(b: np.ndarray) -> np.ndarray:
    """Unit vectors of C^2 for Bloch vectors (rows), phase fixed by psi_0 >= 0."""
    b = np.atleast_2d(b)
    theta = np.arccos(np.clip(b[:, 2], -1.0, 1.0))
    phi = np.arctan2(b[:, 1], b[:, 0])
    return np.column_stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def vec_to_bloch(v: np.ndarray) -> np.ndarray:
    v = np.atleast_2d(v)
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    a, b = v[:, 0], v[:, 1]
    ab = np.conj(a) * b
    return np.column_stack([2 * ab.real, 2 * ab.imag, np.abs(a) ** 2 - np.abs(b) ** 2])


def _gram_affine(grams: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """psi^dag G psi = c0 + g . b for each 2x2 gram matrix."""
    g00, g11 = grams[:, 0, 0].real, grams[:, 1, 1].real
    g01 = grams[:, 0, 1]
    c0 = (g00 + g11) / 2
    g = np.column_stack([g01.real, -g01.imag, (g00 - g11) / 2])
    return c0, g


def _targets(t: int) -> np.ndarray:
    tgt = np.zeros(t + 1)
    tgt[t] = 1.0
    return tgt


def _f_bloch(b: np.ndarray, c0, g, tgt) -> np.ndarray:
    a = c0[None, :] + np.atleast_2d(b) @ g.T
    return np.max(np.abs(a - tgt[None, :]), axis=1)


def _tangent_frame(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([1.0, 0.0, 0.0]) if abs(c[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - np.dot(helper, c) * c
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(c, e1)


def _aeq_points(c, e1, e2, uv: np.ndarray) -> np.ndarray:
    """Azimuthal-equidistant map of planar points uv (rows) around axis c."""
    rho = np.linalg.norm(uv, axis=1)
    safe = np.where(rho > 0, rho, 1.0)
    d = (uv[:, :1] * e1[None, :] + uv[:, 1:] * e2[None, :]) / safe[:, None]
    return np.cos(rho)[:, None] * c[None, :] + np.sin(rho)[:, None] * d


def _cap_kappa(radius_norm: float, delta: float) -> float:
    """Rays meeting U_delta(phi) have |<phi/|phi||psi>| > kappa."""
    return (1 + radius_norm**2 - delta**2) / (2 * radius_norm)


# ----------------------------------------------------------------------------
# Ball tester B


def _b_adaptive_n1(c_bloch, gamma_c, c0, g, tgt, eps, max_cells=200_000) -> int:
    accept, prune = 5 * eps / 8, eps / 4
    e1, e2 = _tangent_frame(c_bloch)
    inner = gamma_c * (1 - 1e-12)
    h = gamma_c / 2  # half-side of the initial cells
    centers = np.array([[-h, -h], [-h, h], [h, -h], [h, h]], dtype=float)
    evaluated = 0
    while len(centers):
        r = np.linalg.norm(centers, axis=1)
        keep = r <= gamma_c + math.sqrt(2) * h
        centers, r = centers[keep], r[keep]
        scale = np.where(r > inner, inner / np.where(r > 0, r, 1.0), 1.0)
        clipped = centers * scale[:, None]
        fv = _f_bloch(_aeq_points(c_bloch, e1, e2, clipped), c0, g, tgt)
        if np.any(fv <= accept):
            return 1
        shift = np.linalg.norm(centers - clipped, axis=1)
        lower = fv - 0.5 * (shift + math.sqrt(2) * h)
        live = centers[lower <= prune]
        evaluated += len(centers)
        if evaluated > max_cells:
            raise RuntimeError("ball tester did not converge within the cell budget")
        h /= 2
        offs = np.array([[-h, -h], [-h, h], [h, -h], [h, h]])
        centers = (live[:, None, :] + offs[None, :, :]).reshape(-1, 2)
    return 0


def _b_net(center, delta, eps, grams, tgt, cap=NET_CAP) -> int:
    """Literal (3 eps / 64)-net of U_delta(center) on the sphere."""
    x = np.concatenate([center.real, center.imag])
    dim = x.size
    r = float(np.linalg.norm(x))
    h = 3 * eps / 64
    kappa = _cap_kappa(r, delta)
    if kappa >= 1:
        return 0
    lo = np.floor((x - delta - h) / h).astype(int)
    hi = np.ceil((x + delta + h) / h).astype(int)
    count = int(np.prod(hi - lo + 1))
    if count > cap:
        raise RuntimeError(f"net of {count} lattice points exceeds the cap {cap}")
    c = x / r
    axes = [np.arange(lo[i], hi[i] + 1) * h for i in range(dim)]
    pts = np.array(list(itertools.product(*axes)))
    # distance from each lattice point to the closed cap {y in S : y.c >= kappa}
    norms = np.linalg.norm(pts, axis=1)
    along = pts @ c
    perp = pts - along[:, None] * c[None, :]
    pn = np.linalg.norm(perp, axis=1)
    inside = along >= kappa * np.maximum(norms, 1e-300)
    d_in = np.abs(norms - 1)
    k2 = min(1.0, max(-1.0, kappa))
    s2 = math.sqrt(1 - k2 * k2)
    d_out = np.sqrt((along - k2) ** 2 + (pn - s2) ** 2)
    dist = np.where(inside, d_in, d_out)
    net = pts[dist <= h]
    if not len(net):
        return 0
    half = dim // 2
    vecs = net[:, :half] + 1j * net[:, half:]
    a = np.real(np.einsum("ki,tij,kj->kt", vecs.conj(), grams, vecs))
    ok = np.all(np.abs(a - tgt[None, :]) <= 5 * eps / 8, axis=1)
    return int(np.any(ok))


def ball_tester_B(m: Machine, center, delta, eps, t: int, method: str = "net") -> int:
    """Return 0 if U_delta(center) is not eps-t-halting and 1 if it is eps/4-t-halting.

    Balls in between may give either answer.
    """
    from .halting import overlap_grams

    center = np.asarray(center, dtype=complex)
    n = (center.size - 1).bit_length()
    _toy_gate(n)
    delta, eps = float(delta), float(eps)
    grams = overlap_grams(m, n, t)
    tgt = _targets(t)
    if method == "net":
        return _b_net(center, delta, eps, grams, tgt)
    if method != "adaptive":
        raise ValueError(f"unknown method {method!r}")
    r = float(np.linalg.norm(center))
    kappa = _cap_kappa(r, delta)
    if kappa >= 1:
        return 0
    if n == 0:
        f0 = float(np.max(np.abs(grams[:, 0, 0].real - tgt)))
        return int(f0 <= 5 * eps / 8)
    gamma_c = 2 * math.acos(min(1.0, max(0.0, kappa)))
    c0, g = _gram_affine(grams)
    return _b_adaptive_n1(vec_to_bloch(center)[0], gamma_c, c0, g, tgt, eps)


# ----------------------------------------------------------------------------
# Covering of S_n


def phase_lattice(rho: float) -> list[complex]:
    """Rational unit phases ((1-s^2) + 2si)/(1+s^2) with chord covering radius < rho."""
    # chord to the nearest lattice phase is 2 sin(gap/4) for angular gap `gap`
    gap = 4 * math.asin(min(1.0, rho / 2)) * 0.999
    k = max(3, math.ceil(2 * math.pi / gap))
    out = [complex(-1.0, 0.0)]
    for j in range(k):
        theta = -math.pi + 2 * math.pi * (j + 0.5) / k
        s = Fraction(math.tan(theta / 2)).limit_denominator(10**6)
        out.append(complex((1 - s * s) / (1 + s * s), 2 * s / (1 + s * s)))
    return out


def cube_sphere(m: int) -> np.ndarray:
    """Centers of an m x m grid on each face of the cube, projected to S^2."""
    ticks = -1 + (2 * np.arange(m) + 1) / m
    u, v = np.meshgrid(ticks, ticks, indexing="ij")
    u, v = u.ravel(), v.ravel()
    one = np.ones_like(u)
    faces = []
    for axis in range(3):
        for sign in (-1.0, 1.0):
            pts = np.empty((u.size, 3))
            pts[:, axis] = sign * one
            others = [a for a in range(3) if a != axis]
            pts[:, others[0]] = u
            pts[:, others[1]] = v
            faces.append(pts)
    pts = np.vstack(faces)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


class Covering:
    """delta-covering of S_n as (projective classes) x (phase lattice).

    ``classes`` holds unit representatives of the projective classes; the
    covering is {w * v : v in classes, w in phase_lattice(phase_radius)}.
    Every unit vector lies within ``2 sin(gamma/4) + phase_radius`` of a
    covering point, where ``gamma`` is the angular covering radius of the
    Bloch grid, and this is kept strictly below delta.
    """

    def __init__(self, n: int, delta: float, cap: int = COVER_CAP):
        _toy_gate(n)
        self.n = n
        self.delta = delta
        self.phase_radius = delta / 10
        if n == 0:
            self.grid = 0
            self.angular_radius = 0.0
            self.classes = np.ones((1, 1), dtype=complex)
            self.bloch = np.zeros((1, 3))
        else:
            budget = 0.9 * delta - 1e-12
            gamma = 4 * math.asin(min(1.0, budget / 2))
            m = max(1, math.ceil(math.sqrt(2) / gamma))
            if 6 * m * m > cap:
                raise RuntimeError(f"covering with {6 * m * m} classes exceeds the cap {cap}")
            self.grid = m
            # a face cell of side 2/m is within planar distance sqrt(2)/m of its
            # center, and central projection onto the sphere is 1-Lipschitz
            self.angular_radius = math.sqrt(2) / m
            self.bloch = cube_sphere(m)
            self.classes = bloch_to_vec(self.bloch)

    @property
    def radius(self) -> float:
        return 2 * math.sin(self.angular_radius / 4) + self.phase_radius

    def __len__(self) -> int:
        return len(self.classes) * len(phase_lattice(self.phase_radius))


def _class_tests(cover: Covering, grams, delta: float, eps: float, t: int) -> np.ndarray:
    """B(psi_k, delta, eps, t) for every projective class of the covering."""
    tgt = _targets(t)
    kappa = _cap_kappa(1.0, delta)
    if cover.n == 0:
        f0 = float(np.max(np.abs(grams[:, 0, 0].real - tgt)))
        return np.array([int(f0 <= 5 * eps / 8)])
    c0, g = _gram_affine(grams)
    gamma_c = 2 * math.acos(min(1.0, max(0.0, kappa)))
    fc = _f_bloch(cover.bloch, c0, g, tgt)
    out = np.full(len(fc), -1, dtype=int)
    out[fc <= 5 * eps / 8] = 1
    out[(out < 0) & (fc - 0.5 * gamma_c > eps / 4)] = 0
    for k in np.nonzero(out < 0)[0]:
        out[k] = _b_adaptive_n1(cover.bloch[k], gamma_c, c0, g, tgt, eps)
    return out


# ----------------------------------------------------------------------------
# Interpolation I


def _dists(basis: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """dist(span(basis), v) for the rows v of ``vecs``."""
    if len(vecs) == 0:
        return np.zeros(0)
    coeff = vecs.conj() @ basis  # conj(<b|v>)
    proj2 = np.sum(np.abs(coeff) ** 2, axis=1)
    n2 = np.sum(np.abs(vecs) ** 2, axis=1)
    return np.sqrt(np.maximum(n2 - proj2, 0.0))


def _verify(basis, pos, neg, big_delta, delta_tilde) -> bool:
    return bool(
        np.all(_dists(basis, pos) < big_delta) and np.all(_dists(basis, neg) > delta_tilde)
    )


def interpolate_I(positives, negatives, d: int, Delta, delta, Delta_tilde, delta_tilde):
    """Search a d-dimensional subspace close to the positives and far from the negatives.

    Returns (1, U) only if dist(U, p) < Delta for every positive p and
    dist(U, q) > delta_tilde for every negative q.  A principal-subspace
    fit is tried first; in two dimensions with d = 1 an exhaustive grid
    around the first positive follows, which makes the search complete:
    whenever some line has dist <= delta to all positives and
    >= Delta_tilde to all negatives, a grid line passes the check.
    """
    Delta, delta = float(Delta), float(delta)
    Delta_tilde, delta_tilde = float(Delta_tilde), float(delta_tilde)
    if not (Delta > delta and Delta_tilde > delta_tilde):
        raise ValueError("need Delta > delta and Delta_tilde > delta_tilde")
    pos = np.atleast_2d(np.asarray(positives, dtype=complex)) if len(positives) else None
    neg = np.atleast_2d(np.asarray(negatives, dtype=complex)) if len(negatives) else None
    dim = (pos if pos is not None else neg).shape[1]
    pos = pos if pos is not None else np.zeros((0, dim), dtype=complex)
    neg = neg if neg is not None else np.zeros((0, dim), dtype=complex)
    if d < 0 or d > dim:
        return 0, Subspace.zero(dim)
    if d == dim:
        full = np.eye(dim, dtype=complex)
        return (1, Subspace(dim, full)) if _verify(full, pos, neg, Delta, delta_tilde) else (0, Subspace.zero(dim))
    if d == 0:
        z = np.zeros((dim, 0), dtype=complex)
        return (1, Subspace(dim, z)) if _verify(z, pos, neg, Delta, delta_tilde) else (0, Subspace.zero(dim))

    candidates = []
    if len(pos):
        w, v = np.linalg.eigh(pos.T @ pos.conj())
        candidates.append(v[:, ::-1][:, :d])
    elif len(neg):
        w, v = np.linalg.eigh(neg.T @ neg.conj())
        candidates.append(v[:, :d])
    else:
        candidates.append(np.eye(dim, d, dtype=complex))
    for basis in candidates:
        if _verify(basis, pos, neg, Delta, delta_tilde):
            return 1, Subspace(dim, basis)

    if dim == 2 and d == 1:
        basis = _exhaustive_line(pos, neg, delta, Delta, Delta_tilde, delta_tilde)
        if basis is not None:
            return 1, Subspace(dim, basis)
    return 0, Subspace.zero(dim)


def _exhaustive_line(pos, neg, delta, big_delta, big_delta_tilde, delta_tilde):
    """Grid search over lines in C^2 (points of the Bloch sphere).

    dist(line u, v) = |v| T(u, v/|v|) with T the trace distance of the two
    rays, a metric equal to half the Bloch chord.  If a line u* meets the
    hypothesis, a grid line u with T(u, u*) < eta changes every distance by
    less than eta |v|; eta is chosen so both margins survive.
    """
    norms = np.concatenate([np.linalg.norm(pos, axis=1), np.linalg.norm(neg, axis=1)])
    rmax = float(np.max(norms)) if norms.size else 1.0
    eta = min(big_delta - delta, big_delta_tilde - delta_tilde) / rmax * 0.999
    if len(pos):
        anchor = pos[0]
        r0 = float(np.linalg.norm(anchor))
        # any admissible line is within trace distance delta / r0 of the anchor ray
        reach = min(math.pi, 2 * math.asin(min(1.0, delta / r0)) + 2 * eta * 2)
        c = vec_to_bloch(anchor)[0]
    else:
        reach, c = math.pi, np.array([0.0, 0.0, 1.0])
    # planar covering radius s/sqrt(2) -> geodesic <= s/sqrt(2) -> T <= s/(2 sqrt 2)
    s = 2 * math.sqrt(2) * eta
    k = math.ceil(reach / s)
    if (2 * k + 1) ** 2 > 4_000_000:
        return None
    ticks = np.arange(-k, k + 1) * s
    uu, vv = np.meshgrid(ticks, ticks, indexing="ij")
    uv = np.column_stack([uu.ravel(), vv.ravel()])
    uv = uv[np.linalg.norm(uv, axis=1) <= reach + s]
    e1, e2 = _tangent_frame(c)
    lines = bloch_to_vec(_aeq_points(c, e1, e2, uv))
    for chunk in np.array_split(np.arange(len(lines)), max(1, len(lines) // 256)):
        ls = lines[chunk]  # rows are unit vectors u
        ok = np.ones(len(ls), dtype=bool)
        if len(pos):
            dp = np.sqrt(np.maximum(
                np.sum(np.abs(pos) ** 2, axis=1)[None, :] - np.abs(ls.conj() @ pos.T) ** 2, 0.0))
            ok &= np.all(dp < big_delta, axis=1)
        if len(neg) and ok.any():
            dn = np.sqrt(np.maximum(
                np.sum(np.abs(neg) ** 2, axis=1)[None, :] - np.abs(ls.conj() @ neg.T) ** 2, 0.0))
            ok &= np.all(dn > delta_tilde, axis=1)
        hits = np.nonzero(ok)[0]
        if hits.size:
            return ls[hits[0]][:, None]
    return None


# ----------------------------------------------------------------------------
# Approximate halting spaces


def approx_halting_space(m: Machine, n: int, t: int, delta, cover: Covering | None = None):
    """Seven-step construction of the delta-approximate halting space.

    Returns (Subspace, ApproxMeta).  The loop starts at eps = 18 delta,
    collects the covering centers that pass B at eps (positives) and fail
    B at 18 delta (negatives), tries interpolating subspaces from
    dimension 2^n down to 1 with Delta = 2 delta, Delta~ = 7 delta / 4,
    delta~ = 3 delta / 2, and halves eps when no dimension works.
    """
    from .halting import ApproxMeta, overlap_grams

    _toy_gate(n)
    delta_q = as_fraction(delta)
    dlt = float(delta_q)
    cover = cover if cover is not None else Covering(n, dlt)
    grams = overlap_grams(m, n, t)
    eps_q = 18 * delta_q
    neg_mask = _class_tests(cover, grams, dlt, float(18 * delta_q), t) == 0
    negatives = cover.classes[neg_mask]
    for _ in range(MAX_HALVINGS):
        pos_mask = _class_tests(cover, grams, dlt, float(eps_q), t) == 1
        if not pos_mask.any():
            return Subspace.zero(1 << n), ApproxMeta(delta_q, eps_q)
        positives = cover.classes[pos_mask]
        for d in range(1 << n, 0, -1):
            flag, u = interpolate_I(
                positives, negatives, d, 2 * dlt, dlt, 7 * dlt / 4, 3 * dlt / 2
            )
            if flag:
                return u, ApproxMeta(delta_q, eps_q)
        eps_q /= 2
    raise RuntimeError("approximate halting space did not terminate within the halving budget")


def approx_spectrum(m: Machine, n: int, t_max: int, delta):
    """Approximate halting spaces for t = 1..t_max, keeping nonzero ones."""
    from .halting import HaltingSpectrum

    delta_q = as_fraction(delta)
    cover = Covering(n, float(delta_q))
    spec = HaltingSpectrum(n, t_max, mode="approx", delta=delta_q)
    for t in range(1, t_max + 1):
        u, meta = approx_halting_space(m, n, t, delta_q, cover)
        if u.dim:
            spec.entries.append((t, u))
            spec.epsilons[t] = meta.epsilon
    return spec
