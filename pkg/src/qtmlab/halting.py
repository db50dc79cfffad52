"""Exact halting subspaces and halting spectra.

For inputs of length n the halting space at time t is the set of
|psi> in H_n whose control state is orthogonal to |qf> at every t' < t and
equal to |qf> at t.  Both conditions are linear, so the space is the
intersection of the kernels of P S^t' E (t' < t) and (1 - P) S^t E, where
E writes the input on the tape, S is one machine step and P projects the
control onto |qf>.  Kernels are computed by SVD with a relative cutoff.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .machine import Machine
from .sim import build_space, step_operator
from .subspace import Subspace

KERNEL_RTOL = 1e-9


def _kernel(a: np.ndarray, rtol: float = KERNEL_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``a``."""
    cols = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(cols, dtype=complex)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    cutoff = rtol * max(1.0, s[0] if s.size else 0.0)
    rank = int(np.sum(s > cutoff))
    return vh[rank:].conj().T


@lru_cache(maxsize=32)
def _evolved_inputs(m: Machine, n: int, t_max: int) -> tuple[np.ndarray, ...]:
    """Dense S^t E for t = 0..t_max (one column per basis input)."""
    space = build_space(m, n, t_max)
    s = step_operator(space)
    x = space.embedding().toarray()
    out = [x]
    for _ in range(t_max):
        x = s @ x
        out.append(x)
    return tuple(out)


def overlap_grams(m: Machine, n: int, t: int) -> np.ndarray:
    """G[t'] = (P S^t' E)^dag (P S^t' E) for t' = 0..t.

    For a unit vector psi in H_n the halting overlap at time t' is
    psi^dag G[t'] psi.
    """
    space = build_space(m, n, t)
    mask = space.final_mask()
    xs = _evolved_inputs(m, n, t)
    return np.array([x[mask].conj().T @ x[mask] for x in xs])


def _spectrum_pass(m: Machine, n: int, t_max: int, stop_at: int | None = None):
    """Yield (t, halting space basis) for t = 1..t_max in one sweep.

    ``alive`` spans the inputs with zero overlap at every earlier time; the
    halting space at t is the part of ``alive`` that is fully in qf at t.
    """
    space = build_space(m, n, t_max)
    mask = space.final_mask()
    xs = _evolved_inputs(m, n, t_max)
    alive = np.eye(1 << n, dtype=complex)
    for t in range(1, t_max + 1):
        if alive.shape[1] == 0:
            yield t, alive
            continue
        # keep only inputs that have not touched qf at time t-1
        prev = xs[t - 1][mask] @ alive
        alive = alive @ _kernel(prev)
        cur = xs[t] @ alive
        halted = alive @ _kernel(cur[~mask])
        yield t, halted
        if stop_at is not None and t >= stop_at:
            return


def exact_halting_space(m: Machine, n: int, t: int) -> Subspace:
    """The space of length-n inputs that halt at exactly time t."""
    if t < 1:
        raise ValueError("halting times start at t = 1")
    basis = np.zeros((1 << n, 0), dtype=complex)
    for tt, b in _spectrum_pass(m, n, t, stop_at=t):
        if tt == t:
            basis = b
    return Subspace(1 << n, basis)


@dataclass(frozen=True)
class ApproxMeta:
    delta: Fraction
    epsilon: Fraction


@dataclass
class HaltingSpectrum:
    n: int
    t_max: int
    entries: list[tuple[int, Subspace]] = field(default_factory=list)
    mode: str = "exact"
    delta: Fraction | None = None
    epsilons: dict[int, Fraction] = field(default_factory=dict)

    @property
    def times(self) -> list[int]:
        return [t for t, _ in self.entries]

    @property
    def dims(self) -> list[int]:
        return [s.dim for _, s in self.entries]

    def space(self, t: int) -> Subspace:
        for tt, s in self.entries:
            if tt == t:
                return s
        return Subspace.zero(1 << self.n)

    def halting_number(self, t: int) -> int:
        """1-based position of t in the halting-time sequence."""
        return self.times.index(t) + 1

    def to_dict(self, machine: str = "", with_basis: bool = False) -> dict:
        mode = "exact" if self.mode == "exact" else {"approx": str(self.delta)}
        entries = []
        for t, s in self.entries:
            e = {"t": t, "dim": s.dim, "epsilon": str(self.epsilons[t]) if t in self.epsilons else None}
            if with_basis:
                e["basis"] = s.to_json_dict()["basis"]
            entries.append(e)
        return {"machine": machine, "n": self.n, "mode": mode, "entries": entries}

    def to_json(self, machine: str = "", with_basis: bool = False) -> str:
        return json.dumps(self.to_dict(machine, with_basis), sort_keys=True)


def exact_spectrum(m: Machine, n: int, t_max: int) -> HaltingSpectrum:
    """All halting times t <= t_max with a nonzero halting space."""
    spec = HaltingSpectrum(n, t_max)
    for t, basis in _spectrum_pass(m, n, t_max):
        if basis.shape[1]:
            spec.entries.append((t, Subspace(1 << n, basis)))
    return spec


def halting_profile(m: Machine, psi, t: int) -> np.ndarray:
    """Halting overlaps at t' = 0..t for a vector or density matrix on H_n."""
    psi = np.asarray(psi, dtype=complex)
    n = (psi.shape[0] - 1).bit_length()
    grams = overlap_grams(m, n, t)
    if psi.ndim == 1:
        return np.real(np.einsum("i,tij,j->t", psi.conj(), grams, psi))
    return np.real(np.einsum("tij,ji->t", grams, psi))


def is_eps_t_halting(m: Machine, psi, eps: float, t: int, slack: float = 1e-12) -> bool:
    """Overlap <= eps before t and >= 1 - eps at t.

    ``slack`` absorbs floating-point rounding in the comparisons.
    """
    prof = halting_profile(m, psi, t)
    return bool(np.all(prof[:t] <= eps + slack) and prof[t] >= 1 - eps - slack)


def check_spectrum_bound(spec: HaltingSpectrum) -> bool:
    """Sum of halting-space dimensions is at most 2^n."""
    return sum(spec.dims) <= (1 << spec.n)


def spectrum_from_dims(n: int, dims_by_t: dict[int, int]) -> HaltingSpectrum:
    """Synthetic spectrum with placeholder spaces of the given dimensions."""
    spec = HaltingSpectrum(n, max(dims_by_t, default=0))
    for t in sorted(dims_by_t):
        d = dims_by_t[t]
        basis = np.zeros((1 << n, d), dtype=complex)
        basis[: min(d, 1 << n), : min(d, 1 << n)] = np.eye(min(d, 1 << n))
        spec.entries.append((t, Subspace(1 << n, basis)))
    return spec


from .approx import (  # noqa: E402  (re-exported toy-mode algorithms)
    approx_halting_space,
    approx_spectrum,
    ball_tester_B,
    interpolate_I,
)

__all__ = [
    "ApproxMeta",
    "HaltingSpectrum",
    "approx_halting_space",
    "approx_spectrum",
    "ball_tester_B",
    "check_spectrum_bound",
    "exact_halting_space",
    "exact_spectrum",
    "halting_profile",
    "interpolate_I",
    "is_eps_t_halting",
    "overlap_grams",
    "spectrum_from_dims",
]
