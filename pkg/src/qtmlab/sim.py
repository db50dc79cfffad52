"""Finite-window simulation of a QTM.

The configuration space is the set of configurations reachable within
``t_max`` steps from the initial configurations of all inputs of length at
most ``n``.  Since the head moves one cell per step, every such
configuration lives on the window [-t_max, max(n-1, 0) + t_max] and the
truncation introduces no error for evolutions of at most ``t_max`` steps.
"""

from __future__ import annotations

import os
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .machine import ALPHABET, BLANK, Machine
from .qubits import QubitString, index_string, string_index, strings_of_length, total_dim

DEFAULT_DIM_CAP = 5_000_000
BLANK_CODE = 8  # index of the symbol (#, #)
_TRACK_BLANK = 2
_AMP2_FLOOR = 1e-24


class SizeGuardError(RuntimeError):
    """Raised when a configuration basis would exceed the size cap."""


class HorizonError(ValueError):
    """Raised when an evolution would leave the simulated horizon."""


class NotHalting(RuntimeError):
    """Raised when an input does not satisfy the halting conditions in time."""


def dim_cap() -> int:
    return int(float(os.environ.get("QTMLAB_DIM_CAP", DEFAULT_DIM_CAP)))


def _input_code(c: str) -> int:
    return "01#".index(c)


@dataclass(eq=False)
class ConfigSpace:
    machine: Machine
    n: int
    t_max: int
    lo: int
    hi: int
    states: np.ndarray  # control state index per configuration
    heads: np.ndarray  # head cell per configuration
    tapes: list[bytes]  # symbol codes for cells lo..hi
    depth: np.ndarray  # first time step at which the configuration is reached
    index: dict
    _step: sp.csr_matrix | None = field(default=None, repr=False)
    _labels: tuple | None = field(default=None, repr=False)

    @property
    def window(self) -> tuple[int, int]:
        return self.lo, self.hi

    @property
    def dim(self) -> int:
        return len(self.tapes)

    def config_index(self, state: str, input_track: str, output_track: str = "", head: int = 0) -> int:
        """Index of the configuration with the given tracks written from cell 0."""
        tape = bytearray([BLANK_CODE]) * (self.hi - self.lo + 1)
        for j in range(max(len(input_track), len(output_track))):
            i = input_track[j] if j < len(input_track) else BLANK
            o = output_track[j] if j < len(output_track) else BLANK
            tape[j - self.lo] = 3 * _input_code(i) + _input_code(o)
        return self.index[(self.machine.state_index(state), head, bytes(tape))]

    def initial_index(self, s: str) -> int:
        """Initial configuration for the input string ``s`` (len <= n)."""
        return self.config_index(self.machine.start, s)

    def embedding(self) -> sp.csr_matrix:
        """The isometry E: H_n -> configuration space onto initial configurations."""
        cols = [self.initial_index(s) for s in strings_of_length(self.n)]
        data = np.ones(len(cols), dtype=complex)
        return sp.csr_matrix((data, (cols, np.arange(len(cols)))), shape=(self.dim, len(cols)))

    def final_mask(self) -> np.ndarray:
        return self.states == self.machine.state_index(self.machine.final)

    def label(self, i: int) -> str:
        """Readable description ``state|input|output|head`` of configuration i."""
        tape = self.tapes[i]
        inp = "".join("01_"[c // 3] for c in tape)
        out = "".join("01_"[c % 3] for c in tape)
        return f"{self.machine.states[self.states[i]]}|{inp}|{out}|{self.heads[i]}"

    def output_split(self) -> tuple:
        """Per configuration: (R-string, environment key) for the reading operation."""
        if self._labels is None:
            zero = -self.lo
            strings, envs = [], []
            for i, tape in enumerate(self.tapes):
                outs = bytes(c % 3 for c in tape)
                end = zero
                while end < len(outs) and outs[end] != _TRACK_BLANK:
                    end += 1
                strings.append("".join("01"[c] for c in outs[zero:end]))
                residue = (outs[:zero], outs[end:])
                inputs = bytes(c // 3 for c in tape)
                envs.append((int(self.states[i]), int(self.heads[i]), inputs, residue))
            self._labels = (strings, envs)
        return self._labels


def residue_key(residue: tuple[bytes, bytes]) -> tuple:
    """Ordering key of a residue: the all-blank residue first, then lexicographic."""
    left, right = residue
    blank = all(c == _TRACK_BLANK for c in left + right)
    return (not blank, left, right)


@lru_cache(maxsize=64)
def _build_space_cached(m: Machine, n: int, t_max: int, cap: int) -> ConfigSpace:
    lo, hi = -t_max, max(n - 1, 0) + t_max
    width = hi - lo + 1
    table = m.transitions()
    fast = {}
    for (q, s), branches in table.items():
        fast[(m.state_index(q), s.index)] = [
            (b.amp.value, m.state_index(b.state), b.symbol.index, -1 if b.move == "L" else 1)
            for b in branches
        ]
    q0 = m.state_index(m.start)
    index: dict = {}
    states, heads, tapes, depth = [], [], [], []

    def add(key, d):
        if key not in index:
            if len(index) >= cap:
                raise SizeGuardError(
                    f"configuration basis exceeds the cap of {cap} (set QTMLAB_DIM_CAP to raise it)"
                )
            index[key] = len(tapes)
            states.append(key[0])
            heads.append(key[1])
            tapes.append(key[2])
            depth.append(d)

    for length in range(n + 1):
        for s in strings_of_length(length):
            tape = bytearray([BLANK_CODE]) * width
            for j, c in enumerate(s):
                tape[j - lo] = 3 * _input_code(c) + _TRACK_BLANK
            add((q0, 0, bytes(tape)), 0)
    frontier = 0
    while frontier < len(tapes):
        i = frontier
        frontier += 1
        if depth[i] >= t_max:
            continue
        q, h, tape = states[i], heads[i], tapes[i]
        for _, q2, s2, mv in fast.get((q, tape[h - lo]), ()):
            new = bytearray(tape)
            new[h - lo] = s2
            add((q2, h + mv, bytes(new)), depth[i] + 1)
    return ConfigSpace(
        m, n, t_max, lo, hi,
        np.array(states, dtype=np.int32), np.array(heads, dtype=np.int32),
        tapes, np.array(depth, dtype=np.int32), index,
    )


def build_space(m: Machine, n: int, t_max: int) -> ConfigSpace:
    """Enumerate the configurations reachable within ``t_max`` steps."""
    if n < 0 or t_max < 1:
        raise ValueError("need n >= 0 and t_max >= 1")
    return _build_space_cached(m, n, t_max, dim_cap())


def step_operator(space: ConfigSpace, m: Machine | None = None) -> sp.csr_matrix:
    """Sparse matrix of one machine step on the configuration basis.

    Columns of configurations first reached at time ``t_max`` are left
    empty; they are never needed for evolutions within the horizon.
    """
    if m is not None and m != space.machine:
        raise ValueError("machine does not match the configuration space")
    if space._step is not None:
        return space._step
    mach = space.machine
    fast = {}
    for (q, s), branches in mach.transitions().items():
        fast[(mach.state_index(q), s.index)] = [
            (b.amp.value, mach.state_index(b.state), b.symbol.index, -1 if b.move == "L" else 1)
            for b in branches
        ]
    rows, cols, vals = [], [], []
    for i in range(space.dim):
        if space.depth[i] >= space.t_max:
            continue
        q, h, tape = int(space.states[i]), int(space.heads[i]), space.tapes[i]
        for amp, q2, s2, mv in fast.get((q, tape[h - space.lo]), ()):
            new = bytearray(tape)
            new[h - space.lo] = s2
            rows.append(space.index[(q2, h + mv, bytes(new))])
            cols.append(i)
            vals.append(amp)
    op = sp.csr_matrix(
        (np.array(vals, dtype=complex), (rows, cols)), shape=(space.dim, space.dim)
    )
    op.sum_duplicates()
    space._step = op
    return op


def isometry_defect(space: ConfigSpace, m: Machine | None = None) -> float:
    """max |S^dag S - I| over the columns inside the horizon."""
    s = step_operator(space, m)
    live = np.nonzero(space.depth < space.t_max)[0]
    sl = s[:, live]
    gram = (sl.conj().T @ sl).toarray()
    return float(np.max(np.abs(gram - np.eye(len(live))))) if len(live) else 0.0


@dataclass(frozen=True)
class GlobalState:
    """State of the machine at a given time.

    Pure states carry a vector; mixed states carry an ensemble of
    (weight, vector) pairs, which every linear map acts on componentwise.
    """

    space: ConfigSpace
    time: int
    vector: np.ndarray | None = None
    ensemble: tuple = ()

    @property
    def is_pure(self) -> bool:
        return self.vector is not None

    def components(self) -> list[tuple[float, np.ndarray]]:
        return [(1.0, self.vector)] if self.is_pure else list(self.ensemble)

    @property
    def trace(self) -> float:
        return float(sum(w * np.vdot(v, v).real for w, v in self.components()))

    def density(self, cap: int = 4096) -> np.ndarray:
        if self.space.dim > cap:
            raise SizeGuardError("configuration space too large for an explicit density matrix")
        rho = np.zeros((self.space.dim,) * 2, dtype=complex)
        for w, v in self.components():
            rho += w * np.outer(v, v.conj())
        return rho


def initial_state(space: ConfigSpace, inp) -> GlobalState:
    """Write ``inp`` on the input track; a vector of length 2**n is taken as H_n."""
    if not isinstance(inp, QubitString):
        inp = QubitString.from_fixed(np.asarray(inp, dtype=complex), space.n)
    if inp.base_length > space.n:
        raise ValueError(f"input of length {inp.base_length} exceeds n={space.n}")
    inp = inp.resize(space.n) if inp.max_len != space.n else inp
    cols = [space.initial_index(index_string(i)) for i in range(total_dim(space.n))]

    def lift(vec):
        out = np.zeros(space.dim, dtype=complex)
        out[cols] = vec
        return out

    pure = inp.pure_vector()
    if pure is not None:
        return GlobalState(space, 0, vector=lift(pure))
    return GlobalState(space, 0, ensemble=tuple((w, lift(v)) for w, v in inp.ensemble()))


def evolve(state: GlobalState, m: Machine | None = None, t: int = 1) -> GlobalState:
    """Apply ``t`` machine steps."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if state.time + t > state.space.t_max:
        raise HorizonError(f"time {state.time + t} exceeds the horizon {state.space.t_max}")
    s = step_operator(state.space, m)

    def run(v):
        for _ in range(t):
            v = s @ v
        return v

    if state.is_pure:
        return GlobalState(state.space, state.time + t, vector=run(state.vector))
    return GlobalState(
        state.space, state.time + t, ensemble=tuple((w, run(v)) for w, v in state.ensemble)
    )


def halting_overlap(state: GlobalState) -> float:
    """<qf| rho_C |qf>: total weight of configurations in the final state."""
    mask = state.space.final_mask()
    return float(sum(w * np.sum(np.abs(v[mask]) ** 2) for w, v in state.components()))


def read_output(state: GlobalState, max_len: int | None = None) -> QubitString:
    """Apply the reading operation to the output track.

    The output string is the binary word starting at cell 0 up to the
    first blank.  Control, head, input track and the output residue are
    traced out, so coherence survives only between configurations that
    agree on all of them.
    """
    strings, envs = state.space.output_split()
    by_env: dict = defaultdict(lambda: defaultdict(complex))
    env_ids: dict = {}
    longest = 0
    for comp, (w, v) in enumerate(state.components()):
        for i in np.nonzero(np.abs(v) ** 2 > _AMP2_FLOOR)[0]:
            key = (comp, envs[i])
            env_ids.setdefault(key, len(env_ids))
            by_env[key][strings[i]] += np.sqrt(w) * v[i]
            longest = max(longest, len(strings[i]))
    k = longest if max_len is None else max_len
    if longest > k:
        raise ValueError(f"output of length {longest} exceeds max_len={k}")
    dim = total_dim(k)
    amp = np.zeros((dim, max(len(env_ids), 1)), dtype=complex)
    for key, col in env_ids.items():
        for s, a in by_env[key].items():
            amp[string_index(s), col] += a
    return QubitString(k, amp @ amp.conj().T)


def apply_machine(m: Machine, inp, horizon: int, n: int | None = None, max_len: int | None = None):
    """Run ``m`` on ``inp`` until it halts; return (halting time, output)."""
    if n is None:
        n = inp.base_length if isinstance(inp, QubitString) else int(np.log2(len(inp)))
    space = build_space(m, n, horizon)
    st = initial_state(space, inp)
    for t in range(1, horizon + 1):
        st = evolve(st, t=1)
        p = halting_overlap(st)
        if p >= 1 - 1e-8:
            return t, read_output(st, max_len)
        if p > 1e-8:
            raise NotHalting(f"overlap {p:.3g} at t={t} is neither 0 nor 1")
    raise NotHalting(f"no halting within horizon {horizon}")


__all__ = [
    "ALPHABET",
    "ConfigSpace",
    "GlobalState",
    "HorizonError",
    "NotHalting",
    "SizeGuardError",
    "apply_machine",
    "build_space",
    "evolve",
    "halting_overlap",
    "initial_state",
    "isometry_defect",
    "read_output",
    "residue_key",
    "step_operator",
]
