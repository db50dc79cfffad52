"""QTM descriptions: the machine file format, amplitudes and well-formedness.

A machine is a Bernstein-Vazirani style QTM over the two-track alphabet
{0,1,#} x {0,1,#}.  The file format is line oriented::

    machine <identifier>
    states <id> <id> ...
    start <id>
    final <id>
    trans <state> (<i>,<o>) -> <amp> <state'> (<i'>,<o'>) <L|R> [; ...]

Blank is written ``_`` in files and ``#`` in memory.  If the final state
has no ``trans`` rows the machine is completed to normal form, i.e. every
``(qf, s)`` steps to ``(q0, s)`` moving right.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

from .exact import EXACT_ZERO, ONE, ExactComplex, Surd

BLANK = "#"
TRACK_SYMBOLS = ("0", "1", BLANK)
MOVES = ("L", "R")


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class Symbol(NamedTuple):
    inp: str
    out: str

    @property
    def index(self) -> int:
        return 3 * TRACK_SYMBOLS.index(self.inp) + TRACK_SYMBOLS.index(self.out)

    @classmethod
    def from_index(cls, k: int) -> Symbol:
        return cls(TRACK_SYMBOLS[k // 3], TRACK_SYMBOLS[k % 3])

    def to_text(self) -> str:
        return f"({_file_char(self.inp)},{_file_char(self.out)})"


ALPHABET = tuple(Symbol.from_index(k) for k in range(9))
BLANK_SYMBOL = Symbol(BLANK, BLANK)


def _file_char(c: str) -> str:
    return "_" if c == BLANK else c


_RAT = r"-?\d+(?:/\d+)?r?"
_AMP_RE = re.compile(rf"^({_RAT})(?:\+({_RAT})i)?$")


def _parse_rat(text: str) -> tuple[Fraction, bool]:
    surd = text.endswith("r")
    if surd:
        text = text[:-1]
    num, _, den = text.partition("/")
    if den and int(den) == 0:
        raise ZeroDivisionError("zero denominator")
    return Fraction(int(num), int(den) if den else 1), surd


def _format_rat(value: Fraction, surd: bool) -> str:
    body = str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    return body + ("r" if surd else "")


@dataclass(frozen=True)
class Amplitude:
    """A literal ``re + im*i``; each part optionally scaled by 2^(-1/2)."""

    re: Fraction
    re_surd: bool = False
    im: Fraction = Fraction(0)
    im_surd: bool = False
    has_imag: bool = False

    @classmethod
    def parse(cls, text: str) -> Amplitude:
        m = _AMP_RE.match(text)
        if not m:
            raise ValueError(f"malformed amplitude literal {text!r}")
        re_val, re_surd = _parse_rat(m.group(1))
        if m.group(2) is None:
            return cls(re_val, re_surd)
        im_val, im_surd = _parse_rat(m.group(2))
        return cls(re_val, re_surd, im_val, im_surd, True)

    def to_text(self) -> str:
        text = _format_rat(self.re, self.re_surd)
        if self.has_imag:
            text += "+" + _format_rat(self.im, self.im_surd) + "i"
        return text

    @property
    def exact(self) -> ExactComplex:
        def part(v: Fraction, surd: bool) -> Surd:
            return Surd(Fraction(0), v) if surd else Surd(v, Fraction(0))

        return ExactComplex(part(self.re, self.re_surd), part(self.im, self.im_surd))

    @property
    def value(self) -> complex:
        return complex(self.exact)


UNIT = Amplitude(Fraction(1))


class Branch(NamedTuple):
    amp: Amplitude
    state: str
    symbol: Symbol
    move: str


@dataclass(frozen=True)
class Machine:
    name: str
    states: tuple[str, ...]
    start: str
    final: str
    delta: dict[tuple[str, Symbol], tuple[Branch, ...]] = field(default_factory=dict)

    @property
    def q0(self) -> str:
        return self.start

    @property
    def qf(self) -> str:
        return self.final

    def state_index(self, q: str) -> int:
        return self.states.index(q)

    def transitions(self) -> dict[tuple[str, Symbol], tuple[Branch, ...]]:
        """Transition table with normal-form rows added for the final state."""
        if any(q == self.final for q, _ in self.delta):
            return dict(self.delta)
        full = dict(self.delta)
        for s in ALPHABET:
            full[(self.final, s)] = (Branch(UNIT, self.start, s, "R"),)
        return full

    def __hash__(self) -> int:
        return hash(serialize_machine(self))


def parse_machine(text: str) -> Machine:
    """Parse a machine document.  Physics is not checked here."""
    name = None
    states: tuple[str, ...] | None = None
    start = final = None
    rows: list[tuple[int, str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        col = raw.find(keyword) + 1
        if keyword == "machine":
            if not re.fullmatch(r"[A-Za-z_][\w\-.]*", rest):
                raise ParseError("bad machine identifier", lineno, col + len(keyword) + 1)
            name = rest
        elif keyword == "states":
            states = tuple(rest.split())
            if not states:
                raise ParseError("empty state list", lineno, col)
            if len(set(states)) != len(states):
                raise ParseError("duplicate state name", lineno, col)
        elif keyword == "start":
            start = rest
        elif keyword == "final":
            final = rest
        elif keyword == "trans":
            rows.append((lineno, raw, rest))
        else:
            raise ParseError(f"unknown keyword {keyword!r}", lineno, col)
    if name is None:
        raise ParseError("missing 'machine' line", 1, 1)
    if states is None:
        raise ParseError("missing 'states' line", 1, 1)
    for label, value in (("start", start), ("final", final)):
        if value is None:
            raise ParseError(f"missing '{label}' line", 1, 1)
        if value not in states:
            raise ParseError(f"unknown state name {value!r}", 1, 1)

    delta: dict[tuple[str, Symbol], tuple[Branch, ...]] = {}
    for lineno, raw, rest in rows:
        key, branches = _parse_trans(rest, lineno, raw, states)
        if key in delta:
            raise ParseError(f"duplicate transition for {key[0]} {key[1].to_text()}", lineno, 1)
        delta[key] = branches
    return Machine(name, states, start, final, delta)


_SYM_RE = re.compile(r"\(\s*([01_])\s*,\s*([01_])\s*\)")


def _parse_symbol(text: str, lineno: int, col: int) -> Symbol:
    m = _SYM_RE.fullmatch(text.strip())
    if not m:
        raise ParseError(f"malformed symbol {text.strip()!r}", lineno, col)
    conv = {"0": "0", "1": "1", "_": BLANK}
    return Symbol(conv[m.group(1)], conv[m.group(2)])


def _parse_trans(rest: str, lineno: int, raw: str, states: tuple[str, ...]):
    def col_of(fragment: str) -> int:
        pos = raw.find(fragment)
        return pos + 1 if pos >= 0 else 1

    lhs, arrow, rhs = rest.partition("->")
    if not arrow:
        raise ParseError("expected '->'", lineno, col_of(rest))
    lhs_parts = lhs.split(None, 1)
    if len(lhs_parts) != 2:
        raise ParseError("expected '<state> (<i>,<o>)'", lineno, col_of(lhs))
    q, sym_text = lhs_parts
    if q not in states:
        raise ParseError(f"unknown state name {q!r}", lineno, col_of(q))
    key = (q, _parse_symbol(sym_text, lineno, col_of(sym_text)))
    branches = []
    for chunk in rhs.split(";"):
        m = re.fullmatch(r"\s*(\S+)\s+(\S+)\s+(\([^)]*\))\s*([LR])\s*", chunk)
        if not m:
            raise ParseError(f"malformed branch {chunk.strip()!r}", lineno, col_of(chunk.strip() or rhs))
        amp_text, q2, sym2, move = m.groups()
        try:
            amp = Amplitude.parse(amp_text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(str(exc), lineno, col_of(amp_text)) from None
        if q2 not in states:
            raise ParseError(f"unknown state name {q2!r}", lineno, col_of(q2))
        branches.append(Branch(amp, q2, _parse_symbol(sym2, lineno, col_of(sym2)), move))
    return key, tuple(branches)


def serialize_machine(m: Machine) -> str:
    lines = [
        f"machine {m.name}",
        "states " + " ".join(m.states),
        f"start {m.start}",
        f"final {m.final}",
    ]
    order = {q: i for i, q in enumerate(m.states)}
    for (q, s) in sorted(m.delta, key=lambda k: (order[k[0]], k[1].index)):
        rhs = " ; ".join(
            f"{b.amp.to_text()} {b.state} {b.symbol.to_text()} {b.move}" for b in m.delta[(q, s)]
        )
        lines.append(f"trans {q} {s.to_text()} -> {rhs}")
    return "\n".join(lines) + "\n"


def load_machine(path) -> Machine:
    with open(path, encoding="utf-8") as fh:
        return parse_machine(fh.read())


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str]

    def as_dict(self) -> dict:
        return {"ok": self.ok, "violations": list(self.violations)}


def validate_machine(m: Machine, tol: float = 1e-12, exact: bool = True) -> ValidationReport:
    """Check the local well-formedness conditions of the transition table.

    (a) every row has unit norm, (b) distinct rows are orthogonal and
    (c) separability: for all (p1,s1,w1), (p2,s2,w2)
    sum_q conj(d(p1,s1,w1,q,L)) d(p2,s2,w2,q,R) = 0.  Together these make
    the global step operator an isometry.  With ``exact`` the checks run in
    Q(sqrt2)[i] and ``tol`` is ignored.  All violations are collected.
    """
    violations: list[str] = []
    if m.start == m.final:
        violations.append("structure: start state equals final state")
    table = m.transitions()
    for q in m.states:
        for s in ALPHABET:
            if not table.get((q, s)):
                violations.append(f"completeness: no transition for {q} {s.to_text()}")

    if exact:
        zero, add, mul = EXACT_ZERO, ExactComplex.__add__, ExactComplex.__mul__
        conj = ExactComplex.conj

        def coeff(b: Branch):
            return b.amp.exact

        def is_zero(x) -> bool:
            return x.is_zero()

        def is_one(x) -> bool:
            return x.im.is_zero() and (x.re - ONE).is_zero()
    else:
        zero = 0j

        def add(a, b):
            return a + b

        def mul(a, b):
            return a * b

        def conj(a):
            return a.conjugate()

        def coeff(b: Branch):
            return b.amp.value

        def is_zero(x) -> bool:
            return abs(x) <= tol

        def is_one(x) -> bool:
            return abs(x - 1) <= tol

    # rows as sparse vectors over (new_state, new_symbol, move)
    rows: dict[tuple[str, Symbol], dict] = {}
    for key, branches in table.items():
        vec: dict = defaultdict(lambda: zero)
        for b in branches:
            vec[(b.state, b.symbol, b.move)] = add(vec[(b.state, b.symbol, b.move)], coeff(b))
        rows[key] = dict(vec)

    def label(key) -> str:
        return f"{key[0]} {key[1].to_text()}"

    for key, vec in rows.items():
        norm = zero
        for a in vec.values():
            norm = add(norm, mul(conj(a), a))
        if not is_one(norm):
            violations.append(f"(a) row {label(key)} has squared norm {complex(norm).real:.6g}")

    by_target: dict = defaultdict(list)
    for key, vec in rows.items():
        for target in vec:
            by_target[target].append(key)
    checked = set()
    for keys in by_target.values():
        for i, k1 in enumerate(keys):
            for k2 in keys[i + 1:]:
                pair = (k1, k2) if (k1[0], k1[1].index) <= (k2[0], k2[1].index) else (k2, k1)
                if pair in checked:
                    continue
                checked.add(pair)
                v1, v2 = rows[pair[0]], rows[pair[1]]
                ip = zero
                for target, a in v1.items():
                    if target in v2:
                        ip = add(ip, mul(conj(a), v2[target]))
                if not is_zero(ip):
                    violations.append(f"(b) rows {label(pair[0])} and {label(pair[1])} are not orthogonal")

    # separability: group by (source row, written symbol) and the entered state
    left: dict = defaultdict(dict)
    right: dict = defaultdict(dict)
    for key, vec in rows.items():
        for (q2, sym, move), a in vec.items():
            side = left if move == "L" else right
            side[(key, sym)][q2] = a
    by_state_l: dict = defaultdict(list)
    for lk, states in left.items():
        for q2 in states:
            by_state_l[q2].append(lk)
    seen = set()
    for rk, rstates in right.items():
        for q2 in rstates:
            for lk in by_state_l.get(q2, ()):
                if (lk, rk) in seen:
                    continue
                seen.add((lk, rk))
                lstates = left[lk]
                total = zero
                for q, a in lstates.items():
                    if q in rstates:
                        total = add(total, mul(conj(a), rstates[q]))
                if not is_zero(total):
                    violations.append(
                        f"(c) separability fails for {label(lk[0])} writing {lk[1].to_text()} (L) "
                        f"and {label(rk[0])} writing {rk[1].to_text()} (R)"
                    )
    return ValidationReport(not violations, violations)
