"""Code lengths from halting-space dimensions and blind prefix coding."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction


class CodingError(ValueError):
    pass


def ceil_log2(d: int) -> int:
    return (d - 1).bit_length()


def code_lengths_from_dims(n: int, dims) -> list[int]:
    """l_i = n + 1 - ceil(log2 dim_i)."""
    dims = list(dims)
    if any(d < 1 for d in dims):
        raise CodingError("every halting-space dimension must be at least 1")
    if sum(dims) > (1 << n):
        raise CodingError(f"dimensions sum to {sum(dims)} > 2^{n}; Kraft may fail")
    return [n + 1 - ceil_log2(d) for d in dims]


def kraft_sum(lengths) -> Fraction:
    return sum((Fraction(1, 1 << ell) for ell in lengths), Fraction(0))


def kraft_holds(lengths) -> tuple[bool, Fraction]:
    """(sum 2^-l <= 1, exact slack 1 - sum 2^-l)."""
    slack = 1 - kraft_sum(lengths)
    return slack >= 0, slack


@dataclass(frozen=True)
class PrefixCode:
    words: tuple[str, ...]

    @property
    def lengths(self) -> list[int]:
        return [len(w) for w in self.words]

    def is_prefix_free(self) -> bool:
        ws = sorted(self.words)
        return all(not b.startswith(a) for a, b in zip(ws, ws[1:]))

    def to_json(self) -> str:
        return json.dumps({"lengths": self.lengths, "words": list(self.words)})

    def certificate(self) -> list[tuple[Fraction, Fraction]]:
        """Dyadic interval [0.w, 0.w + 2^-len(w)) of every word, in word order.

        The words are prefix-free exactly when these intervals are pairwise
        disjoint, and disjoint subintervals of [0, 1) have total length at
        most 1, so the list witnesses both properties at once.
        """
        return [_interval(w) for w in self.words]

    def check_certificate(self) -> bool:
        spans = sorted(self.certificate())
        inside = all(0 <= lo and hi <= 1 for lo, hi in spans)
        return inside and all(a[1] <= b[0] for a, b in zip(spans, spans[1:]))


def _interval(word: str) -> tuple[Fraction, Fraction]:
    lo = Fraction(int(word, 2), 1 << len(word)) if word else Fraction(0)
    return lo, lo + Fraction(1, 1 << len(word))


def kraft_witness(lengths) -> list[tuple[Fraction, Fraction]] | None:
    """Classical Kraft construction: disjoint dyadic intervals, one per length.

    Lengths are placed shortest first at the running sum of 2^-l, which
    keeps every left end aligned to its own interval size.  The intervals
    are returned in the original order, or None when Kraft fails.
    """
    lengths = list(lengths)
    out: list = [None] * len(lengths)
    pos = Fraction(0)
    for i in sorted(range(len(lengths)), key=lambda j: lengths[j]):
        size = Fraction(1, 1 << lengths[i])
        out[i] = (pos, pos + size)
        pos += size
    return out if pos <= 1 else None


def _first_free(length: int, used: list[str]) -> str | None:
    """Lexicographically first word of ``length`` that is no prefix or extension of ``used``.

    Candidates are scanned in order, skipping whole blocks blocked by a
    shorter used word, so the cost is linear in the number of used words.
    """
    if length == 0:
        return "" if not used else None
    blocked = []
    for w in used:
        if len(w) <= length:
            lo = int(w, 2) << (length - len(w)) if w else 0
            blocked.append((lo, lo + (1 << (length - len(w)))))
        else:
            lo = int(w[:length], 2)
            blocked.append((lo, lo + 1))
    blocked.sort()
    x = 0
    for lo, hi in blocked:
        if x < lo:
            break
        x = max(x, hi)
    if x >= (1 << length):
        return None
    return format(x, f"0{length}b")


def blind_prefix_code(lengths) -> PrefixCode:
    """Online prefix code: word i depends only on lengths 1..i.

    Word 1 is 0^{l_1}; every later word is the lexicographically first
    string of its length that is neither a prefix nor an extension of an
    earlier word.  Each prefix of ``lengths`` must satisfy Kraft.
    """
    lengths = list(lengths)
    if any(ell < 0 for ell in lengths):
        raise CodingError("code lengths must be nonnegative")
    words: list[str] = []
    total = Fraction(0)
    for i, ell in enumerate(lengths):
        total += Fraction(1, 1 << ell)
        if total > 1:
            raise CodingError(f"Kraft inequality fails at position {i + 1}")
        w = _first_free(ell, words)
        if w is None:
            raise CodingError(f"no free code word of length {ell} at position {i + 1}")
        words.append(w)
    code = PrefixCode(tuple(words))
    if not code.check_certificate():
        raise CodingError("interval certificate failed: code words overlap")
    return code
