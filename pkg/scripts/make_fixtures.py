"""Regenerate the bundled .qtm fixtures.

Each fixture lists the transitions that matter for its behaviour; every
other (state, symbol) row of a non-final state is sent to a fresh unused
target so that the table becomes a bijection onto the non-start targets.
Every state is entered from a single direction, which makes the
separability condition hold trivially.  Final-state rows are left out
and supplied by the normal-form completion in the loader.
"""

from __future__ import annotations

import sys
from pathlib import Path

from qtmlab.machine import ALPHABET, Symbol, validate_machine, parse_machine

R2 = "1r"
NR2 = "-1r"
OUT_DIR = Path(__file__).resolve().parents[1] / "src" / "qtmlab" / "fixtures"


def sym(text: str) -> Symbol:
    conv = {"0": "0", "1": "1", "_": "#"}
    return Symbol(conv[text[0]], conv[text[1]])


def build(name, states, direction, rows, comment):
    """``rows`` maps (state, 'io') to a list of (amp, state', 'io') branches."""
    start, final = states[0], states[-1]
    explicit = {(q, sym(s)): [(a, q2, sym(s2)) for a, q2, s2 in br] for (q, s), br in rows.items()}
    used = {(q2, s2) for br in explicit.values() for _, q2, s2 in br}
    free = [(q, s) for q in states if q != start for s in ALPHABET if (q, s) not in used]
    table = {}
    for q in states:
        if q == final:
            continue
        for s in ALPHABET:
            if (q, s) in explicit:
                table[(q, s)] = explicit[(q, s)]
            else:
                q2, s2 = free.pop(0)
                table[(q, s)] = [("1", q2, s2)]
    assert not free
    lines = [f"# {line}" for line in comment.strip().splitlines()]
    lines += [f"machine {name}", "states " + " ".join(states), f"start {start}", f"final {final}"]
    for (q, s), br in table.items():
        rhs = " ; ".join(f"{a} {q2} {s2.to_text()} {direction[q2]}" for a, q2, s2 in br)
        lines.append(f"trans {q} {s.to_text()} -> {rhs}")
    text = "\n".join(lines) + "\n"
    report = validate_machine(parse_machine(text))
    if not report.ok:
        raise SystemExit(f"{name}: {report.violations}")
    return text


def every(io_list, fn):
    return {io: fn(io) for io in io_list}


ALL = ["00", "01", "0_", "10", "11", "1_", "_0", "_1", "__"]


def fixtures():
    out = {}
    out["move-halt"] = build(
        "move-halt", ["q0", "qf"], {"qf": "R"},
        {("q0", s): [("1", "qf", s)] for s in ALL},
        "Halts after exactly one step on every input; the tape is untouched.",
    )
    rows = {}
    for s in ALL:
        rows[("q0", s)] = [("1", "b" if s[0] == "1" else "a", s)]
        rows[("b", s)] = [("1", "c", s)]
    for x in "01_":
        rows[("a", x + "_")] = [("1", "qf", x + "0")]
        rows[("c", x + "_")] = [("1", "qf", x + "1")]
    out["delay-by-first-bit"] = build(
        "delay-by-first-bit", ["q0", "a", "b", "c", "qf"],
        {"a": "R", "b": "R", "c": "R", "qf": "R"}, rows,
        "Halts at t=2 when the first input bit is 0 (or the input is empty)\n"
        "and at t=3 when it is 1.",
    )
    for name, write in (("copy-halt", lambda x: x + x), ("move-to-output", lambda x: "_" + x)):
        rows = {("q0", s): [("1", "a", s)] for s in ALL}
        rows[("a", "__")] = [("1", "c", "__")]
        rows[("c", "0_")] = [("1", "c", write("0"))]
        rows[("c", "1_")] = [("1", "c", write("1"))]
        rows[("c", "__")] = [("1", "qf", "__")]
        what = "copies" if name == "copy-halt" else "moves"
        out[name] = build(
            name, ["q0", "a", "c", "qf"], {"a": "L", "c": "R", "qf": "R"}, rows,
            f"Steps left, returns to cell 0, then {what} the input track onto the\n"
            "output track cell by cell.  Inputs of length n halt at t=n+3.",
        )
    rows = {}
    for o in "01_":
        rows[("q0", "0" + o)] = [(R2, "qf", "0" + o), (R2, "qf", "1" + o)]
        rows[("q0", "1" + o)] = [(R2, "qf", "0" + o), (NR2, "qf", "1" + o)]
        rows[("q0", "_" + o)] = [("1", "qf", "_" + o)]
    out["hadamard-halt"] = build(
        "hadamard-halt", ["q0", "qf"], {"qf": "R"}, rows,
        "Applies a Hadamard gate to the input bit under the head and halts at t=1.",
    )
    rows = {}
    for x in "01":
        rows[("q0", x + "_")] = [(R2, "h", x + "0"), (R2 if x == "0" else NR2, "h", x + "1")]
        rows[("q0", x + "0")] = [(R2, "h", x + "0"), (NR2 if x == "0" else R2, "h", x + "1")]
    rows[("q0", "__")] = [("1", "h", "__")]
    for s in ALL:
        rows[("h", s)] = [("1", "qf", s)]
    out["hadamard-to-output"] = build(
        "hadamard-to-output", ["q0", "h", "qf"], {"h": "R", "qf": "R"}, rows,
        "Writes H|x> onto the output track at cell 0, where x is the first\n"
        "input bit, and halts at t=2.",
    )
    rows = {("q0", x + "_"): [("1", "l", x + "0")] for x in "01_"}
    rows[("l", "__")] = [("1", "l", "__")]
    out["loop-forever"] = build(
        "loop-forever", ["q0", "l", "qf"], {"l": "L", "qf": "R"}, rows,
        "Marks cell 0 and then walks left forever; never enters the final state.",
    )
    return out


def main(argv=None):
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for name, text in fixtures().items():
        (OUT_DIR / f"{name}.qtm").write_text(text, encoding="utf-8")
        print(f"wrote {name}.qtm")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
