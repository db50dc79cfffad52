"""Command-line front end.

Exit codes: 0 success, 1 parse or usage error, 2 a machine that is not
well formed (``validate``), 3 a runtime failure of the computation such
as a non-halting input, reported as structured JSON.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .approx import ToyModeError
from .bundled import resolve_machine_path
from .coding import code_lengths_from_dims
from .halting import approx_spectrum, check_spectrum_bound, exact_spectrum
from .machine import ParseError, load_machine, validate_machine
from .qubits import QubitString, parse_input
from .sim import HorizonError, NotHalting, SizeGuardError, apply_machine, isometry_defect, build_space
from .subspace import trace_distance
from .universal import (
    DecodeError,
    EncodedProgram,
    EncodeError,
    decode_with_trace,
    direct_output,
    encode,
)

EXIT_OK, EXIT_PARSE, EXIT_ILL_FORMED, EXIT_RUNTIME = 0, 1, 2, 3
RUNTIME_ERRORS = (NotHalting, EncodeError, DecodeError, HorizonError, SizeGuardError, ToyModeError)


@dataclass(frozen=True)
class RunConfig:
    command: str
    machine_path: str | None = None
    n: int | None = None
    t_max: int | None = None
    delta: Fraction | None = None
    tol: float = 1e-12
    output_path: str | None = None
    format: str = "json"
    seed: int = 0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.delta is not None and not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be json or csv")


class Report:
    """A JSON document plus the scalar rows used for CSV output."""

    def __init__(self, doc: dict, rows: list[dict] | None = None, code: int = EXIT_OK):
        self.doc = doc
        self.rows = rows if rows is not None else [_scalars(doc)]
        self.code = code

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(self.doc, sort_keys=True, indent=2) + "\n"
        buf = io.StringIO()
        keys = sorted({k for r in self.rows for k in r})
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows)
        return buf.getvalue()


def _scalars(doc: dict) -> dict:
    return {k: v for k, v in doc.items() if isinstance(v, (str, int, float, bool)) or v is None}


def _error(kind: str, exc: Exception, code: int, **extra) -> Report:
    return Report({"error": kind, "message": str(exc), **extra}, code=code)


def _fraction(text: str) -> Fraction:
    return Fraction(text)


def _load(path: str):
    return load_machine(resolve_machine_path(path))


def _input(text: str, n: int | None) -> QubitString:
    return parse_input(text, n)


def _fixed_input(q: QubitString):
    """Fixed-length density on H_n for the encoder."""
    n = q.base_length
    return q.block(n), n


# ----------------------------------------------------------------------------
# commands


def cmd_validate(args) -> Report:
    try:
        m = _load(args.machine)
    except ParseError as exc:
        return _error("parse", exc, EXIT_PARSE, line=exc.line, column=exc.column)
    rep = validate_machine(m, tol=args.tol)
    doc = {"machine": m.name, **rep.as_dict()}
    if rep.ok:
        doc["isometry_defect"] = isometry_defect(build_space(m, args.n, args.tmax), m)
    rows = [{"machine": m.name, "ok": rep.ok, "violations": len(rep.violations)}]
    return Report(doc, rows, EXIT_OK if rep.ok else EXIT_ILL_FORMED)


def cmd_simulate(args) -> Report:
    m = _load(args.machine)
    q = _input(args.input, args.n)
    t, out = apply_machine(m, q, args.steps, n=q.base_length)
    pure = out.pure_vector()
    doc = {
        "machine": m.name,
        "halting_time": t,
        "output": json.loads(out.to_json()),
        "output_pure": pure is not None,
        "output_base_length": out.base_length,
    }
    rows = [{"machine": m.name, "halting_time": t, "output_base_length": out.base_length}]
    return Report(doc, rows)


def cmd_spectrum(args) -> Report:
    m = _load(args.machine)
    if args.mode == "exact":
        spec = exact_spectrum(m, args.n, args.tmax)
    else:
        spec = approx_spectrum(m, args.n, args.tmax, args.delta)
    doc = spec.to_dict(m.name, with_basis=args.basis)
    bound_ok = check_spectrum_bound(spec)
    doc["dimension_bound"] = bound_ok
    # code lengths are only meaningful when the dimensions fit into H_n
    doc["code_lengths"] = code_lengths_from_dims(args.n, spec.dims) if bound_ok else None
    rows = [
        {"t": e["t"], "dim": e["dim"], "epsilon": e["epsilon"] or ""} for e in doc["entries"]
    ]
    return Report(doc, rows)


def cmd_encode(args) -> Report:
    m = _load(args.machine)
    rho, _ = _fixed_input(_input(args.input, args.n))
    prog = encode(m, rho, args.tmax, args.mode, args.levels)
    data = prog.to_bytes()
    if args.program:
        Path(args.program).write_bytes(data)
    doc = {"machine": m.name, **prog.describe(), "bytes": len(data), "program": args.program}
    return Report(doc)


def cmd_decode(args) -> Report:
    prog = EncodedProgram.from_bytes(Path(args.program).read_bytes())
    tr = decode_with_trace(prog, args.delta, args.tmax)
    doc = {
        "tau": tr.tau,
        "halting_number": tr.halting_number,
        "code_word": prog.code_word,
        "output": json.loads(tr.output.to_json()),
        "output_base_length": tr.output.base_length,
        "notes": tr.notes,
    }
    rows = [{"tau": tr.tau, "halting_number": tr.halting_number, "output_base_length": tr.output.base_length}]
    return Report(doc, rows)


def cmd_roundtrip(args) -> Report:
    m = _load(args.machine)
    rho, n = _fixed_input(_input(args.input, args.n))
    prog = encode(m, rho, args.tmax, args.mode, args.levels)
    tr = decode_with_trace(prog, args.delta, args.tmax)
    dist = trace_distance(tr.output, direct_output(m, rho, args.tmax))
    doc = {
        "machine": m.name,
        "n": n,
        "tau": tr.tau,
        "code_word": prog.code_word,
        "quantum_length": prog.quantum_length,
        "header_length": prog.header_length,
        "total_length": prog.total_length,
        "trace_distance": dist,
        "delta": str(args.delta),
        "within_delta": dist < args.delta,
        "notes": tr.notes,
    }
    return Report(doc)


def cmd_selftest(args) -> Report:
    from .selftest import run_selftest

    rep = run_selftest(args.seed, args.force_failure)
    rows = [{"suite": s["name"], "passed": s["passed"], "checks": s["checks"], "worst": s["worst"]}
            for s in rep["suites"]]
    return Report(rep, rows, EXIT_OK if rep["passed"] else 1)


# ----------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qtmlab", description="Quantum Turing machine laboratory.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", help="also write the report to this file")
    sub = p.add_subparsers(dest="command", required=True)

    def machine_arg(sp, positional=False):
        if positional:
            sp.add_argument("machine", help="machine file or bundled fixture name")
        else:
            sp.add_argument("--machine", required=True, help="machine file or bundled fixture name")

    sp = sub.add_parser("validate", parents=[common], help="check well-formedness")
    machine_arg(sp, positional=True)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--n", type=int, default=2, help="input length for the isometry check")
    sp.add_argument("--tmax", type=int, default=6)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("simulate", parents=[common], help="run a machine until it halts")
    machine_arg(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--steps", type=int, required=True, help="horizon")
    sp.add_argument("--n", type=int, default=None)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("spectrum", parents=[common], help="halting spectrum")
    machine_arg(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--tmax", type=int, required=True)
    sp.add_argument("--mode", choices=("exact", "approx"), default="exact")
    sp.add_argument("--delta", type=_fraction, default=Fraction(1, 5))
    sp.add_argument("--basis", action="store_true", help="include basis vectors")
    sp.set_defaults(func=cmd_spectrum)

    for name, func, help_ in (
        ("encode", cmd_encode, "encode an input as a universal program"),
        ("roundtrip", cmd_roundtrip, "encode, decode and compare with direct simulation"),
    ):
        sp = sub.add_parser(name, parents=[common], help=help_)
        machine_arg(sp)
        sp.add_argument("--input", required=True)
        sp.add_argument("--n", type=int, default=None)
        sp.add_argument("--tmax", type=int, required=True)
        sp.add_argument("--mode", choices=("exact", "approx"), default="exact")
        sp.add_argument("--levels", type=int, default=0, help="fine-tuning levels (approx mode)")
        sp.set_defaults(func=func)
        if name == "encode":
            sp.add_argument("--program", help="file for the binary program")
        else:
            sp.add_argument("--delta", type=_fraction, default=Fraction(1, 100))

    sp = sub.add_parser("decode", parents=[common], help="run the universal decoder")
    sp.add_argument("--program", required=True)
    sp.add_argument("--delta", type=_fraction, default=Fraction(1, 100))
    sp.add_argument("--tmax", type=int, required=True)
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("selftest", parents=[common], help="seeded invariant suites")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--force-failure", action="store_true",
                    help="add a mutated, non-unitary fixture to the machine suite")
    sp.set_defaults(func=cmd_selftest)
    return p


def _config(args) -> RunConfig:
    return RunConfig(
        command=args.command,
        machine_path=getattr(args, "machine", None),
        n=getattr(args, "n", None),
        t_max=getattr(args, "tmax", getattr(args, "steps", None)),
        delta=getattr(args, "delta", None),
        tol=getattr(args, "tol", 1e-12),
        output_path=args.output,
        format=args.format,
        seed=getattr(args, "seed", 0),
    )


def run(argv: list[str] | None = None) -> tuple[int, str]:
    """Parse ``argv``, run the command and return (exit code, rendered report)."""
    args = build_parser().parse_args(argv)
    try:
        _config(args)
        report = args.func(args)
    except ParseError as exc:
        report = _error("parse", exc, EXIT_PARSE, line=exc.line, column=exc.column)
    except FileNotFoundError as exc:
        report = _error("file", exc, EXIT_PARSE)
    except RUNTIME_ERRORS as exc:
        report = _error(type(exc).__name__, exc, EXIT_RUNTIME)
    except ValueError as exc:
        report = _error("usage", exc, EXIT_PARSE)
    text = report.render(args.format)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    return report.code, text


def main(argv: list[str] | None = None) -> int:
    code, text = run(argv)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
