"""Rule-based stand-in for an OpenACC compiler.

Reads a C source, looks at every loop preceded by the kernels directive and
rejects the ones a real accelerator compiler would refuse, printing
PGI-style diagnostics. On success it writes ``out`` as a tiny shell script
that reports an elapsed time, so a full compile/run pipeline can be
exercised without a GPU toolchain::

    python -m accoffload.mockcc [--model m.json] [--sleep S] SRC OUT
"""

from __future__ import annotations

import argparse
import os
import re
import stat
import sys
from pathlib import Path

from .source_model import SourceUnit, scan_loops

# calls that have device implementations
DEVICE_FUNCS = {
    "sqrt", "sqrtf", "fabs", "fabsf", "abs", "exp", "expf", "log", "logf", "sin", "sinf",
    "cos", "cosf", "tan", "pow", "powf", "fmin", "fmax", "floor", "ceil",
}
NOT_CALLS = {"for", "if", "while", "switch", "sizeof", "return", "do", "else"}

_COMPUTE = re.compile(r"^\s*#\s*pragma\s+acc\s+(kernels|parallel)\b")
_CALL = re.compile(r"\b([^\W\d]\w*)\s*\(")
_EXIT = re.compile(r"\b(break|goto|return)\b")
_WRITE = re.compile(r"\b([^\W\d]\w*)\s*\[([^\]]*)\]\s*[-+*/]?=(?!=)([^;]*);")


def marked_loops(text: str):
    """Scan ``text``; return (loops, {loop id: number of compute directives stacked above it})."""
    unit = SourceUnit("<variant>", text)
    loops = scan_loops(unit)
    lines = text.splitlines()
    compute_lines = {i + 1 for i, ln in enumerate(lines) if _COMPUTE.match(ln)}
    marked = {}
    for lp in loops:
        n, ln = 0, lp.line - 1
        while ln in compute_lines:
            n, ln = n + 1, ln - 1
        if n:
            marked[lp.id] = n
    return loops, marked


def diagnose(text: str, allow_nested: bool = False) -> list[str]:
    loops, marked = marked_loops(text)
    errors = []
    for lid, stacked in marked.items():
        lp = loops[lid]
        line = lp.line
        body = text[lp.body_span[0]:lp.body_span[1]]
        if stacked > 1 and not allow_nested:
            errors.append(f"PGCC-S-0155-Compute regions may not be nested (line {line})")
        for oid in marked:
            other = loops[oid]
            if not allow_nested and oid != lid and lp.body_span[0] <= other.header_start < lp.body_span[1]:
                errors.append(f"PGCC-S-0155-Compute regions may not be nested (line {other.line}, enclosing loop at line {line})")
        for m in _CALL.finditer(body):
            name = m.group(1)
            if name not in NOT_CALLS and name not in DEVICE_FUNCS:
                errors.append(f"PGCC-S-0155-Accelerator restriction: call to '{name}' with no acc routine information (line {line})")
        for m in _EXIT.finditer(body):
            errors.append(f"PGCC-S-0155-Accelerator restriction: loop exit via {m.group(1)} not allowed in compute region (line {line})")
        for m in _WRITE.finditer(body):
            name, idx, rhs = m.group(1), m.group(2).replace(" ", ""), m.group(3)
            for r in re.finditer(rf"\b{re.escape(name)}\s*\[([^\]]*)\]", rhs):
                if r.group(1).replace(" ", "") != idx:
                    errors.append(f"PGCC-S-0155-Loop carried dependence of {name} prevents parallelization (line {line})")
                    break
    return errors


def model_time_for(text: str, model_path: str) -> float:
    from .sim_model import load_model
    model = load_model(model_path)
    loops, marked = marked_loops(text)
    genome = tuple(1 if lp.id in marked else 0 for lp in loops)
    return model.model_time(genome)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="mockcc")
    ap.add_argument("src")
    ap.add_argument("out")
    ap.add_argument("--model", help="sim model JSON; the executable reports its time")
    ap.add_argument("--sleep", type=float, default=0.0, help="seconds the executable sleeps")
    ap.add_argument("--allow-nested", action="store_true",
                    help="accept nested compute regions (mirrors a cost model that prices them instead)")
    ap.add_argument("--fail-run", action="store_true", help="executable exits nonzero")
    args = ap.parse_args(argv)

    text = Path(args.src).read_text(encoding="utf-8", errors="surrogateescape")
    errors = diagnose(text, args.allow_nested)
    if errors:
        for e in errors:
            print(e, file=sys.stderr)
        print(f"PGCC/x86 Linux: compilation aborted ({len(errors)} errors)", file=sys.stderr)
        return 2

    t = model_time_for(text, args.model) if args.model else 1.0
    script = ["#!/bin/sh"]
    if args.sleep:
        script.append(f"sleep {args.sleep}")
    script.append(f'echo "elapsed: {t!r} s"')
    if args.fail_run:
        script.append('echo "Segmentation fault" >&2; exit 139')
    Path(args.out).write_text("\n".join(script) + "\n")
    os.chmod(args.out, os.stat(args.out).st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)
    return 0


if __name__ == "__main__":
    sys.exit(main())
