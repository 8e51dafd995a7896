"""Command-line driver: ``arithbf <command> --fixture <path> ...``.

Exit codes: 0 all checks passed, 1 some check failed, 2 the fixture is
malformed or fails validation, 3 a lifting obstruction was hit.  In json
mode the report goes to stdout (sorted keys, no timings); timings and
diagnostics always go to stderr so that reports stay byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .bfcore import bf_closed, default_section, global_bf, ordered, space_of_fields, trivialize
from .groupcoh import cohomology
from .quantum import fiber_sizes, partition_relative
from .selmerctp import (
    MODULE_KEYS,
    check_selmer_exactness,
    ctp_kernels,
    fixture_triple,
    module_by_key,
    selmer_group,
    selmer_kernel,
)
from .sitemodel import FIXTURE_DIR, FixtureError, ObstructionNonzero, SiteFixture, load_fixture, validate_fixture
from .suites import SUITES, onshell_suite, run_suite

SCHEMA_VERSION = 1

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_OBSTRUCTION = 0, 1, 2, 3

COMMANDS = ("validate", "cohomology", "selmer", "ctp", "bf", "partition", "verify")
SELMER_WHICH = ("M", "M1dual", "M2", "Mdual")


@dataclass
class RunConfig:
    fixture: str
    command: str
    seed: int = 0
    resamples: int = 10
    fmt: str = "human"
    sets: dict[str, tuple[str, ...]] = field(default_factory=dict)
    module: str = "M"
    degree: int = 1
    place: str | None = None
    which: str = "M"
    suite: str | None = None

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def echo(self) -> dict:
        out: dict[str, Any] = {"command": self.command, "seed": self.seed, "resamples": self.resamples}
        if self.sets:
            out["sets"] = {k: list(v) for k, v in sorted(self.sets.items())}
        if self.command == "cohomology":
            out.update(module=self.module, degree=self.degree, place=self.place)
        if self.command == "selmer":
            out["which"] = self.which
        if self.command == "verify":
            out["suite"] = self.suite
        return out


def jsonable(x: Any) -> Any:
    """Recursively convert tuples, numpy scalars and QmodZ-like values to JSON types."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, float):
        return x
    return str(x)


def parse_sets(items: Sequence[str]) -> dict[str, tuple[str, ...]]:
    out: dict[str, tuple[str, ...]] = {}
    for item in items:
        name, sep, rest = item.partition("=")
        if not sep or not name:
            raise argparse.ArgumentTypeError(f"--set expects NAME=v1,v2 (got {item!r})")
        out[name.strip()] = tuple(s.strip() for s in rest.split(",") if s.strip())
    return out


# ---------------------------------------------------------------------------
# Commands; each returns (result dict, passed flag)


def _elements(xs) -> list:
    return [list(x) for x in xs]


def cmd_validate(f: SiteFixture, cfg: RunConfig) -> tuple[dict, bool]:
    rep = validate_fixture(f)
    return rep.as_dict(), rep.passed


def cmd_cohomology(f: SiteFixture, cfg: RunConfig) -> tuple[dict, bool]:
    A = f.D if cfg.module == "D" else module_by_key(f, cfg.module)
    if cfg.place is not None:
        H = f.place(cfg.place).H(A, cfg.degree)
    else:
        H = cohomology(A, cfg.degree)
    basis = [{"class": list(e), "cocycle": c.table.tolist()} for e, c in zip(H.group.basis(), H.basis())]
    result = {
        "module": cfg.module,
        "degree": cfg.degree,
        "place": cfg.place,
        "invariant_factors": list(H.group.invariant_factors),
        "order": H.group.order,
        "basis": basis,
    }
    return result, True


def _condition(f: SiteFixture, which: str):
    triple = fixture_triple(f)
    W1p, Wp, _ = triple.perp(f)
    return {"M": triple.W, "M2": triple.W2, "M1dual": W1p, "Mdual": Wp}[which]


def cmd_selmer(f: SiteFixture, cfg: RunConfig) -> tuple[dict, bool]:
    cond = _condition(f, cfg.which)
    sel = selmer_group(f, cond)
    other = selmer_kernel(f, cond)
    agree = other == sel.subgroup
    exact = check_selmer_exactness(f)
    result = {
        "which": cfg.which,
        "order": sel.order,
        "generators": _elements(sel.subgroup.generators()),
        "elements": _elements(sel.elements),
        "kernel_route_agrees": agree,
        "exactness": exact.as_dict(),
    }
    return result, agree and exact.passed


def cmd_ctp(f: SiteFixture, cfg: RunConfig) -> tuple[dict, bool]:
    rep = ctp_kernels(f)
    return rep.as_dict(), rep.passed


def _set(cfg: RunConfig, f: SiteFixture, name: str) -> tuple[str, ...]:
    S = cfg.sets.get(name, ())
    for s in S:
        f.place(s)
    return ordered(f, S)


def cmd_bf(f: SiteFixture, cfg: RunConfig) -> tuple[dict, bool]:
    S = _set(cfg, f, "S")
    rows = []
    if not S:
        for rho in space_of_fields(f).elements:
            rows.append({"rho1": list(rho.rho1), "rho2": list(rho.rho2), "value": str(bf_closed(f, rho))})
        return {"S": [], "closed": True, "table": rows}, True
    xi = default_section(f, S)
    for rho in space_of_fields(f, S).elements:
        v = trivialize(f, xi, global_bf(f, S, rho))
        rows.append({"rho1": list(rho.rho1), "rho2": list(rho.rho2), "value": str(v)})
    return {"S": list(S), "closed": False, "table": rows}, True


def cmd_partition(f: SiteFixture, cfg: RunConfig) -> tuple[dict, bool]:
    S = _set(cfg, f, "S")
    if not S:
        rep = onshell_suite(f)
        return {"S": [], "onshell": rep}, rep["passed"]
    Z = partition_relative(f, S)
    sizes = fiber_sizes(f, S)
    fibers = [
        {"fiber": [list(x) for x in k], "value": list(Z(k).coeffs), "fields": sizes[k]}
        for k in Z.fibers
    ]
    return {"S": list(S), "fibers": fibers}, True


def cmd_verify(f: SiteFixture, cfg: RunConfig) -> tuple[dict, bool]:
    rep = run_suite(cfg.suite, f, cfg.seed, cfg.resamples)
    return rep, bool(rep["passed"])


HANDLERS: dict[str, Callable[[SiteFixture, RunConfig], tuple[dict, bool]]] = {
    "validate": cmd_validate,
    "cohomology": cmd_cohomology,
    "selmer": cmd_selmer,
    "ctp": cmd_ctp,
    "bf": cmd_bf,
    "partition": cmd_partition,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# Driver


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fixture", required=True, help="fixture JSON path, or F1/F2/F3 for a shipped fixture")
    common.add_argument("--set", dest="sets", action="append", default=[], metavar="NAME=v1,v2")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--resamples", type=int, default=10)
    common.add_argument("--format", dest="fmt", choices=("human", "json"), default="human")

    p = argparse.ArgumentParser(prog="arithbf", description="Finite arithmetic BF theory toolkit.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check every fixture axiom")
    c = sub.add_parser("cohomology", parents=[common], help="H^p with representative cocycles")
    c.add_argument("--module", choices=MODULE_KEYS + ("D",), default="M")
    c.add_argument("--degree", type=int, choices=(0, 1, 2, 3), default=1)
    c.add_argument("--place", default=None)
    s = sub.add_parser("selmer", parents=[common], help="Selmer groups and exactness")
    s.add_argument("--which", choices=SELMER_WHICH, default="M")
    sub.add_parser("ctp", parents=[common], help="Cassels-Tate table and kernels")
    sub.add_parser("bf", parents=[common], help="BF values over F(X_S)")
    sub.add_parser("partition", parents=[common], help="partition functions")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", choices=SUITES)
    return p


def _resolve_fixture(path: str) -> SiteFixture:
    """A file path, or the bare name of a shipped fixture (F1, F2, F3)."""
    shipped = FIXTURE_DIR / f"{path}.json"
    if "/" not in path and not path.endswith(".json") and shipped.exists():
        return load_fixture(shipped)
    return load_fixture(path)


def _emit(report: dict, cfg: RunConfig, out) -> None:
    if cfg.fmt == "json":
        out.write(json.dumps(jsonable(report), sort_keys=True, indent=2) + "\n")
        return
    status = "PASS" if report.get("passed") else "FAIL"
    out.write(f"arithbf {cfg.command}: {status}\n")
    if "fixture" in report:
        out.write(f"fixture {report['fixture']['name']} sha256={report['fixture']['digest'][:16]}\n")
    if "error" in report:
        out.write(f"error: {report['error']['kind']}: {report['error']['message']}\n")
    result = report.get("result")
    if isinstance(result, dict):
        for key in sorted(result):
            val = jsonable(result[key])
            text = json.dumps(val, sort_keys=True)
            if len(text) > 200:
                text = text[:197] + "..."
            out.write(f"  {key}: {text}\n")


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        sets = parse_sets(args.sets)
    except argparse.ArgumentTypeError as e:
        err.write(f"arithbf: {e}\n")
        return EXIT_INVALID
    cfg = RunConfig(
        fixture=args.fixture,
        command=args.command,
        seed=args.seed,
        resamples=args.resamples,
        fmt=args.fmt,
        sets=sets,
        module=getattr(args, "module", "M"),
        degree=getattr(args, "degree", 1),
        place=getattr(args, "place", None),
        which=getattr(args, "which", "M"),
        suite=getattr(args, "suite", None),
    )
    report: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "config": cfg.echo()}
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        f = _resolve_fixture(cfg.fixture)
        report["fixture"] = {"name": f.name, "digest": f.digest}
        validation = validate_fixture(f)
        if cfg.command == "validate" or not validation.passed:
            report["result"] = validation.as_dict()
            report["passed"] = validation.passed
            if not validation.passed:
                report["error"] = {"kind": "ValidationError", "message": ", ".join(validation.failed())}
                code = EXIT_INVALID
        else:
            result, passed = HANDLERS[cfg.command](f, cfg)
            report["result"] = result
            report["passed"] = passed
            code = EXIT_OK if passed else EXIT_FAIL
    except (FixtureError, OSError, json.JSONDecodeError) as e:
        report["passed"] = False
        report["error"] = {"kind": type(e).__name__, "message": str(e)}
        code = EXIT_INVALID
    except ObstructionNonzero as e:
        report["passed"] = False
        report["error"] = {"kind": "ObstructionNonzero", "message": str(e)}
        code = EXIT_OBSTRUCTION
    elapsed = time.perf_counter() - t0
    _emit(report, cfg, out)
    err.write(f"arithbf {cfg.command}: exit {code} in {elapsed:.3f}s\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
