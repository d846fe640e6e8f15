"""Command-line front end.

Exit codes: 0 success, 1 domain or validation failure, 2 I/O or parse failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import estimate, formulas
from .catalog import resolve_spec
from .construct import build_levels
from .errors import MoranError, SpecFormatError
from .sequences import build_prefix_tables, is_cantor_like, sup_a, validate
from .suite import run_verification

EXIT_OK, EXIT_FAIL, EXIT_IO = 0, 1, 2


class UsageFailure(Exception):
    """Bad flag value; maps to exit 1."""


@dataclass
class RunConfig:
    command: str
    spec: str
    depth: int | None
    realize: int | None
    placement: str
    seed: int | None
    theta_grid: str | None
    pairs: str
    tail: float
    out: str | None
    format: str
    jobs: int
    samples: int
    tolerance: float
    inject_overlap: bool


def parse_theta_grid(text: str) -> np.ndarray:
    """``a:b:step`` (inclusive of ``b`` up to rounding) or a comma list."""
    try:
        if ":" in text:
            a, b, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(math.floor((b - a) / step + 1e-9)) + 1
            grid = np.round(a + step * np.arange(n), 12)
        else:
            grid = np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise UsageFailure(f"cannot parse theta grid {text!r}; use a:b:step") from None
    if grid.size and ((grid <= 0).any() or (grid >= 1).any()):
        raise UsageFailure("theta grid must lie strictly inside (0, 1)")
    if (np.diff(grid) <= 0).any():
        raise UsageFailure("theta grid must be strictly increasing")
    return grid


def parse_pairs(text: str):
    try:
        kmax, lmax = (int(v) for v in text.split(","))
    except ValueError:
        raise UsageFailure(f"cannot parse --pairs {text!r}; use kmax,lmax") from None
    if kmax < 1 or lmax < 1:
        raise UsageFailure("--pairs needs positive kmax and lmax")
    return kmax, lmax


def _emit(cfg: RunConfig, text: str):
    if not text.endswith("\n"):
        text += "\n"
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _load(cfg):
    spec = resolve_spec(cfg.spec)
    report = validate(spec, cfg.depth or 256)
    return spec, report


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def cmd_validate(cfg: RunConfig) -> int:
    spec, report = _load(cfg)
    doc = {"spec": spec.name, **report.to_dict()}
    _emit(cfg, _dumps(doc))
    if not report.ok:
        for f in report.failures:
            print(f"invalid spec at k={f.k}: {f.message}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_FAIL


def _require_valid(report) -> None:
    if not report.ok:
        f = min(report.failures, key=lambda f: f.k)
        raise UsageFailure(f"spec fails validation at k={f.k}: {f.message}")


def cmd_dim(cfg: RunConfig) -> int:
    spec, report = _load(cfg)
    _require_valid(report)
    K = cfg.depth or 4096
    tables = build_prefix_tables(spec, K)
    L_max = K // 2
    tail = max(1, math.ceil(cfg.tail * L_max))
    if K < L_max + tail:
        L_max = K - tail
    a = formulas.assouad_dim_formula(tables, L_max, tail)
    b = formulas.lower_dim_bound_formula(tables, L_max, tail)
    if cfg.format == "csv":
        rows = [("assouad", a.value, a.spread, a.label),
                ("lower_bound", b.value, b.spread, b.label)]
        _emit(cfg, _csv(rows, ["kind", "value", "spread", "label"]))
    else:
        _emit(cfg, _dumps({"spec": spec.name, "depth": K, "M": report.M,
                           "c_star": report.c_star,
                           "assouad": a.to_dict(), "lower_bound": b.to_dict()}))
    return EXIT_OK


def _spectrum_row(args):
    tables, theta, tail, ls, samples = args
    row = {
        "assouad_formula": formulas.assouad_spectrum_formula(tables, theta, tail=tail),
        "lower_formula": formulas.lower_spectrum_formula(tables, theta, tail=tail),
        "assouad_scalefn": formulas.spectrum_via_scale_function(tables, theta, tail=tail),
        "lower_scalefn": formulas.spectrum_via_scale_function(tables, theta, kind="lower",
                                                              tail=tail),
    }
    if ls is not None:
        row["empirical"] = estimate.empirical_spectrum_point(ls, theta, samples=samples)
    return row


def cmd_spectrum(cfg: RunConfig) -> int:
    grid = parse_theta_grid(cfg.theta_grid or "0.1:0.9:0.05")
    spec, report = _load(cfg)
    _require_valid(report)
    if not is_cantor_like(spec):
        raise UsageFailure("spectrum formulas need a Cantor-like spec (sum a_k < infinity)")
    K = cfg.depth or 8192
    tables = build_prefix_tables(spec, K)
    ls = None
    if cfg.realize:
        mode = "cantor-like" if sup_a(spec) > 0 else "moran"
        ls = build_levels(spec, cfg.realize, cfg.placement, mode, cfg.seed)
    jobs = [(tables, float(t), cfg.tail, ls, cfg.samples) for t in grid.tolist()]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_spectrum_row, jobs))
    else:
        rows = [_spectrum_row(j) for j in jobs]
    cols = ["assouad_formula", "lower_formula", "assouad_scalefn", "lower_scalefn"]
    if ls is not None:
        cols.append("empirical")
    flagged = []
    for t, row in zip(grid.tolist(), rows):
        bad = (abs(row["assouad_formula"].value - row["assouad_scalefn"].value) > cfg.tolerance
               or abs(row["lower_formula"].value - row["lower_scalefn"].value) > cfg.tolerance
               or row["lower_formula"].value > row["assouad_formula"].value + 1e-12)
        if ls is not None:
            bad = bad or abs(row["empirical"].value - row["assouad_formula"].value) > cfg.tolerance
        flagged.append(bad)
    if cfg.format == "json":
        doc = {"spec": spec.name, "depth": K, "tolerance": cfg.tolerance,
               "points": [{"theta": t, "flagged": f,
                           **{c: r[c].to_dict() for c in cols}}
                          for t, r, f in zip(grid.tolist(), rows, flagged)]}
        _emit(cfg, _dumps(doc))
    else:
        out = [[t] + [r[c].value for c in cols] + [int(f)]
               for t, r, f in zip(grid.tolist(), rows, flagged)]
        _emit(cfg, _csv(out, ["theta"] + cols + ["flagged"]))
    if any(flagged):
        print(f"{sum(flagged)} theta value(s) disagree beyond tolerance {cfg.tolerance}",
              file=sys.stderr)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    spec, report = _load(cfg)
    _require_valid(report)
    findings = run_verification(spec, depth=cfg.realize or 12, placement=cfg.placement,
                                seed=cfg.seed, pairs=parse_pairs(cfg.pairs),
                                samples=cfg.samples, corrupt=cfg.inject_overlap)
    ok = all(f["passed"] for f in findings)
    if cfg.format == "csv":
        _emit(cfg, _csv([(f["check"], int(f["passed"])) for f in findings], ["check", "passed"]))
    else:
        _emit(cfg, _dumps({"spec": spec.name, "passed": ok, "findings": findings}))
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"validate": cmd_validate, "dim": cmd_dim, "spectrum": cmd_spectrum,
            "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", required=True,
                        help="spec JSON file or catalog name (e.g. middle-third)")
    common.add_argument("--depth", type=int, help="prefix table depth K (probe depth for validate)")
    common.add_argument("--realize", type=int, help="realization depth D")
    common.add_argument("--placement", choices=("uniform", "left"), default="uniform")
    common.add_argument("--seed", type=int, help="seed for Cantor-like ratio draws")
    common.add_argument("--theta-grid", help="a:b:step, e.g. 0.1:0.9:0.05")
    common.add_argument("--pairs", default="5,5", help="kmax,lmax for level-pair grids")
    common.add_argument("--tail", type=float, default=0.5,
                        help="tail-window fraction in (0, 1] for limsup/liminf")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--samples", type=int, default=100, help="sample points per scale")
    common.add_argument("--tolerance", type=float, default=0.02,
                        help="agreement tolerance for spectrum columns")
    common.add_argument("--inject-overlap", action="store_true",
                        help="verify: corrupt the realization (negative control)")
    p = argparse.ArgumentParser(prog="moranfrac", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check spec invariants")
    sub.add_parser("dim", parents=[common], help="Assouad dimension and lower-dimension bound")
    sub.add_parser("spectrum", parents=[common], help="spectra by formula and scale function")
    sub.add_parser("verify", parents=[common], help="run the self-check suite")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fmt = args.format or ("csv" if args.command == "spectrum" else "json")
    cfg = RunConfig(command=args.command, spec=args.spec, depth=args.depth,
                    realize=args.realize, placement=args.placement, seed=args.seed,
                    theta_grid=args.theta_grid, pairs=args.pairs, tail=args.tail,
                    out=args.out, format=fmt, jobs=args.jobs, samples=args.samples,
                    tolerance=args.tolerance, inject_overlap=args.inject_overlap)
    try:
        if not 0.0 < cfg.tail <= 1.0:
            raise UsageFailure("--tail must lie in (0, 1]")
        if cfg.jobs < 1:
            raise UsageFailure("--jobs must be >= 1")
        return COMMANDS[cfg.command](cfg)
    except (SpecFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (MoranError, UsageFailure, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
