"""Aggregated self-checks run by ``moranfrac verify``."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import formulas, oracles
from .construct import LevelStructure, build_levels, verify_structure
from .estimate import (check_counting_lemmas, check_measure_properties, greedy_cover_count)
from .sequences import build_prefix_tables, is_cantor_like, sup_a


def random_cover_instance(rng: np.random.Generator, max_segments: int = 12, grid: int = 256):
    """Sorted disjoint segments in ``[0, 1]`` and a ball width, on a dyadic grid.

    Endpoints are multiples of ``1/grid``, exactly representable in floating
    point, so exact touches between balls and segments occur often.
    """
    m = int(rng.integers(1, max_segments + 1))
    pts = np.sort(rng.choice(np.arange(0, grid + 1), size=2 * m, replace=False))
    # allow degenerate and touching segments now and then
    lo, hi = pts[0::2].copy(), pts[1::2].copy()
    for i in range(m):
        if rng.random() < 0.1:
            hi[i] = lo[i]
        if i + 1 < m and rng.random() < 0.1:
            lo[i + 1] = hi[i]
    width = int(rng.integers(grid // 64, grid // 2 + 1))
    segs = [(Fraction(int(a), grid), Fraction(int(b), grid)) for a, b in zip(lo, hi)]
    return segs, Fraction(width, grid)


def greedy_vs_exhaustive(n_instances: int = 1000, seed: int = 0, max_segments: int = 12):
    rng = np.random.default_rng(seed)
    mismatches = []
    for i in range(n_instances):
        segs, w = random_cover_instance(rng, max_segments)
        exact = oracles.exhaustive_min_cover(segs, w)
        lo = np.array([float(a) for a, _ in segs])
        hi = np.array([float(b) for _, b in segs])
        greedy = greedy_cover_count(lo, hi, float(w))
        if greedy != exact:
            mismatches.append({"instance": i, "segments": [[str(a), str(b)] for a, b in segs],
                               "width": str(w), "greedy": greedy, "exhaustive": exact})
    return mismatches


def oracle_equivalence(spec, K: int = 256, L_max: int = 128, thetas=(0.3, 0.5, 0.7),
                       rtol: float = 1e-10):
    """Largest relative deviation between formula traces and their brute-force twins."""
    tables = build_prefix_tables(spec, K)
    sup, _, inf, _ = formulas.window_ratio_sweep(tables, L_max)
    bsup, binf = oracles.brute_window_traces(spec, K, L_max)
    worst = {"assouad_trace": _rel(sup, bsup), "lower_trace": _rel(inf, binf)}
    if is_cantor_like(spec):
        for t in thetas:
            ks = np.arange(1, formulas.max_spectrum_k(tables, t) + 1)
            trace, _ = formulas.spectrum_trace(tables, t, ks)
            worst[f"spectrum_trace_theta_{t:g}"] = _rel(
                trace, oracles.brute_spectrum_trace(spec, t, ks, K))
    return worst, all(v <= rtol for v in worst.values())


def _rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))) if len(a) else 0.0


def inject_overlap(ls: LevelStructure) -> LevelStructure:
    """Copy of ``ls`` whose second deepest interval is slid halfway onto the first."""
    lefts = [np.array(x) for x in ls.lefts]
    D = ls.depth
    lefts[D][1] = lefts[D][0] + 0.5 * ls.lengths[D][0]
    return LevelStructure(spec=ls.spec, depth=D, placement=ls.placement, mode=ls.mode,
                          seed=ls.seed, lefts=tuple(lefts), lengths=ls.lengths)


def run_verification(spec, depth: int = 12, placement: str = "uniform", seed=None,
                     pairs=(5, 5), samples: int = 100, corrupt: bool = False,
                     cover_instances: int = 200) -> list:
    """Run every check; returns findings ``{check, passed, detail}``."""
    mode = "cantor-like" if sup_a(spec) > 0 else "moran"
    ls = build_levels(spec, depth, placement, mode, seed)
    if corrupt:
        ls = inject_overlap(ls)
    findings = []
    tables = build_prefix_tables(spec, depth)
    sv = verify_structure(ls, tables)
    findings.append({"check": "structure", "passed": not sv, "detail": sv})

    kmax, lmax = pairs
    viol, ran = [], 0
    for k in range(1, kmax + 1):
        for l in range(1, lmax + 1):
            if k + l + 1 > depth:
                continue
            rep = check_counting_lemmas(ls, k, l, samples)
            ran += 1
            viol += [dict(v, k=k, l=l) for v in rep["violations"]]
    findings.append({"check": "counting_lemmas", "passed": not viol and ran > 0,
                     "detail": {"pairs_checked": ran, "violations": viol[:50]}})

    pts = ls.sample_points(64, level=min(depth, 10), seed=0)
    rng = np.random.default_rng(0)
    idx = rng.integers(0, len(pts), size=(64, 2))
    radii = [math.exp(tables.logDelta[m]) for m in range(1, min(depth, 10) + 1)]
    mp = check_measure_properties(ls, radii, [(pts[i], pts[j]) for i, j in idx])
    findings.append({"check": "measure_properties", "passed": mp["finite"] and mp["alpha_gt_1"],
                     "detail": {k: mp[k] for k in ("lambda", "alpha", "beta", "c", "a")}})

    mism = greedy_vs_exhaustive(cover_instances, seed=0)
    findings.append({"check": "greedy_vs_exhaustive", "passed": not mism,
                     "detail": {"instances": cover_instances, "mismatches": mism[:10]}})

    worst, ok = oracle_equivalence(spec)
    findings.append({"check": "oracle_equivalence", "passed": ok, "detail": worst})
    return findings
