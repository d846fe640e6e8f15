"""Covering numbers on realizations and the empirical dimension estimates built on them.

``E`` is replaced by the union of its level-``m`` basic intervals, with ``m``
the shallowest level whose intervals are all shorter than the covering
radius ``r``. Every such interval contains points of ``E``, so the skeleton
and ``E`` have comparable ``r``-covering numbers. Sample points are left
endpoints of deepest-level intervals, which always belong to ``E``. Balls are
closed: endpoint contact counts as meeting.

Covering numbers carry a multiplicative constant that a single scale pair
cannot separate from the exponent, so the default (``estimator="slope"``)
estimates exponents as least-squares slopes of ``log N`` against
``log(R/r)`` over the finest scale pairs available:

* dimensions: for every sample point ``x`` and coarse level ``k``, the slope
  over the trailing half of the window lengths ``l``; then sup (Assouad) or
  inf (lower) over ``(x, k)``.
* spectrum points: the sup (or inf) of ``log N`` over sample points at each
  ``k``, then the slope of that envelope across ``k``.

``estimator="pair"`` reports the plain extremum of
``log N / log(R/r)`` over single scale pairs instead.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .construct import _TOUCH, LevelStructure, natural_measure_ball, verify_structure
from .errors import DepthError
from .formulas import check_theta, scale_function
from .sequences import build_prefix_tables

ESTIMATORS = ("slope", "pair")


def greedy_cover_count(lo, hi, width: float, tol: float | None = None) -> int:
    """Minimal number of closed intervals of length ``width`` covering ``U [lo_i, hi_i]``.

    Segments must be sorted by ``lo``. Each ball starts at the leftmost
    uncovered point, which is optimal on the line. ``tol`` (default
    ``1e-9 * width``) absorbs rounding when a ball ends exactly on a segment end.
    """
    tol = 1e-9 * width if tol is None else tol
    reach = -math.inf
    count = 0
    for a, b in zip(np.asarray(lo).tolist(), np.asarray(hi).tolist()):
        if b <= reach + tol:
            continue
        start = a if a > reach else reach
        m = max(1, math.ceil((b - start) / width - 1e-9))
        count += m
        reach = start + m * width
    return count


def covering_level(ls: LevelStructure, r: float) -> int:
    """Shallowest level whose intervals are all shorter than ``r``."""
    for m in range(1, ls.depth + 1):
        if ls.lengths[m].max() < r:
            return m
    raise DepthError(
        f"skeleton too coarse: level-{ls.depth} intervals reach "
        f"{ls.lengths[ls.depth].max():.3g} >= r = {r:.3g}; build a deeper structure",
        required=ls.depth + 1)


def clipped_segments(ls: LevelStructure, level: int, x: float, R: float):
    """Level intervals meeting ``[x - R, x + R]``, clipped to it."""
    L = ls.lefts[level]
    Rt = L + ls.lengths[level]
    tol = _TOUCH * ls.lengths[level].min()
    lo = int(np.searchsorted(Rt, x - R - tol, side="left"))
    hi = int(np.searchsorted(L, x + R + tol, side="right"))
    return np.maximum(L[lo:hi], x - R), np.minimum(Rt[lo:hi], x + R)


def covering_number(ls: LevelStructure, x: float, R: float, r: float,
                    level: int | None = None) -> int:
    """``N_r(B(x, R) n E)`` on the level skeleton (default: shallowest valid level)."""
    if not 0 < r < R:
        raise ValueError(f"need 0 < r < R, got r={r}, R={R}")
    if level is None:
        level = covering_level(ls, r)
    elif ls.lengths[level].max() >= r:
        raise DepthError(f"skeleton too coarse: level-{level} intervals are not shorter "
                         f"than r = {r:.3g}", required=covering_level(ls, r))
    a, b = clipped_segments(ls, level, x, R)
    return greedy_cover_count(a, b, 2.0 * r)


def two_scale_exponent(ls: LevelStructure, x: float, R: float, r: float,
                       level: int | None = None) -> float:
    return math.log(covering_number(ls, x, R, r, level)) / math.log(R / r)


@dataclass(frozen=True)
class ScalePair:
    R: float
    r: float
    k: int | None = None
    l: int | None = None

    def __post_init__(self):
        if not 0 < self.r < self.R:
            raise ValueError(f"need 0 < r < R, got r={self.r}, R={self.R}")

    @classmethod
    def from_levels(cls, tables, k: int, l: int) -> "ScalePair":
        return cls(math.exp(tables.logDelta[k]), math.exp(tables.logDelta[k + l]), k, l)

    @property
    def log_ratio(self) -> float:
        return math.log(self.R / self.r)


@dataclass
class EmpiricalReport:
    kind: str
    value: float
    witness: dict
    sample_size: int
    n_scales: int
    depth: int
    estimator: str
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": float(self.value),
            "witness": _plain(self.witness),
            "sample_size": self.sample_size,
            "n_scales": self.n_scales,
            "depth": self.depth,
            "estimator": self.estimator,
            "detail": _plain(self.detail),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _slope(xs, ys) -> float:
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    if len(xs) == 1:
        return float(ys[0] / xs[0])
    xm = xs.mean()
    return float(((xs - xm) * (ys - ys.mean())).sum() / ((xs - xm) ** 2).sum())


def _tail_count(n: int, tail: float) -> int:
    return min(n, max(2, math.ceil(tail * n)))


def _log_counts(ls, points, R, r):
    level = covering_level(ls, r)
    return np.array([math.log(covering_number(ls, x, R, r, level)) for x in points.tolist()])


def _check_estimator(estimator):
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}, got {estimator!r}")


def _dimension(ls, level_pairs, samples_per_pair, upper, estimator, seed, tail):
    _check_estimator(estimator)
    pairs = sorted({(int(k), int(l)) for k, l in level_pairs})
    if not pairs or samples_per_pair < 1:
        raise ValueError("empty sample: need at least one level pair and one sample point")
    if any(k < 1 or l < 1 for k, l in pairs):
        raise ValueError("level pairs need k >= 1 and l >= 1")
    tables = build_prefix_tables(ls.spec, max(k + l for k, l in pairs))
    points = ls.sample_points(samples_per_pair, seed=seed)
    logn = {}
    for k, l in pairs:
        sp = ScalePair.from_levels(tables, k, l)
        logn[k, l] = (_log_counts(ls, points, sp.R, sp.r), sp.log_ratio)
    pick = np.argmax if upper else np.argmin
    kind = "assouad" if upper else "lower"
    if estimator == "pair":
        best = None
        for (k, l), (lg, lr) in logn.items():
            e = lg / lr
            i = int(pick(e))
            if best is None or (e[i] > best[0] if upper else e[i] < best[0]):
                best = (float(e[i]), {"x": float(points[i]), "k": k, "l": l})
        value, witness = best
        detail = {}
    else:
        per_k = {}
        best = None
        for k in sorted({k for k, _ in pairs}):
            ls_k = sorted(l for kk, l in pairs if kk == k)
            use = ls_k[len(ls_k) - _tail_count(len(ls_k), tail):]
            X = [logn[k, l][1] for l in use]
            Y = np.array([logn[k, l][0] for l in use])  # (len(use), n_points)
            slopes = np.array([_slope(X, Y[:, j]) for j in range(Y.shape[1])])
            i = int(pick(slopes))
            per_k[k] = {"min": float(slopes.min()), "max": float(slopes.max()), "l_used": use}
            if best is None or (slopes[i] > best[0] if upper else slopes[i] < best[0]):
                best = (float(slopes[i]), {"x": float(points[i]), "k": k, "l": use})
        value, witness = best
        detail = {"per_k": per_k}
    label = "Assouad dimension" if upper else "lower dimension (sample inf, estimates from above)"
    detail["label"] = label
    return EmpiricalReport(kind=kind, value=value, witness=witness,
                           sample_size=len(points), n_scales=len(pairs), depth=ls.depth,
                           estimator=estimator, detail=detail)


def empirical_assouad(ls: LevelStructure, level_pairs, samples_per_pair: int = 64,
                      estimator: str = "slope", seed: int = 0,
                      tail: float = 0.5) -> EmpiricalReport:
    """Sup over sample points and level pairs ``(R, r) = (delta_k, delta_{k+l})``.

    The same sample points are used for every pair.
    """
    return _dimension(ls, level_pairs, samples_per_pair, True, estimator, seed, tail)


def empirical_lower(ls: LevelStructure, level_pairs, samples_per_pair: int = 64,
                    estimator: str = "slope", seed: int = 0,
                    tail: float = 0.5) -> EmpiricalReport:
    """Sample infimum; as an inf over finitely many points it estimates dim_L from above."""
    return _dimension(ls, level_pairs, samples_per_pair, False, estimator, seed, tail)


def level_pair_grid(k_max: int, l_max: int):
    return [(k, l) for k in range(1, k_max + 1) for l in range(1, l_max + 1)]


def spectrum_k_range(ls: LevelStructure, theta: float, J_diam: float = 1.0):
    """Every ``k`` whose radius ``r = (delta_k |J|) ** (1/theta)`` the skeleton resolves."""
    theta = check_theta(theta)
    finest = ls.lengths[ls.depth].max()
    tables = build_prefix_tables(ls.spec, ls.depth)
    # same test as covering_level, with a margin so r == finest up to rounding is excluded
    return [k for k in range(1, ls.depth + 1)
            if (J_diam * math.exp(tables.logDelta[k])) ** (1.0 / theta) > finest * (1 + 1e-9)]


def empirical_spectrum_point(ls: LevelStructure, theta: float, k_list=None,
                             samples: int = 64, kind: str = "assouad",
                             estimator: str = "slope", seed: int = 0,
                             J_diam: float = 1.0) -> EmpiricalReport:
    """Spectrum at ``theta`` from covering numbers at ``R = delta_k |J|``, ``r = R ** (1/theta)``.

    ``r`` is used exactly, not snapped to a level. ``k_list`` defaults to every
    ``k`` the realization resolves.
    """
    theta = check_theta(theta)
    _check_estimator(estimator)
    if kind not in ("assouad", "lower"):
        raise ValueError(f"kind must be 'assouad' or 'lower', got {kind!r}")
    ks = spectrum_k_range(ls, theta, J_diam) if k_list is None else sorted(set(k_list))
    if not ks:
        raise DepthError(f"depth {ls.depth} resolves no k at theta={theta}",
                         required=ls.depth + 1)
    tables = build_prefix_tables(ls.spec, max(ks))
    points = ls.sample_points(samples, seed=seed)
    upper = kind == "assouad"
    pick = np.argmax if upper else np.argmin
    X, env, wit = [], [], []
    best = None
    for k in ks:
        R = J_diam * math.exp(tables.logDelta[k])
        r = R ** (1.0 / theta)
        lg = _log_counts(ls, points, R, r)
        i = int(pick(lg))
        lr = math.log(R / r)
        X.append(lr)
        env.append(float(lg[i]))
        wit.append({"k": k, "x": float(points[i]), "N": int(round(math.exp(lg[i])))})
        ratio = lg / lr
        j = int(pick(ratio))
        if best is None or (ratio[j] > best[0] if upper else ratio[j] < best[0]):
            best = (float(ratio[j]), {"k": k, "x": float(points[j])})
    if estimator == "slope":
        value = _slope(X, env) if len(ks) > 1 else env[0] / X[0]
        witness = {"theta": theta, "envelope": wit}
    else:
        value, witness = best
        witness["theta"] = theta
    return EmpiricalReport(kind=f"{kind}-spectrum", value=value, witness=witness,
                           sample_size=len(points), n_scales=len(ks), depth=ls.depth,
                           estimator=estimator,
                           detail={"theta": theta, "k_list": list(ks), "log_ratio": X,
                                   "log_N_envelope": env})


def reevaluate_witness(ls: LevelStructure, report: EmpiricalReport) -> float:
    """Recompute a report's exponent from its witness alone."""
    w = report.witness
    tables_depth = ls.depth
    tables = build_prefix_tables(ls.spec, tables_depth)
    if report.kind in ("assouad", "lower"):
        if report.estimator == "pair":
            sp = ScalePair.from_levels(tables, w["k"], w["l"])
            return two_scale_exponent(ls, w["x"], sp.R, sp.r)
        X, Y = [], []
        for l in w["l"]:
            sp = ScalePair.from_levels(tables, w["k"], l)
            X.append(sp.log_ratio)
            Y.append(math.log(covering_number(ls, w["x"], sp.R, sp.r)))
        return _slope(X, Y)
    theta = w["theta"]
    if report.estimator == "pair":
        R = math.exp(tables.logDelta[w["k"]])
        return two_scale_exponent(ls, w["x"], R, R ** (1 / theta))
    X, Y = [], []
    for e in w["envelope"]:
        R = math.exp(tables.logDelta[e["k"]])
        r = R ** (1 / theta)
        X.append(math.log(R / r))
        Y.append(math.log(covering_number(ls, e["x"], R, r)))
    return _slope(X, Y) if len(X) > 1 else Y[0] / X[0]


def spectrum_sweep(ls: LevelStructure, thetas, formula_values, samples: int = 64,
                   kind: str = "assouad", estimator: str = "slope", seed: int = 0) -> list:
    """Rows ``(theta, empirical, formula, |diff|)`` for a theta grid."""
    rows = []
    for t, f in zip(thetas, formula_values):
        e = empirical_spectrum_point(ls, float(t), samples=samples, kind=kind,
                                     estimator=estimator, seed=seed).value
        rows.append((float(t), e, float(f), abs(e - float(f))))
    return rows


def sweep_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "empirical", "formula", "abs_diff"])
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


# -- counting checks -----------------------------------------------------

def _meets(ls, level, lo, hi):
    L = ls.lefts[level]
    Rt = L + ls.lengths[level]
    tol = _TOUCH * ls.lengths[level].min()
    return int(np.searchsorted(L, hi + tol, side="right")
               - np.searchsorted(Rt, lo - tol, side="left"))


def _contains(ls, level, lo, hi):
    L = ls.lefts[level]
    Rt = L + ls.lengths[level]
    tol = _TOUCH * ls.lengths[level].min()
    i = int(np.searchsorted(L, lo - tol, side="left"))
    j = int(np.searchsorted(L, hi + tol, side="right"))
    return int((Rt[i:j] <= hi + tol).sum())


COUNTING_CHECKS = {
    "a": "B(x, R) contains at least one (k+1)-level interval",
    "b": "B(x, r) meets at most four (k+l)-level intervals",
    "c": "B(x, R) meets at most four (k-1)-level intervals",
    "d": "B(x, r) contains at least one (k+l+1)-level interval",
}


def check_counting_lemmas(ls: LevelStructure, k: int, l: int, samples: int = 100,
                          seed: int = 0) -> dict:
    """Geometric counting bounds at ``R = delta_k``, ``r = delta_{k+l}``.

    Violations are findings, reported with the offending ``x`` and count; the
    largest and smallest observed counts are reported too, so sharper
    constants than four and one are visible.
    """
    if k < 1 or l < 1:
        raise ValueError("need k >= 1 and l >= 1")
    if k + l + 1 > ls.depth:
        raise DepthError(f"checks at (k={k}, l={l}) need depth >= {k + l + 1}",
                         required=k + l + 1)
    tables = build_prefix_tables(ls.spec, k + l + 1)
    R = math.exp(tables.logDelta[k])
    r = math.exp(tables.logDelta[k + l])
    points = ls.sample_points(samples, seed=seed)
    counts = {c: [] for c in COUNTING_CHECKS}
    violations = []
    for x in points.tolist():
        got = {
            "a": _contains(ls, k + 1, x - R, x + R),
            "b": _meets(ls, k + l, x - r, x + r),
            "c": _meets(ls, k - 1, x - R, x + R),
            "d": _contains(ls, k + l + 1, x - r, x + r),
        }
        for c, v in got.items():
            counts[c].append(v)
            bad = v < 1 if c in ("a", "d") else v > 4
            if bad:
                violations.append({"check": c, "statement": COUNTING_CHECKS[c],
                                   "x": x, "count": v})
    return {
        "k": k, "l": l, "R": R, "r": r, "samples": len(points),
        "passed": not violations,
        "violations": violations,
        "max_count": {c: max(v) for c, v in counts.items()},
        "min_count": {c: min(v) for c, v in counts.items()},
        "structure_violations": verify_structure(ls),
    }


# -- measure checks -------------------------------------------------------

def check_measure_properties(ls: LevelStructure, radii, sample_pairs, a: float = 1 / 3,
                             level: int | None = None, weighting: str = "overlap",
                             J_diam: float = 1.0) -> dict:
    """Empirical doubling constants of the natural measure and the scale-function bound.

    For ``r`` in ``radii`` and ``(x1, x2)`` in ``sample_pairs``:
    ``lambda`` is the largest ratio ``mu(B(x1, r)) / mu(B(x2, r))`` (either
    order), ``alpha``/``beta`` the extreme ratios ``mu(B(x, r)) / mu(B(x, a r))``
    and ``c`` the largest ``|h(r) log r - log mu(B(x, r))|``. The measure is
    discretized at ``level`` (default: the structure's depth); see
    ``natural_measure_ball`` for ``weighting``.
    """
    if not 0.0 < a < 1.0:
        raise ValueError(f"a must lie in (0, 1), got {a}")
    level = ls.depth if level is None else level
    radii = [float(r) for r in radii]
    pairs = [(float(x1), float(x2)) for x1, x2 in sample_pairs]
    if not radii or not pairs:
        raise ValueError("need at least one radius and one sample pair")
    # h(r) only depends on the spec; the margin covers radii below delta_depth
    tables = build_prefix_tables(ls.spec, ls.depth + 64)
    pts = sorted({x for p in pairs for x in p})

    def mu(x, r):
        return natural_measure_ball(ls, x, r, level, weighting=weighting)

    lam, alpha, beta, c = 1.0, math.inf, 0.0, 0.0
    where = {}
    for r in radii:
        m = {x: mu(x, r) for x in pts}
        for x1, x2 in pairs:
            q = max(m[x1] / m[x2], m[x2] / m[x1])
            if q > lam:
                lam, where["lambda"] = q, {"r": r, "x1": x1, "x2": x2}
        h = scale_function(tables, r, J_diam) if r < J_diam else None
        for x in pts:
            q = m[x] / mu(x, a * r)
            if q < alpha:
                alpha, where["alpha"] = q, {"r": r, "x": x}
            if q > beta:
                beta, where["beta"] = q, {"r": r, "x": x}
            if h is not None:
                dev = float(abs(h * math.log(r) - math.log(m[x])))
                if dev > c:
                    c, where["c"] = dev, {"r": r, "x": x}
    return {
        "lambda": lam, "alpha": alpha, "beta": beta, "c": c, "a": a,
        "depth": ls.depth, "level": level, "weighting": weighting,
        "finite": all(math.isfinite(v) for v in (lam, alpha, beta, c)),
        "alpha_gt_1": alpha > 1.0,
        "where": where,
    }


def measure_depth_trend(reports, atol: float = 1e-8) -> dict:
    """Compare ``check_measure_properties`` reports at increasing depths.

    ``c`` counts as growing only if it rises by more than ``atol``; deeper
    discretizations sum more terms, so rounding noise alone grows slowly.
    """
    reports = sorted(reports, key=lambda r: r["depth"])
    cs = [float(r["c"]) for r in reports]
    lams = [float(r["lambda"]) for r in reports]
    growing = any(b > a_ + atol for a_, b in zip(cs, cs[1:]))
    return {
        "depths": [r["depth"] for r in reports],
        "c": cs,
        "lambda": lams,
        "c_nonincreasing": not growing,
        "lambda_rel_change": (abs(lams[-1] - lams[0]) / lams[0]) if lams else 0.0,
        "unbounded_trend": growing,
    }
