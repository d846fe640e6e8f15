"""Closed-form dimension and spectrum values evaluated on prefix tables.

Every ``limsup``/``liminf`` is truncated: the quantity inside the outer limit
is evaluated on a finite index range (the *trace*), and the reported value is
the max (limsup) or min (liminf) of the trace over a trailing *tail window*.
The spread of the trace on that window is published as a convergence
diagnostic; nothing here proves convergence.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DepthError, SequenceError
from .sequences import PrefixTables, is_cantor_like, sup_c

# relative slack when comparing log delta values that are equal in exact arithmetic
LOG_TOL = 1e-12
BOUNDARY_FRACTION = 0.1


@dataclass
class DimensionEstimate:
    """A truncated limit value with its diagnostics.

    ``index`` labels the trace entries (``l``, ``k`` or ``r`` values) and
    ``tail_window`` is a ``(start, stop)`` slice into ``trace``.
    """

    value: float
    trace: np.ndarray
    index: np.ndarray
    tail_window: tuple
    spread: float
    kind: str
    label: str = ""
    diagnostics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def tail(self) -> np.ndarray:
        return self.trace[self.tail_window[0]:self.tail_window[1]]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "value": float(self.value),
            "spread": float(self.spread),
            "tail_window": [int(self.tail_window[0]), int(self.tail_window[1])],
            "index": [_jsonable(v) for v in self.index.tolist()],
            "trace": [float(v) for v in self.trace.tolist()],
            "diagnostics": {k: _jsonable(v) for k, v in self.diagnostics.items()},
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DimensionEstimate":
        return cls(value=doc["value"], trace=np.asarray(doc["trace"], dtype=float),
                   index=np.asarray(doc["index"]), tail_window=tuple(doc["tail_window"]),
                   spread=doc["spread"], kind=doc["kind"], label=doc.get("label", ""),
                   diagnostics=dict(doc.get("diagnostics", {})),
                   warnings=list(doc.get("warnings", [])))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


@dataclass
class SpectrumCurve:
    kind: str
    thetas: np.ndarray
    estimates: list
    diagnostics: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.estimates], dtype=float)

    @property
    def spreads(self) -> np.ndarray:
        return np.array([e.spread for e in self.estimates], dtype=float)

    def __len__(self):
        return len(self.estimates)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "diagnostics": {k: _jsonable(v) for k, v in self.diagnostics.items()},
            "points": [{"theta": float(t), "estimate": e.to_dict()}
                       for t, e in zip(self.thetas.tolist(), self.estimates)],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta", "value", "spread"])
        for t, e in zip(self.thetas.tolist(), self.estimates):
            w.writerow([repr(float(t)), repr(float(e.value)), repr(float(e.spread))])
        return buf.getvalue()


def tail_slice(length: int, tail) -> tuple:
    """``(start, stop)`` of the trailing window; ``tail`` is a count or a fraction in (0, 1]."""
    if length < 1:
        raise ValueError("empty trace")
    if isinstance(tail, float):
        if not 0.0 < tail <= 1.0:
            raise ValueError(f"tail fraction must lie in (0, 1], got {tail}")
        count = max(1, math.ceil(tail * length))
    else:
        count = int(tail)
        if not 1 <= count <= length:
            raise ValueError(f"tail count must lie in 1..{length}, got {tail}")
    return (length - count, length)


def _finish(trace, index, tail, kind, label, upper: bool, **extra) -> DimensionEstimate:
    trace = np.asarray(trace, dtype=float)
    lo, hi = tail_slice(len(trace), tail)
    window = trace[lo:hi]
    value = float(window.max() if upper else window.min())
    spread = float(window.max() - window.min())
    return DimensionEstimate(value=value, trace=trace, index=np.asarray(index),
                             tail_window=(lo, hi), spread=spread, kind=kind, label=label,
                             diagnostics=dict(extra))


def check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise SequenceError(f"theta must lie strictly between 0 and 1, got {theta}")
    return theta


# -- Assouad dimension and the lower-dimension bound ---------------------

def window_ratio_sweep(tables: PrefixTables, L_max: int):
    """Per window length ``l``: extreme ratios over ``k = 1..K-l``.

    The ratio is ``log(n_{k+1}...n_{k+l}) / -log(c_{k+1}...c_{k+l})``.
    Returns ``(sup, argsup, inf, arginf)`` arrays indexed by ``l - 1``.
    """
    K = tables.depth
    if not 1 <= L_max < K:
        raise DepthError(f"L_max must lie in 1..{K - 1} for table depth {K}", required=L_max + 1)
    logN, logD = tables.logN, tables.logDelta
    sup = np.empty(L_max)
    inf = np.empty(L_max)
    argsup = np.empty(L_max, dtype=np.int64)
    arginf = np.empty(L_max, dtype=np.int64)
    for l in range(1, L_max + 1):
        num = logN[1 + l:] - logN[1:K + 1 - l]
        den = logD[1:K + 1 - l] - logD[1 + l:]
        ratio = num / den
        i, j = int(np.argmax(ratio)), int(np.argmin(ratio))
        sup[l - 1], argsup[l - 1] = ratio[i], i + 1
        inf[l - 1], arginf[l - 1] = ratio[j], j + 1
    return sup, argsup, inf, arginf


def _sweep_estimate(tables, L_max, tail, upper):
    K = tables.depth
    if L_max is None:
        L_max = K // 2
    if tail is None:
        tail = max(1, L_max // 2)
    if isinstance(tail, float):
        tail = max(1, math.ceil(tail * L_max))
    if L_max < 1 or K < L_max + tail:
        raise DepthError(
            f"table depth {K} is too small for L_max={L_max}, tail={tail}; "
            f"need K >= {L_max + tail}", required=L_max + tail)
    sup, argsup, inf, arginf = window_ratio_sweep(tables, L_max)
    trace, arg = (sup, argsup) if upper else (inf, arginf)
    ls = np.arange(1, L_max + 1)
    if upper:
        est = _finish(trace, ls, tail, "assouad", "Assouad dimension", True)
    else:
        est = _finish(trace, ls, tail, "lower-bound", "upper bound on lower dimension", False)
    lo, hi = est.tail_window
    pick = lo + int(np.argmax(trace[lo:hi]) if upper else np.argmin(trace[lo:hi]))
    l_star = int(ls[pick])
    k_star = int(arg[pick])
    k_range = K - l_star
    boundary = k_star > (1 - BOUNDARY_FRACTION) * k_range
    est.diagnostics.update({
        "l_at_value": l_star,
        "k_at_value": k_star,
        "k_range": k_range,
        "boundary_argext": bool(boundary),
        "argext_k": arg,
        "depth": K,
    })
    if boundary:
        est.warnings.append(
            f"extremum for l={l_star} attained at k={k_star}, within the last "
            f"{int(BOUNDARY_FRACTION * 100)}% of k in 1..{k_range}; estimate may be unconverged")
    return est


def assouad_dim_formula(tables: PrefixTables, L_max: int | None = None,
                        tail: int | float | None = None) -> DimensionEstimate:
    """Assouad dimension as ``limsup_l sup_k`` of window ratios.

    Defaults: ``L_max = K // 2`` and a tail of the last ``L_max // 2`` values
    of ``l``. Needs ``K >= L_max + tail``.
    """
    return _sweep_estimate(tables, L_max, tail, upper=True)


def lower_dim_bound_formula(tables: PrefixTables, L_max: int | None = None,
                            tail: int | float | None = None) -> DimensionEstimate:
    """``liminf_l inf_k`` of window ratios: an UPPER BOUND on the lower dimension.

    The returned estimate is labelled accordingly; it is not the lower
    dimension itself.
    """
    return _sweep_estimate(tables, L_max, tail, upper=False)


# -- spectra ---------------------------------------------------------------

def _required_depth(tables, target):
    cmax = sup_c(tables.spec)
    return int(math.ceil(target / math.log(cmax))) + 2


def level_index(tables: PrefixTables, theta: float, k) -> int | np.ndarray:
    """``l(theta, k)``: the largest ``l`` with ``delta_l >= delta_k ** (1/theta)``.

    Accepts a scalar ``k`` or an integer array. The answer must be certified
    by ``delta_{l+1} < delta_k ** (1/theta)``, so ``l < K`` is required.
    """
    theta = check_theta(theta)
    ks = np.atleast_1d(np.asarray(k))
    if ks.size and (ks.min() < 1 or ks.max() > tables.depth):
        raise SequenceError(f"k must lie in 1..{tables.depth}")
    target = tables.logDelta[ks] / theta
    neg = -tables.logDelta
    ls = np.searchsorted(neg, -target + LOG_TOL * np.abs(target), side="right") - 1
    if ks.size and ls.max() >= tables.depth:
        bad = int(ks[int(np.argmax(ls >= tables.depth))])
        need = _required_depth(tables, tables.logDelta[bad] / theta)
        raise DepthError(
            f"l(theta={theta}, k={bad}) reaches the table depth {tables.depth}; "
            f"rebuild tables with K >= {need} (about k/theta plus margin)", required=need)
    if np.ndim(k) == 0:
        return int(ls[0])
    return ls.astype(np.int64)


def max_spectrum_k(tables: PrefixTables, theta: float) -> int:
    """Largest ``k`` whose ``l(theta, k)`` is certified inside the tables."""
    theta = check_theta(theta)
    ks = np.arange(1, tables.depth + 1)
    target = tables.logDelta[ks] / theta
    ls = np.searchsorted(-tables.logDelta, -target + LOG_TOL * np.abs(target), side="right") - 1
    ok = np.nonzero(ls < tables.depth)[0]
    if len(ok) == 0:
        raise DepthError(f"tables of depth {tables.depth} cannot resolve l(theta={theta}, 1)",
                         required=_required_depth(tables, tables.logDelta[1] / theta))
    return int(ks[ok[-1]])


def _k_range(tables, theta, k_window):
    if k_window is None:
        return np.arange(1, max_spectrum_k(tables, theta) + 1)
    if isinstance(k_window, tuple) and len(k_window) == 2:
        k_window = range(k_window[0], k_window[1] + 1)
    ks = np.asarray(list(k_window), dtype=np.int64)
    if ks.size == 0:
        raise ValueError("empty k window")
    if (np.diff(ks) <= 0).any():
        raise ValueError("k window must be strictly increasing")
    return ks


def spectrum_trace(tables: PrefixTables, theta: float, ks) -> tuple:
    """``t_k = log(n_{k+1}...n_{l(theta,k)}) / ((1 - 1/theta) log delta_k)`` and the ``l`` values."""
    theta = check_theta(theta)
    ls = level_index(tables, theta, np.asarray(ks))
    num = tables.logN[ls] - tables.logN[ks]
    den = (1.0 - 1.0 / theta) * tables.logDelta[ks]
    if (den <= 0).any():
        raise AssertionError("non-positive spectrum denominator; tables or theta corrupted")
    return num / den, ls


def _spectrum_formula(tables, theta, k_window, tail, upper):
    if not is_cantor_like(tables.spec):
        raise SequenceError("spectrum formulas need a Cantor-like spec "
                            "(inf c_k > 0 and sum a_k < infinity)")
    theta = check_theta(theta)
    ks = _k_range(tables, theta, k_window)
    trace, ls = spectrum_trace(tables, theta, ks)
    kind = "assouad-spectrum" if upper else "lower-spectrum"
    label = f"{'Assouad' if upper else 'lower'} spectrum at theta={theta:g}"
    est = _finish(trace, ks, tail, kind, label, upper, theta=theta, depth=tables.depth)
    est.diagnostics["l_values"] = ls
    return est


def assouad_spectrum_formula(tables: PrefixTables, theta: float, k_window=None,
                             tail: int | float = 0.5) -> DimensionEstimate:
    """Assouad spectrum at ``theta``: limsup over ``k`` of the level-pairing ratio.

    ``k_window`` is an iterable of ``k`` values or an inclusive ``(k_lo, k_hi)``
    pair; by default every ``k`` whose ``l(theta, k)`` fits in the tables.
    """
    return _spectrum_formula(tables, theta, k_window, tail, upper=True)


def lower_spectrum_formula(tables: PrefixTables, theta: float, k_window=None,
                           tail: int | float = 0.5) -> DimensionEstimate:
    return _spectrum_formula(tables, theta, k_window, tail, upper=False)


def _check_grid(theta_grid):
    grid = np.asarray(list(theta_grid), dtype=float)
    if grid.size and ((grid <= 0).any() or (grid >= 1).any()):
        raise SequenceError("theta grid must lie strictly inside (0, 1)")
    if (np.diff(grid) <= 0).any():
        raise SequenceError("theta grid must be strictly increasing")
    return grid


def curve_diagnostics(values: np.ndarray, spreads: np.ndarray) -> dict:
    d = np.diff(values)
    return {
        "monotone_nondecreasing": bool((d >= -1e-12).all()),
        "monotone_nonincreasing": bool((d <= 1e-12).all()),
        "max_spread": float(spreads.max()) if len(spreads) else 0.0,
    }


def spectrum_curve(tables: PrefixTables, theta_grid, k_window=None, kind: str = "assouad",
                   tail: int | float = 0.5, method: str = "formula", r_grid=None,
                   J_diam: float = 1.0) -> SpectrumCurve:
    """Evaluate a spectrum pointwise on ``theta_grid``.

    ``kind`` is ``"assouad"`` or ``"lower"``; ``method`` picks the level
    pairing formula (``"formula"``) or the scale-function route (``"scale"``).
    """
    if kind not in ("assouad", "lower"):
        raise ValueError(f"kind must be 'assouad' or 'lower', got {kind!r}")
    grid = _check_grid(theta_grid)
    ests = []
    for t in grid.tolist():
        if method == "formula":
            fn = assouad_spectrum_formula if kind == "assouad" else lower_spectrum_formula
            ests.append(fn(tables, t, k_window, tail))
        elif method == "scale":
            ests.append(spectrum_via_scale_function(tables, t, r_grid, J_diam, kind, tail))
        else:
            raise ValueError(f"unknown method {method!r}")
    curve = SpectrumCurve(kind=kind, thetas=grid, estimates=ests)
    if ests:
        curve.diagnostics = curve_diagnostics(curve.values, curve.spreads)
    return curve


# -- scale function route ------------------------------------------------
# Radii reach delta_K, which underflows for deep tables, so this route works
# on log r throughout; the r-valued entry points convert once.

def _bracket_log(tables, x):
    """Brackets for ``x = log(r / |J|)`` (array)."""
    if (x >= 0).any():
        raise ValueError("radii must lie strictly below |J|")
    ks = np.searchsorted(-tables.logDelta, -x + LOG_TOL * np.abs(x), side="right")
    if ks.max() > tables.depth:
        xmin = float(x[int(np.argmax(ks > tables.depth))])
        need = _required_depth(tables, xmin)
        raise DepthError(f"log r = {xmin:.6g} is below log(delta_K |J|) for K = "
                         f"{tables.depth}; need depth >= {need}", required=need)
    return ks


def scale_bracket(tables: PrefixTables, r, J_diam: float = 1.0):
    """``k`` with ``delta_k |J| < r <= delta_{k-1} |J|``; vectorized over ``r``."""
    rs = np.atleast_1d(np.asarray(r, dtype=float))
    if (rs <= 0).any():
        raise ValueError("radii must be positive")
    ks = _bracket_log(tables, np.log(rs / J_diam))
    return int(ks[0]) if np.ndim(r) == 0 else ks


def scale_function(tables: PrefixTables, r, J_diam: float = 1.0):
    """Step function ``h(r) = log N_k / -log delta_k`` on the bracket containing ``r``."""
    k = scale_bracket(tables, r, J_diam)
    return tables.logN[k] / -tables.logDelta[k]


def default_log_r_grid(tables: PrefixTables, theta: float, J_diam: float = 1.0) -> np.ndarray:
    """``log r`` at the geometric midpoint of every scale bracket, decreasing.

    Stops at the last bracket whose ``r ** (1/theta)`` is still inside the tables.
    """
    theta = check_theta(theta)
    logD = tables.logDelta
    logJ = math.log(J_diam)
    mids = 0.5 * (logD[:-1] + logD[1:]) + logJ
    ok = mids / theta > logD[-1] + logJ + 1e-9
    return mids[ok & (mids < 0)]


def scale_quotient_log(tables: PrefixTables, theta: float, log_r, J_diam: float = 1.0):
    """The scale-function quotient at ``r = exp(log_r)``, which must be below ``min(1, |J|)``.

    ``|h(r) log r - h(r^(1/theta)) log r^(1/theta)| / ((1 - 1/theta) log r)``
    """
    theta = check_theta(theta)
    x = np.atleast_1d(np.asarray(log_r, dtype=float))
    logJ = math.log(J_diam)
    if (x >= min(0.0, logJ)).any():
        raise ValueError("radii must be below min(1, |J|)")
    k1 = _bracket_log(tables, x - logJ)
    k2 = _bracket_log(tables, x / theta - logJ)
    h1 = tables.logN[k1] / -tables.logDelta[k1]
    h2 = tables.logN[k2] / -tables.logDelta[k2]
    num = np.abs(h1 * x - h2 * x / theta)
    den = (1.0 - 1.0 / theta) * x
    return num / den


def scale_quotient(tables: PrefixTables, theta: float, r, J_diam: float = 1.0):
    q = scale_quotient_log(tables, theta, np.log(np.asarray(r, dtype=float)), J_diam)
    return float(q[0]) if np.ndim(r) == 0 else q


def spectrum_via_scale_function(tables: PrefixTables, theta: float, r_grid=None,
                                J_diam: float = 1.0, kind: str = "assouad",
                                tail: int | float = 0.5, log_r_grid=None) -> DimensionEstimate:
    """Spectrum from the scale function; limsup/liminf over the smallest-``r`` tail.

    Radii come from ``r_grid`` or ``log_r_grid`` (strictly decreasing); by
    default one radius per scale bracket (``default_log_r_grid``). The trace
    index holds ``log r``.
    """
    theta = check_theta(theta)
    if kind not in ("assouad", "lower"):
        raise ValueError(f"kind must be 'assouad' or 'lower', got {kind!r}")
    if log_r_grid is not None:
        xs = np.asarray(log_r_grid, dtype=float)
    elif r_grid is not None:
        xs = np.log(np.asarray(r_grid, dtype=float))
    else:
        xs = default_log_r_grid(tables, theta, J_diam)
    if xs.size == 0:
        raise DepthError("no radius in the grid can be bracketed at this depth")
    if (np.diff(xs) >= 0).any():
        raise ValueError("radius grid must be strictly decreasing")
    q = scale_quotient_log(tables, theta, xs, J_diam)
    upper = kind == "assouad"
    label = f"{'Assouad' if upper else 'lower'} spectrum at theta={theta:g} (scale function)"
    return _finish(q, xs, tail, f"{kind}-spectrum-scale", label, upper, theta=theta,
                   depth=tables.depth, index_is_log_r=True)
