"""Finite-depth realizations of a spec on ``[0, 1]``.

Children are placed inside each parent by one of two policies:

``uniform``
    first child flush with the parent's left end, last child flush with its
    right end, equal gaps in between.
``left``
    children packed contiguously from the parent's left end.

In ``cantor-like`` mode every child draws its own length ratio independently
and uniformly from ``[c_k (1 - a_k), c_k (1 + a_k)]``. Draws come from
``numpy.random.default_rng(seed)``, one ``uniform`` call per level covering
that level's children in left-to-right order.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, ConstructionError, SequenceError
from .sequences import SequenceSpec, eval_sequence

DEFAULT_BUDGET = 1 << 24
PLACEMENTS = ("uniform", "left")
MODES = ("moran", "cantor-like")

_PLACEMENT_ALIASES = {"uniform-gaps": "uniform", "left-packed": "left"}

# relative slack for endpoint contact; lengths are built by repeated products
_TOUCH = 1e-9


@dataclass(frozen=True, eq=False)
class LevelStructure:
    """Basic intervals of levels ``0..depth``; level 0 is ``[0, 1]``.

    ``lefts[k]`` and ``lengths[k]`` are arrays sorted by left endpoint.
    """

    spec: SequenceSpec
    depth: int
    placement: str
    mode: str
    seed: int | None
    lefts: tuple
    lengths: tuple

    @property
    def counts(self):
        return [len(x) for x in self.lefts]

    def measure_weight(self, k: int) -> float:
        return 1.0 / len(self.lefts[k])

    def rights(self, k: int) -> np.ndarray:
        return self.lefts[k] + self.lengths[k]

    def sample_points(self, count: int, level: int | None = None, seed: int = 0) -> np.ndarray:
        """Left endpoints of ``level`` intervals (default: deepest); these lie in E.

        Uses every endpoint when ``count`` is at least their number, otherwise
        a seeded draw without replacement. Returned sorted.
        """
        level = self.depth if level is None else level
        lefts = self.lefts[level]
        if count >= len(lefts):
            return lefts.copy()
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(len(lefts), size=count, replace=False))
        return lefts[idx]


def _normalize_placement(placement: str) -> str:
    placement = _PLACEMENT_ALIASES.get(placement, placement)
    if placement not in PLACEMENTS:
        raise ConstructionError(f"unknown placement {placement!r}; expected one of {PLACEMENTS}")
    return placement


def build_levels(spec: SequenceSpec, D: int, placement: str = "uniform",
                 mode: str = "moran", seed: int | None = None,
                 budget: int = DEFAULT_BUDGET) -> LevelStructure:
    """Realize ``spec`` to depth ``D``.

    Raises BudgetError before allocating if ``N_D`` exceeds ``budget`` and
    ConstructionError if some level cannot hold its children, i.e.
    ``n_k c_k (1 + a_k) > 1`` (``a_k`` is ignored in moran mode).
    """
    if D < 1:
        raise SequenceError(f"realization depth must be >= 1, got {D}")
    placement = _normalize_placement(placement)
    if mode not in MODES:
        raise ConstructionError(f"unknown mode {mode!r}; expected one of {MODES}")
    triples = [eval_sequence(spec, k) for k in range(1, D + 1)]
    total = 1
    for n, _, _ in triples:
        total *= n
        if total > budget:
            raise BudgetError(
                f"N_{D} = {np.prod([t[0] for t in triples], dtype=float):.3g} intervals "
                f"exceeds the interval budget of {budget}", budget=budget, requested=total)
    perturb = mode == "cantor-like"
    for k, (n, c, a) in enumerate(triples, start=1):
        a_eff = a if perturb else 0.0
        if n * c * (1.0 + a_eff) > 1.0 + 1e-12:
            raise ConstructionError(
                f"level {k} cannot hold its children: n_k c_k (1 + a_k) = "
                f"{n * c * (1 + a_eff):.6g} > 1")
        if perturb and a_eff >= 1.0:
            raise ConstructionError(f"a_{k} = {a} >= 1 allows non-positive ratios")

    rng = np.random.default_rng(seed) if perturb else None
    lefts = [np.zeros(1)]
    lengths = [np.ones(1)]
    for k, (n, c, a) in enumerate(triples, start=1):
        pl, plen = lefts[-1], lengths[-1]
        P = len(pl)
        if perturb and a > 0.0:
            ratios = rng.uniform(c * (1.0 - a), c * (1.0 + a), size=P * n).reshape(P, n)
        else:
            ratios = np.full((P, n), c)
        child = ratios * plen[:, None]
        # offset of each child's left end from its parent's left end
        before = np.cumsum(child, axis=1) - child
        if placement == "uniform":
            slack = plen - child.sum(axis=1)
            gap = np.maximum(slack, 0.0) / (n - 1)
            off = before + gap[:, None] * np.arange(n)[None, :]
        else:
            off = before
        lefts.append((pl[:, None] + off).ravel())
        lengths.append(child.ravel())
    for arr in lefts + lengths:
        arr.setflags(write=False)
    return LevelStructure(spec=spec, depth=D, placement=placement, mode=mode, seed=seed,
                          lefts=tuple(lefts), lengths=tuple(lengths))


def verify_structure(ls: LevelStructure, tables=None) -> list:
    """Structural invariants of a realization; returns a list of violation strings.

    Checks child counts, nesting, disjoint sibling interiors, sort order and
    the moran-mode length (or cantor-like ratio band) contract.
    """
    out = []
    for k in range(1, ls.depth + 1):
        n, c, a = eval_sequence(ls.spec, k)
        L, W = ls.lefts[k], ls.lengths[k]
        PL, PW = ls.lefts[k - 1], ls.lengths[k - 1]
        if len(L) != len(PL) * n:
            out.append(f"level {k}: {len(L)} intervals, expected {len(PL) * n}")
            continue
        if (W <= 0).any():
            out.append(f"level {k}: non-positive length")
        parent = np.repeat(np.arange(len(PL)), n)
        tol = _TOUCH * PW[parent]
        if ((L < PL[parent] - tol) | (L + W > PL[parent] + PW[parent] + tol)).any():
            i = int(np.argmax((L < PL[parent] - tol) | (L + W > PL[parent] + PW[parent] + tol)))
            out.append(f"level {k}: interval {i} is not inside its parent")
        overlap = L[1:] < (L + W)[:-1] - _TOUCH * W[:-1]
        if overlap.any():
            i = int(np.argmax(overlap))
            out.append(f"level {k}: intervals {i} and {i + 1} have overlapping interiors")
        if (np.diff(L) < 0).any():
            out.append(f"level {k}: intervals not sorted by left endpoint")
        ratio = W / PW[parent]
        if ls.mode == "moran":
            if np.abs(ratio - c).max() > 1e-12 * c:
                out.append(f"level {k}: child/parent ratio deviates from c_k = {c}")
            if tables is not None and k <= tables.depth:
                want = np.exp(tables.logDelta[k])
                if np.abs(W - want).max() > 1e-12 * want:
                    out.append(f"level {k}: lengths differ from delta_k = {want:.6g}")
        else:
            lo, hi = c * (1 - a), c * (1 + a)
            if ((ratio < lo * (1 - 1e-12)) | (ratio > hi * (1 + 1e-12))).any():
                out.append(f"level {k}: child/parent ratio outside [{lo:.6g}, {hi:.6g}]")
    return out


def intervals_at_level(ls: LevelStructure, k: int) -> np.ndarray:
    """Level-``k`` intervals as an ``(N_k, 2)`` array of ``[left, right]`` rows."""
    if not 0 <= k <= ls.depth:
        raise SequenceError(f"level {k} out of range 0..{ls.depth}", k=k)
    return np.column_stack([ls.lefts[k], ls.lefts[k] + ls.lengths[k]])


def locate(ls: LevelStructure, x: float, k: int):
    """Index of the level-``k`` interval containing ``x``, or ``None`` if ``x`` is in a gap.

    Endpoints are inclusive; where two intervals share an endpoint the one
    starting at ``x`` is returned.
    """
    if not 0 <= k <= ls.depth:
        raise SequenceError(f"level {k} out of range 0..{ls.depth}", k=k)
    L, W = ls.lefts[k], ls.lengths[k]
    tol = _TOUCH * W.min()
    i = int(np.searchsorted(L, x + tol, side="right")) - 1
    if i >= 0 and x <= L[i] + W[i] + tol:
        return i
    return None


def natural_measure_ball(ls: LevelStructure, x: float, r: float, k: int,
                         weighting: str = "count") -> float:
    """Level-``k`` discretization of the natural measure of ``[x - r, x + r]``.

    ``weighting="count"`` charges ``1/N_k`` for every level-``k`` interval the
    closed ball meets. ``weighting="overlap"`` charges ``1/N_k`` times the
    fraction of each interval's length inside the ball, i.e. it spreads each
    interval's mass uniformly over it; mere endpoint contact then costs nothing.
    """
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    if locate(ls, x, k) is None:
        raise ConstructionError(
            f"x = {x!r} lies in a gap at level {k}; use points of E such as interval endpoints")
    L, W = ls.lefts[k], ls.lengths[k]
    R = L + W
    tol = _TOUCH * W.min()
    hi = int(np.searchsorted(L, x + r + tol, side="right"))
    lo = int(np.searchsorted(R, x - r - tol, side="left"))
    if weighting == "count":
        return (hi - lo) / len(L)
    if weighting != "overlap":
        raise ValueError(f"unknown weighting {weighting!r}")
    seg_l = np.maximum(L[lo:hi], x - r)
    seg_r = np.minimum(R[lo:hi], x + r)
    frac = np.clip(seg_r - seg_l, 0.0, None) / W[lo:hi]
    return float(frac.sum()) / len(L)


def export_csv(ls: LevelStructure, levels=None) -> str:
    """Intervals as CSV with columns ``level,index,left,length``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "index", "left", "length"])
    for k in (range(ls.depth + 1) if levels is None else levels):
        for i, (l, w_) in enumerate(zip(ls.lefts[k].tolist(), ls.lengths[k].tolist())):
            w.writerow([k, i, repr(l), repr(w_)])
    return buf.getvalue()
