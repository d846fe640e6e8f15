"""Brute-force reference computations, independent of the fast paths.

Nothing here touches prefix tables or the greedy cover: window products are
re-multiplied from raw ``eval_sequence`` values (with a binary exponent kept
aside so long products of ``c_k`` do not underflow), and minimal covers are
found by exhaustive search in exact rational arithmetic.
"""
from __future__ import annotations

import bisect
import math
from fractions import Fraction

import numpy as np

from .sequences import SequenceSpec, eval_sequence

_LN2 = math.log(2.0)


class _ScaledProduct:
    """Running product kept as ``mantissa * 2**exponent``."""

    __slots__ = ("m", "e")

    def __init__(self):
        self.m, self.e = 1.0, 0

    def mul(self, v):
        m, e = math.frexp(self.m * v)
        self.m, self.e = m, self.e + e

    def log(self):
        return math.log(self.m) + self.e * _LN2


def raw_sequence(spec: SequenceSpec, K: int):
    trip = [eval_sequence(spec, k) for k in range(1, K + 1)]
    return [0] + [t[0] for t in trip], [1.0] + [t[1] for t in trip]


def window_ratio_grid(spec: SequenceSpec, K: int, L_max: int) -> np.ndarray:
    """``G[k, l] = log(n_{k+1}...n_{k+l}) / -log(c_{k+1}...c_{k+l})`` for ``k + l <= K``; NaN elsewhere."""
    n, c = raw_sequence(spec, K)
    G = np.full((K + 1, L_max + 1), np.nan)
    for k in range(1, K):
        pn = 1
        pc = _ScaledProduct()
        for l in range(1, min(L_max, K - k) + 1):
            pn *= n[k + l]
            pc.mul(c[k + l])
            G[k, l] = math.log(pn) / -pc.log()
    return G


def brute_window_traces(spec: SequenceSpec, K: int, L_max: int):
    """``(sup_k, inf_k)`` of the window ratio for each ``l = 1..L_max``."""
    G = window_ratio_grid(spec, K, L_max)
    return np.nanmax(G[1:, 1:], axis=0), np.nanmin(G[1:, 1:], axis=0)


def brute_log_deltas(spec: SequenceSpec, K: int) -> list:
    _, c = raw_sequence(spec, K)
    out = [0.0]
    p = _ScaledProduct()
    for k in range(1, K + 1):
        p.mul(c[k])
        out.append(p.log())
    return out


def brute_level_index(spec: SequenceSpec, theta: float, k: int, K: int) -> int:
    """Linear scan for the largest ``l`` with ``delta_l >= delta_k ** (1/theta)``."""
    logd = brute_log_deltas(spec, K)
    target = logd[k] / theta
    best = None
    for l in range(1, K + 1):
        if logd[l] >= target - 1e-12 * abs(target):
            best = l
        else:
            break
    if best is None or best >= K:
        raise ValueError("scan ran off the end of the computed range")
    return best


def brute_spectrum_trace(spec: SequenceSpec, theta: float, ks, K: int) -> np.ndarray:
    """``log(n_{k+1}...n_{l(theta,k)}) / ((1 - 1/theta) log delta_k)`` from raw products."""
    n, _ = raw_sequence(spec, K)
    logd = brute_log_deltas(spec, K)
    out = []
    for k in ks:
        l = brute_level_index(spec, theta, int(k), K)
        num = math.log(math.prod(n[k + 1:l + 1]))
        out.append(num / ((1.0 - 1.0 / theta) * logd[k]))
    return np.array(out)


def brute_scale_bracket(spec: SequenceSpec, r: float, J_diam: float = 1.0,
                        K: int = 10_000) -> int:
    """Smallest ``k`` with ``delta_k |J| < r``, by direct multiplication."""
    delta = 1.0
    for k in range(1, K + 1):
        delta *= eval_sequence(spec, k)[1]
        if delta * J_diam < r * (1 - 1e-12):
            return k
    raise ValueError("r not bracketed within K levels")


# -- exhaustive interval covering ----------------------------------------

def _first_uncovered(segments, balls):
    """Leftmost trouble spot of ``segments`` minus ``balls``, all closed and exact.

    Returns ``None`` when everything is covered, ``(p, False)`` when the point
    ``p`` itself is uncovered, and ``(p, True)`` when ``p`` is covered but the
    points just to its right are not.
    """
    union = []
    for lo, hi in sorted(balls):
        if union and lo <= union[-1][1]:
            union[-1][1] = max(union[-1][1], hi)
        else:
            union.append([lo, hi])
    for lo, hi in segments:
        u = next((u for u in union if u[0] <= lo <= u[1]), None)
        if u is None:
            return lo, False
        if u[1] < hi:
            return u[1], True
    return None


def exhaustive_min_cover(segments, width) -> int:
    """Minimum number of closed intervals of length ``width`` covering a union of closed segments.

    Branch over covers anchored at candidate left ends ``a_i + m * width`` and
    right-anchored ends ``b_i - (m + 1) * width``; every ball must contain the
    leftmost uncovered point. Use ``Fraction`` inputs for exact results.
    """
    segs = sorted((Fraction(a), Fraction(b)) for a, b in segments)
    w = Fraction(width)
    if not segs:
        return 0
    # rescale to integers; exact, and much faster than Fraction arithmetic
    scale = math.lcm(w.denominator, *(x.denominator for seg in segs for x in seg))
    segs = [(int(a * scale), int(b * scale)) for a, b in segs]
    w = int(w * scale)
    span = segs[-1][1] - segs[0][0]
    mmax = span // w + 2
    cands = set()
    for a, b in segs:
        for m in range(mmax + 1):
            cands.add(a + m * w)
            cands.add(b - (m + 1) * w)
    cands = sorted(cands)
    origin = segs[0][0]

    # Once every ball contains the leftmost uncovered point, the covered part
    # of the segments is everything up to the rightmost ball end, so the
    # uncovered remainder is fixed by its leftmost spot. Breadth-first search
    # over spots gives the minimum.
    frontier = {_first_uncovered(segs, [])}
    depth = 0
    while frontier:
        depth += 1
        nxt = set()
        for p, right_open in frontier:
            for s in cands[bisect.bisect_left(cands, p - w):bisect.bisect_right(cands, p)]:
                if p < s + w if right_open else p <= s + w:
                    spot = _first_uncovered(segs, [(origin, s + w)])
                    if spot is None:
                        return depth
                    nxt.add(spot)
        frontier = nxt
    raise AssertionError("unreachable: the candidate set always extends the cover")
