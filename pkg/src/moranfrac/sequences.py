"""Sequence specs ``(n_k, c_k, a_k)`` and their logarithmic prefix tables.

A spec is one of four finitely describable kinds, so the set of values the
sequence takes is finite and ``M = sup n_k`` and ``c_* = inf c_k`` are exact:

``constant``
    a single triple for every ``k``.
``periodic``
    a list of triples repeated cyclically, ``k = 1`` maps to the first one.
``explicit-with-tail``
    a list of triples for ``k <= K0`` followed by a constant tail triple.
``block-rule``
    named regimes plus block families ``{regime, base, start, stop}``; index
    ``k`` belongs to a family when ``start * base**j <= k < stop * base**j``
    for some ``j >= 0``. The first matching family wins, otherwise the
    ``default`` regime applies.

JSON documents look like::

    {"kind": "periodic",
     "values": [[2, "1/4", 0], [3, "1/5", 0]],
     "class_flags": {"moran": true, "cantor_like": true}}

    {"kind": "explicit-with-tail",
     "values": [[2, "1/3", 0.5], [2, "1/3", 0.25]],
     "tail": [2, "1/3", 0]}

    {"kind": "block-rule",
     "values": {"regimes": {"two": [2, "1/4", 0], "three": [3, "1/4", 0]},
                "default": "two",
                "blocks": [{"regime": "three", "base": 4, "start": 1, "stop": 2}]}}

Reals may be given as numbers or as ``"p/q"`` strings.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import SequenceError, SpecFormatError

KINDS = ("constant", "periodic", "explicit-with-tail", "block-rule")

Triple = tuple  # (n: int, c: float, a: float)


@dataclass(frozen=True)
class Block:
    regime: str
    base: int
    start: int
    stop: int

    def contains(self, k: int) -> bool:
        lo, hi = self.start, self.stop
        while lo <= k:
            if k < hi:
                return True
            lo *= self.base
            hi *= self.base
        return False


@dataclass(frozen=True)
class SequenceSpec:
    """Defining data of a homogeneous Moran / Cantor-like set.

    Use the ``constant``, ``periodic``, ``explicit`` and ``block_rule``
    constructors, or ``from_dict`` for JSON documents.
    """

    kind: str
    values: tuple = ()
    tail: tuple | None = None
    regimes: tuple = ()  # ((label, triple), ...)
    default: str | None = None
    blocks: tuple = ()
    moran: bool = True
    cantor_like: bool = True
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecFormatError(f"unknown spec kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("constant", "periodic", "explicit-with-tail") and not self.values:
            raise SpecFormatError(f"{self.kind} spec needs at least one value triple")
        if self.kind == "constant" and len(self.values) != 1:
            raise SpecFormatError("constant spec takes exactly one value triple")
        if self.kind == "explicit-with-tail" and self.tail is None:
            raise SpecFormatError("explicit-with-tail spec needs a tail triple")
        if self.kind == "block-rule":
            labels = dict(self.regimes)
            if not labels:
                raise SpecFormatError("block-rule spec needs at least one regime")
            if self.default not in labels:
                raise SpecFormatError(f"default regime {self.default!r} is not defined")
            for b in self.blocks:
                if b.regime not in labels:
                    raise SpecFormatError(f"block refers to undefined regime {b.regime!r}")
                if b.base < 2 or b.start < 1 or b.stop <= b.start:
                    raise SpecFormatError(f"malformed block {b}: need base>=2, 1<=start<stop")

    # -- constructors -------------------------------------------------
    @classmethod
    def constant(cls, n, c, a=0.0, **flags):
        return cls("constant", values=(_triple((n, c, a)),), **flags)

    @classmethod
    def periodic(cls, triples, **flags):
        return cls("periodic", values=tuple(_triple(t) for t in triples), **flags)

    @classmethod
    def explicit(cls, triples, tail, **flags):
        return cls("explicit-with-tail", values=tuple(_triple(t) for t in triples),
                   tail=_triple(tail), **flags)

    @classmethod
    def block_rule(cls, regimes: Mapping, default: str, blocks: Iterable, **flags):
        regs = tuple((str(k), _triple(v)) for k, v in regimes.items())
        blks = tuple(b if isinstance(b, Block) else Block(**b) for b in blocks)
        return cls("block-rule", regimes=regs, default=default, blocks=blks, **flags)

    # -- serialization ------------------------------------------------
    @classmethod
    def from_dict(cls, doc: Mapping) -> "SequenceSpec":
        if not isinstance(doc, Mapping):
            raise SpecFormatError("spec document must be a JSON object")
        try:
            kind = doc["kind"]
        except KeyError:
            raise SpecFormatError("spec document has no 'kind'") from None
        flags = doc.get("class_flags", {}) or {}
        kw = dict(moran=bool(flags.get("moran", True)),
                  cantor_like=bool(flags.get("cantor_like", True)),
                  name=doc.get("name"))
        values = doc.get("values")
        try:
            if kind == "block-rule":
                if not isinstance(values, Mapping):
                    raise SpecFormatError("block-rule 'values' must be an object")
                return cls.block_rule(values.get("regimes", {}), values.get("default"),
                                      values.get("blocks", ()), **kw)
            if not isinstance(values, list):
                raise SpecFormatError(f"{kind} 'values' must be a list of [n, c, a] triples")
            if kind == "constant":
                return cls("constant", values=tuple(_triple(t) for t in values), **kw)
            if kind == "periodic":
                return cls.periodic(values, **kw)
            if kind == "explicit-with-tail":
                if doc.get("tail") is None:
                    raise SpecFormatError("explicit-with-tail spec needs a tail triple")
                return cls.explicit(values, doc["tail"], **kw)
        except (TypeError, KeyError) as exc:
            raise SpecFormatError(f"malformed spec document: {exc}") from exc
        raise SpecFormatError(f"unknown spec kind {kind!r}; expected one of {KINDS}")

    def to_dict(self) -> dict:
        doc = {"kind": self.kind}
        if self.name:
            doc["name"] = self.name
        if self.kind == "block-rule":
            doc["values"] = {
                "regimes": {lab: list(t) for lab, t in self.regimes},
                "default": self.default,
                "blocks": [vars(b).copy() for b in self.blocks],
            }
        else:
            doc["values"] = [list(t) for t in self.values]
        if self.tail is not None:
            doc["tail"] = list(self.tail)
        doc["class_flags"] = {"moran": self.moran, "cantor_like": self.cantor_like}
        return doc

    @classmethod
    def load(cls, path) -> "SequenceSpec":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SpecFormatError(f"{path}: not valid JSON ({exc})") from exc
        spec = cls.from_dict(doc)
        if spec.name is None:
            object.__setattr__(spec, "name", Path(path).stem)
        return spec


def _real(v) -> float:
    if isinstance(v, str):
        try:
            return float(Fraction(v.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecFormatError(f"cannot parse real {v!r}") from exc
    if isinstance(v, bool) or not isinstance(v, (int, float, Fraction)):
        raise SpecFormatError(f"expected a real number, got {v!r}")
    return float(v)


def _triple(t) -> Triple:
    if isinstance(t, (str, bytes)) or not isinstance(t, Sequence) or len(t) not in (2, 3):
        raise SpecFormatError(f"expected an [n, c] or [n, c, a] triple, got {t!r}")
    n = t[0]
    if isinstance(n, float) and n.is_integer():
        n = int(n)
    if isinstance(n, bool) or not isinstance(n, int):
        raise SpecFormatError(f"n must be an integer, got {n!r}")
    a = _real(t[2]) if len(t) == 3 else 0.0
    return (n, _real(t[1]), a)


def eval_sequence(spec: SequenceSpec, k: int) -> Triple:
    """Return ``(n_k, c_k, a_k)`` for ``k >= 1``."""
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise SequenceError(f"sequence index must be a positive integer, got {k!r}", k=k)
    k = int(k)
    if spec.kind == "constant":
        return spec.values[0]
    if spec.kind == "periodic":
        return spec.values[(k - 1) % len(spec.values)]
    if spec.kind == "explicit-with-tail":
        return spec.values[k - 1] if k <= len(spec.values) else spec.tail
    regimes = dict(spec.regimes)
    for b in spec.blocks:
        if b.contains(k):
            return regimes[b.regime]
    return regimes[spec.default]


def _occurrences(spec: SequenceSpec, scan_limit: int = 1 << 16):
    """Distinct triples the sequence takes, each with the first ``k`` it occurs at.

    Exact for every kind. For block rules the scan runs until every regime
    that can occur has been seen.
    """
    if spec.kind in ("constant", "periodic"):
        idx = range(1, len(spec.values) + 1)
        return list(zip(spec.values, idx))
    if spec.kind == "explicit-with-tail":
        out = list(zip(spec.values, range(1, len(spec.values) + 1)))
        out.append((spec.tail, len(spec.values) + 1))
        return out
    regimes = dict(spec.regimes)
    wanted = {b.regime for b in spec.blocks} | {spec.default}
    first = {}
    for k in range(1, scan_limit + 1):
        lab = next((b.regime for b in spec.blocks if b.contains(k)), spec.default)
        first.setdefault(lab, k)
        if set(first) == wanted:
            break
    return [(regimes[lab], k) for lab, k in sorted(first.items(), key=lambda kv: kv[1])]


def _recurring(spec: SequenceSpec):
    """Triples that occur infinitely often."""
    if spec.kind in ("constant", "periodic"):
        return list(spec.values)
    if spec.kind == "explicit-with-tail":
        return [spec.tail]
    return [t for t, _ in _occurrences(spec)]


@dataclass(frozen=True)
class Failure:
    invariant: str
    k: int
    message: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    M: int
    c_star: float
    probe_depth: int
    failures: tuple = ()
    a_partial_sum: float = 0.0

    @property
    def first_offending_k(self):
        return min((f.k for f in self.failures), default=None)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "M": self.M,
            "c_star": self.c_star,
            "probe_depth": self.probe_depth,
            "a_partial_sum": self.a_partial_sum,
            "first_offending_k": self.first_offending_k,
            "failures": [vars(f).copy() for f in self.failures],
        }

    def raise_if_failed(self):
        if not self.ok:
            f = min(self.failures, key=lambda f: f.k)
            raise SequenceError(f.message, k=f.k, invariant=f.invariant)


def _triple_failures(t, k, spec):
    n, c, a = t
    out = []
    if n < 2:
        out.append(Failure("n_k >= 2", k, f"n_{k} = {n} violates n_k >= 2"))
    if not 0.0 < c < 1.0:
        out.append(Failure("0 < c_k < 1", k, f"c_{k} = {c!r} violates 0 < c_k < 1"))
    if a < 0.0:
        out.append(Failure("a_k >= 0", k, f"a_{k} = {a!r} violates a_k >= 0"))
    if spec.moran and n * c >= 1.0:
        out.append(Failure("n_k c_k < 1", k,
                           f"n_{k} c_{k} = {n * c!r} violates n_k c_k < 1 (Moran class)"))
    return out


def validate(spec: SequenceSpec, probe_depth: int = 256) -> ValidationReport:
    """Check every spec invariant; report ``M = sup n_k`` and ``c_* = inf c_k``.

    All four kinds take finitely many values, so the checks below are exact
    for every ``k``, not only up to ``probe_depth``. The probe additionally
    evaluates ``k = 1..probe_depth`` one by one and accumulates ``sum a_k``.
    """
    if probe_depth < 1:
        raise SequenceError(f"probe_depth must be >= 1, got {probe_depth}")
    failures = {}

    def add(fs):
        for f in fs:
            key = (f.invariant, f.message.split("=", 1)[-1])
            if key not in failures or failures[key].k > f.k:
                failures[key] = f

    occ = _occurrences(spec)
    for t, k in occ:
        add(_triple_failures(t, k, spec))
    a_sum = 0.0
    for k in range(1, probe_depth + 1):
        t = eval_sequence(spec, k)
        a_sum += t[2]
        add(_triple_failures(t, k, spec))
    if spec.cantor_like:
        for t in _recurring(spec):
            if t[2] != 0.0:
                k = next(kk for tt, kk in occ if tt == t)
                add([Failure("sum a_k < inf", k,
                             f"a_k = {t[2]!r} recurs infinitely often from k = {k}, "
                             "so sum a_k diverges (Cantor-like class)")])
    M = max(t[0] for t, _ in occ)
    c_star = min(t[1] for t, _ in occ)
    fs = tuple(sorted(failures.values(), key=lambda f: (f.k, f.invariant)))
    return ValidationReport(ok=not fs, M=M, c_star=c_star, probe_depth=probe_depth,
                            failures=fs, a_partial_sum=a_sum)


def sup_a(spec: SequenceSpec) -> float:
    return max(t[2] for t, _ in _occurrences(spec))


def sup_c(spec: SequenceSpec) -> float:
    return max(t[1] for t, _ in _occurrences(spec))


def is_cantor_like(spec: SequenceSpec) -> bool:
    """Whether the spec satisfies the Cantor-like conditions, flags aside."""
    probe = SequenceSpec.from_dict({**spec.to_dict(),
                                    "class_flags": {"moran": False, "cantor_like": True}})
    return validate(probe, probe_depth=1).ok


def _compensated_cumsum(x: np.ndarray) -> np.ndarray:
    """Prefix sums with Neumaier compensation, so differences telescope exactly."""
    out = np.empty(len(x) + 1)
    out[0] = 0.0
    s = comp = 0.0
    for i, v in enumerate(x.tolist(), start=1):
        t = s + v
        if abs(s) >= abs(v):
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
        out[i] = s + comp
    return out


@dataclass(frozen=True, eq=False)
class PrefixTables:
    """``log N_k`` and ``log delta_k`` for ``k = 0..depth``.

    ``n``, ``c`` and ``a`` hold the raw sequence with a placeholder at index 0,
    so ``n[k]`` is ``n_k``.
    """

    spec: SequenceSpec
    depth: int
    n: np.ndarray
    c: np.ndarray
    a: np.ndarray
    logN: np.ndarray
    logDelta: np.ndarray

    def __len__(self):
        return self.depth + 1


def build_prefix_tables(spec: SequenceSpec, K: int) -> PrefixTables:
    if isinstance(K, bool) or not isinstance(K, (int, np.integer)) or K < 1:
        raise SequenceError(f"table depth K must be a positive integer, got {K!r}")
    K = int(K)
    triples = [eval_sequence(spec, k) for k in range(1, K + 1)]
    n = np.array([0] + [t[0] for t in triples], dtype=np.int64)
    c = np.array([1.0] + [t[1] for t in triples])
    a = np.array([0.0] + [t[2] for t in triples])
    if n[1:].min() < 2 or not ((c[1:] > 0) & (c[1:] < 1)).all():
        raise SequenceError("spec violates n_k >= 2 or 0 < c_k < 1; run validate() first")
    logN = _compensated_cumsum(np.log(n[1:].astype(float)))
    logDelta = _compensated_cumsum(np.log(c[1:]))
    for arr in (n, c, a, logN, logDelta):
        arr.setflags(write=False)
    return PrefixTables(spec=spec, depth=K, n=n, c=c, a=a, logN=logN, logDelta=logDelta)
