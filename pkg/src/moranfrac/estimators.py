"""scikit-learn style front ends.

Each estimator is fitted on a spec (a ``SequenceSpec``, a spec dict, a JSON
path or a catalog name). Spectrum estimators then map an array of ``theta``
values to dimension values through ``predict``; ``transform`` returns
``(value, spread)`` columns instead.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import estimate, formulas
from ._validation import check_depth, check_spec, check_thetas
from .construct import build_levels
from .sequences import build_prefix_tables, sup_a


class FormulaDimension(BaseEstimator):
    """Assouad dimension and the lower-dimension upper bound from the closed forms.

    Attributes after ``fit``: ``tables_``, ``assouad_`` and ``lower_bound_``
    (``DimensionEstimate``), ``dimension_`` (the Assouad value) and
    ``lower_bound_value_``.
    """

    def __init__(self, depth=4096, L_max=None, tail=0.5):
        self.depth = depth
        self.L_max = L_max
        self.tail = tail

    def fit(self, X, y=None):
        spec = check_spec(X)
        depth = check_depth(self.depth)
        self.tables_ = build_prefix_tables(spec, depth)
        L_max = depth // 2 if self.L_max is None else check_depth(self.L_max, "L_max")
        self.assouad_ = formulas.assouad_dim_formula(self.tables_, L_max, self.tail)
        self.lower_bound_ = formulas.lower_dim_bound_formula(self.tables_, L_max, self.tail)
        self.dimension_ = self.assouad_.value
        self.lower_bound_value_ = self.lower_bound_.value
        return self


class FormulaSpectrum(BaseEstimator, TransformerMixin):
    """Assouad or lower spectrum, by the level-pairing formula or the scale function."""

    def __init__(self, depth=8192, kind="assouad", method="formula", tail=0.5):
        self.depth = depth
        self.kind = kind
        self.method = method
        self.tail = tail

    def fit(self, X, y=None):
        spec = check_spec(X)
        if self.kind not in ("assouad", "lower"):
            raise ValueError(f"kind must be 'assouad' or 'lower', got {self.kind!r}")
        if self.method not in ("formula", "scale"):
            raise ValueError(f"method must be 'formula' or 'scale', got {self.method!r}")
        self.tables_ = build_prefix_tables(spec, check_depth(self.depth))
        return self

    def curve(self, thetas) -> formulas.SpectrumCurve:
        check_is_fitted(self, "tables_")
        grid = np.sort(check_thetas(thetas))
        return formulas.spectrum_curve(self.tables_, grid, kind=self.kind, tail=self.tail,
                                       method=self.method)

    def predict(self, thetas) -> np.ndarray:
        thetas = check_thetas(thetas)
        if thetas.size == 0:
            return np.empty(0)
        order = np.argsort(thetas)
        uniq, inv = np.unique(thetas[order], return_inverse=True)
        vals = self.curve(uniq).values[inv]
        out = np.empty_like(vals)
        out[order] = vals
        return out

    def transform(self, thetas) -> np.ndarray:
        thetas = check_thetas(thetas)
        cols = []
        for t in thetas.tolist():
            c = self.curve([t])
            cols.append((c.values[0], c.spreads[0]))
        return np.array(cols, dtype=float).reshape(-1, 2)


class EmpiricalDimension(BaseEstimator):
    """Covering-number estimates of the Assouad and lower dimensions on a realization.

    ``mode="auto"`` realizes Cantor-like perturbations when the spec has any
    ``a_k > 0``. Attributes after ``fit``: ``structure_``, ``assouad_`` and
    ``lower_`` (``EmpiricalReport``), ``dimension_`` and ``lower_dimension_``.
    """

    def __init__(self, depth=15, placement="uniform", mode="auto", seed=None, k_max=6,
                 l_max=6, samples=64, estimator="slope", sample_seed=0):
        self.depth = depth
        self.placement = placement
        self.mode = mode
        self.seed = seed
        self.k_max = k_max
        self.l_max = l_max
        self.samples = samples
        self.estimator = estimator
        self.sample_seed = sample_seed

    def fit(self, X, y=None):
        spec = check_spec(X)
        self.structure_ = _realize(spec, self)
        pairs = [(k, l) for k, l in estimate.level_pair_grid(self.k_max, self.l_max)
                 if k + l < self.structure_.depth]
        self.assouad_ = estimate.empirical_assouad(self.structure_, pairs, self.samples,
                                                   self.estimator, self.sample_seed)
        self.lower_ = estimate.empirical_lower(self.structure_, pairs, self.samples,
                                               self.estimator, self.sample_seed)
        self.dimension_ = self.assouad_.value
        self.lower_dimension_ = self.lower_.value
        return self


class EmpiricalSpectrum(BaseEstimator):
    """Covering-number estimate of a spectrum point for each ``theta``."""

    def __init__(self, depth=14, placement="uniform", mode="auto", seed=None, kind="assouad",
                 samples=64, estimator="slope", sample_seed=0):
        self.depth = depth
        self.placement = placement
        self.mode = mode
        self.seed = seed
        self.kind = kind
        self.samples = samples
        self.estimator = estimator
        self.sample_seed = sample_seed

    def fit(self, X, y=None):
        spec = check_spec(X)
        self.structure_ = _realize(spec, self)
        return self

    def report(self, theta) -> estimate.EmpiricalReport:
        check_is_fitted(self, "structure_")
        return estimate.empirical_spectrum_point(self.structure_, theta, samples=self.samples,
                                                 kind=self.kind, estimator=self.estimator,
                                                 seed=self.sample_seed)

    def predict(self, thetas) -> np.ndarray:
        return np.array([self.report(t).value for t in check_thetas(thetas).tolist()])


def _realize(spec, est):
    mode = est.mode
    if mode == "auto":
        mode = "cantor-like" if sup_a(spec) > 0 else "moran"
    return build_levels(spec, check_depth(est.depth), est.placement, mode, est.seed)
