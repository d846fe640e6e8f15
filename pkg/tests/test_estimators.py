import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from moranfrac import (EmpiricalDimension, EmpiricalSpectrum, FormulaDimension, FormulaSpectrum,
                       SequenceSpec)
from moranfrac.errors import SequenceError

LOG23 = math.log(2) / math.log(3)


def test_params_roundtrip():
    est = FormulaSpectrum(depth=1024, kind="lower")
    assert est.get_params() == {"depth": 1024, "kind": "lower", "method": "formula", "tail": 0.5}
    twin = clone(est).set_params(method="scale")
    assert twin.method == "scale" and est.method == "formula"


def test_formula_dimension_fit():
    est = FormulaDimension(depth=256).fit("middle-third")
    assert est.dimension_ == pytest.approx(LOG23, abs=1e-12)
    assert est.lower_bound_value_ == pytest.approx(LOG23, abs=1e-12)
    assert est.lower_bound_.label == "upper bound on lower dimension"


def test_formula_dimension_rejects_invalid_spec():
    with pytest.raises(SequenceError, match="n_k c_k < 1"):
        FormulaDimension(depth=64).fit(SequenceSpec.constant(3, 0.5))


@pytest.mark.parametrize("bad", [0, -5, 2.5, "deep"])
def test_depth_validation(bad):
    with pytest.raises((ValueError, TypeError)):
        FormulaDimension(depth=bad).fit("middle-third")


def test_formula_spectrum_predict_order_and_duplicates():
    est = FormulaSpectrum(depth=1024).fit(SequenceSpec.constant(2, 0.25))
    out = est.predict([0.5, 0.25, 0.5])
    assert out.shape == (3,)
    assert np.allclose(out, 0.5, atol=1e-12)
    assert est.predict([]).shape == (0,)


def test_formula_spectrum_transform():
    est = FormulaSpectrum(depth=2048).fit("dyadic-block")
    X = est.transform([0.3, 0.7])
    assert X.shape == (2, 2)
    assert (X[:, 1] >= 0).all()


@pytest.mark.parametrize("thetas", [[0.0], [1.0], [[0.2, 0.3]], [np.nan]])
def test_spectrum_rejects_bad_theta(thetas):
    est = FormulaSpectrum(depth=256).fit("middle-third")
    with pytest.raises(ValueError):
        est.predict(thetas)


def test_unfitted_raises():
    with pytest.raises(NotFittedError):
        FormulaSpectrum().predict([0.5])
    with pytest.raises(NotFittedError):
        EmpiricalSpectrum().predict([0.5])


def test_scale_and_formula_methods_agree():
    a = FormulaSpectrum(depth=8192).fit("dyadic-block").predict([0.3, 0.5])
    b = FormulaSpectrum(depth=8192, method="scale").fit("dyadic-block").predict([0.3, 0.5])
    assert np.abs(a - b).max() < 0.02


def test_empirical_dimension():
    est = EmpiricalDimension(depth=12, k_max=4, l_max=4, samples=32).fit("middle-third")
    assert abs(est.dimension_ - LOG23) <= 0.05
    assert est.lower_dimension_ <= est.dimension_
    assert est.structure_.mode == "moran"


def test_empirical_auto_mode():
    est = EmpiricalSpectrum(depth=10, seed=42).fit("perturbed-middle-third")
    assert est.structure_.mode == "cantor-like"
    assert est.predict([0.5]).shape == (1,)
