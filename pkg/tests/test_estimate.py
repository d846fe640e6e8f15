import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from moranfrac import (LevelStructure, SequenceSpec, assouad_dim_formula, build_levels,
                       build_prefix_tables, check_counting_lemmas, check_measure_properties,
                       covering_number, empirical_assouad, empirical_lower,
                       empirical_spectrum_point, lower_dim_bound_formula, spectrum_sweep,
                       sweep_to_csv, two_scale_exponent)
from moranfrac.catalog import catalog_names, load_catalog
from moranfrac.errors import DepthError
from moranfrac.estimate import (ScalePair, greedy_cover_count, level_pair_grid,
                                measure_depth_trend, reevaluate_witness)
from moranfrac.oracles import exhaustive_min_cover
from moranfrac.suite import greedy_vs_exhaustive, inject_overlap

LOG23 = math.log(2) / math.log(3)
MT = SequenceSpec.constant(2, 1 / 3)


@pytest.fixture(scope="module")
def mt10():
    return build_levels(MT, 10)


@pytest.fixture(scope="module")
def mt15():
    return build_levels(MT, 15)


# -- covering numbers ------------------------------------------------------

def test_cover_example_four_balls(mt10):
    assert covering_number(mt10, 0.0, 1 / 3, 1 / 27, level=4) == 4
    assert two_scale_exponent(mt10, 0.0, 1 / 3, 1 / 27, level=4) == pytest.approx(LOG23)


def test_cover_example_clipped_segments_oracle():
    segs = [(0, Fraction(1, 27)), (Fraction(2, 27), Fraction(1, 9)),
            (Fraction(2, 9), Fraction(7, 27)), (Fraction(8, 27), Fraction(1, 3))]
    assert exhaustive_min_cover(segs, Fraction(2, 27)) == 4


def test_cover_example_two_balls(mt10):
    assert covering_number(mt10, 0.0, 1 / 3, 1 / 9, level=3) == 2


def test_cover_whole_set_single_ball(mt10):
    assert covering_number(mt10, 0.5, 1.0, 0.5) == 1
    assert two_scale_exponent(mt10, 0.5, 1.0, 0.5) == 0.0


@pytest.mark.parametrize("R, r", [(1 / 9, 1 / 9), (1 / 9, 1 / 3), (0.1, 0.0)])
def test_cover_rejects_bad_scales(mt10, R, r):
    with pytest.raises(ValueError):
        covering_number(mt10, 0.0, R, r)


def test_cover_demands_finer_skeleton(mt10):
    with pytest.raises(DepthError):
        covering_number(mt10, 0.0, 1 / 3, 1 / 27, level=3)
    with pytest.raises(DepthError):
        covering_number(mt10, 0.0, 1 / 3, 3.0 ** -12)


def test_greedy_matches_exhaustive_corpus():
    assert greedy_vs_exhaustive(300, seed=1) == []


dyadic = st.integers(0, 256)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(dyadic, st.integers(0, 24)), min_size=1, max_size=12),
       st.integers(1, 96))
def test_greedy_is_optimal(raw, width):
    # disjoint sorted segments on the 1/256 grid
    segs, cursor = [], 0
    for gap, length in raw:
        lo = cursor + gap % 32
        segs.append((lo, lo + length))
        cursor = lo + length + 1
    frac = [(Fraction(a, 256), Fraction(b, 256)) for a, b in segs]
    lo = np.array([a / 256 for a, _ in segs])
    hi = np.array([b / 256 for _, b in segs])
    assert greedy_cover_count(lo, hi, width / 256) == exhaustive_min_cover(frac, Fraction(width, 256))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 1023), st.integers(1, 6), st.integers(1, 4), st.integers(1, 3))
def test_cover_monotone(i, k, l, dl):
    assume(k + l + dl <= 9)
    ls = build_levels(MT, 10)
    x = float(ls.lefts[10][i])
    R, r = 3.0 ** -k, 3.0 ** -(k + l)
    n = covering_number(ls, x, R, r)
    assert covering_number(ls, x, R, r * 3.0 ** -dl) >= n
    assert covering_number(ls, x, R * 3.0 ** min(dl, k), r) >= n


def test_exponent_in_unit_interval(mt10):
    for x in mt10.sample_points(20, seed=1).tolist():
        for k, l in level_pair_grid(3, 4):
            sp = ScalePair.from_levels(build_prefix_tables(MT, 10), k, l)
            assert 0.0 <= two_scale_exponent(mt10, x, sp.R, sp.r) <= 1.0


def test_scale_pair_consistency():
    t = build_prefix_tables(load_catalog("periodic-2-3"), 40)
    for k in range(1, 20):
        for l in range(1, 20):
            sp = ScalePair.from_levels(t, k, l)
            assert abs(sp.log_ratio - (t.logDelta[k] - t.logDelta[k + l])) < 1e-12


# -- empirical estimators ----------------------------------------------------

def test_empirical_middle_third(mt15):
    pairs = level_pair_grid(6, 6)
    a = empirical_assouad(mt15, pairs, 64)
    b = empirical_lower(mt15, pairs, 64)
    assert abs(a.value - LOG23) <= 0.05 and abs(b.value - LOG23) <= 0.05
    assert b.value <= a.value


def test_empirical_uniform_quarter():
    ls = build_levels(SequenceSpec.constant(2, 0.25), 14)
    assert abs(empirical_assouad(ls, level_pair_grid(5, 5), 64).value - 0.5) <= 0.05


def test_empirical_placement_independence():
    a = empirical_assouad(build_levels(MT, 14, "uniform"), level_pair_grid(5, 5), 64).value
    b = empirical_assouad(build_levels(MT, 14, "left"), level_pair_grid(5, 5), 64).value
    assert abs(a - b) <= 0.05


def test_empirical_block_rule_below_bound():
    spec = load_catalog("dyadic-block")
    ls = build_levels(spec, 15)
    pairs = [p for p in level_pair_grid(6, 6) if sum(p) < 15]
    lower = empirical_lower(ls, pairs, 64).value
    assert lower <= lower_dim_bound_formula(build_prefix_tables(spec, 4096)).value + 0.05


@pytest.mark.parametrize("name", catalog_names())
def test_sandwich_at_desk_scale(name):
    spec = load_catalog(name)
    mode = "cantor-like" if name.startswith("perturbed") else "moran"
    ls = build_levels(spec, 15, mode=mode, seed=42)
    pairs = [p for p in level_pair_grid(6, 6) if sum(p) < 15]
    lo = empirical_lower(ls, pairs, 64).value
    hi = empirical_assouad(ls, pairs, 64).value
    assert lo <= hi
    assert hi <= assouad_dim_formula(build_prefix_tables(spec, 4096)).value + 0.05


def test_empty_sample_rejected(mt10):
    with pytest.raises(ValueError, match="empty"):
        empirical_assouad(mt10, [], 10)
    with pytest.raises(ValueError, match="empty"):
        empirical_assouad(mt10, [(1, 1)], 0)


@pytest.mark.parametrize("estimator", ["slope", "pair"])
def test_witness_reproduces_value(mt10, estimator):
    rep = empirical_assouad(mt10, level_pair_grid(3, 4), 16, estimator=estimator)
    assert reevaluate_witness(mt10, rep) == pytest.approx(rep.value, abs=1e-12)
    sp = empirical_spectrum_point(mt10, 0.5, samples=16, estimator=estimator)
    assert reevaluate_witness(mt10, sp) == pytest.approx(sp.value, abs=1e-12)


def test_report_json_roundtrip(mt10):
    rep = empirical_lower(mt10, level_pair_grid(2, 3), 8)
    doc = json.loads(rep.to_json())
    assert doc["value"] == rep.value and doc["kind"] == "lower"


def test_spectrum_point_middle_third(mt15):
    rep = empirical_spectrum_point(mt15, 0.5)
    assert abs(rep.value - LOG23) <= 0.05


def test_spectrum_point_needs_depth():
    with pytest.raises(DepthError):
        empirical_spectrum_point(build_levels(MT, 2), 0.1)


def test_spectrum_sweep_csv(mt10):
    rows = spectrum_sweep(mt10, [0.4, 0.6], [LOG23, LOG23], samples=16)
    text = sweep_to_csv(rows)
    assert text.splitlines()[0] == "theta,empirical,formula,abs_diff"
    assert all(r[3] == abs(r[1] - r[2]) for r in rows)


# -- counting lemmas -------------------------------------------------------

def test_counting_lemmas_middle_third(mt10):
    rep = check_counting_lemmas(mt10, 3, 4, 100)
    assert rep["passed"] and rep["violations"] == []
    assert rep["max_count"]["b"] <= 4 and rep["min_count"]["a"] >= 1


def test_counting_lemmas_left_packed_quarter():
    ls = build_levels(SequenceSpec.constant(2, 0.25), 8, "left")
    assert check_counting_lemmas(ls, 2, 3, 100)["passed"]


def test_counting_lemmas_negative_control(mt10):
    bad = inject_overlap(mt10)
    rep = check_counting_lemmas(bad, 3, 4, 100)
    assert rep["structure_violations"]


def test_counting_lemmas_detect_crowding(mt10):
    # squeeze 32 level-5 intervals into [0, delta_5]: B(0, delta_5) meets all of them
    lefts, lengths = list(mt10.lefts), list(mt10.lengths)
    w = 3.0 ** -5 / 32
    lefts[5] = np.arange(32) * w
    lengths[5] = np.full(32, w * 0.5)
    crowded = LevelStructure(mt10.spec, 10, mt10.placement, mt10.mode, None,
                             tuple(lefts), tuple(lengths))
    rep = check_counting_lemmas(crowded, 2, 3, 20)
    assert not rep["passed"]
    assert {v["check"] for v in rep["violations"]} >= {"b"}
    assert rep["max_count"]["b"] > 4


# -- measure checks --------------------------------------------------------

def _measure_report(depth):
    ls = build_levels(MT, depth)
    pts = build_levels(MT, 10).lefts[10]
    rng = np.random.default_rng(0)
    idx = rng.integers(0, len(pts), size=(64, 2))
    radii = [3.0 ** -m for m in range(1, 11)]
    return check_measure_properties(ls, radii, [(pts[i], pts[j]) for i, j in idx])


def test_measure_properties_middle_third():
    reps = [_measure_report(d) for d in (10, 12, 14)]
    for rep in reps:
        assert rep["finite"] and rep["alpha_gt_1"]
    trend = measure_depth_trend(reps)
    assert trend["lambda_rel_change"] <= 0.10
    assert trend["c_nonincreasing"]


def test_measure_trend_flags_growth():
    reps = [{"depth": 10, "c": 0.1, "lambda": 1.0}, {"depth": 12, "c": 0.3, "lambda": 1.0}]
    assert measure_depth_trend(reps)["unbounded_trend"]


def test_measure_rejects_bad_a(mt10):
    with pytest.raises(ValueError):
        check_measure_properties(mt10, [0.1], [(0.0, 0.0)], a=1.0)
