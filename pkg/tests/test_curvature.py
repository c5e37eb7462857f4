from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lograt.curvature import (
    EvaluationGrid,
    analytic_derivatives,
    c_value,
    crossing_set,
    curvature,
    curvature_profile,
    curve_dump,
    detect_intervals,
    exceedance_windows,
    log_ratio_curve,
    log_ratio_from_derivatives,
    numeric_derivatives,
    pair_profile,
    threshold,
)
from lograt.gam import fit_pirls
from lograt.pipeline import ModelSettings, fit_elements
from lograt.synth import Anomaly, SyntheticSpec, generate
from oracles import lorentz_curvature_at_zero, population_threshold


def callable_curve(log_f1, log_f2, grid, pair=("a", "b")):
    return log_ratio_from_derivatives(
        numeric_derivatives(log_f1, grid), numeric_derivatives(log_f2, grid), pair
    )


def zero(x):
    return np.zeros_like(x)


def test_grid_defaults_and_validation():
    g = EvaluationGrid()
    assert g.size == 3000 and g.epsilon == 1e-3
    assert g.points[0] == 0.0 and g.points[-1] == 1.0 and np.all(np.diff(g.points) > 0)
    for bad in ({"size": 50}, {"epsilon": 0.0}, {"lower": 1.0, "upper": 0.0}):
        with pytest.raises(ValueError):
            EvaluationGrid(**bad)


def test_identical_fits_give_zero_ratio(bump_fits):
    curve = log_ratio_curve(bump_fits[1], bump_fits[1], EvaluationGrid())
    assert np.all(curve.g == 0) and curve.scale == 1.0
    prof = curvature_profile(curve)
    assert prof.c_value == 0.0 and prof.crossings == ()


def test_swap_negates_ratio(bump_fits):
    grid = EvaluationGrid()
    ab = log_ratio_curve(bump_fits[0], bump_fits[2], grid)
    ba = log_ratio_curve(bump_fits[2], bump_fits[0], grid)
    np.testing.assert_array_equal(ab.g, -ba.g)
    assert ab.scale == ba.scale
    np.testing.assert_array_equal(curvature(ab), curvature(ba))
    assert np.all((ab.scaled >= 0) & (ab.scaled <= 1 + 1e-12))


def test_proportional_fits_give_constant_ratio(bump_fits):
    curve = log_ratio_curve(bump_fits[2].scaled(3.0), bump_fits[2], EvaluationGrid())
    np.testing.assert_allclose(curve.g, np.log(3.0), rtol=1e-14)
    assert curve.scale == 1.0
    assert curvature_profile(curve).c_value == 0.0


def test_linear_eta_log_derivative():
    x = np.linspace(0, 1, 20)
    fit = fit_pirls(x, np.exp(0.3 - 1.7 * x), lam=1e8)
    d = numeric_derivatives(fit, EvaluationGrid())
    np.testing.assert_allclose(d.first / d.value, -1.7, atol=1e-6)


def test_constant_fit_has_zero_derivatives():
    fit = fit_pirls(np.linspace(0, 1, 10), np.full(10, 2.0), lam=1.0)
    d = numeric_derivatives(fit, EvaluationGrid())
    np.testing.assert_allclose(d.first, 0.0, atol=1e-9)
    np.testing.assert_allclose(d.second, 0.0, atol=1e-5)


def test_second_order_away_from_knots(bump_fits):
    # the spline is a single cubic on every stencil that does not cross a knot
    fit = bump_fits[0]
    x = EvaluationGrid().points
    clean = np.array([not np.any(np.abs(fit.basis.knots - xi) <= 1.5e-3) for xi in x])
    errs = []
    for eps in (1e-3, 5e-4):
        grid = EvaluationGrid(epsilon=eps)
        n, a = numeric_derivatives(fit, grid), analytic_derivatives(fit, grid)
        errs.append(np.max(np.abs(n.second - a.second)[clean]))
    assert 3.6 < errs[0] / errs[1] < 4.4


def test_linear_ratio_has_zero_curvature():
    curve = callable_curve(lambda x: 2.0 * x + 1.0, zero, EvaluationGrid(size=500))
    assert np.max(curvature(curve)) < 1e-6


@pytest.mark.parametrize("sigma", [0.1, 0.3, 0.5])
def test_lorentz_peak_curvature(sigma):
    grid = EvaluationGrid(size=2001, lower=-1.0, upper=1.0)
    curve = replace(callable_curve(lambda x: 1 / (1 + (x / sigma) ** 2), zero, grid), scale=1.0)
    kappa = curvature(curve)
    assert kappa[1000] == pytest.approx(lorentz_curvature_at_zero(sigma), rel=1e-3)


def test_parabola_curvature():
    grid = EvaluationGrid(size=2001, lower=-1.0, upper=1.0)
    curve = callable_curve(lambda x: x**2, zero, grid)
    assert curve.scale == 1.0
    kappa = curvature(curve)
    assert kappa[1000] == pytest.approx(2.0, rel=1e-6)
    # the stencil's second-order error is visible at the steep end point
    assert kappa[-1] == pytest.approx(2 / 5**1.5, abs=2e-6)
    assert kappa[-1] == pytest.approx(0.17889, abs=1e-5)


def test_threshold_examples():
    assert threshold([5.0, 5.0, 5.0]) == 5.0
    assert threshold([0.0, 1.0, 2.0]) == pytest.approx(1 + np.sqrt(2 / 3), abs=1e-12)
    with pytest.raises(ValueError):
        threshold([])


@settings(max_examples=200, deadline=None)
@given(arrays(float, st.integers(1, 200), elements=st.floats(0, 100)), st.floats(-50, 50))
def test_threshold_reference_and_shift(kappa, a):
    assert threshold(kappa) == pytest.approx(population_threshold(kappa), rel=1e-9, abs=1e-9)
    assert threshold(kappa + a) == pytest.approx(threshold(kappa) + a, rel=1e-9, abs=1e-9)


def test_crossings_single_bump():
    x = np.array([0.0, 0.5, 1.0])
    assert crossing_set([0, 2, 0], 1.0, x) == [0.25, 0.75]
    assert c_value([0, 2, 0], 1.0, x) == 1.0


def test_crossings_with_raised_ends():
    x = np.array([0.0, 0.5, 1.0])
    cross = crossing_set([2, 0, 2], 1.0, x)
    assert cross == [0.0, 0.25, 0.75, 1.0]
    assert len(exceedance_windows([2, 0, 2], 1.0, x)) == 2


def test_crossings_empty_cases():
    x = np.linspace(0, 1, 5)
    assert crossing_set([0, 0.1, 0.2, 0.1, 0], 1.0, x) == []
    assert c_value([0, 0.1, 0.2, 0.1, 0], 1.0, x) == 0.0
    # constant curvature: every point sits on the threshold
    assert crossing_set(np.full(5, 3.0), 3.0, x) == []


def test_c_value_examples():
    x = np.linspace(0, 1, 5)
    tau = 1 + np.sqrt(2 / 3)
    assert c_value([0, 0, 3, 0, 0], tau, x) == pytest.approx((3 - tau) ** 2, rel=1e-12)
    assert (3 - tau) ** 2 == pytest.approx(1.40068, abs=1e-5)
    x = np.linspace(0, 1, 7)
    assert c_value([0, 3, 0, 0, 0, 2, 0], 1.0, x) == pytest.approx((4 + 1) / 2)


@settings(max_examples=300, deadline=None)
@given(arrays(float, st.integers(2, 300), elements=st.floats(0, 10)))
def test_crossings_even_ordered_inside(kappa):
    x = np.linspace(0, 1, len(kappa))
    tau = threshold(kappa)
    cross = crossing_set(kappa, tau, x)
    assert len(cross) % 2 == 0
    assert all(0 <= c <= 1 for c in cross)
    assert all(a <= b for a, b in zip(cross, cross[1:]))
    assert c_value(kappa, tau, x) >= 0
    assert (c_value(kappa, tau, x) == 0) == (len(cross) == 0)


def test_detect_two_bumps():
    spec = SyntheticSpec(
        n=60,
        elements=3,
        anomalies=(Anomaly(0, 0.25, 0.03, 2.0), Anomaly(0, 0.75, 0.03, 2.0)),
        noise=0.0,
    )
    ds, _ = generate(spec)
    fits = fit_elements(ds, ModelSettings())
    _, prof = pair_profile(fits[0], fits[1], EvaluationGrid())
    spans = detect_intervals(prof, ds.origin, ds.extent)
    assert any(s <= 250 <= e for s, e in spans)
    assert any(s <= 750 <= e for s, e in spans)
    assert all(b[0] > a[1] for a, b in zip(spans, spans[1:]))


def test_detect_nothing_for_identical_curves(bump_fits):
    _, prof = pair_profile(bump_fits[3], bump_fits[3], EvaluationGrid())
    assert detect_intervals(prof, 0.0, 1000.0) == []


def test_analytic_and_numeric_agree(bump_fits):
    grid = EvaluationGrid()
    _, num = pair_profile(bump_fits[0], bump_fits[1], grid, "numeric")
    _, ana = pair_profile(bump_fits[0], bump_fits[1], grid, "analytic")
    assert num.c_value == pytest.approx(ana.c_value, rel=0.01)
    with pytest.raises(ValueError):
        pair_profile(bump_fits[0], bump_fits[1], grid, "symbolic")


def test_curve_dump_columns(bump_fits):
    curve, prof = pair_profile(bump_fits[0], bump_fits[1], EvaluationGrid())
    dump = curve_dump(curve, prof)
    assert dump.shape == (3000, 6)
    np.testing.assert_array_equal(dump[:, 3], prof.kappa)
    assert set(np.unique(dump[:, 5])) <= {0.0, 1.0}
    assert np.all(prof.kappa[dump[:, 5] == 1] >= prof.threshold - 1e-9)
