import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

from markdev.errors import ValidationError
from markdev.toypower import (
    TOY_CASES,
    ToySpec1,
    ToySpec2,
    folded_normal_cdf,
    power_curve,
    toy1_cdf_max,
    toy1_critical_value,
    toy1_power,
    toy1_power_mc,
    toy2_cdf_max,
    toy2_cdf_x,
    toy2_critical_value,
    toy2_power,
    toy2_power_mc,
)

CASE_1A = TOY_CASES[(1, "a")]["sds"]


def spec1(mu3, sds=CASE_1A):
    return ToySpec1((0.0, 0.0, mu3), sds)


def spec2(mu3, case="a"):
    c = TOY_CASES[(2, case)]
    return ToySpec2((0.0, 0.0, mu3), c["sds_upper"], c["sds_lower"])


def test_folded_normal_examples():
    assert folded_normal_cdf(1.959964, 0.0, 1.0) == pytest.approx(0.95, abs=1e-6)
    assert folded_normal_cdf(0.0, 0.7, 2.0) == 0.0
    assert folded_normal_cdf(1e3, 0.7, 2.0) == 1.0
    with pytest.raises(ValidationError, match="negative argument"):
        folded_normal_cdf(-0.1, 0.0, 1.0)


@given(y=st.floats(0, 50), sigma=st.floats(0.01, 10))
def test_folded_normal_half_normal_identity(y, sigma):
    assert folded_normal_cdf(y, 0.0, sigma) == pytest.approx(2 * ndtr(y / sigma) - 1, abs=1e-14)


def test_folded_normal_monotone():
    y = np.linspace(0, 10, 2001)
    assert np.all(np.diff(folded_normal_cdf(y, 1.3, 0.8)) >= 0)


def test_toy1_single_factor_is_half_normal():
    assert toy1_cdf_max(1.2, [0.0], [1.0]) == pytest.approx(2 * ndtr(1.2) - 1)


def test_toy1_critical_values():
    s = spec1(0.0)
    c_u = toy1_critical_value(s, scaled=False)
    c_s = toy1_critical_value(s, scaled=True)
    assert c_u == pytest.approx(2.236, abs=1e-3)
    assert c_s == pytest.approx(2.388, abs=1e-3)
    assert (2 * ndtr(c_u) - 1) ** 2 * (2 * ndtr(10 * c_u) - 1) == pytest.approx(0.95, abs=1e-12)
    assert (2 * ndtr(c_s) - 1) ** 3 == pytest.approx(0.95, abs=1e-12)


def test_toy1_figure_1a_values():
    s = spec1(0.5)
    assert toy1_power(s, False) == pytest.approx(0.050, abs=1e-3)
    assert toy1_power(s, True) == pytest.approx(0.996, abs=1e-3)


@pytest.mark.parametrize("mu3", [0.25, 0.5, 1.0])
@pytest.mark.parametrize("scaled", [False, True])
def test_toy1_matches_monte_carlo(mu3, scaled):
    s = spec1(mu3)
    assert toy1_power_mc(s, scaled, draws=400_000, rng=int(mu3 * 100) + scaled) == pytest.approx(toy1_power(s, scaled), abs=0.005)


@pytest.mark.parametrize("example", [1, 2])
@pytest.mark.parametrize("case", ["a", "b"])
def test_size_at_null(example, case):
    (_, pu, ps), = power_curve(example, case, [0.0])
    assert pu == pytest.approx(0.05, abs=1e-9)
    assert ps == pytest.approx(0.05, abs=1e-9)


def test_toy1_power_tends_to_one():
    p = [toy1_power(spec1(m), False) for m in (1, 2, 4)]
    assert p[0] <= p[1] <= p[2]
    assert p[2] > 0.99


@settings(max_examples=30, deadline=None)
@given(mu3=st.floats(0, 3), c=st.floats(0.1, 10), scaled=st.booleans())
def test_toy1_scale_invariance(mu3, c, scaled):
    a = toy1_power(spec1(mu3), scaled)
    b = toy1_power(ToySpec1((0.0, 0.0, c * mu3), tuple(c * s for s in CASE_1A)), scaled)
    assert a == pytest.approx(b, abs=1e-9)


def test_toy2_cdf_x_examples():
    assert toy2_cdf_x(0.2, 0.0, 0.1, 0.13) == pytest.approx(0.97725, abs=1e-5)
    assert toy2_cdf_x(1.5, 1.5, 0.1, 0.3) == 0.5
    x = np.linspace(-3, 3, 101)
    np.testing.assert_allclose(toy2_cdf_x(x, 0.4, 0.7, 0.7), ndtr((x - 0.4) / 0.7), atol=1e-15)


def test_toy2_cdf_monotone():
    u = np.linspace(0, 2, 501)
    F = [toy2_cdf_max(v, [0.0, 0.1, 0.5], [0.1] * 3, [0.13] * 3) for v in u]
    assert np.all(np.diff(F) >= 0)
    assert F[0] == 0.0
    assert F[-1] == pytest.approx(1.0)


@pytest.mark.parametrize("case", ["a", "b"])
@pytest.mark.parametrize("mu3", [0.05, 0.1, 0.2])
@pytest.mark.parametrize("scaled", [False, True])
def test_toy2_matches_monte_carlo(case, mu3, scaled):
    s = spec2(mu3, case)
    assert toy2_power_mc(s, scaled, draws=400_000, rng=7) == pytest.approx(toy2_power(s, scaled), abs=0.005)


def test_toy2_scaling_helps_in_case_a_and_hurts_in_case_b():
    mus = np.linspace(0.01, 0.5, 50)
    a = np.array(power_curve(2, "a", mus))
    b = np.array(power_curve(2, "b", mus))
    rising_a = np.abs(a[:, 2] - a[:, 1]) > 0.05
    rising_b = np.abs(b[:, 2] - b[:, 1]) > 0.05
    assert rising_a.any() and rising_b.any()
    assert np.all(a[rising_a, 2] > a[rising_a, 1])
    assert np.all(b[rising_b, 2] < b[rising_b, 1])


def test_toy2_critical_value_solves_equation():
    s = spec2(0.0)
    c = toy2_critical_value(s, True)
    assert toy2_cdf_max(c, [0] * 3, s.sds_upper, s.sds_lower, 1 / np.array(s.sds_upper), 1 / np.array(s.sds_lower)) \
        == pytest.approx(0.95, abs=1e-12)


def test_spec_validation():
    with pytest.raises(ValidationError):
        ToySpec1((0, 0), (1, 0))
    with pytest.raises(ValidationError):
        ToySpec1((0,), (1,), alpha=1.5)
    with pytest.raises(ValidationError):
        ToySpec2((0, 0), (1, 1), (1,))
    with pytest.raises(ValidationError):
        power_curve(3, "a", [0.0])


@pytest.mark.parametrize("mu3", [0.0, 0.5, 1.5])
def test_monte_carlo_at_analytic_critical_value(mu3):
    s = spec1(mu3, TOY_CASES[(1, "b")]["sds"])
    for scaled in (False, True):
        c = toy1_critical_value(s, scaled)
        assert toy1_power_mc(s, scaled, rng=3, critical=c) == pytest.approx(toy1_power(s, scaled), abs=0.005)
