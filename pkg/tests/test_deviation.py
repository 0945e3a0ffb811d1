import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markdev.deviation import DeviationKind, deviation_measure, deviations
from markdev.errors import NumericalError, ValidationError
from markdev.pattern import FunctionEstimate, RGrid


def test_sup_example():
    g = RGrid(0, 1, 0.5)
    assert deviation_measure(FunctionEstimate(g, [0.5, -2, 1]), g, "sup") == 2.0


def test_int_example():
    g = RGrid(0, 0.5, 0.5)
    assert deviation_measure(FunctionEstimate(g, [1.0, 2.0]), g, "int") == pytest.approx(2.5)


@pytest.mark.parametrize("kind", ["sup", "int"])
def test_zero_residual(kind):
    g = RGrid(0, 5, 0.25)
    assert deviation_measure(FunctionEstimate(g, np.zeros(len(g))), g, kind) == 0.0


def test_subinterval_and_mask():
    g = RGrid(0, 2, 0.5)
    res = FunctionEstimate(g, [9.0, 1.0, -3.0, 0.5, 7.0], mask=[False, False, True, False, False])
    assert deviation_measure(res, g.interval(0.5, 1.5), "sup") == 1.0
    assert deviation_measure(res, g.interval(0.5, 1.5), "int") == pytest.approx(0.5 * 1.25)


def test_all_masked_interval():
    g = RGrid(0, 1, 0.5)
    res = FunctionEstimate(g, [1.0, 1.0, 1.0], mask=[False, True, True])
    with pytest.raises(NumericalError, match="empty interval"):
        deviation_measure(res, g.interval(0.5, 1.0), "sup")


def test_parse():
    assert DeviationKind.parse("supremum") is DeviationKind.SUPREMUM
    assert DeviationKind.parse("integral") is DeviationKind.INTEGRAL
    with pytest.raises(ValidationError):
        DeviationKind.parse("L1")


residual_rows = st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30)


@settings(max_examples=100, deadline=None)
@given(d=residual_rows, kind=st.sampled_from(["sup", "int"]), c=st.floats(0.01, 100))
def test_sign_flip_and_scaling(d, kind, c):
    d = np.array(d)
    idx = np.arange(d.size)
    u = deviations(d, idx, None, kind, 0.25)[0]
    assert u >= 0
    assert deviations(-d, idx, None, kind, 0.25)[0] == u
    power = 1 if kind == "sup" else 2
    assert deviations(c * d, idx, None, kind, 0.25)[0] == pytest.approx(c**power * u, rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(d=residual_rows, extra=st.floats(0, 10), kind=st.sampled_from(["sup", "int"]))
def test_monotone_in_absolute_residual(d, extra, kind):
    d = np.array(d)
    bigger = np.sign(d) * (np.abs(d) + extra)
    idx = np.arange(d.size)
    assert deviations(bigger, idx, None, kind, 0.25)[0] >= deviations(d, idx, None, kind, 0.25)[0]
