import csv

import numpy as np
import pytest

from markdev.errors import ValidationError
from markdev.harness import (
    DEFAULT_INTERVALS,
    PowerRow,
    StudyConfig,
    estimate_power,
    replicate_seeds,
    run_power_study,
    row_study,
)
from markdev.models import ModelSpec

pytestmark = pytest.mark.filterwarnings("ignore:quantiles unreliable")


@pytest.mark.parametrize(
    "rej, N, expected",
    [(50, 1000, (0.05, 0.00689)), (0, 17, (0.0, 0.0)), (17, 17, (1.0, 0.0))],
)
def test_estimate_power(rej, N, expected):
    p, se = estimate_power(rej, N)
    assert p == pytest.approx(expected[0])
    assert se == pytest.approx(expected[1], abs=5e-6)


def test_doubling_n_halves_variance():
    _, a = estimate_power(100, 1000)
    _, b = estimate_power(200, 2000)
    assert b == pytest.approx(a / np.sqrt(2))


@pytest.mark.parametrize("rej, N", [(0, 0), (5, 3), (-1, 10)])
def test_estimate_power_invalid(rej, N):
    with pytest.raises(ValidationError):
        estimate_power(rej, N)


def small_study(**kw):
    model = ModelSpec("ExpNIMCP", {"a": 20.0, "b": 1.0}, n=60)
    base = dict(model=model, changing="a", values=(0.0, 200.0), N=6, s=19, seed=3,
                scalings=("raw", "qdir"), deviations=("sup",), intervals={"I1": (4, 8), "I3": (0, 25)})
    base.update(kw)
    return StudyConfig(**base)


def test_study_validation():
    with pytest.raises(ValidationError):
        small_study(N=0)
    with pytest.raises(ValidationError):
        small_study(s=0)
    with pytest.raises(ValidationError):
        small_study(alpha=1.0)
    with pytest.raises(ValidationError):
        small_study(changing="theta")
    with pytest.raises(ValidationError):
        small_study(intervals={"bad": (0, 30)})


def test_study_defaults():
    cfg = row_study("SeqNIMPP")
    assert (cfg.N, cfg.s) == (200, 199)
    assert cfg.values == (0.0, 0.1, 0.2)
    assert len(cfg.grid) == 101
    assert set(cfg.intervals) == set(DEFAULT_INTERVALS)
    assert len(cfg.intervals["I1"]) == 17
    assert len(cfg.variants()) == 1 * 2 * 4 * 2 * 3
    full = row_study("GNCP", full=True)
    assert (full.N, full.s, len(full.values)) == (1000, 999, 15)


def test_power_table_shape_and_invariants():
    cfg = small_study()
    table = run_power_study(cfg)
    assert len(table.rows) == 2 * len(cfg.variants())
    for row in table.rows:
        assert 0 <= row.rejections <= row.N == 6
        assert row.power == pytest.approx(row.rejections / row.N)
    out = table.outcome(0.0, scaling="qdir", interval="I1")
    assert out.shape == (6,)
    assert set(np.unique(out)) <= {0, 1}
    assert table.lookup(200.0, scaling="raw", interval="I3").rejections == int(
        table.outcome(200.0, scaling="raw", interval="I3").sum()
    )


def test_power_study_deterministic_across_workers():
    cfg = small_study(values=(100.0,))
    a = run_power_study(cfg, workers=1)
    b = run_power_study(cfg, workers=2)
    assert [r.as_tuple() for r in a.rows] == [r.as_tuple() for r in b.rows]
    np.testing.assert_array_equal(a.outcomes[100.0], b.outcomes[100.0])


def test_replicate_seeds_distinct():
    seen = {replicate_seeds(1, v, r)[1] for v in range(3) for r in range(50)}
    assert len(seen) == 150
    g1, s1 = replicate_seeds(1, 0, 0)
    g2, s2 = replicate_seeds(1, 0, 0)
    assert s1 == s2 and g1.random() == g2.random()


def test_discordant_pairs():
    table = run_power_study(small_study(values=(0.0,), N=10))
    a, b = {"transformation": "identity"}, {"transformation": "sqrt"}
    n_ab, n_ba = table.discordant(0.0, a, b)
    oa, ob = table.outcome(0.0, **a), table.outcome(0.0, **b)
    assert n_ab - n_ba == int(oa.sum() - ob.sum())


def test_csv_column_order(tmp_path):
    table = run_power_study(small_study(values=(0.0,), N=2))
    path = tmp_path / "p.csv"
    table.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == PowerRow.FIELDS
    assert len(rows) == 1 + len(table.rows)
    assert float(rows[1][PowerRow.FIELDS.index("power")]) == table.rows[0].power


def test_size_of_each_variant_under_null():
    # ExpNIMCP with b = 0 has i.i.d. exponential marks: every variant is an exact test
    model = ModelSpec("ExpNIMCP", {"a": 50.0, "b": 0.0}, n=80)
    cfg = StudyConfig(model=model, changing="a", values=(50.0,), N=200, s=19, seed=11,
                      scalings=("raw", "st"), deviations=("sup", "int"), intervals={"I3": (0, 25)})
    table = run_power_study(cfg)
    for row in table.rows:
        # 3 standard errors around 0.05 with N = 200
        assert abs(row.power - 0.05) < 3 * np.sqrt(0.05 * 0.95 / 200)
