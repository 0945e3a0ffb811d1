import numpy as np
import pytest
from scipy import stats
from scipy.spatial import cKDTree

from markdev.errors import NumericalError, ValidationError
from markdev.estimators import estimate_kf
from markdev.models import (
    MODEL_ROWS,
    GaussianField,
    GaussianFieldSpec,
    ModelFamily,
    ModelSpec,
    assign_marks_expimcp,
    assign_marks_gncp,
    assign_marks_gnimcp,
    simulate_gaussian_field,
    simulate_lgcp_points,
    simulate_model,
    simulate_seqnimpp,
)
from markdev.pattern import MarkedPattern, RGrid, Window

W100 = Window.square(100.0)
SPEC = GaussianFieldSpec()


def quadrat_pvalue(points, window, k=10):
    h, _, _ = np.histogram2d(points[:, 0], points[:, 1], bins=k,
                             range=[[window.x_min, window.x_max], [window.y_min, window.y_max]])
    return stats.chisquare(h.ravel()).pvalue


@pytest.fixture(scope="module")
def field_nodes():
    """Values at 25 far-apart nodes and their lag-phi neighbours, over 400 fields."""
    rng = np.random.default_rng(0)
    idx = np.arange(10, 200, 40)
    lag = int(SPEC.range / SPEC.cell)
    a, b = [], []
    for _ in range(400):
        z = simulate_gaussian_field(SPEC, W100, rng).values
        a.append(z[np.ix_(idx, idx)].ravel())
        b.append(z[np.ix_(idx, idx + lag)].ravel())
    return np.concatenate(a), np.concatenate(b)


def test_field_mean(field_nodes):
    assert abs(field_nodes[0].mean() - SPEC.mean) < 0.05


def test_field_variance(field_nodes):
    assert abs(field_nodes[0].var(ddof=1) - 1.0) < 0.05


def test_field_correlation_at_range(field_nodes):
    assert abs(np.corrcoef(*field_nodes)[0, 1] - np.exp(-1)) < 0.03


def test_field_shape_and_diagnostics():
    f = simulate_gaussian_field(SPEC, W100, np.random.default_rng(1))
    assert f.values.shape == (200, 200)
    assert 0 <= f.clipped_fraction <= 1e-3


def test_field_cell_must_divide_window():
    with pytest.raises(ValidationError):
        simulate_gaussian_field(GaussianFieldSpec(cell=3.0), W100, np.random.default_rng(0))


def test_constant_field_gives_uniform_points():
    f = GaussianField(np.zeros((200, 200)), W100, 0.5, 0.0)
    pts = simulate_lgcp_points(f, 10_000, np.random.default_rng(2))
    assert quadrat_pvalue(pts, W100) > 0.01


def test_single_cell_support():
    z = np.full((200, 200), -np.inf)
    z[37, 120] = 0.0
    pts = simulate_lgcp_points(GaussianField(z, W100, 0.5, 0.0), 500, np.random.default_rng(3))
    assert np.all((pts[:, 0] >= 60) & (pts[:, 0] <= 60.5))
    assert np.all((pts[:, 1] >= 18.5) & (pts[:, 1] <= 19))


def test_degenerate_intensity():
    f = GaussianField(np.full((200, 200), -np.inf), W100, 0.5, 0.0)
    with pytest.raises(NumericalError, match="degenerate intensity"):
        simulate_lgcp_points(f, 10, np.random.default_rng(0))


def test_lgcp_is_clustered():
    rng = np.random.default_rng(4)
    g = RGrid(0, 10, 10)
    ks = []
    for _ in range(500):
        f = simulate_gaussian_field(SPEC, W100, rng)
        p = MarkedPattern(simulate_lgcp_points(f, 200, rng), np.ones(200), W100)
        ks.append(estimate_kf(p, "one", "translational", g).values[-1])
    assert np.mean(ks) > np.pi * 100


def test_seqnimpp_theta_zero_is_uniform():
    spec = ModelSpec("SeqNIMPP", {"mu": 24, "sigma2": 9, "theta": 0.0}, n=200)
    rng = np.random.default_rng(5)
    pts = np.concatenate([simulate_seqnimpp(spec, rng).points for _ in range(50)])
    assert quadrat_pvalue(pts, W100) > 0.01


def test_seqnimpp_inhibits():
    rng = np.random.default_rng(6)
    g = RGrid(0, 6, 6)
    base = ModelSpec("SeqNIMPP", {"mu": 24, "sigma2": 9, "theta": 0.0}, n=200)

    def mean_k(spec):
        return np.mean([estimate_kf(simulate_seqnimpp(spec, rng), "one", "translational", g).values[-1]
                        for _ in range(200)])

    assert mean_k(base.with_params(theta=0.2)) < mean_k(base)


def test_seqnimpp_marks_and_validation():
    spec = ModelSpec("SeqNIMPP", {"mu": 24, "sigma2": 9, "theta": 0.1}, n=100)
    assert spec.params["R"] == 6.0
    p = simulate_seqnimpp(spec, np.random.default_rng(7))
    assert p.n == 100 and np.all(p.marks >= 0)
    with pytest.raises(ValidationError, match="unsupported attraction regime"):
        ModelSpec("SeqNIMPP", {"mu": 24, "sigma2": 9, "theta": -0.1})


def test_expimcp_b_zero_is_exponential():
    rng = np.random.default_rng(8)
    f = simulate_gaussian_field(SPEC, W100, rng)
    pts = simulate_lgcp_points(f, 5000, rng)
    m = assign_marks_expimcp(pts, f, 3.0, 0.0, "negative", rng)
    assert stats.kstest(m, "expon", args=(0, 3.0)).pvalue > 0.01


def test_expnimcp_mean_times_intensity():
    rng = np.random.default_rng(9)
    acc = []
    for _ in range(20):
        f = simulate_gaussian_field(SPEC, W100, rng)
        pts = simulate_lgcp_points(f, 5000, rng)
        m = assign_marks_expimcp(pts, f, 0.0, 1.0, "negative", rng)
        acc.append(m * np.exp(f.at(pts)))
    assert abs(np.concatenate(acc).mean() - 1.0) < 0.02


def test_exppimcp_high_intensity_has_larger_marks():
    rng = np.random.default_rng(10)
    f = simulate_gaussian_field(SPEC, W100, rng)
    pts = simulate_lgcp_points(f, 5000, rng)
    m = assign_marks_expimcp(pts, f, 250.0, 6600.0, "positive", rng)
    lam = np.exp(f.at(pts))
    assert np.all(m > 0)
    hi, lo = lam >= np.quantile(lam, 0.9), lam <= np.quantile(lam, 0.1)
    assert m[hi].mean() > m[lo].mean()


def test_expimcp_errors():
    f = GaussianField(np.full((200, 200), -np.inf), W100, 0.5, 0.0)
    with pytest.raises(NumericalError, match="intensity underflow"):
        assign_marks_expimcp([[1.0, 1.0]], f, 0.0, 1.0, "negative", np.random.default_rng(0))
    with pytest.raises(ValidationError):
        assign_marks_expimcp([[1.0, 1.0]], f, 0.0, 0.0, "negative", np.random.default_rng(0))


def test_gnimcp_b_zero_constant_and_no_noise_monotone():
    rng = np.random.default_rng(11)
    f = simulate_gaussian_field(SPEC, W100, rng)
    pts = simulate_lgcp_points(f, 300, rng)
    np.testing.assert_array_equal(assign_marks_gnimcp(pts, f, 24.0, 0.0, 1.0, SPEC.mean, rng), 24.0)
    m = assign_marks_gnimcp(pts, f, 24.0, 0.12, 0.0, SPEC.mean, rng)
    z = f.at(pts)
    order = np.argsort(z)
    assert np.all(np.diff(m[order]) >= 0)
    np.testing.assert_allclose(m, 24 * np.exp(0.12 * (z - SPEC.mean)))


def test_gnimcp_negative_b_smaller_marks_in_dense_cells():
    rng = np.random.default_rng(12)
    spec = ModelSpec("GNIMCP", {"a": 24, "b": -0.12, "sigma_eps": 0.5})
    hi, lo = [], []
    for _ in range(200):
        f = simulate_gaussian_field(SPEC, W100, rng)
        pts = simulate_lgcp_points(f, 200, rng)
        m = assign_marks_gnimcp(pts, f, 24.0, -0.12, spec.params["sigma_eps"], SPEC.mean, rng)
        z = f.at(pts)
        hi.append(m[z >= np.quantile(z, 0.9)])
        lo.append(m[z <= np.quantile(z, 0.1)])
    assert np.concatenate(hi).mean() < np.concatenate(lo).mean()


def test_gncp_same_cell_identical_without_noise():
    rng = np.random.default_rng(13)
    pts = np.array([[10.1, 20.1], [10.4, 20.4], [50.0, 50.0]])
    m = assign_marks_gncp(pts, W100, SPEC, 24.0, -0.12, 0.0, rng)
    assert m[0] == m[1]


def _lag_corr_and_density_corr(sigma_eps, reps, rng):
    spec = ModelSpec("GNCP", {"a": 24, "b": -0.12, "sigma_eps": sigma_eps})
    la, lb, dens_corr = [], [], []
    for _ in range(reps):
        p = simulate_model(spec, rng)
        tree = cKDTree(p.points)
        pairs = np.array(sorted(tree.query_pairs(SPEC.range + 0.5) - tree.query_pairs(SPEC.range - 0.5)))
        lm = np.log(p.marks)
        if pairs.size:
            la.append(lm[pairs[:, 0]])
            lb.append(lm[pairs[:, 1]])
        counts = np.array([len(c) - 1 for c in tree.query_ball_point(p.points, 5.0)])
        if counts.std() > 0:
            dens_corr.append(np.corrcoef(p.marks, counts)[0, 1])
    return np.corrcoef(np.concatenate(la), np.concatenate(lb))[0, 1], np.mean(dens_corr)


def test_gncp_mark_similarity_and_density_independence():
    rng = np.random.default_rng(14)
    c0, d0 = _lag_corr_and_density_corr(0.0, 200, rng)
    c35, _ = _lag_corr_and_density_corr(3.5, 200, rng)
    assert c35 < c0
    assert abs(d0) < 0.05


@pytest.mark.parametrize("row", sorted(MODEL_ROWS))
def test_every_row_simulates_valid_patterns(row):
    family, fixed, changing, values = MODEL_ROWS[row]
    spec = ModelSpec(family, {**fixed, changing: values[-1]})
    rng = np.random.default_rng(15)
    a = simulate_model(spec, rng)
    assert a.n == 200 and np.all(a.marks >= 0)
    assert np.all(W100.contains(a.points))
    b = simulate_model(spec, np.random.default_rng(15))
    np.testing.assert_array_equal(a.points, b.points)
    np.testing.assert_array_equal(a.marks, b.marks)


def test_gn_null_at_b_zero_is_degenerate():
    # b = 0 gives constant marks, so a random-labelling test cannot reject at all
    spec = ModelSpec("GNIMCP", {"a": 24, "b": 0.0, "sigma_eps": 2.0})
    p = simulate_model(spec, np.random.default_rng(16))
    assert np.ptp(p.marks) == 0


def test_model_spec_validation():
    with pytest.raises(ValidationError, match="unknown parameters"):
        ModelSpec("ExpNIMCP", {"a": 1, "b": 1, "c": 2})
    with pytest.raises(ValidationError, match="missing parameters"):
        ModelSpec("GNCP", {"a": 1, "b": 1})
    with pytest.raises(ValidationError):
        ModelSpec("nope", {})
    assert ModelFamily.parse("gnimcp") is ModelFamily.GNIMCP
