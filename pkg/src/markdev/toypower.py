"""
Exact power of max-type deviation tests on independent toy variables.

Example 1: ``X_i ~ N(mu_i, sigma_i^2)``; unscaled statistic ``max |X_i|``,
scaled ``max |X_i| / sigma_i``.

Example 2: ``X_i`` is a half/half mixture of a normal folded to the right of
``mu_i`` (scale ``sigma_a``) and one folded to the left (scale ``sigma_b``);
unscaled ``max |X_i|``, scaled ``max`` of ``X_i / sigma_a`` for positive and
``|X_i| / sigma_b`` for negative values.

Since the variables are independent the CDF of the maximum is a product of
marginal CDFs; the critical value solves ``F(c) = 1 - alpha`` under all-zero
means and the power is ``1 - F(c)`` under the alternative.  Monte Carlo
versions of both powers are provided as independent checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.special import ndtr

from .errors import ValidationError

__all__ = [
    "ToySpec1",
    "ToySpec2",
    "folded_normal_cdf",
    "toy1_cdf_max",
    "toy1_critical_value",
    "toy1_power",
    "toy1_power_mc",
    "toy2_cdf_x",
    "toy2_cdf_max",
    "toy2_critical_value",
    "toy2_power",
    "toy2_power_mc",
    "power_curve",
    "TOY_CASES",
]

ROOT_TOL = 1e-12


def _check_alpha(alpha):
    if not (0 < alpha < 1):
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")


@dataclass(frozen=True)
class ToySpec1:
    means: tuple
    sds: tuple
    alpha: float = 0.05

    def __post_init__(self):
        means = tuple(float(m) for m in self.means)
        sds = tuple(float(s) for s in self.sds)
        if len(means) != len(sds) or not means:
            raise ValidationError("means and sds must be non-empty and of equal length")
        if any(not (s > 0) for s in sds):
            raise ValidationError("all standard deviations must be positive")
        _check_alpha(self.alpha)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sds", sds)


@dataclass(frozen=True)
class ToySpec2:
    means: tuple
    sds_upper: tuple
    sds_lower: tuple
    alpha: float = 0.05

    def __post_init__(self):
        cols = [tuple(float(v) for v in c) for c in (self.means, self.sds_upper, self.sds_lower)]
        if len({len(c) for c in cols}) != 1 or not cols[0]:
            raise ValidationError("means and both sd vectors must be non-empty and of equal length")
        if any(not (s > 0) for s in cols[1] + cols[2]):
            raise ValidationError("all standard deviations must be positive")
        _check_alpha(self.alpha)
        for name, c in zip(("means", "sds_upper", "sds_lower"), cols):
            object.__setattr__(self, name, c)


def folded_normal_cdf(y, mu, sigma):
    """CDF of ``|X|`` for ``X ~ N(mu, sigma^2)``: ``Phi((y-mu)/s) + Phi((y+mu)/s) - 1``."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValidationError("negative argument to folded normal CDF")
    out = ndtr((y - mu) / sigma) + ndtr((y + mu) / sigma) - 1.0
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def toy1_cdf_max(u, means, sds, weights=None) -> float:
    """``P(max_i w_i |X_i| <= u)`` for independent normals."""
    means = np.asarray(means, dtype=float)
    sds = np.asarray(sds, dtype=float)
    w = np.ones_like(sds) if weights is None else np.asarray(weights, dtype=float)
    if u < 0:
        return 0.0
    return float(np.prod(folded_normal_cdf(u / w, means, sds)))


def _critical_value(cdf, scale: float, alpha: float) -> float:
    hi = 20.0 * scale
    while cdf(hi) < 1 - alpha:
        hi *= 2
    c = optimize.bisect(lambda c: cdf(c) - (1 - alpha), 0.0, hi, xtol=ROOT_TOL, rtol=4 * np.finfo(float).eps, maxiter=500)
    return float(c)


def _toy1_weights(spec: ToySpec1, scaled: bool):
    return 1.0 / np.asarray(spec.sds) if scaled else np.ones(len(spec.sds))


def toy1_critical_value(spec: ToySpec1, scaled: bool) -> float:
    w = _toy1_weights(spec, scaled)
    zeros = np.zeros(len(spec.sds))
    scale = float(np.max(np.asarray(spec.sds) * w))
    return _critical_value(lambda c: toy1_cdf_max(c, zeros, spec.sds, w), scale, spec.alpha)


def toy1_power(spec: ToySpec1, scaled: bool = False) -> float:
    c = toy1_critical_value(spec, scaled)
    return 1.0 - toy1_cdf_max(c, spec.means, spec.sds, _toy1_weights(spec, scaled))


def toy2_cdf_x(x, mu, sigma_a, sigma_b):
    """CDF of the two-sided half-normal mixture centred at ``mu``."""
    x = np.asarray(x, dtype=float)
    out = np.where(x >= mu, ndtr((x - mu) / sigma_a), ndtr((x - mu) / sigma_b))
    return float(out) if out.ndim == 0 else out


def toy2_cdf_max(u, means, sds_upper, sds_lower, w_pos=None, w_neg=None) -> float:
    """``P(max_i Z_i <= u)`` with ``Z_i = w+ X_i`` for ``X_i >= 0``, ``w- |X_i|`` otherwise."""
    if u < 0:
        return 0.0
    means = np.asarray(means, dtype=float)
    wp = np.ones_like(means) if w_pos is None else np.asarray(w_pos, dtype=float)
    wn = np.ones_like(means) if w_neg is None else np.asarray(w_neg, dtype=float)
    F = toy2_cdf_x(u / wp, means, sds_upper, sds_lower) - toy2_cdf_x(-u / wn, means, sds_upper, sds_lower)
    return float(np.prod(np.clip(F, 0.0, 1.0)))


def _toy2_weights(spec: ToySpec2, scaled: bool):
    n = len(spec.means)
    if not scaled:
        return np.ones(n), np.ones(n)
    return 1.0 / np.asarray(spec.sds_upper), 1.0 / np.asarray(spec.sds_lower)


def toy2_critical_value(spec: ToySpec2, scaled: bool) -> float:
    wp, wn = _toy2_weights(spec, scaled)
    zeros = np.zeros(len(spec.means))
    scale = float(max(np.max(np.asarray(spec.sds_upper) * wp), np.max(np.asarray(spec.sds_lower) * wn)))
    return _critical_value(
        lambda c: toy2_cdf_max(c, zeros, spec.sds_upper, spec.sds_lower, wp, wn), scale, spec.alpha
    )


def toy2_power(spec: ToySpec2, scaled: bool = False) -> float:
    c = toy2_critical_value(spec, scaled)
    wp, wn = _toy2_weights(spec, scaled)
    return 1.0 - toy2_cdf_max(c, spec.means, spec.sds_upper, spec.sds_lower, wp, wn)


# --- Monte Carlo counterparts: empirical critical value from null draws ---

def _mc_power(stat, draw_null, draw_alt, alpha, draws, critical):
    if critical is None:
        critical = np.quantile(stat(draw_null(draws)), 1 - alpha, method="higher")
    return float(np.mean(stat(draw_alt(draws)) > critical))


def toy1_power_mc(spec: ToySpec1, scaled: bool = False, draws: int = 100_000, rng=None, critical=None) -> float:
    """Empirical rejection rate over ``draws`` simulated vectors.

    ``critical=None`` estimates the critical value from as many null draws;
    pass a number (e.g. the analytic one) to count rejections against it.
    """
    rng = np.random.default_rng(rng)
    sds = np.asarray(spec.sds)
    mu = np.asarray(spec.means)
    w = 1.0 / sds if scaled else np.ones_like(sds)

    def stat(x):
        return np.max(np.abs(x) * w, axis=1)

    return _mc_power(
        stat,
        lambda k: rng.normal(0.0, sds, (k, sds.size)),
        lambda k: rng.normal(mu, sds, (k, sds.size)),
        spec.alpha,
        draws,
        critical,
    )


def _draw_toy2(rng, k, mu, sa, sb):
    h = np.abs(rng.standard_normal((k, mu.size)))
    up = rng.random((k, mu.size)) < 0.5
    return np.where(up, mu + sa * h, mu - sb * h)


def toy2_power_mc(spec: ToySpec2, scaled: bool = False, draws: int = 100_000, rng=None, critical=None) -> float:
    """As :func:`toy1_power_mc` for example 2."""
    rng = np.random.default_rng(rng)
    mu = np.asarray(spec.means)
    sa = np.asarray(spec.sds_upper)
    sb = np.asarray(spec.sds_lower)
    wp, wn = (1.0 / sa, 1.0 / sb) if scaled else (np.ones_like(sa), np.ones_like(sb))

    def stat(x):
        return np.max(np.where(x >= 0, wp * x, -wn * x), axis=1)

    return _mc_power(
        stat,
        lambda k: _draw_toy2(rng, k, np.zeros_like(mu), sa, sb),
        lambda k: _draw_toy2(rng, k, mu, sa, sb),
        spec.alpha,
        draws,
        critical,
    )


# Standard deviations of the two cases (a, b) of each example.
TOY_CASES = {
    (1, "a"): {"sds": (1.0, 1.0, 0.1)},
    (1, "b"): {"sds": (0.1, 0.1, 1.0)},
    (2, "a"): {"sds_upper": (0.1, 0.1, 0.1), "sds_lower": (0.13, 0.13, 0.13)},
    (2, "b"): {"sds_upper": (0.1, 0.1, 0.1), "sds_lower": (0.07, 0.07, 0.07)},
}


def power_curve(example: int, case: str, mu3_values, alpha: float = 0.05) -> list[tuple[float, float, float]]:
    """``(mu3, unscaled power, scaled power)`` rows for one example and case."""
    key = (int(example), str(case).lower())
    if key not in TOY_CASES:
        raise ValidationError(f"unknown toy example/case {example}/{case}")
    cfg = TOY_CASES[key]
    rows = []
    for mu3 in mu3_values:
        means = (0.0, 0.0, float(mu3))
        if key[0] == 1:
            spec = ToySpec1(means, cfg["sds"], alpha)
            rows.append((float(mu3), toy1_power(spec, False), toy1_power(spec, True)))
        else:
            spec = ToySpec2(means, cfg["sds_upper"], cfg["sds_lower"], alpha)
            rows.append((float(mu3), toy2_power(spec, False), toy2_power(spec, True)))
    return rows
