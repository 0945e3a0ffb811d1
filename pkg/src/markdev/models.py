"""
Simulators for the alternative marked point process models.

* ``SeqNIMPP`` -- sequential neighbour-interaction process: marks drawn
  first, locations placed one by one with density proportional to
  ``exp(-U_k)``.
* ``ExpNIMCP`` / ``ExpPIMCP`` -- log-Gaussian Cox process points with
  exponential marks whose mean decreases / increases with the intensity.
* ``GNIMCP`` -- LGCP points, lognormal marks driven by the same field plus noise.
* ``GNCP`` -- LGCP points, lognormal marks from an independent field.

Cox patterns are generated with exactly ``n`` points: given the count, the
points of a Cox process are i.i.d. with density proportional to the
intensity.  Fields live on a cell-centred lattice and are read at the
nearest node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import fft

from .errors import NumericalError, ValidationError
from .pattern import MarkedPattern, Window, lattice_shape

__all__ = [
    "GaussianFieldSpec",
    "GaussianField",
    "ModelFamily",
    "ModelSpec",
    "simulate_gaussian_field",
    "simulate_lgcp_points",
    "simulate_seqnimpp",
    "assign_marks_expimcp",
    "assign_marks_gnimcp",
    "assign_marks_gncp",
    "simulate_model",
    "MODEL_ROWS",
]

MAX_CLIPPED_FRACTION = 1e-3
MAX_PROPOSALS = 10**6


@dataclass(frozen=True)
class GaussianFieldSpec:
    """Stationary Gaussian field, unit variance, covariance ``exp(-r / range)``."""

    mean: float = -4.4
    range: float = 4.0
    cell: float = 0.5

    def __post_init__(self):
        if not (self.range > 0):
            raise ValidationError(f"field range must be positive, got {self.range}")
        if not (self.cell > 0):
            raise ValidationError(f"cell size must be positive, got {self.cell}")

    def covariance(self, r):
        return np.exp(-np.asarray(r, dtype=float) / self.range)


@dataclass(frozen=True)
class GaussianField:
    """Field values on the cell-centred lattice of ``window``; ``values[iy, ix]``."""

    values: np.ndarray
    window: Window
    cell: float
    mean: float
    clipped_fraction: float = 0.0

    def node_index(self, points) -> tuple[np.ndarray, np.ndarray]:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ny, nx = self.values.shape
        ix = np.clip(np.floor((pts[:, 0] - self.window.x_min) / self.cell).astype(int), 0, nx - 1)
        iy = np.clip(np.floor((pts[:, 1] - self.window.y_min) / self.cell).astype(int), 0, ny - 1)
        return iy, ix

    def at(self, points) -> np.ndarray:
        """Value at the nearest lattice node of each point."""
        iy, ix = self.node_index(points)
        return self.values[iy, ix]


class _Embedding:
    """Spectral square root of the circulant embedding for one (spec, window)."""

    def __init__(self, spec: GaussianFieldSpec, window: Window):
        nx, ny = lattice_shape(window, spec.cell)
        self.shape = (ny, nx)
        mx = fft.next_fast_len(2 * nx)
        my = fft.next_fast_len(2 * ny)
        kx = np.minimum(np.arange(mx), mx - np.arange(mx)) * spec.cell
        ky = np.minimum(np.arange(my), my - np.arange(my)) * spec.cell
        base = spec.covariance(np.hypot(ky[:, None], kx[None, :]))
        lam = fft.fft2(base).real
        neg = lam < 0
        total = np.abs(lam).sum()
        self.clipped_fraction = float(np.abs(lam[neg]).sum() / total) if total > 0 else 0.0
        if self.clipped_fraction > MAX_CLIPPED_FRACTION:
            raise NumericalError(
                f"embedding failure: clipped spectral mass fraction {self.clipped_fraction:.3g}"
            )
        lam[neg] = 0.0
        self.sqrt_lam = np.sqrt(lam / lam.size)

    def sample(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Two independent zero-mean unit-variance fields."""
        eps = rng.standard_normal(self.sqrt_lam.shape) + 1j * rng.standard_normal(self.sqrt_lam.shape)
        z = fft.fft2(self.sqrt_lam * eps)
        ny, nx = self.shape
        z = z[:ny, :nx]
        return z.real.copy(), z.imag.copy()


@lru_cache(maxsize=16)
def _embedding(spec: GaussianFieldSpec, window: Window) -> _Embedding:
    return _Embedding(spec, window)


def simulate_gaussian_field(spec: GaussianFieldSpec, window: Window, rng: np.random.Generator) -> GaussianField:
    """One lattice realisation by circulant embedding on a domain padded to twice each side.

    Negative embedding eigenvalues are clipped to zero; their share of the
    spectral mass is reported in ``clipped_fraction`` and must stay below 1e-3.
    """
    emb = _embedding(spec, window)
    z, _ = emb.sample(rng)
    return GaussianField(z + spec.mean, window, spec.cell, spec.mean, emb.clipped_fraction)


def simulate_lgcp_points(field_: GaussianField, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. points with density proportional to ``exp(field)``.

    A cell is chosen with probability proportional to ``exp(Z(cell))``,
    then a uniform location inside it.
    """
    if n < 1:
        raise ValidationError(f"point count must be positive, got {n}")
    z = field_.values.ravel()
    zmax = np.max(z)
    if not np.isfinite(zmax):
        raise NumericalError("degenerate intensity: no finite field value")
    w = np.exp(z - zmax)
    total = w.sum()
    if not (np.isfinite(total) and total > 0):
        raise NumericalError("degenerate intensity")
    cells = rng.choice(z.size, size=n, p=w / total)
    ny, nx = field_.values.shape
    iy, ix = np.divmod(cells, nx)
    u = rng.random((n, 2))
    x = field_.window.x_min + (ix + u[:, 0]) * field_.cell
    y = field_.window.y_min + (iy + u[:, 1]) * field_.cell
    pts = np.column_stack([x, y])
    # guard the closed boundary against rounding
    np.clip(pts[:, 0], field_.window.x_min, field_.window.x_max, out=pts[:, 0])
    np.clip(pts[:, 1], field_.window.y_min, field_.window.y_max, out=pts[:, 1])
    return pts


class ModelFamily(str, Enum):
    SEQNIMPP = "SeqNIMPP"
    EXPNIMCP = "ExpNIMCP"
    EXPPIMCP = "ExpPIMCP"
    GNIMCP = "GNIMCP"
    GNCP = "GNCP"

    @classmethod
    def parse(cls, name) -> ModelFamily:
        if isinstance(name, cls):
            return name
        for fam in cls:
            if fam.value.lower() == str(name).strip().lower():
                return fam
        raise ValidationError(f"unknown model {name!r}; expected one of {[f.value for f in cls]}")

    @property
    def is_cox(self) -> bool:
        return self is not ModelFamily.SEQNIMPP


_PARAMS = {
    ModelFamily.SEQNIMPP: {"mu": None, "sigma2": None, "theta": None, "R": 6.0},
    ModelFamily.EXPNIMCP: {"a": None, "b": None},
    ModelFamily.EXPPIMCP: {"a": None, "b": None},
    ModelFamily.GNIMCP: {"a": None, "b": None, "sigma_eps": None},
    ModelFamily.GNCP: {"a": None, "b": None, "sigma_eps": None},
}


@dataclass(frozen=True)
class ModelSpec:
    """One model row: family, point count, window and parameters.

    ``params`` keys by family (``R`` defaults to 6):

    ========  ===========================
    SeqNIMPP  mu, sigma2, theta, R
    Exp*      a, b
    GN*       a, b, sigma_eps
    ========  ===========================
    """

    family: ModelFamily
    params: dict
    n: int = 200
    window: Window = field(default_factory=lambda: Window.square(100.0))
    field_spec: GaussianFieldSpec = field(default_factory=GaussianFieldSpec)

    def __post_init__(self):
        fam = ModelFamily.parse(self.family)
        object.__setattr__(self, "family", fam)
        allowed = _PARAMS[fam]
        unknown = set(self.params) - set(allowed)
        if unknown:
            raise ValidationError(f"unknown parameters for {fam.value}: {sorted(unknown)}")
        p = {k: v for k, v in allowed.items() if v is not None}
        p.update({k: float(v) for k, v in self.params.items()})
        missing = [k for k in allowed if k not in p]
        if missing:
            raise ValidationError(f"missing parameters for {fam.value}: {missing}")
        object.__setattr__(self, "params", p)
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if fam is ModelFamily.SEQNIMPP:
            if p["theta"] < 0:
                raise ValidationError("unsupported attraction regime: theta < 0")
            if not (p["R"] > 0 and p["mu"] > 0 and p["sigma2"] >= 0):
                raise ValidationError("SeqNIMPP needs R > 0, mu > 0, sigma2 >= 0")
        elif fam in (ModelFamily.EXPNIMCP, ModelFamily.EXPPIMCP):
            if p["a"] < 0 or p["b"] < 0 or p["a"] + p["b"] <= 0:
                raise ValidationError("ExpIMCP needs a >= 0, b >= 0, not both zero")
        else:
            if not (p["a"] > 0) or p["sigma_eps"] < 0:
                raise ValidationError(f"{fam.value} needs a > 0 and sigma_eps >= 0")

    def with_params(self, **changes) -> ModelSpec:
        p = dict(self.params)
        p.update(changes)
        return ModelSpec(self.family, p, self.n, self.window, self.field_spec)


# Fixed parameters and changing-parameter grids of the power study.
MODEL_ROWS = {
    "SeqNIMPP": (ModelFamily.SEQNIMPP, {"mu": 24.0, "sigma2": 9.0, "R": 6.0}, "theta",
                 [round(0.02 * k, 2) for k in range(11)]),
    "ExpNIMCP": (ModelFamily.EXPNIMCP, {"b": 1.0}, "a", [20.0 * k for k in range(11)]),
    "ExpPIMCP": (ModelFamily.EXPPIMCP, {"b": 6600.0}, "a", [250.0 * k for k in range(11)]),
    "GNIMCP-": (ModelFamily.GNIMCP, {"a": 24.0, "b": -0.12}, "sigma_eps", [0.5 * k for k in range(13)]),
    "GNIMCP+": (ModelFamily.GNIMCP, {"a": 24.0, "b": 0.12}, "sigma_eps", [0.5 * k for k in range(13)]),
    "GNCP": (ModelFamily.GNCP, {"a": 24.0, "b": -0.12}, "sigma_eps", [0.25 * k for k in range(15)]),
}


def _truncated_normal(mu, sigma, n, rng):
    if sigma == 0:
        if mu < 0:
            raise ValidationError("mark distribution has no mass above 0")
        return np.full(n, float(mu))
    out = rng.normal(mu, sigma, n)
    bad = out < 0
    tries = 0
    while bad.any():
        tries += 1
        if tries > 10_000:
            raise NumericalError("mark truncation: acceptance probability too small")
        out[bad] = rng.normal(mu, sigma, bad.sum())
        bad = out < 0
    return out


def simulate_seqnimpp(spec: ModelSpec, rng: np.random.Generator, batch: int = 32) -> MarkedPattern:
    """Sequential neighbour-interaction pattern by exact rejection sampling.

    The influence of an earlier point z on a proposal y is
    ``theta * 1(|z - y| < R m(z) / mu) * m(z) m(y) / ((mu / R)**2 |z - y|)``;
    a proposal uniform on the window is accepted with probability
    ``exp(-sum of influences)``.  Proposals are screened in batches, taking
    the first accepted one, which leaves the law of the accepted point unchanged.
    """
    if spec.family is not ModelFamily.SEQNIMPP:
        raise ValidationError(f"expected a SeqNIMPP spec, got {spec.family.value}")
    p = spec.params
    mu, theta, R = p["mu"], p["theta"], p["R"]
    if theta < 0:
        raise ValidationError("unsupported attraction regime: theta < 0")
    n, W = spec.n, spec.window
    marks = _truncated_normal(mu, math.sqrt(p["sigma2"]), n, rng)
    lo = np.array([W.x_min, W.y_min])
    span = np.array([W.width, W.height])
    pts = np.empty((n, 2))
    pts[0] = lo + span * rng.random(2)
    reach = R * marks / mu
    coef = theta * marks / (mu / R) ** 2
    for k in range(1, n):
        used = 0
        while True:
            prop = lo + span * rng.random((batch, 2))
            u = rng.random(batch)
            if theta == 0:
                pts[k] = prop[0]
                break
            d = np.hypot(prop[:, None, 0] - pts[None, :k, 0], prop[:, None, 1] - pts[None, :k, 1])
            near = d < reach[None, :k]
            with np.errstate(divide="ignore", invalid="ignore"):
                infl = np.where(near, coef[None, :k] * marks[k] / d, 0.0)
            U = infl.sum(axis=1)
            accepted = np.flatnonzero(u < np.exp(-U))
            if accepted.size:
                pts[k] = prop[accepted[0]]
                break
            used += batch
            if used >= MAX_PROPOSALS:
                raise NumericalError(f"placement failure: point {k} rejected {used} proposals")
    return MarkedPattern(pts, marks, W)


def assign_marks_expimcp(points, field_: GaussianField, a: float, b: float, variant: str, rng) -> np.ndarray:
    """Exponential marks with mean ``a + b / Lambda`` (negative) or ``a + b Lambda`` (positive)."""
    if a < 0 or b < 0 or a + b <= 0:
        raise ValidationError("ExpIMCP needs a >= 0, b >= 0, not both zero")
    lam = np.exp(field_.at(points))
    if variant == "negative":
        if b > 0 and np.any(lam == 0):
            raise NumericalError("intensity underflow: Lambda = 0 at a point")
        mean = a + (b / lam if b > 0 else 0.0)
    elif variant == "positive":
        mean = a + b * lam
    else:
        raise ValidationError(f"variant must be 'negative' or 'positive', got {variant!r}")
    return rng.exponential(1.0, len(lam)) * mean


def _lognormal_marks(z, a, b, sigma_eps, mu_z, rng):
    zstar = z + (rng.normal(0.0, sigma_eps, z.shape) if sigma_eps > 0 else 0.0)
    return a * np.exp(b * (zstar - mu_z) / (1.0 + sigma_eps))


def assign_marks_gnimcp(points, field_: GaussianField, a, b, sigma_eps, mu_z, rng) -> np.ndarray:
    """``a exp(b (Z(x) + eps - mu_Z) / (1 + sigma_eps))`` with the point-generating field Z."""
    if not (a > 0) or sigma_eps < 0:
        raise ValidationError("GNIMCP needs a > 0 and sigma_eps >= 0")
    return _lognormal_marks(field_.at(points), a, b, sigma_eps, mu_z, rng)


def assign_marks_gncp(points, window: Window, field_spec: GaussianFieldSpec, a, b, sigma_eps, rng) -> np.ndarray:
    """As GNIMCP, but from a freshly simulated field independent of the points."""
    if not (a > 0) or sigma_eps < 0:
        raise ValidationError("GNCP needs a > 0 and sigma_eps >= 0")
    zm = simulate_gaussian_field(field_spec, window, rng)
    return _lognormal_marks(zm.at(points), a, b, sigma_eps, field_spec.mean, rng)


def simulate_model(spec: ModelSpec, rng: np.random.Generator) -> MarkedPattern:
    """One pattern of exactly ``spec.n`` points from ``spec``."""
    fam, p = spec.family, spec.params
    if fam is ModelFamily.SEQNIMPP:
        return simulate_seqnimpp(spec, rng)
    z = simulate_gaussian_field(spec.field_spec, spec.window, rng)
    pts = simulate_lgcp_points(z, spec.n, rng)
    if fam is ModelFamily.EXPNIMCP:
        marks = assign_marks_expimcp(pts, z, p["a"], p["b"], "negative", rng)
    elif fam is ModelFamily.EXPPIMCP:
        marks = assign_marks_expimcp(pts, z, p["a"], p["b"], "positive", rng)
    elif fam is ModelFamily.GNIMCP:
        marks = assign_marks_gnimcp(pts, z, p["a"], p["b"], p["sigma_eps"], spec.field_spec.mean, rng)
    else:
        marks = assign_marks_gncp(pts, spec.window, spec.field_spec, p["a"], p["b"], p["sigma_eps"], rng)
    return MarkedPattern(pts, marks, spec.window)
