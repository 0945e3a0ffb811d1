"""
Windows, marked point patterns, distance grids and tabulated functions.

Everything here is immutable after construction; arrays handed out are
read-only views.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import ValidationError

__all__ = [
    "Window",
    "RGrid",
    "MarkedPattern",
    "FunctionEstimate",
    "MarkSummary",
    "pairwise_distances",
    "mark_summary",
    "window_grid",
]

_GRID_TOL = 1e-9


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Window:
    """Closed rectangle ``[x_min, x_max] x [y_min, y_max]``."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError(f"window bounds must be finite, got {vals}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValidationError(f"degenerate window {vals}")

    @classmethod
    def square(cls, side: float, origin: float = 0.0) -> Window:
        return cls(origin, origin + side, origin, origin + side)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def area(self) -> float:
        return self.width * self.height

    def contains(self, points) -> np.ndarray:
        """Boolean mask of points inside the closed window."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        x, y = pts[:, 0], pts[:, 1]
        return (x >= self.x_min) & (x <= self.x_max) & (y >= self.y_min) & (y <= self.y_max)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.y_min, self.y_max)


@dataclass(frozen=True)
class RGrid:
    """Arithmetic grid ``r_min, r_min + step, ..., r_max`` of distances."""

    r_min: float
    r_max: float
    step: float

    def __post_init__(self):
        if not (self.step > 0):
            raise ValidationError(f"grid step must be positive, got {self.step}")
        if self.r_min < 0 or self.r_max < self.r_min:
            raise ValidationError(f"invalid grid range [{self.r_min}, {self.r_max}]")
        k = (self.r_max - self.r_min) / self.step
        if abs(k - round(k)) > _GRID_TOL * max(1.0, abs(k)):
            raise ValidationError(
                f"range [{self.r_min}, {self.r_max}] is not a whole number of steps {self.step}"
            )

    def __len__(self) -> int:
        return int(round((self.r_max - self.r_min) / self.step)) + 1

    @property
    def values(self) -> np.ndarray:
        v = self.r_min + self.step * np.arange(len(self))
        v[-1] = self.r_max
        return v

    def indices_of(self, sub: RGrid) -> np.ndarray:
        """Indices into this grid of the points of ``sub``.

        ``sub`` must share the step and lie on this grid.
        """
        if abs(sub.step - self.step) > _GRID_TOL * self.step:
            raise ValidationError(f"interval step {sub.step} differs from grid step {self.step}")
        start = (sub.r_min - self.r_min) / self.step
        if abs(start - round(start)) > 1e-6 or round(start) < 0:
            raise ValidationError(f"interval start {sub.r_min} is not a grid point")
        start = int(round(start))
        stop = start + len(sub)
        if stop > len(self):
            raise ValidationError(
                f"interval [{sub.r_min}, {sub.r_max}] exceeds grid [{self.r_min}, {self.r_max}]"
            )
        return np.arange(start, stop)

    def interval(self, r_lo: float, r_hi: float) -> RGrid:
        """Sub-grid ``[r_lo, r_hi]`` with this grid's step."""
        sub = RGrid(r_lo, r_hi, self.step)
        self.indices_of(sub)
        return sub


class MarkedPattern:
    """Points with non-negative real marks inside a rectangular window.

    Parameters
    ----------
    points : array_like, shape (n, 2)
    marks : array_like, shape (n,)
    window : Window

    Attributes
    ----------
    has_duplicates : bool
        True when two points share a location. Allowed, but flagged.
    """

    __slots__ = ("points", "marks", "window", "has_duplicates")

    def __init__(self, points, marks, window: Window):
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, 2)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValidationError(f"points must have shape (n, 2), got {pts.shape}")
        m = np.asarray(marks, dtype=float).reshape(-1)
        if m.shape[0] != pts.shape[0]:
            raise ValidationError(f"{pts.shape[0]} points but {m.shape[0]} marks")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(m)):
            raise ValidationError("points and marks must be finite")
        if np.any(m < 0):
            i = int(np.flatnonzero(m < 0)[0])
            raise ValidationError(f"negative mark {m[i]} at index {i}")
        inside = window.contains(pts) if len(pts) else np.ones(0, bool)
        if not np.all(inside):
            i = int(np.flatnonzero(~inside)[0])
            raise ValidationError(f"point {tuple(pts[i])} at index {i} outside window")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "marks", _frozen(m))
        object.__setattr__(self, "window", window)
        dup = len(np.unique(pts, axis=0)) < len(pts)
        if dup:
            warnings.warn("pattern contains duplicate point locations", stacklevel=2)
        object.__setattr__(self, "has_duplicates", bool(dup))

    def __setattr__(self, name, value):
        raise AttributeError("MarkedPattern is immutable")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.n

    def with_marks(self, marks) -> MarkedPattern:
        """Same locations and window, new marks."""
        return MarkedPattern(self.points, marks, self.window)

    def __repr__(self):
        return f"MarkedPattern(n={self.n}, window={self.window.as_tuple()})"


@dataclass(frozen=True)
class FunctionEstimate:
    """A function tabulated on an :class:`RGrid`.

    ``mask`` flags grid points excluded from downstream use (True = excluded);
    masked values are stored as 0.
    """

    grid: RGrid
    values: np.ndarray
    mask: np.ndarray | None = field(default=None)

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (len(self.grid),):
            raise ValidationError(f"{v.shape[0] if v.ndim else 0} values for a grid of {len(self.grid)} points")
        if not np.all(np.isfinite(v)):
            raise ValidationError("function values must be finite")
        object.__setattr__(self, "values", v)
        if self.mask is not None:
            mk = _frozen(self.mask, dtype=bool)
            if mk.shape != v.shape:
                raise ValidationError("mask shape does not match values")
            object.__setattr__(self, "mask", mk)

    @property
    def r(self) -> np.ndarray:
        return self.grid.values


@dataclass(frozen=True)
class MarkSummary:
    mean: float
    variance: float


def _require_two(pattern: MarkedPattern):
    if pattern.n < 2:
        raise ValidationError(f"pattern too small: n={pattern.n}, need at least 2 points")


def pairwise_distances(pattern: MarkedPattern) -> np.ndarray:
    """Symmetric matrix of Euclidean interpoint distances."""
    _require_two(pattern)
    return squareform(pdist(pattern.points))


def mark_summary(pattern: MarkedPattern) -> MarkSummary:
    """Empirical mark mean and unbiased variance."""
    _require_two(pattern)
    m = pattern.marks
    return MarkSummary(float(m.mean()), float(m.var(ddof=1)))


def window_grid(window: Window, cell: float) -> np.ndarray:
    """Cell centres of a regular lattice covering ``window``.

    Row-major: x varies fastest. Returns an array of shape ``(ny * nx, 2)``.
    """
    nx, ny = lattice_shape(window, cell)
    xs = window.x_min + cell * (np.arange(nx) + 0.5)
    ys = window.y_min + cell * (np.arange(ny) + 0.5)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def lattice_shape(window: Window, cell: float) -> tuple[int, int]:
    """``(nx, ny)`` cell counts; ``cell`` must divide both sides."""
    if not (cell > 0):
        raise ValidationError(f"cell size must be positive, got {cell}")
    out = []
    for side in (window.width, window.height):
        k = side / cell
        if abs(k - round(k)) > _GRID_TOL * max(1.0, k) or round(k) < 1:
            raise ValidationError(f"cell size incompatible with window: {side} / {cell} = {k}")
        out.append(int(round(k)))
    return out[0], out[1]
