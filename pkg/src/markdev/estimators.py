"""
Mark-weighted K-function estimation.

The estimator is

    K_f(r) = |W| / (n (n-1) c_f) * sum_{k != l} f(m_k, m_l) 1(|x_k - x_l| <= r) e(x_k, x_l)

with ``c_f`` the mean of ``f`` over ordered pairs of distinct points and
``e`` the translational edge-correction factor (or 1).  Pair geometry is
tabulated once per pattern in :class:`PairTable`; re-evaluating for
permuted marks then costs one sparse product per batch.
"""

from __future__ import annotations

from enum import Enum

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .errors import NumericalError, ValidationError
from .pattern import FunctionEstimate, MarkedPattern, RGrid, Window, _require_two

__all__ = [
    "MarkFunction",
    "EdgeCorrection",
    "Transformation",
    "translational_factor",
    "estimate_chat_f",
    "estimate_kf",
    "transform",
    "apply_transformation",
    "PairTable",
]


class MarkFunction(str, Enum):
    """Mark test functions ``f(m1, m2)``."""

    ONE = "one"
    M1 = "m."
    MM = "mm"
    GAMMA = "gamma"

    @classmethod
    def parse(cls, name) -> MarkFunction:
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        aliases = {"1": "one", "m1": "m.", "m": "m.", "m1m2": "mm", "g": "gamma"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValidationError(f"unknown mark test function {name!r}") from None

    def __call__(self, m1, m2):
        m1 = np.asarray(m1, dtype=float)
        m2 = np.asarray(m2, dtype=float)
        if self is MarkFunction.ONE:
            return np.ones(np.broadcast(m1, m2).shape)
        if self is MarkFunction.M1:
            return m1 + 0.0 * m2
        if self is MarkFunction.MM:
            return m1 * m2
        return 0.5 * (m1 - m2) ** 2


class EdgeCorrection(str, Enum):
    TRANSLATIONAL = "translational"
    NONE = "none"

    @classmethod
    def parse(cls, name) -> EdgeCorrection:
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        key = {"trans": "translational", "translate": "translational"}.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValidationError(f"unknown edge correction {name!r}") from None


class Transformation(str, Enum):
    """``identity``: t; ``sqrt``: sqrt(t / pi) (K to L); ``arcsin``: arcsin(sqrt(1 - t))."""

    IDENTITY = "identity"
    SQRT = "sqrt"
    ARCSIN = "arcsin"

    @classmethod
    def parse(cls, name) -> Transformation:
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        aliases = {"k": "identity", "none": "identity", "l": "sqrt", "sqrt-over-pi": "sqrt",
                   "arcsin-sqrt-complement": "arcsin"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValidationError(f"unknown transformation {name!r}") from None


def translational_factor(window: Window, dx, dy):
    """``|W| / |W ∩ (W + (dx, dy))|`` for a rectangular window.

    Vectorised over ``dx``, ``dy``. Raises for offsets reaching a window side,
    where the overlap is empty and the factor infinite.
    """
    adx = np.abs(np.asarray(dx, dtype=float))
    ady = np.abs(np.asarray(dy, dtype=float))
    if np.any(adx >= window.width) or np.any(ady >= window.height):
        raise NumericalError("degenerate overlap: offset reaches the window side")
    out = window.area() / ((window.width - adx) * (window.height - ady))
    return float(out) if np.ndim(out) == 0 else out


def estimate_chat_f(pattern: MarkedPattern, f) -> float:
    """Mean of ``f(m_i, m_j)`` over ordered pairs ``i != j``.

    Uses closed forms of the double sum. Zero values are returned as-is;
    :func:`estimate_kf` refuses them.
    """
    _require_two(pattern)
    f = MarkFunction.parse(f)
    m = pattern.marks
    n = m.size
    if f is MarkFunction.ONE:
        return 1.0
    if f is MarkFunction.M1:
        return float(m.mean())
    if f is MarkFunction.MM:
        s1 = m.sum()
        return float((s1 * s1 - np.dot(m, m)) / (n * (n - 1)))
    return float(m.var(ddof=1))


class PairTable:
    """Pairs of points at distance ``<= grid.r_max`` with their grid bins.

    Each unordered pair ``i < j`` is stored once, together with its
    edge-correction weight and the first grid index at which it is counted.
    ``evaluate`` turns a batch of mark vectors into K_f curves.

    Parameters
    ----------
    pattern : MarkedPattern
    grid : RGrid
    edge : EdgeCorrection or str
    """

    def __init__(self, pattern: MarkedPattern, grid: RGrid, edge="translational"):
        _require_two(pattern)
        self.pattern = pattern
        self.grid = grid
        self.edge = EdgeCorrection.parse(edge)
        pts = pattern.points
        r = grid.values
        # slightly enlarged query radius; the exact test is redone below
        tree = cKDTree(pts)
        ij = tree.query_pairs(r[-1] * (1 + 1e-9) + 1e-12, output_type="ndarray")
        if ij.size == 0:
            ij = np.zeros((0, 2), dtype=np.intp)
        ij = ij[np.lexsort((ij[:, 1], ij[:, 0]))]
        d = np.hypot(pts[ij[:, 0], 0] - pts[ij[:, 1], 0], pts[ij[:, 0], 1] - pts[ij[:, 1], 1])
        bins = np.searchsorted(r, d, side="left")
        keep = bins < len(r)
        self.i = ij[keep, 0]
        self.j = ij[keep, 1]
        self.dist = d[keep]
        self.bins = bins[keep]
        if self.edge is EdgeCorrection.TRANSLATIONAL:
            dx = pts[self.i, 0] - pts[self.j, 0]
            dy = pts[self.i, 1] - pts[self.j, 1]
            self.weight = np.asarray(translational_factor(pattern.window, dx, dy), dtype=float).reshape(-1)
        else:
            self.weight = np.ones(self.i.size)
        npairs = self.i.size
        self._binner = sparse.csr_matrix(
            (np.ones(npairs), (np.arange(npairs), self.bins)), shape=(npairs, len(r))
        )
        n = pattern.n
        self._scale = pattern.window.area() / (n * (n - 1))

    @property
    def n_pairs(self) -> int:
        return self.i.size

    def pair_values(self, marks, f) -> np.ndarray:
        """``f(m_i, m_j) + f(m_j, m_i)`` per stored pair, times the edge weight.

        ``marks`` may be one mark vector or a 2-D batch (one row per vector).
        """
        f = MarkFunction.parse(f)
        M = np.atleast_2d(np.asarray(marks, dtype=float))
        if f is MarkFunction.ONE:
            v = np.broadcast_to(2.0, (M.shape[0], self.n_pairs))
        else:
            mi, mj = M[:, self.i], M[:, self.j]
            if f is MarkFunction.M1:
                v = mi + mj
            elif f is MarkFunction.MM:
                v = 2.0 * mi * mj
            else:
                v = (mi - mj) ** 2
        return v * self.weight

    def evaluate(self, marks, f, chat_f=None) -> np.ndarray:
        """K_f values on the grid for each row of ``marks``.

        Parameters
        ----------
        marks : array_like, shape (n,) or (k, n)
        f : MarkFunction or str
        chat_f : float, optional
            Normaliser. Defaults to the value for the pattern's own marks,
            which is invariant under permutation of those marks.

        Returns
        -------
        ndarray, shape (k, len(grid))
        """
        f = MarkFunction.parse(f)
        if chat_f is None:
            chat_f = estimate_chat_f(self.pattern, f)
        if not (chat_f > 0):
            raise NumericalError(f"degenerate normalizer: c_f = {chat_f} for mark function {f.value!r}")
        v = self.pair_values(marks, f)
        binned = np.asarray((self._binner.T @ np.ascontiguousarray(v).T).T)
        return np.cumsum(binned, axis=1) * (self._scale / chat_f)


def estimate_kf(pattern: MarkedPattern, f, edge, grid: RGrid) -> FunctionEstimate:
    """Mark-weighted K-function of ``pattern`` on ``grid``."""
    table = PairTable(pattern, grid, edge)
    return FunctionEstimate(grid, table.evaluate(pattern.marks, f)[0])


def apply_transformation(values, h) -> np.ndarray:
    """Apply ``h`` elementwise to an array; raises on domain violations."""
    h = Transformation.parse(h)
    v = np.asarray(values, dtype=float)
    if h is Transformation.IDENTITY:
        return v.copy()
    if h is Transformation.SQRT:
        bad = v < 0
        if np.any(bad):
            raise ValidationError(f"transformation domain violation: negative value at position {_first(bad)}")
        return np.sqrt(v / np.pi)
    bad = (v < 0) | (v > 1)
    if np.any(bad):
        raise ValidationError(f"transformation domain violation: value outside [0, 1] at position {_first(bad)}")
    return np.arcsin(np.sqrt(1.0 - v))


def _first(mask):
    idx = np.argwhere(mask)[0]
    return tuple(int(i) for i in idx) if idx.size > 1 else int(idx[0])


def transform(estimate: FunctionEstimate, h) -> FunctionEstimate:
    """Pointwise ``h(T(r))``; the error message names the offending r."""
    try:
        vals = apply_transformation(estimate.values, h)
    except ValidationError:
        h = Transformation.parse(h)
        v = estimate.values
        bad = (v < 0) | ((v > 1) & (h is Transformation.ARCSIN))
        r = estimate.r[np.flatnonzero(bad)[0]]
        raise ValidationError(f"transformation domain violation at r={r:g} (value {v[bad][0]:g})") from None
    return FunctionEstimate(estimate.grid, vals, estimate.mask)
