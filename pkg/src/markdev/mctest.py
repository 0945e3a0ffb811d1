"""
Monte Carlo random-labelling deviation test.

The data's mark-weighted K-function is compared with ``s`` versions
computed after randomly permuting the marks over the fixed locations.
Under random labelling the expectation of every such function is the
unmarked K estimate with the same edge correction, so T0 is exact and
needs no simulation.  Permutation ``i`` draws from its own stream derived
from ``(seed, i)``, so results do not depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .deviation import DeviationKind, deviations
from .errors import NumericalError, ValidationError
from .estimators import EdgeCorrection, MarkFunction, PairTable, Transformation, apply_transformation
from .pattern import FunctionEstimate, MarkedPattern, RGrid, _require_two
from .residuals import EPS_DENOM, NullDistribution, ScalingKind, null_from_array, scale_residuals

__all__ = [
    "TestConfig",
    "TestResult",
    "permutation_rng",
    "permute_marks",
    "permuted_mark_matrix",
    "compute_t0",
    "leave_one_out_means",
    "monte_carlo_rank",
    "evaluate_statistics",
    "run_test",
]

T0_MODES = ("analytic", "diggle")


def _as_grid(v, step):
    if isinstance(v, RGrid):
        return v
    lo, hi = v
    return RGrid(float(lo), float(hi), step)


@dataclass(frozen=True)
class TestConfig:
    """One fully specified random-labelling test.

    ``interval`` and ``grid`` accept an :class:`RGrid` or a ``(lo, hi)`` pair;
    pairs are gridded with ``step``. The estimation grid defaults to
    ``[0, interval.r_max]``.
    """

    __test__ = False

    f: MarkFunction = MarkFunction.M1
    edge: EdgeCorrection = EdgeCorrection.TRANSLATIONAL
    transformation: Transformation = Transformation.IDENTITY
    scaling: ScalingKind = ScalingKind.RAW
    deviation: DeviationKind = DeviationKind.SUPREMUM
    interval: RGrid | tuple = (0.0, 25.0)
    grid: RGrid | tuple | None = None
    step: float = 0.25
    s: int = 999
    seed: int = 0
    t0_mode: str = "analytic"
    eps_denom: float = EPS_DENOM

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("f", MarkFunction.parse(self.f))
        set_("edge", EdgeCorrection.parse(self.edge))
        set_("transformation", Transformation.parse(self.transformation))
        set_("scaling", ScalingKind.parse(self.scaling))
        set_("deviation", DeviationKind.parse(self.deviation))
        if not (self.step > 0):
            raise ValidationError("step must be positive")
        interval = _as_grid(self.interval, self.step)
        grid = _as_grid(self.grid, self.step) if self.grid is not None else RGrid(0.0, interval.r_max, interval.step)
        grid.indices_of(interval)
        set_("interval", interval)
        set_("grid", grid)
        set_("step", grid.step)
        if int(self.s) != self.s or self.s < 1:
            raise ValidationError(f"s must be a positive integer, got {self.s}")
        set_("s", int(self.s))
        if not (0 <= int(self.seed) < 2**64):
            raise ValidationError("seed must be an unsigned 64-bit integer")
        set_("seed", int(self.seed))
        if self.t0_mode not in T0_MODES:
            raise ValidationError(f"t0_mode must be one of {T0_MODES}, got {self.t0_mode!r}")

    def with_(self, **changes) -> TestConfig:
        return replace(self, **changes)


@dataclass(frozen=True)
class TestResult:
    """Outcome of :func:`run_test`.

    ``u[0]`` is the data's deviation, ``u[1:]`` those of the permutations.
    ``t_data``, ``t0`` and ``residual`` are on the transformed scale.
    """

    __test__ = False

    u: np.ndarray
    rank: int
    p_value: float
    t_data: FunctionEstimate
    t0: FunctionEstimate
    residual: FunctionEstimate
    null: NullDistribution
    masked_points: np.ndarray
    config: TestConfig = field(repr=False)

    @property
    def s(self) -> int:
        return self.u.size - 1


def permutation_rng(seed: int, i: int) -> np.random.Generator:
    """Independent generator for permutation ``i`` under master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


def permute_marks(pattern: MarkedPattern, rng: np.random.Generator) -> MarkedPattern:
    """Same locations, marks in uniformly random order."""
    _require_two(pattern)
    return pattern.with_marks(rng.permutation(pattern.marks))


def permuted_mark_matrix(marks, s: int, seed: int) -> np.ndarray:
    """``(s + 1, n)`` array: row 0 the original marks, row i a permutation from stream i."""
    m = np.asarray(marks, dtype=float)
    out = np.empty((s + 1, m.size))
    out[0] = m
    for i in range(1, s + 1):
        out[i] = m[permutation_rng(seed, i).permutation(m.size)]
    return out


def leave_one_out_means(T) -> np.ndarray:
    """Row i: mean of all rows except i."""
    T = np.asarray(T, dtype=float)
    k = T.shape[0]
    if k < 2:
        raise ValidationError("leave-one-out means need at least 2 functions")
    return (T.sum(axis=0) - T) / (k - 1)


def compute_t0(pattern: MarkedPattern, config: TestConfig, permuted_estimates=None):
    """Null expectation of the test function (untransformed scale).

    analytic : the unmarked K estimate (mark function ``one``) with the
        same edge correction as the test, a :class:`FunctionEstimate`.
    diggle : for every supplied function, the mean of the others; a list
        of :class:`FunctionEstimate`, one per input.
    """
    if config.t0_mode == "analytic":
        table = PairTable(pattern, config.grid, config.edge)
        return FunctionEstimate(config.grid, table.evaluate(pattern.marks, MarkFunction.ONE)[0])
    if permuted_estimates is None:
        raise ValidationError("missing estimates: leave-one-out T0 needs the simulated functions")
    T = np.stack([np.asarray(getattr(e, "values", e), dtype=float) for e in permuted_estimates])
    return [FunctionEstimate(config.grid, row) for row in leave_one_out_means(T)]


def monte_carlo_rank(u) -> tuple[int, float]:
    """Number of simulated ``u_i >= u_1`` and the p-value ``(1 + rank) / (s + 1)``."""
    u = np.asarray(u, dtype=float)
    rank = int(np.count_nonzero(u[1:] >= u[0]))
    return rank, (1 + rank) / u.size


def evaluate_statistics(T, t0, grid: RGrid, transformation, scaling, t0_mode="analytic", eps=EPS_DENOM):
    """Transform, summarise and scale a stack of test functions.

    Parameters
    ----------
    T : ndarray, shape (s + 1, G)
        Row 0 is the data.
    t0 : ndarray, shape (G,)
        Analytic expectation (ignored in ``diggle`` mode).

    Returns
    -------
    Th, t0h : transformed functions and expectation (``t0h`` per row in diggle mode)
    null : NullDistribution built from all ``s + 1`` transformed rows
    D, mask : scaled residuals and masked grid points
    """
    Th = apply_transformation(T, transformation)
    if t0_mode == "analytic":
        t0h = apply_transformation(t0, transformation)
        null = null_from_array(Th, t0h, grid, source="analytic-T0")
    else:
        t0h = leave_one_out_means(Th)
        null = null_from_array(Th, Th.mean(axis=0), grid)
    D, mask = scale_residuals(Th, t0h, null, scaling, eps)
    return Th, t0h, null, D, mask


def run_test(pattern: MarkedPattern, config: TestConfig, table: PairTable | None = None) -> TestResult:
    """Random-labelling deviation test of ``pattern``.

    A precomputed ``table`` for the same pattern, grid and edge correction may
    be passed to skip the pair search.
    """
    _require_two(pattern)
    if table is None:
        table = PairTable(pattern, config.grid, config.edge)
    M = permuted_mark_matrix(pattern.marks, config.s, config.seed)
    T = table.evaluate(M, config.f)
    t0 = table.evaluate(pattern.marks, MarkFunction.ONE)[0]
    Th, t0h, null, D, mask = evaluate_statistics(
        T, t0, config.grid, config.transformation, config.scaling, config.t0_mode, config.eps_denom
    )
    idx = config.grid.indices_of(config.interval)
    if mask[idx].all():
        raise NumericalError("degenerate scaling: every grid point of the interval is masked")
    u = deviations(D, idx, mask, config.deviation, config.grid.step)
    rank, p = monte_carlo_rank(u)
    t0_data = t0h if t0h.ndim == 1 else t0h[0]
    return TestResult(
        u=u,
        rank=rank,
        p_value=p,
        t_data=FunctionEstimate(config.grid, Th[0]),
        t0=FunctionEstimate(config.grid, t0_data),
        residual=FunctionEstimate(config.grid, D[0], mask),
        null=null,
        masked_points=np.flatnonzero(mask),
        config=config,
    )
