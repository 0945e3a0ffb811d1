"""
Power-study runner.

For every value of the changing model parameter, ``N`` patterns are
simulated; each is tested once per design variant.  All variants of a
replicate share one set of ``s`` mark permutations and, per mark test
function, one stack of K_f curves: transformations, scalings, measures and
intervals are post-processing on that stack.
"""

from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .deviation import DeviationKind, deviations
from .errors import NumericalError, ValidationError
from .estimators import EdgeCorrection, MarkFunction, PairTable, Transformation
from .mctest import evaluate_statistics, monte_carlo_rank, permuted_mark_matrix
from .models import MODEL_ROWS, ModelSpec, simulate_model
from .pattern import RGrid
from .residuals import EPS_DENOM, ScalingKind

__all__ = [
    "DEFAULT_INTERVALS",
    "StudyConfig",
    "PowerRow",
    "PowerTable",
    "estimate_power",
    "replicate_seeds",
    "run_power_study",
    "row_study",
]

DEFAULT_INTERVALS = {"I1": (4.0, 8.0), "I2": (3.0, 15.0), "I3": (0.0, 25.0)}


def estimate_power(rejections: int, N: int) -> tuple[float, float]:
    """Rejection fraction and its binomial standard error."""
    if N < 1 or not (0 <= rejections <= N):
        raise ValidationError(f"need 0 <= rejections <= N and N >= 1, got {rejections}/{N}")
    p = rejections / N
    return p, math.sqrt(p * (1 - p) / N)


@dataclass(frozen=True)
class StudyConfig:
    """A model row, the values of its changing parameter, and the design cross."""

    model: ModelSpec
    changing: str
    values: tuple
    N: int = 200
    s: int = 199
    alpha: float = 0.05
    fs: tuple = ("m.",)
    transformations: tuple = ("identity", "sqrt")
    scalings: tuple = ("raw", "st", "q", "qdir")
    deviations: tuple = ("sup", "int")
    intervals: dict = field(default_factory=lambda: dict(DEFAULT_INTERVALS))
    step: float = 0.25
    r_max: float = 25.0
    edge: str = "translational"
    t0_mode: str = "analytic"
    seed: int = 0
    label: str | None = None

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        if int(self.N) != self.N or self.N < 1:
            raise ValidationError(f"N must be a positive integer, got {self.N}")
        if int(self.s) != self.s or self.s < 1:
            raise ValidationError(f"s must be a positive integer, got {self.s}")
        if not (0 < self.alpha < 1):
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.changing not in self.model.params:
            raise ValidationError(f"{self.changing!r} is not a parameter of {self.model.family.value}")
        values = tuple(float(v) for v in np.atleast_1d(self.values))
        if not values:
            raise ValidationError("no parameter values given")
        for v in values:
            self.model.with_params(**{self.changing: v})
        set_("values", values)
        set_("N", int(self.N))
        set_("s", int(self.s))
        set_("fs", tuple(MarkFunction.parse(f) for f in self.fs))
        set_("transformations", tuple(Transformation.parse(h) for h in self.transformations))
        set_("scalings", tuple(ScalingKind.parse(k) for k in self.scalings))
        set_("deviations", tuple(DeviationKind.parse(k) for k in self.deviations))
        set_("edge", EdgeCorrection.parse(self.edge))
        if self.t0_mode not in ("analytic", "diggle"):
            raise ValidationError(f"unknown t0_mode {self.t0_mode!r}")
        grid = self.grid
        intervals = {}
        for name, (lo, hi) in dict(self.intervals).items():
            intervals[str(name)] = grid.interval(float(lo), float(hi))
        if not intervals:
            raise ValidationError("no intervals given")
        set_("intervals", intervals)
        if self.label is None:
            set_("label", self.model.family.value)

    @property
    def grid(self) -> RGrid:
        return RGrid(0.0, self.r_max, self.step)

    def variants(self) -> list[tuple]:
        """All ``(f, transformation, scaling, deviation, interval name)`` combinations."""
        return list(itertools.product(self.fs, self.transformations, self.scalings, self.deviations, self.intervals))


@dataclass(frozen=True)
class PowerRow:
    model: str
    value: float
    f: str
    transformation: str
    scaling: str
    deviation: str
    interval: str
    rejections: int
    N: int
    power: float
    stderr: float

    FIELDS = ("model", "value", "f", "transformation", "scaling", "deviation", "interval",
              "rejections", "N", "power", "stderr")

    def as_tuple(self):
        return tuple(getattr(self, k) for k in self.FIELDS)


@dataclass
class PowerTable:
    """Power rows plus the per-replicate outcomes they were counted from.

    ``outcomes[value]`` has shape ``(N, len(variants))`` with entries
    1 (rejected), 0 (not rejected) or -1 (failed).
    """

    rows: list
    changing: str = ""
    failures: dict = field(default_factory=dict)
    variants: list = field(default_factory=list)
    outcomes: dict = field(default_factory=dict)

    @staticmethod
    def _key(f="m.", transformation="identity", scaling="raw", deviation="sup", interval="I3"):
        return (
            MarkFunction.parse(f),
            Transformation.parse(transformation),
            ScalingKind.parse(scaling),
            DeviationKind.parse(deviation),
            interval,
        )

    def outcome(self, value, **variant) -> np.ndarray:
        """Per-replicate outcome vector of one variant."""
        k = self.variants.index(self._key(**variant))
        return self.outcomes[float(value)][:, k]

    def discordant(self, value, a: dict, b: dict) -> tuple[int, int]:
        """``(#a rejects and b not, #b rejects and a not)`` over replicates valid for both."""
        oa, ob = self.outcome(value, **a), self.outcome(value, **b)
        ok = (oa >= 0) & (ob >= 0)
        return int(np.sum((oa == 1) & (ob == 0) & ok)), int(np.sum((ob == 1) & (oa == 0) & ok))

    def lookup(self, value, f="m.", transformation="identity", scaling="raw", deviation="sup", interval="I3") -> PowerRow:
        key = tuple(getattr(k, "value", k) for k in self._key(f, transformation, scaling, deviation, interval))
        for row in self.rows:
            if abs(row.value - value) < 1e-12 and (row.f, row.transformation, row.scaling, row.deviation, row.interval) == key:
                return row
        raise KeyError(f"no row for value={value}, variant={key}")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(PowerRow.FIELDS)
            for row in self.rows:
                w.writerow([repr(v) if isinstance(v, float) else v for v in row.as_tuple()])


def replicate_seeds(master: int, value_index: int, rep: int) -> tuple[np.random.Generator, int]:
    """Simulation generator and permutation seed of one replicate."""
    sim = np.random.default_rng(np.random.SeedSequence(master, spawn_key=(value_index, rep, 0)))
    perm = int(np.random.SeedSequence(master, spawn_key=(value_index, rep, 1)).generate_state(1, np.uint64)[0])
    return sim, perm


def _replicate(config: StudyConfig, spec: ModelSpec, value_index: int, rep: int) -> np.ndarray:
    """Outcome per variant: 1 rejected, 0 accepted, -1 failed."""
    variants = config.variants()
    out = np.full(len(variants), -1, dtype=np.int8)
    sim_rng, perm_seed = replicate_seeds(config.seed, value_index, rep)
    try:
        pattern = simulate_model(spec, sim_rng)
    except NumericalError:
        return out
    grid = config.grid
    table = PairTable(pattern, grid, config.edge)
    M = permuted_mark_matrix(pattern.marks, config.s, perm_seed)
    t0 = table.evaluate(pattern.marks, MarkFunction.ONE)[0]
    slots = {v: k for k, v in enumerate(variants)}
    idx = {name: grid.indices_of(iv) for name, iv in config.intervals.items()}
    for f in config.fs:
        try:
            T = table.evaluate(M, f)
        except NumericalError:
            continue
        for h in config.transformations:
            for sc in config.scalings:
                _, _, _, D, mask = evaluate_statistics(T, t0, grid, h, sc, config.t0_mode, EPS_DENOM)
                for dev in config.deviations:
                    for name, ix in idx.items():
                        try:
                            u = deviations(D, ix, mask, dev, grid.step)
                        except NumericalError:
                            continue
                        _, p = monte_carlo_rank(u)
                        out[slots[(f, h, sc, dev, name)]] = p <= config.alpha
    return out


def _run_chunk(args):
    config, spec, value_index, reps = args
    return [_replicate(config, spec, value_index, r) for r in reps]


def run_power_study(config: StudyConfig, workers: int = 1) -> PowerTable:
    """Rejection counts per parameter value and design variant.

    Deterministic given ``config.seed``, whatever ``workers`` is.
    Failed replicates are excluded from that variant's ``N`` and counted in
    ``failures`` per parameter value.
    """
    variants = config.variants()
    rows, failures, outcomes = [], {}, {}
    for vi, value in enumerate(config.values):
        spec = config.model.with_params(**{config.changing: value})
        reps = list(range(config.N))
        if workers > 1:
            chunks = [reps[k::workers] for k in range(workers)]
            with ProcessPoolExecutor(workers) as ex:
                parts = list(ex.map(_run_chunk, [(config, spec, vi, c) for c in chunks]))
            outcome = np.empty((config.N, len(variants)), dtype=np.int8)
            for c, part in zip(chunks, parts):
                outcome[c] = np.array(part)
        else:
            outcome = np.array(_run_chunk((config, spec, vi, reps)))
        outcomes[value] = outcome
        failed = outcome < 0
        failures[value] = int(failed.all(axis=1).sum())
        for k, (f, h, sc, dev, name) in enumerate(variants):
            ok = ~failed[:, k]
            n_ok = int(ok.sum())
            rej = int(outcome[ok, k].sum())
            power, se = estimate_power(rej, n_ok) if n_ok else (math.nan, math.nan)
            rows.append(PowerRow(config.label, value, f.value, h.value, sc.value, dev.value, name, rej, n_ok, power, se))
    return PowerTable(rows, config.changing, failures, variants, outcomes)


def row_study(row: str, full: bool = False, values=None, **overrides) -> StudyConfig:
    """Study configuration for one model row of the power-study design.

    Desk scale (default) runs N=200, s=199 on the null-most, middle and last
    parameter values; ``full=True`` runs N=1000, s=999 on the whole grid.
    """
    if row not in MODEL_ROWS:
        raise ValidationError(f"unknown model row {row!r}; expected one of {sorted(MODEL_ROWS)}")
    family, fixed, changing, grid_values = MODEL_ROWS[row]
    if values is None:
        values = grid_values if full else [grid_values[0], grid_values[len(grid_values) // 2], grid_values[-1]]
    model = ModelSpec(family, {**fixed, changing: values[0]}, n=overrides.pop("n", 200),
                      window=overrides.pop("window", ModelSpec.__dataclass_fields__["window"].default_factory()))
    kw = {"N": 1000, "s": 999} if full else {"N": 200, "s": 199}
    kw.update(overrides)
    return StudyConfig(model=model, changing=changing, values=tuple(values), label=row, **kw)
