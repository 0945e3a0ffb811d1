"""
Pattern CSV files, JSON configuration documents and run manifests.

Pattern files carry a ``x,y,mark`` header and one point per row; the
window comes from the configuration.  Floats are written with 17
significant digits so that a write/read cycle is lossless.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ValidationError
from .harness import DEFAULT_INTERVALS, StudyConfig
from .mctest import TestConfig
from .models import MODEL_ROWS, GaussianFieldSpec, ModelFamily, ModelSpec
from .pattern import MarkedPattern, Window
from .residuals import EPS_DENOM

__all__ = [
    "read_pattern_csv",
    "write_pattern_csv",
    "parse_window",
    "parse_config",
    "parse_test_config",
    "parse_study_config",
    "parse_model_spec",
    "resolved_test_config",
    "resolved_study_config",
    "RunManifest",
    "file_digest",
]

HEADER = ["x", "y", "mark"]


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def read_pattern_csv(path, window: Window) -> MarkedPattern:
    """Parse a pattern file; errors name the offending line (header is line 1)."""
    pts, marks = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != HEADER:
            raise ValidationError(f"{path}: expected header 'x,y,mark', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ValidationError(f"malformed row at line {lineno}: expected 3 fields, got {len(row)}")
            try:
                x, y, m = (float(c) for c in row)
            except ValueError:
                raise ValidationError(f"malformed row at line {lineno}: {','.join(row)!r}") from None
            if m < 0:
                raise ValidationError(f"negative mark at line {lineno}: {m}")
            if not window.contains([[x, y]])[0]:
                raise ValidationError(f"point outside window at line {lineno}: ({x}, {y})")
            pts.append((x, y))
            marks.append(m)
    return MarkedPattern(np.array(pts, dtype=float).reshape(-1, 2), marks, window)


def write_pattern_csv(path, pattern: MarkedPattern) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for (x, y), m in zip(pattern.points, pattern.marks):
            w.writerow([_fmt(x), _fmt(y), _fmt(m)])


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def parse_window(value) -> Window:
    """Window from ``[x0, x1, y0, y1]`` or the string ``"x0,x1,y0,y1"``."""
    if isinstance(value, str):
        value = [v for v in value.split(",")]
    try:
        vals = [float(v) for v in value]
    except (TypeError, ValueError):
        raise ValidationError(f"window must be four numbers, got {value!r}") from None
    if len(vals) != 4:
        raise ValidationError(f"window must be four numbers, got {value!r}")
    return Window(*vals)


def _strict(doc: dict, allowed, required=(), what="config"):
    if not isinstance(doc, dict):
        raise ValidationError(f"{what} must be a JSON object")
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ValidationError(f"unknown keys in {what}: {unknown}")
    missing = [k for k in required if k not in doc]
    if missing:
        raise ValidationError(f"missing required keys in {what}: {missing}")


_TEST_KEYS = ("kind", "window", "f", "edge", "transformation", "scaling", "deviation", "interval",
              "r_max", "step", "s", "seed", "t0_mode", "eps_denom")


def parse_test_config(doc: dict) -> tuple[TestConfig, Window]:
    _strict(doc, _TEST_KEYS, ("window",), "test config")
    window = parse_window(doc["window"])
    step = float(doc.get("step", 0.25))
    interval = tuple(doc.get("interval", (0.0, 25.0)))
    if len(interval) != 2:
        raise ValidationError("interval must be [lo, hi]")
    r_max = float(doc.get("r_max", max(25.0, float(interval[1]))))
    cfg = TestConfig(
        f=doc.get("f", "m."),
        edge=doc.get("edge", "translational"),
        transformation=doc.get("transformation", "identity"),
        scaling=doc.get("scaling", "raw"),
        deviation=doc.get("deviation", "sup"),
        interval=interval,
        grid=(0.0, r_max),
        step=step,
        s=doc.get("s", 999),
        seed=doc.get("seed", 0),
        t0_mode=doc.get("t0_mode", "analytic"),
        eps_denom=float(doc.get("eps_denom", EPS_DENOM)),
    )
    return cfg, window


def resolved_test_config(cfg: TestConfig, window: Window) -> dict:
    """Every setting of a test, defaults included, as plain JSON values."""
    return {
        "kind": "test",
        "window": list(window.as_tuple()),
        "f": cfg.f.value,
        "edge": cfg.edge.value,
        "transformation": cfg.transformation.value,
        "scaling": cfg.scaling.value,
        "deviation": cfg.deviation.value,
        "interval": [cfg.interval.r_min, cfg.interval.r_max],
        "interval_points": len(cfg.interval),
        "r_max": cfg.grid.r_max,
        "step": cfg.grid.step,
        "s": cfg.s,
        "seed": cfg.seed,
        "t0_mode": cfg.t0_mode,
        "eps_denom": cfg.eps_denom,
    }


_FIELD_KEYS = ("mean", "range", "cell")


def _field_spec(doc) -> GaussianFieldSpec:
    if doc is None:
        return GaussianFieldSpec()
    _strict(doc, _FIELD_KEYS, (), "field")
    return GaussianFieldSpec(**{k: float(v) for k, v in doc.items()})


def parse_model_spec(doc: dict, family=None, n=None, window=None) -> ModelSpec:
    """Model from a parameter document; ``family``/``n``/``window`` override its keys."""
    _strict(doc, ("kind", "model", "params", "n", "window", "field"), (), "model params")
    family = family if family is not None else doc.get("model")
    if family is None:
        raise ValidationError("missing required keys in model params: ['model']")
    params = doc.get("params")
    if params is None:
        raise ValidationError("missing required keys in model params: ['params']")
    n = n if n is not None else doc.get("n", 200)
    window = window if window is not None else parse_window(doc.get("window", [0, 100, 0, 100]))
    return ModelSpec(ModelFamily.parse(family), dict(params), n, window, _field_spec(doc.get("field")))


_STUDY_KEYS = ("kind", "model", "row", "params", "n", "window", "field", "changing", "values", "N", "s",
               "alpha", "fs", "transformations", "scalings", "deviations", "intervals", "step", "r_max",
               "edge", "t0_mode", "seed", "label")


def parse_study_config(doc: dict, full: bool = False) -> StudyConfig:
    """Study from a JSON document.

    ``row`` picks a preset model row (fixed parameters, changing parameter and
    value grid); explicit keys override it. ``full`` switches the defaults to
    N=1000, s=999 and the whole value grid.
    """
    _strict(doc, _STUDY_KEYS, (), "study config")
    if "row" in doc:
        if doc["row"] not in MODEL_ROWS:
            raise ValidationError(f"unknown model row {doc['row']!r}; expected one of {sorted(MODEL_ROWS)}")
        family, fixed, changing, grid_values = MODEL_ROWS[doc["row"]]
        default_values = grid_values if full else [grid_values[0], grid_values[len(grid_values) // 2], grid_values[-1]]
        label = doc["row"]
    else:
        missing = [k for k in ("model", "params", "changing", "values") if k not in doc]
        if missing:
            raise ValidationError(f"missing required keys in study config: {missing}")
        family, fixed, changing, default_values, label = doc["model"], {}, doc["changing"], None, None
    changing = doc.get("changing", changing)
    values = list(doc.get("values", default_values))
    params = {**fixed, **doc.get("params", {})}
    params.setdefault(changing, values[0] if values else 0.0)
    model = ModelSpec(
        ModelFamily.parse(doc.get("model", family)),
        params,
        doc.get("n", 200),
        parse_window(doc.get("window", [0, 100, 0, 100])),
        _field_spec(doc.get("field")),
    )
    defaults = {"N": 1000, "s": 999} if full else {"N": 200, "s": 199}
    return StudyConfig(
        model=model,
        changing=changing,
        values=tuple(values),
        N=doc.get("N", defaults["N"]),
        s=doc.get("s", defaults["s"]),
        alpha=float(doc.get("alpha", 0.05)),
        fs=tuple(doc.get("fs", ("m.",))),
        transformations=tuple(doc.get("transformations", ("identity", "sqrt"))),
        scalings=tuple(doc.get("scalings", ("raw", "st", "q", "qdir"))),
        deviations=tuple(doc.get("deviations", ("sup", "int"))),
        intervals={k: tuple(v) for k, v in doc.get("intervals", DEFAULT_INTERVALS).items()},
        step=float(doc.get("step", 0.25)),
        r_max=float(doc.get("r_max", 25.0)),
        edge=doc.get("edge", "translational"),
        t0_mode=doc.get("t0_mode", "analytic"),
        seed=int(doc.get("seed", 0)),
        label=doc.get("label", label),
    )


def resolved_study_config(cfg: StudyConfig) -> dict:
    m = cfg.model
    return {
        "kind": "study",
        "model": m.family.value,
        "params": m.params,
        "n": m.n,
        "window": list(m.window.as_tuple()),
        "field": asdict(m.field_spec),
        "changing": cfg.changing,
        "values": list(cfg.values),
        "N": cfg.N,
        "s": cfg.s,
        "alpha": cfg.alpha,
        "fs": [f.value for f in cfg.fs],
        "transformations": [h.value for h in cfg.transformations],
        "scalings": [k.value for k in cfg.scalings],
        "deviations": [k.value for k in cfg.deviations],
        "intervals": {k: [v.r_min, v.r_max] for k, v in cfg.intervals.items()},
        "step": cfg.step,
        "r_max": cfg.r_max,
        "edge": cfg.edge.value,
        "t0_mode": cfg.t0_mode,
        "seed": cfg.seed,
        "label": cfg.label,
    }


def parse_config(path, kind: str | None = None, full: bool = False):
    """Load a JSON document as a test config, study config or model spec.

    The kind comes from the argument, else the document's ``kind`` key.
    Test configs are returned together with their window.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    kind = kind or (doc.get("kind") if isinstance(doc, dict) else None)
    if kind == "test":
        return parse_test_config(doc)
    if kind == "study":
        return parse_study_config(doc, full=full)
    if kind == "model":
        return parse_model_spec(doc)
    raise ValidationError(f"{path}: cannot tell the config kind; set 'kind' to test, study or model")


@dataclass
class RunManifest:
    """What was run, with which settings and seeds, on which inputs."""

    subcommand: str
    config: dict
    seed: int
    derived_seeds: list = field(default_factory=list)
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    tool_version: str = __version__
    started: str = field(default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat())
    finished: str | None = None

    def finish(self) -> None:
        self.finished = _dt.datetime.now(_dt.timezone.utc).isoformat()

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")
