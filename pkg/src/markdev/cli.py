from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalError, ValidationError
from .harness import run_power_study
from .io import (
    RunManifest,
    file_digest,
    parse_model_spec,
    parse_study_config,
    parse_test_config,
    parse_window,
    read_pattern_csv,
    resolved_study_config,
    resolved_test_config,
    write_pattern_csv,
)
from .mctest import run_test
from .models import simulate_model
from .toypower import power_curve

EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from None


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _parse_range(text: str) -> np.ndarray:
    try:
        start, step, end = (float(v) for v in text.split(":"))
    except ValueError:
        raise ValidationError(f"grid must look like start:step:end, got {text!r}") from None
    if not (step > 0) or end < start:
        raise ValidationError(f"invalid grid {text!r}")
    k = int(round((end - start) / step))
    return start + step * np.arange(k + 1)


def cmd_test(args) -> int:
    doc = _load_json(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
    cfg, window = parse_test_config(doc)
    pattern = read_pattern_csv(args.pattern, window)
    res = run_test(pattern, cfg)
    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "T_data", "T0", "q_lower", "q_upper", "residual"])
        for k, r in enumerate(cfg.grid.values):
            w.writerow([_fmt(r), _fmt(res.t_data.values[k]), _fmt(res.t0.values[k]),
                        _fmt(res.null.q_lower[k]), _fmt(res.null.q_upper[k]), _fmt(res.residual.values[k])])
        w.writerow(["p_value", _fmt(res.p_value)])
        w.writerow(["u_data", _fmt(res.u[0])])
    man = RunManifest("test", resolved_test_config(cfg, window), cfg.seed,
                      inputs={str(args.pattern): file_digest(args.pattern), str(args.config): file_digest(args.config)})
    man.outputs[str(out)] = file_digest(out)
    man.finish()
    man.write(out.with_name(out.name + ".manifest.json"))
    print(f"p_value={res.p_value:.6g} u_data={res.u[0]:.6g} rank={res.rank} s={cfg.s}")
    return 0


def cmd_simulate(args) -> int:
    doc = _load_json(args.params)
    if "params" not in doc:
        doc = {"params": {k: v for k, v in doc.items() if k != "field"}, **({"field": doc["field"]} if "field" in doc else {})}
    window = parse_window(args.window) if args.window else None
    spec = parse_model_spec(doc, family=args.model, n=args.n, window=window)
    if args.reps < 1:
        raise ValidationError("--reps must be positive")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = {"model": spec.family.value, "params": spec.params, "n": spec.n,
              "window": list(spec.window.as_tuple()), "reps": args.reps,
              "field": {"mean": spec.field_spec.mean, "range": spec.field_spec.range, "cell": spec.field_spec.cell}}
    man = RunManifest("simulate", config, args.seed, inputs={str(args.params): file_digest(args.params)})
    width = max(4, len(str(args.reps - 1)))
    for rep in range(args.reps):
        ss = np.random.SeedSequence(args.seed, spawn_key=(rep,))
        pattern = simulate_model(spec, np.random.default_rng(ss))
        name = f"pattern_{rep:0{width}d}.csv"
        write_pattern_csv(out_dir / name, pattern)
        man.derived_seeds.append({"replicate": rep, "entropy": args.seed, "spawn_key": [rep]})
        man.outputs[name] = file_digest(out_dir / name)
    man.finish()
    man.write(out_dir / "manifest.json")
    print(f"wrote {args.reps} pattern(s) to {out_dir}")
    return 0


def cmd_power(args) -> int:
    doc = _load_json(args.study)
    if args.seed is not None:
        doc["seed"] = args.seed
    cfg = parse_study_config(doc, full=args.full)
    table = run_power_study(cfg, workers=args.threads)
    out = Path(args.out)
    table.to_csv(out)
    man = RunManifest("power", resolved_study_config(cfg), cfg.seed,
                      inputs={str(args.study): file_digest(args.study)})
    man.derived_seeds.append({"replicate_seed": "SeedSequence(seed, spawn_key=(value_index, rep, 0|1))"})
    man.outputs[str(out)] = file_digest(out)
    man.finish()
    man.write(out.with_name(out.name + ".manifest.json"))
    failed = sum(table.failures.values())
    print(f"wrote {len(table.rows)} rows to {out}" + (f"; {failed} failed replicate(s)" if failed else ""))
    return 0


def cmd_toy(args) -> int:
    if not (0 < args.alpha < 1):
        raise ValidationError("--alpha must lie in (0, 1)")
    rows = power_curve(args.example, args.case, _parse_range(args.mu3_grid), args.alpha)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mu3", "power_unscaled", "power_scaled"])
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="markdev", description="Deviation tests for marked point patterns.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", help="random-labelling deviation test of one pattern")
    p.add_argument("--pattern", required=True, help="CSV with header x,y,mark")
    p.add_argument("--config", required=True, help="JSON test configuration (must contain 'window')")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", required=True, help="CSV report")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="simulate patterns from an alternative model")
    p.add_argument("--model", required=True)
    p.add_argument("--params", required=True, help="JSON model parameters")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--window", default=None, help="x0,x1,y0,y1")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("power", help="power study over a model's changing parameter")
    p.add_argument("--study", required=True, help="JSON study configuration")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--full", action="store_true", help="N=1000, s=999 over the whole parameter grid")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("toy", help="exact power curves of the toy examples")
    p.add_argument("--example", type=int, choices=(1, 2), required=True)
    p.add_argument("--case", choices=("a", "b"), required=True)
    p.add_argument("--mu3-grid", default="0:0.05:3")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_toy)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
