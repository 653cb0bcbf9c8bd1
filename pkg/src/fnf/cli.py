"""Command-line entry point: ``fnf {train,eval,ablate,gradcheck,selftest,synth}``.

Configuration comes from an optional ``key = value`` file; explicit flags win.
Failures print a single ``error: <Class>: <message>`` line to stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import diagnostics
from .checkpoint import load_checkpoint, save_checkpoint
from .data import SplitSpec, load_csv, synth_generate, write_csv
from .errors import ConfigError, FnfError
from .model import VARIANTS
from .train import AblationTable, TrainConfig, ablate, evaluate_report, parse_config_text, run_horizons


def _config(args) -> TrainConfig:
    values = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"{path}: config file not found")
        values.update(parse_config_text(path.read_text()))
    for key in ("seed", "variant"):
        if getattr(args, key, None) is not None:
            values[key] = getattr(args, key)
    if getattr(args, "horizon", None) is not None:
        values["H"] = args.horizon
        values["horizons"] = (args.horizon,)
    elif "horizons" in values and "H" not in values:
        values["H"] = values["horizons"][0]
    elif "H" in values and "horizons" not in values:
        values["horizons"] = (values["H"],)
    if getattr(args, "desk", False):
        return TrainConfig.desk(**values)
    return TrainConfig(**values)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_history(path: Path, history: list[dict]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["epoch", "train_loss", "val_loss"])
        w.writeheader()
        w.writerows(history)


def cmd_train(args) -> int:
    cfg = _config(args)
    table = load_csv(args.data)
    report, results = run_horizons(cfg, table)
    out = _out_dir(args)
    for h, res in results.items():
        save_checkpoint(res.model, out / f"model_{cfg.variant}_H{h}.ckpt",
                        extra={"best_epoch": res.best_epoch, "best_val": res.best_val})
        _write_history(out / f"history_{cfg.variant}_H{h}.csv", res.history)
    grid = AblationTable([report])
    (out / "report.csv").write_text(grid.to_csv())
    print(grid.to_text())
    return 0


def cmd_eval(args) -> int:
    table = load_csv(args.data)
    models = {}
    for path in args.checkpoint:
        m = load_checkpoint(path)
        models[m.hyper.H] = m
    spec = SplitSpec(args.train_frac, args.val_frac, args.test_frac)
    grid = AblationTable([evaluate_report(models, table, spec)])
    print(grid.to_text())
    if args.out:
        (_out_dir(args) / "eval.csv").write_text(grid.to_csv())
    return 0


def cmd_ablate(args) -> int:
    cfg = _config(args)
    table = load_csv(args.data)
    grid = ablate(cfg, table, args.variants or VARIANTS)
    print(grid.to_text())
    if args.out:
        out = _out_dir(args)
        (out / "ablation.csv").write_text(grid.to_csv())
        (out / "ablation.txt").write_text(grid.to_text() + "\n")
    return 0


def cmd_gradcheck(args) -> int:
    err = diagnostics.model_grad_check(args.variant or "P", D=args.dim, tokens=args.tokens,
                                       M=args.variables, seed=args.seed or 0)
    ok = err <= args.tol
    print(f"{'PASS' if ok else 'FAIL'} gradcheck variant={args.variant or 'P'} max_rel_err={err:.3e} tol={args.tol:g}")
    return 0 if ok else 1


def cmd_selftest(args) -> int:
    results = diagnostics.selftest()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


def cmd_synth(args) -> int:
    table = synth_generate(args.seed or 0, args.variables, args.length, args.coupling,
                           noise=args.noise, n_components=args.components, lag=args.lag)
    write_csv(table, args.out)
    print(json.dumps({"path": str(args.out), "rows": table.total, "variables": table.num_variables}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fnf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--config", help="key = value file with TrainConfig fields")
        p.add_argument("--seed", type=int)
        p.add_argument("--variant", choices=VARIANTS)
        p.add_argument("--horizon", type=int)
        p.add_argument("--desk", action="store_true", help="start from the small desk profile")
        if data:
            p.add_argument("--data", required=True, help="CSV with a timestamp column first")

    p = sub.add_parser("train", help="train one model per configured horizon")
    common(p)
    p.add_argument("--out", default="runs", help="directory for checkpoints and histories")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="test-split MSE/MAE of saved checkpoints")
    p.add_argument("--checkpoint", nargs="+", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.add_argument("--train-frac", type=float, default=0.7)
    p.add_argument("--val-frac", type=float, default=0.1)
    p.add_argument("--test-frac", type=float, default=0.2)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="train and compare variants I/U/S/P")
    common(p)
    p.add_argument("--variants", nargs="+", choices=VARIANTS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("gradcheck", help="finite-difference check of a small model")
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--seed", type=int)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--tokens", type=int, default=8)
    p.add_argument("--variables", type=int, default=3)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("selftest", help="quick internal consistency checks")
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("synth", help="write a synthetic multivariate CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--variables", type=int, default=4)
    p.add_argument("--length", type=int, default=2000)
    p.add_argument("--coupling", type=float, default=0.8)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--components", type=int, default=2)
    p.add_argument("--lag", type=int, default=8)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except FnfError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, TypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
