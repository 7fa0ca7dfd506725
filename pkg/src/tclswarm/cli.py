"""``tclswarm`` command line.

Exit codes: 0 success, 2 configuration error, 3 runtime error,
4 refusal to overwrite an existing output.
"""

import argparse
import json
import logging
import os
from pathlib import Path
import sys
import time

from . import formats
from .config import ExperimentConfig, load_config, preset_config
from .delay import build_delay_table, load_follow, lookup_alpha
from .ensemble import sample_population, simulate
from .errors import ConfigError, ResolutionError, TclError
from .learned import (evaluate, fit_delay_model, generate_dataset, load_model, predict_alpha,
                      save_model, split_dataset)
from .metrics import (band_percent, dominant_frequency, relative_error_percent, ripple, rms,
                      rmse_percent)

log = logging.getLogger("tclswarm")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_OVERWRITE = 0, 2, 3, 4


class RefuseOverwrite(Exception):
    pass


def _threads(args):
    raw = args.threads if args.threads is not None else os.environ.get("TCLSWARM_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"thread count must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"thread count must be >= 1, got {n}")
    return n


def _config(args):
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = preset_config(args.preset)
    else:
        cfg = ExperimentConfig()
    return cfg.with_seed(args.seed) if args.seed is not None else cfg


def _claim(path, force):
    """Refuse to clobber ``path`` unless forced; create its parent directory."""
    path = Path(path)
    if path.exists() and not force:
        raise RefuseOverwrite(f"{path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _manifest_path(out):
    return Path(f"{out}.manifest.json")


def _finish(args, cfg, outputs, started, extra=None):
    manifest = _claim(_manifest_path(outputs[0]), force=True)  # checked in _require_out
    formats.write_manifest(manifest, args.command, cfg.snapshot(), cfg.population.seed,
                           outputs, started, extra)


def _require_out(args):
    if not args.out:
        raise ConfigError(f"{args.command} needs --out")
    _claim(_manifest_path(args.out), args.force)
    return _claim(args.out, args.force)


# --- subcommands -------------------------------------------------------------

def cmd_simulate(args, cfg, started):
    out = _require_out(args)
    run = simulate(cfg.population, cfg.run.duration, cfg.run.dt,
                   frequency_stride=cfg.run.frequency_stride)
    formats.write_timeseries(out, run.time, run.p_agg, run.f_mean)
    tail = run.tail()
    summary = {"mean_kw": float(tail.mean()), "rms_kw": rms(tail),
               "band_pct": band_percent(tail), "clamp_events": run.clamp_events,
               "comfort_ok": run.comfort_ok,
               "regimes": [list(r) for r in run.regimes]}
    _finish(args, cfg, [out], started, {"summary": summary})
    print(json.dumps(summary, sort_keys=True))


def cmd_sweep(args, cfg, started):
    out = _require_out(args)
    grid = args.grid or cfg.sweep.grid
    table = build_delay_table(cfg.population, grid, args.method or cfg.sweep.method,
                              cfg.sweep.dt, _threads(args))
    formats.write_delay_table(out, table)
    _finish(args, cfg, [out], started, {"table": table.provenance})


def _cached_table(args, cfg):
    if args.table:
        table = formats.read_delay_table(args.table)
        if table.n != cfg.population.n:
            raise ConfigError(f"{args.table}: table is for n={table.n}, config has "
                              f"n={cfg.population.n}")
        return table
    pop = cfg.population
    cache = Path(args.cache_dir or Path(args.out).parent / ".tclswarm-cache")
    key = f"delay-n{pop.n}-seed{pop.seed}-{pop.digest()}-{cfg.sweep.method}-g{cfg.sweep.grid}.csv"
    path = cache / key
    if path.exists():
        log.info("using cached delay table %s", path)
        return formats.read_delay_table(path)
    table = build_delay_table(pop, cfg.sweep.grid, cfg.sweep.method, cfg.sweep.dt,
                              _threads(args))
    cache.mkdir(parents=True, exist_ok=True)
    formats.write_delay_table(path, table)
    return table


def cmd_load_follow(args, cfg, started):
    if not args.schedule:
        raise ConfigError("load-follow needs --schedule")
    schedule = formats.read_schedule(args.schedule)
    out = _require_out(args)
    table = _cached_table(args, cfg)
    run = load_follow(cfg.population, table, schedule, cfg.run.duration, cfg.run.dt)
    formats.write_timeseries(out, run.time, run.p_agg, run.f_mean)
    segments = []
    for start, target in schedule.segments:
        alpha, clamped = lookup_alpha(table, target)
        segments.append({"start_s": start, "target_pct": target, "alpha_rad": alpha,
                         "clamped": clamped})
    _finish(args, cfg, [out], started, {"segments": segments})


def cmd_dataset(args, cfg, started):
    out = _require_out(args)
    d = cfg.dataset
    ds = generate_dataset((d.n_min, d.n_max), d.grid, cfg.population.seed,
                          args.stride or d.stride, d.power_range, d.duty_range)
    formats.write_dataset(out, ds)
    _finish(args, cfg, [out], started, {"rows": len(ds)})
    print(f"{len(ds)} rows")


def cmd_train(args, cfg, started):
    out = _require_out(args)
    seed = cfg.population.seed
    if args.dataset:
        ds = formats.read_dataset(args.dataset)
    else:
        d = cfg.dataset
        ds = generate_dataset((d.n_min, d.n_max), d.grid, seed, args.stride or d.stride,
                              d.power_range, d.duty_range)
    t = cfg.train
    train_set, test_set = split_dataset(ds, t.train_fraction, seed)
    model, hist = fit_delay_model(
        train_set, hidden_activation=t.hidden_activation, n_init=t.n_init, seed=seed,
        validation_fraction=t.validation_fraction, epochs=t.epochs, batch_size=t.batch_size,
        learning_rate=t.learning_rate, final_learning_rate=t.final_learning_rate)
    save_model(model, out)
    report = {**evaluate(model, test_set), "train_rows": len(train_set),
              "test_rows": len(test_set), "best_epoch": hist.best_epoch,
              "loss_history": hist.loss}
    metrics_path = _claim(f"{out}.metrics.json", args.force)
    with open(metrics_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _finish(args, cfg, [out, metrics_path], started)
    print(json.dumps({k: report[k] for k in ("rmse_pct", "mse_pct", "mae_deg")}, sort_keys=True))


def cmd_predict(args, cfg, started):
    if not args.model or args.n is None or args.pnorm is None:
        raise ConfigError("predict needs --model, --n and --pnorm")
    if args.n < 1:
        raise ConfigError(f"--n must be >= 1, got {args.n}")
    model = load_model(args.model)
    alpha = float(predict_alpha(model, [args.n], [args.pnorm])[0])
    print(repr(alpha))


def cmd_metrics(args, cfg, started):
    if not args.input:
        raise ConfigError("metrics needs --input")
    series = formats.read_timeseries(args.input)
    t, p = series["t_s"], series["p_agg_kw"]
    if len(t) < 2:
        raise ConfigError(f"{args.input}: need at least two samples")
    dt = float(t[1] - t[0])
    v = p[t >= args.start] if args.start else p
    if len(v) < 2:
        raise ConfigError(f"no samples after --start {args.start}")
    ref = float(v.mean()) if args.reference is None else args.reference
    if args.p_base is not None:
        base = args.p_base
    elif args.config or args.preset:
        base = sample_population(cfg.population).max_power
    else:
        base = ref
        log.warning("no --p-base or population config; normalising RMSE by the reference")
    report = {"mean_kw": float(v.mean()), "rms_kw": rms(v), "ripple_kw": ripple(v),
              "band_pct": band_percent(v), "rmse_pct": rmse_percent(ref, v, base, dt),
              "relative_error_pct": relative_error_percent(ref, v), "reference_kw": ref,
              "p_base_kw": base}
    try:
        report["dominant_frequency_hz"] = dominant_frequency(v, dt)
    except ResolutionError:
        report["dominant_frequency_hz"] = None
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        out = _claim(args.out, args.force)
        out.write_text(text + "\n", encoding="utf-8")
    print(text)


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "load-follow": cmd_load_follow,
            "dataset": cmd_dataset, "train": cmd_train, "predict": cmd_predict,
            "metrics": cmd_metrics}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file")
    common.add_argument("--preset", help="built-in config instead of --config")
    common.add_argument("--out", help="output path; a .manifest.json is written beside it")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--threads", help="worker cap; falls back to $TCLSWARM_THREADS")
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="tclswarm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="aggregate-power time series")
    p = sub.add_parser("sweep", parents=[common], help="delay table over the alpha grid")
    p.add_argument("--grid", type=int)
    p.add_argument("--method", choices=("simulate", "analytic"))
    p = sub.add_parser("load-follow", parents=[common], help="track a reduction schedule")
    p.add_argument("--schedule", help="CSV with columns start_s,p_norm_pct")
    p.add_argument("--table", help="delay table CSV (built and cached when omitted)")
    p.add_argument("--cache-dir")
    p = sub.add_parser("dataset", parents=[common], help="generate the regressor dataset")
    p.add_argument("--stride", type=int)
    p = sub.add_parser("train", parents=[common], help="train and evaluate the regressor")
    p.add_argument("--dataset", help="dataset CSV (generated when omitted)")
    p.add_argument("--stride", type=int)
    p = sub.add_parser("predict", parents=[common], help="phase spacing for (n, p_norm)")
    p.add_argument("--model")
    p.add_argument("--n", type=int)
    p.add_argument("--pnorm", type=float)
    p = sub.add_parser("metrics", parents=[common], help="score a time-series CSV")
    p.add_argument("--input")
    p.add_argument("--start", type=float, default=0.0, help="ignore samples before this time")
    p.add_argument("--reference", type=float, help="reference power (default: window mean)")
    p.add_argument("--p-base", type=float,
                   help="RMSE normaliser in kW (default: the configured population's "
                        "maximum aggregate, else the reference)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO if args.verbose else logging.WARNING,
                        format="tclswarm: %(levelname)s: %(message)s")
    started = time.time()
    try:
        _threads(args)
        cfg = _config(args)
        COMMANDS[args.command](args, cfg, started)
    except RefuseOverwrite as exc:
        print(f"tclswarm: error: {exc}", file=sys.stderr)
        return EXIT_OVERWRITE
    except ConfigError as exc:
        print(f"tclswarm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TclError, OSError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"tclswarm: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
