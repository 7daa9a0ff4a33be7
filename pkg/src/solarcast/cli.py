"""Command line entry point: ``solarcast {ingest,synth,train,predict,bench}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import bench
from .errors import DataError, NumericalError, SolarcastError
from .expansion import ExpansionConfig
from .metrics import evaluate
from .models import (
    DEFAULT_EPOCHS,
    DEFAULT_HIDDEN,
    DEFAULT_LR,
    eelm_train,
    elm_train,
    flnn_train,
    predict,
    state_from_dict,
    state_to_dict,
)
from .series import (
    Resolution,
    ScaleParams,
    Season,
    apply_scale,
    concat,
    generate_synthetic,
    make_patterns,
    parse_csv,
    season_series,
    split_patterns,
    write_csv,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("solarcast")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline=""), True


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    ts = parse_csv(args.data, args.resolution, capacity_mw=args.capacity)
    blocks = ts.blocks()
    per_season = {}
    for s in Season:
        try:
            per_season[s.value] = len(season_series(ts, s, ts.resolution))
        except DataError:
            per_season[s.value] = 0
    summary = {
        "path": str(args.data),
        "resolution": ts.resolution.label,
        "samples": len(ts),
        "first": str(ts.timestamps[0]),
        "last": str(ts.timestamps[-1]),
        "min_mw": float(ts.values.min()),
        "max_mw": float(ts.values.max()),
        "mean_mw": float(ts.values.mean()),
        "contiguous_blocks": len(blocks),
        "longest_block": max(b - a for a, b in blocks),
        "season_samples": per_season,
    }
    if args.format == "json":
        print(json.dumps(summary, indent=2))
    else:
        for k, v in summary.items():
            print(f"{k:18s} {v}")
    return EXIT_OK


def cmd_synth(args) -> int:
    seasons = list(Season) if args.season.lower() == "all" else [Season.parse(args.season)]
    ts = concat(generate_synthetic(args.days, s, args.seed, clouds=not args.clear_sky) for s in seasons)
    if args.out in (None, "-"):
        raise UsageError("synth needs --out PATH")
    write_csv(ts, args.out)
    print(f"wrote {len(ts)} samples to {args.out}", file=sys.stderr)
    return EXIT_OK


def _train_outcome(args, train):
    model = bench._model_name(args.model)
    if model == "FLNN":
        return flnn_train(train, ExpansionConfig(args.order_p, True, train.n), args.lr, args.epochs, args.seed)
    if model == "ELM":
        return elm_train(train, args.hidden, args.seed, args.ridge)
    return eelm_train(train, ExpansionConfig(args.order_p, True, train.n), args.ridge)


def cmd_train(args) -> int:
    raw = parse_csv(args.data, "5min")
    season, horizon = Season.parse(args.season), Resolution.parse(args.horizon)
    hp = bench.Hyperparams(n=args.n, order_p=args.order_p, train_fraction=args.train_fraction,
                           ridge_lambda=args.ridge, seed=args.seed, scale_on=args.scale_on)
    prep = bench.prepare(raw, season, horizon, hp)
    out = _train_outcome(args, prep.train)
    test_report = evaluate(prep.test.targets, predict(out.state, prep.test.inputs), out.training_time)
    doc = {
        "state": state_to_dict(out.state),
        "scale": prep.scale.to_dict(),
        "season": season.value,
        "horizon": horizon.label,
        "n": hp.n,
        "m": hp.m,
        "train_fraction": hp.train_fraction,
        "training_time": out.training_time,
        "training_rmse": out.training_rmse,
        "test_report": test_report.to_dict(),
    }
    fh, close = _open_out(args.out)
    try:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    finally:
        if close:
            fh.close()
    print(
        f"{doc['state']['model']} {season.value} {horizon.label}: "
        f"train RMSE {out.training_rmse:.4f}, test RMSE {test_report.rmse:.4f}, TT {out.training_time:.3f}s",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_predict(args) -> int:
    doc = json.loads(Path(args.state).read_text(encoding="utf-8"))
    try:
        state = state_from_dict(doc["state"])
        sp = ScaleParams.from_dict(doc["scale"])
        season, horizon = Season.parse(doc["season"]), Resolution.parse(doc["horizon"])
        n, m = int(doc["n"]), int(doc.get("m", 1))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{args.state} is not a saved model state: {exc}") from None
    raw = parse_csv(args.data, "5min")
    ps = make_patterns(apply_scale(season_series(raw, season, horizon), sp), n, m)
    if not args.all:
        _, ps = split_patterns(ps, float(doc.get("train_fraction", 0.8)))
    O = predict(state, ps.inputs)
    if args.out in (None, "-"):
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(bench.trace_header(ps.m))
        w.writerows(bench.trace_rows(ps.target_times, ps.targets, O))
    else:
        bench.write_trace(args.out, ps.target_times, ps.targets, O)
    r = evaluate(ps.targets, O)
    print(f"{ps.S} patterns: RMSE {r.rmse:.4f} MAE {r.mae:.4f} SMAPE {r.smape:.2f} CC2 {r.cc2:.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = bench.ExperimentSpec.load(args.spec) if args.spec else bench.ExperimentSpec()
    hp = spec.hyperparams
    if args.seed is not None:
        hp = replace(hp, seed=args.seed)
        if isinstance(spec.data_source, bench.SyntheticSource):
            spec = replace(spec, data_source=replace(spec.data_source, seed=args.seed))
    if args.elm_trials is not None:
        hp = replace(hp, elm_trials=args.elm_trials)
    if args.repeat is not None:
        hp = replace(hp, repeat=args.repeat)
    spec = replace(spec, hyperparams=hp)
    if args.out is not None:
        spec = replace(spec, output_dir=Path(args.out))
    rt = bench.run_experiment(spec, write=True, fmt=args.format)
    sys.stdout.write(bench.emit_table(rt, args.format))
    if spec.output_dir is not None:
        print(f"wrote {len(rt)} cells to {spec.output_dir}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="solarcast", description="FLNN / ELM / EELM short-term solar power forecasting")
    p.add_argument("-v", "--verbose", action="store_true", help="log pipeline progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("ingest", help="validate and summarise a power CSV")
    q.add_argument("data", type=Path)
    q.add_argument("--resolution", default="5min", choices=["5min", "1h"])
    q.add_argument("--capacity", type=float, default=25.0, help="plant capacity in MW (row upper bound)")
    q.add_argument("--format", default="text", choices=["text", "json"])
    q.set_defaults(func=cmd_ingest)

    q = sub.add_parser("synth", help="write a synthetic 5-minute dataset")
    q.add_argument("--days", type=int, default=120, help="days per season")
    q.add_argument("--season", default="all", help="Summer, Rainy, Winter or all")
    q.add_argument("--seed", type=int, default=7)
    q.add_argument("--clear-sky", action="store_true", help="disable cloud attenuation")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_synth)

    q = sub.add_parser("train", help="fit one model and save its state as JSON")
    q.add_argument("--data", type=Path, required=True)
    q.add_argument("--model", required=True, choices=list(bench.MODELS) + [m.lower() for m in bench.MODELS])
    q.add_argument("--season", required=True)
    q.add_argument("--horizon", default="5min", choices=["5min", "1h"])
    q.add_argument("--seed", type=int, default=7)
    q.add_argument("--n", type=int, default=5, help="window length")
    q.add_argument("--order-p", type=int, default=1)
    q.add_argument("--hidden", type=int, default=DEFAULT_HIDDEN, help="ELM hidden neurons")
    q.add_argument("--lr", type=float, default=DEFAULT_LR)
    q.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS)
    q.add_argument("--ridge", type=float, default=0.0)
    q.add_argument("--train-fraction", type=float, default=0.8)
    q.add_argument("--scale-on", default="train", choices=["train", "global"])
    q.add_argument("--out", default="-")
    q.set_defaults(func=cmd_train)

    q = sub.add_parser("predict", help="load a saved state and emit a prediction trace")
    q.add_argument("--state", type=Path, required=True)
    q.add_argument("--data", type=Path, required=True)
    q.add_argument("--all", action="store_true", help="predict every pattern, not just the test split")
    q.add_argument("--out", default="-")
    q.set_defaults(func=cmd_predict)

    q = sub.add_parser("bench", help="run the season x horizon x model matrix")
    q.add_argument("--spec", type=Path, help="TOML or JSON experiment spec (default: synthetic, seed 7)")
    q.add_argument("--out", help="output directory for tables and traces")
    q.add_argument("--format", default="markdown", choices=["markdown", "md", "csv", "json"])
    q.add_argument("--seed", type=int)
    q.add_argument("--elm-trials", type=int)
    q.add_argument("--repeat", type=int, help="median training time over k fits")
    q.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"solarcast: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"solarcast: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"solarcast: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SolarcastError, ValueError) as exc:
        print(f"solarcast: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
