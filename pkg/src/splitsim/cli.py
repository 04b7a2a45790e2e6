"""Command-line experiment runner.

    splitsim train   --config exp.json --out runs/
    splitsim compare runs/a.json runs/b.json --out cmp/
    splitsim analyze --config exp.json --out analysis/ [--n-c 500] [--n-w 235225]
    splitsim sweep   --config sweep.json --out sweep/
    splitsim gen-data --config exp.json --out data/

Exit codes: 0 ok, 2 configuration error, 3 data/format error, 4 protocol
or internal invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .data import partition_iid, write_container
from .errors import ConfigError, DataError, MetricUndefinedError, SimError
from .metrics import METRIC_NAMES, linfit, relative_error
from .privacy import analyze, efficiency_report, format_table, report_json
from .protocols import compare_sweep, run_protocol, split_model

CI_Z = 1.96


def _log(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        writer.writerows(rows)


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n")


def _parse_seeds(text: str | None):
    if text is None:
        return None
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--seeds must be a comma-separated integer list, got {text!r}") from None


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    seeds = _parse_seeds(args.seeds) or cfg.seeds
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = cfg.build_model()
    cut = cfg.cut_index() if cfg.protocol in ("sl-sequential", "splitfed") else None
    if cut is not None:
        split_model(model, cut)
    train, test = cfg.load_data()
    finals: dict[str, list[float]] = {}
    for seed in seeds:
        tc = cfg.train_config(seed)
        part = partition_iid(train, cfg.clients, cfg.client_sizes, seed=seed)
        _log(args, f"[train] protocol={cfg.protocol} seed={seed} clients={cfg.clients} epochs={tc.epochs}")
        report = run_protocol(cfg.protocol, model, train, part, tc, test, cut)
        (out / f"report_seed{seed}.json").write_text(report.to_json())
        (out / f"epochs_seed{seed}.csv").write_text(report.to_csv())
        write_container(out / f"params_seed{seed}.slsim", report.params)
        for name in METRIC_NAMES:
            value = report.final_metric(name)
            if value is not None:
                finals.setdefault(name, []).append(value)
        if report.epochs:
            finals.setdefault("train_loss", []).append(report.epochs[-1].train_loss)
    rows = []
    for name in (*METRIC_NAMES, "train_loss"):
        vals = np.asarray(finals.get(name, []))
        if len(vals) == 0:
            continue
        sd = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        rows.append([name, repr(float(vals.mean())), repr(CI_Z * sd), len(vals)])
    _write_csv(out / "aggregate.csv", ["metric", "mean", "ci95", "seeds"], rows)
    _log(args, f"[train] wrote {len(seeds)} report(s) to {out}")
    return 0


def _series(report: dict, name: str) -> list:
    return [e["metrics"].get(name) if e.get("metrics") else None for e in report["epochs"]]


def cmd_compare(args) -> int:
    reports = []
    for p in (args.report_a, args.report_b):
        path = Path(p)
        if not path.is_file():
            raise ConfigError(f"report not found: {path}")
        try:
            reports.append(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid report JSON ({exc})") from None
    a, b = reports
    if len(a["epochs"]) != len(b["epochs"]):
        raise DataError(f"epoch mismatch: {len(a['epochs'])} vs {len(b['epochs'])}")
    result = {"a": a["protocol"], "b": b["protocol"], "epochs": len(a["epochs"]), "metrics": {}}
    delta_cols = {}
    for name in METRIC_NAMES:
        ya, yb = _series(a, name), _series(b, name)
        if any(v is None for v in ya + yb) or not ya:
            continue
        try:
            delta = [float(v) for v in relative_error(ya, yb)]
        except MetricUndefinedError:
            delta = [None if vb == 0 else abs(va - vb) / abs(vb) * 100.0 for va, vb in zip(ya, yb)]
        try:
            fit = linfit(yb, ya)
            fit_d = {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2}
        except DataError:
            fit_d = None
        result["metrics"][name] = {"delta_percent": delta, "fit": fit_d}
        delta_cols[name] = delta
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(out / "compare.json", result)
    names = list(delta_cols)
    rows = [[e + 1, *("" if delta_cols[n][e] is None else repr(delta_cols[n][e]) for n in names)]
            for e in range(result["epochs"])]
    _write_csv(out / "compare.csv", ["epoch", *(f"delta_{n}" for n in names)], rows)
    _log(args, f"[compare] {a['protocol']} vs {b['protocol']}: wrote {out}")
    return 0


def cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    model = cfg.build_model()
    split = split_model(model, cfg.cut_index())
    n_c = args.n_c if args.n_c is not None else cfg.analysis.get("n_c")
    if n_c is None:
        raise ConfigError("field 'analysis.n_c' (or --n-c) is required")
    n_w = args.n_w if args.n_w is not None else cfg.analysis.get("n_w")
    privacy = analyze(split, int(n_c), None if n_w is None else int(n_w))
    eff = efficiency_report(split)
    name = cfg.analysis.get("name", cfg.model.get("preset", "custom"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "analysis.json").write_text(report_json(eff, privacy))
    table = format_table(name, eff, privacy)
    (out / "analysis.txt").write_text(table)
    if not args.quiet:
        print(table, end="")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    grid = cfg.sweep
    try:
        clients, per_client = list(grid["clients"]), list(grid["samples_per_client"])
    except KeyError as exc:
        raise ConfigError(f"field 'sweep.{exc.args[0]}' is required") from None
    seeds = _parse_seeds(args.seeds) or cfg.seeds
    model = cfg.build_model()
    pool, test = cfg.load_data()
    _log(args, f"[sweep] {len(clients)}x{len(per_client)} grid, seed {seeds[0]}")
    mats = compare_sweep(model, pool, clients, per_client, cfg.train_config(seeds[0]), test,
                         cfg.cut_index(), grid.get("metric", "auprc"),
                         grid.get("fl_protocol", "fedavg"), grid.get("sl_protocol", "splitfed"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = ["clients", *(str(m) for m in per_client)]
    for key in ("fl", "sl", "diff"):
        rows = [[k, *(repr(float(v)) for v in mats[key][r])] for r, k in enumerate(clients)]
        _write_csv(out / f"{key}_matrix.csv", header, rows)
    return 0


def cmd_gen_data(args) -> int:
    cfg = load_config(args.config)
    train, test = cfg.load_data()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_container(out / "train.slsim", train)
    if test is not None:
        write_container(out / "test.slsim", test)
    _log(args, f"[gen-data] train {len(train)} samples, label counts {train.label_counts()}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splitsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="experiment JSON")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seeds", default=None, help="comma-separated seed override")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("train", help="train under one protocol for every seed")
    common(p)
    p.set_defaults(func=cmd_train)
    p = sub.add_parser("compare", help="per-epoch relative error and regression of two reports")
    p.add_argument("report_a")
    p.add_argument("report_b")
    common(p, config=False)
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("analyze", help="privacy budget and client efficiency")
    common(p)
    p.add_argument("--n-c", dest="n_c", type=int, default=None, help="client sample count")
    p.add_argument("--n-w", dest="n_w", type=int, default=None, help="override total FL parameter count")
    p.set_defaults(func=cmd_analyze)
    p = sub.add_parser("sweep", help="client-count x samples-per-client grid")
    common(p)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("gen-data", help="write synthetic train/test containers")
    common(p)
    p.set_defaults(func=cmd_gen_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (TypeError, ValueError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
