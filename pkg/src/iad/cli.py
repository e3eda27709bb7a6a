"""Batch entry point: train, sweep and report subcommands.

Every run directory is self-describing: the fully resolved config, the
per-round history CSV, a JSON evaluation report and the selected
checkpoint. Re-running the same config and seed reproduces history.csv
and report.json byte for byte.

Exit codes: 0 success, 1 configuration error, 2 runtime abort.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .data import ScenarioSpec, build_scenario, load_csv, scenario_manifest, \
    standardize, synth_two_gaussian
from .detectors import make_detector, save_checkpoint
from .exceptions import ConfigurationError, DatasetError, TrainingAbortError
from .iterate import IadConfig, run_ensemble_iad, run_iad
from .metrics import eval_report
from .runconfig import config_hash, load_config_file, resolve_config

WORKERS_ENV = "IAD_MAX_WORKERS"

HISTORY_COLUMNS = [
    "t",
    "h",
    "score_min",
    "score_med",
    "score_max",
    "weight_mean_normal",
    "weight_mean_anomaly",
    "auc",
]


# ---------------------------------------------------------------------------
# building blocks

def build_dataset(cfg: dict, seed: int):
    ds_cfg = cfg["dataset"]
    if ds_cfg["path"] is not None:
        ds = load_csv(
            ds_cfg["path"],
            label_column=ds_cfg["label_column"],
            name=ds_cfg["name"],
        )
    else:
        syn = ds_cfg["synthetic"]
        ds = synth_two_gaussian(
            n=syn["n"],
            d=syn["d"],
            contamination=syn["contamination"],
            separation=syn["separation"],
            seed=seed,
        )
    if ds_cfg["scenario_contamination"] is not None:
        ds = build_scenario(
            ds, ScenarioSpec(ds_cfg["scenario_contamination"], seed=seed)
        )
    if ds_cfg["standardize"]:
        ds, _ = standardize(ds)
    return ds


def build_detector(cfg: dict, seed: int):
    det = cfg["detector"]
    common = {
        "lr": det["lr"],
        "batch_size": det["batch_size"],
        "weight_decay": det["weight_decay"],
        "seed": seed,
    }
    hidden = tuple(det["hidden"]) if det["hidden"] else None
    name = det["name"]
    if name == "svdd-sb":
        return make_detector(name, hidden=hidden, nu=det["nu"], **common)
    if name == "svdd-oc":
        return make_detector(name, hidden=hidden, **common)
    if name == "ae":
        return make_detector(name, hidden=hidden, **common)
    return make_detector(
        name,
        n_blocks=det["n_blocks"],
        hidden_units=det["hidden_units"],
        score_space=det["score_space"],
        **common,
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_history_csv(path: Path, history, labels=None) -> None:
    from .metrics import auc as auc_fn

    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_COLUMNS)
        for rec in history:
            w = rec.weights_used
            if labels is not None:
                y = np.asarray(labels)
                mean_norm = float(w[y == 0].mean()) if (y == 0).any() else None
                mean_anom = float(w[y == 1].mean()) if (y == 1).any() else None
                round_auc = auc_fn(rec.scores, y) if 0 < y.sum() < y.size else None
            else:
                mean_norm = mean_anom = round_auc = None
            writer.writerow(
                [
                    _fmt(rec.t),
                    _fmt(rec.h),
                    _fmt(np.min(rec.scores)),
                    _fmt(np.median(rec.scores)),
                    _fmt(np.max(rec.scores)),
                    _fmt(mean_norm),
                    _fmt(mean_anom),
                    _fmt(round_auc),
                ]
            )


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def run_one_seed(cfg: dict, seed: int, out_dir: Path) -> dict:
    """Train one seed, write its artifacts, return the report payload."""
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = build_dataset(cfg, seed)
    iad_config = IadConfig(**cfg["iad"])
    members = cfg["ensemble"]["members"]
    if members:
        result = run_ensemble_iad(
            dataset.X,
            lambda: build_detector(cfg, seed),
            n_members=members,
            subsample=cfg["ensemble"]["subsample"],
            config=iad_config,
            seed=seed,
        )
        for j, member in enumerate(result.scorer.members):
            save_checkpoint(
                out_dir / f"member_{j}.npz",
                member,
                extra_meta={"seed": seed, "member": j,
                            "selected_round": result.selected_round},
            )
    else:
        detector = build_detector(cfg, seed)
        result = run_iad(dataset.X, detector, config=iad_config, seed=seed)
        save_checkpoint(
            out_dir / "checkpoint.npz",
            detector,
            extra_meta={"seed": seed, "selected_round": result.selected_round,
                        "config_hash": config_hash(cfg)},
        )
    labels = dataset.labels
    if labels is not None and not 0 < labels.sum() < labels.size:
        labels = None  # single-class labels: AUC-based evaluation undefined
    report = eval_report(
        result.history,
        result.selected_round,
        criterion=cfg["iad"]["criterion"],
        labels=labels,
    )
    report["seed"] = seed
    report["config_hash"] = config_hash(cfg)
    report["version"] = __version__
    report["dataset"] = scenario_manifest(dataset)
    report["aborted"] = len(result.history) < cfg["iad"]["rounds"] + 1
    if members:
        report["ensemble_scales"] = [float(s) for s in result.scorer.scales]
    write_history_csv(out_dir / "history.csv", result.history, dataset.labels)
    write_json(out_dir / "report.json", report)
    return report


def _seed_job(args):
    cfg, seed, out_dir = args
    return seed, run_one_seed(cfg, seed, Path(out_dir))


def _aggregate(reports: list[dict]) -> dict:
    agg: dict = {"n_seeds": len(reports), "seeds": [r["seed"] for r in reports]}
    agg["aborted_seeds"] = [r["seed"] for r in reports if r.get("aborted")]
    if all(r.get("auc_per_round") is not None for r in reports):
        for key in ("auc_base", "auc_selected", "auc_best"):
            values = np.array([r[key] for r in reports])
            ddof = 1 if values.size > 1 else 0
            agg[f"{key}_mean"] = float(values.mean())
            agg[f"{key}_std"] = float(values.std(ddof=ddof))
        pgrs = [r["pgr"] for r in reports if r.get("pgr") is not None]
        agg["pgr_mean"] = float(np.mean(pgrs)) if pgrs else None
        agg["pgr_defined_seeds"] = len(pgrs)
    agg["selected_rounds"] = [r["selected_round"] for r in reports]
    return agg


# ---------------------------------------------------------------------------
# subcommands

def cmd_train(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "config.json", cfg)
    jobs = [(cfg, seed, str(out / f"seed_{seed}")) for seed in cfg["seeds"]]
    workers = min(len(jobs), max(1, int(os.environ.get(WORKERS_ENV, "1"))))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_seed_job, jobs))
        reports = [results[seed] for seed in cfg["seeds"]]
    else:
        reports = [_seed_job(job)[1] for job in jobs]
    aggregate = _aggregate(reports)
    aggregate["config_hash"] = config_hash(cfg)
    aggregate["dataset"] = reports[0]["dataset"]["name"]
    write_json(out / "aggregate.json", aggregate)
    for r in reports:
        line = f"seed {r['seed']}: selected round {r['selected_round']}"
        if r.get("auc_selected") is not None:
            line += (
                f", base AUC {r['auc_base']:.4f}"
                f" -> selected AUC {r['auc_selected']:.4f}"
                f" (best {r['auc_best']:.4f})"
            )
        print(line)
    if aggregate.get("auc_selected_mean") is not None:
        print(
            f"mean over {aggregate['n_seeds']} seeds: "
            f"base {aggregate['auc_base_mean']:.4f} -> "
            f"selected {aggregate['auc_selected_mean']:.4f} "
            f"(best {aggregate['auc_best_mean']:.4f})"
        )
    return 0


SWEEP_AXES = ("contamination", "tau", "criterion")


def _apply_axis(cfg: dict, axis: str, value):
    cfg = copy.deepcopy(cfg)
    if axis == "contamination":
        v = float(value)
        if cfg["dataset"]["path"] is not None:
            cfg["dataset"]["scenario_contamination"] = v
        else:
            cfg["dataset"]["synthetic"]["contamination"] = v
    elif axis == "tau":
        cfg["iad"]["inv_tau"] = float(value)
    elif axis == "criterion":
        cfg["iad"]["criterion"] = str(value)
    else:
        raise ConfigurationError(f"unknown sweep axis {axis!r}")
    return cfg


def cmd_sweep(cfg: dict, axis: str, values: list[str]) -> int:
    if axis not in SWEEP_AXES:
        raise ConfigurationError(
            f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}"
        )
    if not values:
        raise ConfigurationError("sweep needs at least one --values entry")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for value in values:
        sub = _apply_axis(cfg, axis, value)
        sub["out"] = str(out / f"{axis}_{value}")
        cmd_train(sub)
        with (Path(sub["out"]) / "aggregate.json").open() as fh:
            agg = json.load(fh)
        rows.append((value, agg))
    with (out / "sweep.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["axis", "value", "auc_base_mean", "auc_base_std",
             "auc_selected_mean", "auc_selected_std", "auc_best_mean",
             "auc_best_std", "pgr_mean", "n_seeds"]
        )
        for value, agg in rows:
            writer.writerow(
                [
                    axis,
                    value,
                    _fmt(agg.get("auc_base_mean")),
                    _fmt(agg.get("auc_base_std")),
                    _fmt(agg.get("auc_selected_mean")),
                    _fmt(agg.get("auc_selected_std")),
                    _fmt(agg.get("auc_best_mean")),
                    _fmt(agg.get("auc_best_std")),
                    _fmt(agg.get("pgr_mean")),
                    agg["n_seeds"],
                ]
            )
    print(f"sweep CSV written to {out / 'sweep.csv'}")
    return 0


def cmd_report(run_dirs: list[str], csv_path: str | None = None) -> int:
    rows = []
    problems = []
    for run_dir in run_dirs:
        path = Path(run_dir)
        agg_file = path / "aggregate.json"
        if not agg_file.exists():
            problems.append(f"{run_dir}: no aggregate.json")
            continue
        try:
            with agg_file.open() as fh:
                agg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            problems.append(f"{run_dir}: {exc}")
            continue
        if agg.get("auc_base_mean") is None:
            problems.append(f"{run_dir}: no labeled evaluation available")
            continue
        rows.append(
            {
                "dataset": agg.get("dataset", path.name),
                "run": str(path),
                "auc_base_mean": agg["auc_base_mean"],
                "auc_base_std": agg["auc_base_std"],
                "auc_selected_mean": agg["auc_selected_mean"],
                "auc_selected_std": agg["auc_selected_std"],
                "auc_best_mean": agg["auc_best_mean"],
                "auc_best_std": agg["auc_best_std"],
                "n_seeds": agg["n_seeds"],
            }
        )
    header = f"{'dataset':<24} {'base':>14} {'selected':>14} {'best':>14} {'seeds':>6}"
    print(header)
    print("-" * len(header))
    for r in rows:
        print(
            f"{r['dataset']:<24} "
            f"{100 * r['auc_base_mean']:6.1f} ± {100 * r['auc_base_std']:4.1f} "
            f"{100 * r['auc_selected_mean']:6.1f} ± {100 * r['auc_selected_std']:4.1f} "
            f"{100 * r['auc_best_mean']:6.1f} ± {100 * r['auc_best_std']:4.1f} "
            f"{r['n_seeds']:>6}"
        )
    if csv_path:
        with Path(csv_path).open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else [])
            if rows:
                writer.writeheader()
                writer.writerows(rows)
    for problem in problems:
        print(f"skipped {problem}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors: exit 1, not argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common_flags(parser):
    parser.add_argument("--config", type=str, help="JSON config file")
    parser.add_argument("--seed", type=int, action="append",
                        help="run seed (repeatable)")
    parser.add_argument("--out", type=str, help="output directory")
    parser.add_argument("--detector", choices=["svdd-oc", "svdd-sb", "ae", "maf"])
    parser.add_argument("--rounds", type=int, help="reweighted rounds T")
    parser.add_argument("--epochs", type=int, help="epochs per round E")
    parser.add_argument("--inv-tau", type=float, help="reciprocal temperature")
    parser.add_argument("--criterion", type=str,
                        help="rank-cross | fixed-K | last | otsu")
    parser.add_argument("--ensemble", type=int, help="ensemble member count")
    parser.add_argument("--subsample", type=float,
                        help="ensemble sub-dataset fraction")
    parser.add_argument("--data", type=str, help="dataset CSV path")
    parser.add_argument("--label-column", type=str,
                        help="label column name or index")


def _overrides_from_args(args) -> dict:
    overrides: dict = {}

    def put(path, value):
        node = overrides
        for key in path[:-1]:
            node = node.setdefault(key, {})
        node[path[-1]] = value

    if args.seed:
        put(["seeds"], args.seed)
    if args.out:
        put(["out"], args.out)
    if args.detector:
        put(["detector", "name"], args.detector)
    if args.rounds is not None:
        put(["iad", "rounds"], args.rounds)
    if args.epochs is not None:
        put(["iad", "epochs"], args.epochs)
    if args.inv_tau is not None:
        put(["iad", "inv_tau"], args.inv_tau)
    if args.criterion:
        put(["iad", "criterion"], args.criterion)
    if args.ensemble is not None:
        put(["ensemble", "members"], args.ensemble)
    if args.subsample is not None:
        put(["ensemble", "subsample"], args.subsample)
    if args.data:
        put(["dataset", "path"], args.data)
    if args.label_column is not None:
        col = args.label_column
        put(["dataset", "label_column"], int(col) if _is_int(col) else col)
    return overrides


def _is_int(text: str) -> bool:
    try:
        int(text)
        return True
    except ValueError:
        return False


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="iad", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run one experiment")
    _add_common_flags(train)

    sweep = sub.add_parser("sweep", help="run a one-axis parameter sweep")
    _add_common_flags(sweep)
    sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sweep.add_argument("--values", required=True, nargs="+")

    report = sub.add_parser("report", help="merge finished run directories")
    report.add_argument("dirs", nargs="+", help="run directories")
    report.add_argument("--csv", type=str, help="also write a merged CSV here")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors already printed by argparse
        return int(exc.code or 0)
    try:
        if args.command == "report":
            return cmd_report(args.dirs, args.csv)
        file_cfg = load_config_file(args.config) if args.config else None
        cfg = resolve_config(file_cfg, _overrides_from_args(args))
        if args.command == "train":
            return cmd_train(cfg)
        return cmd_sweep(cfg, args.axis, args.values)
    except (ConfigurationError, DatasetError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except TrainingAbortError as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
