"""Run configuration: defaults, JSON files, flag overrides, resolution.

A run is fully described by one nested dict. Resolution deep-merges a
config file over the built-in defaults and command-line flags over that;
the resolved copy is written next to the outputs so every run directory
is self-describing.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

from .exceptions import ConfigurationError

DEFAULTS: dict = {
    "dataset": {
        "path": None,
        "label_column": None,
        "name": None,
        "synthetic": {
            "n": 2000,
            "d": 10,
            "contamination": 0.1,
            "separation": 3.0,
        },
        "scenario_contamination": None,
        "standardize": True,
    },
    "detector": {
        "name": "ae",
        "hidden": None,
        "n_blocks": 5,
        "hidden_units": 32,
        "score_space": "log",
        "nu": 0.1,
        "lr": 1e-3,
        "batch_size": 128,
        "weight_decay": 1e-6,
    },
    "iad": {
        "rounds": 15,
        "epochs": 10,
        "inv_tau": 4.0,
        "partition": 0.5,
        "warm_start": True,
        "fresh_optimizer": False,
        "criterion": "rank-cross",
    },
    "ensemble": {
        "members": None,
        "subsample": 0.8,
    },
    "seeds": [0],
    "out": "runs/latest",
}


def load_config_file(path) -> dict:
    try:
        with Path(path).open() as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"config {path} must hold a JSON object")
    return data


def resolve_config(file_config: dict | None = None, overrides: dict | None = None) -> dict:
    """defaults <- file <- flag overrides, with unknown keys rejected."""
    resolved = copy.deepcopy(DEFAULTS)
    for layer in (file_config or {}, overrides or {}):
        _merge(resolved, layer, path="")
    _validate(resolved)
    return resolved


def _merge(base: dict, extra: dict, path: str) -> None:
    for key, value in extra.items():
        if key not in base:
            where = f"{path}{key}"
            raise ConfigurationError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge(base[key], value, path=f"{path}{key}.")
        else:
            base[key] = value


def _validate(cfg: dict) -> None:
    ds = cfg["dataset"]
    if ds["path"] is not None and not isinstance(ds["path"], str):
        raise ConfigurationError("dataset.path must be a string path")
    if cfg["detector"]["name"] not in ("svdd-oc", "svdd-sb", "ae", "maf"):
        raise ConfigurationError(
            f"unknown detector {cfg['detector']['name']!r}"
        )
    seeds = cfg["seeds"]
    if not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigurationError("seeds must be a non-empty list of integers")
    if len(set(seeds)) != len(seeds):
        raise ConfigurationError("seeds must be distinct")
    members = cfg["ensemble"]["members"]
    if members is not None and members < 2:
        raise ConfigurationError("ensemble.members must be >= 2 (or null)")


def config_hash(cfg: dict) -> str:
    """Stable digest over everything that determines the results.

    The output directory is excluded; seeds are included since the seed
    list is part of the experiment definition.
    """
    hashable = {k: v for k, v in cfg.items() if k != "out"}
    blob = json.dumps(hashable, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
