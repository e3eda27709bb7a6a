"""Checkpoint files: versioned .npz dumps of detector state.

Arrays are stored raw (float64, bit-exact round trip); construction
parameters and non-array state travel in a JSON header.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1
_ARRAY_PREFIX = "arr__"


def save_checkpoint(path, detector, extra_meta: dict | None = None) -> None:
    state = detector.get_state()
    meta = {
        "format_version": FORMAT_VERSION,
        "class": state["class"],
        "params": _jsonable(state["params"]),
        "scalars": state["scalars"],
        "extra": extra_meta or {},
    }
    arrays = {_ARRAY_PREFIX + k: v for k, v in state["arrays"].items()}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, __meta__=np.array(json.dumps(meta, sort_keys=True)), **arrays)


def load_checkpoint(path):
    """Rebuild the detector stored at ``path``; returns (detector, meta)."""
    from . import DETECTOR_CLASSES

    with np.load(Path(path), allow_pickle=False) as bundle:
        meta = json.loads(str(bundle["__meta__"]))
        if meta["format_version"] != FORMAT_VERSION:
            raise ValueError(
                f"unsupported checkpoint format {meta['format_version']}"
            )
        arrays = {
            k[len(_ARRAY_PREFIX):]: bundle[k]
            for k in bundle.files
            if k.startswith(_ARRAY_PREFIX)
        }
    cls = DETECTOR_CLASSES.get(meta["class"])
    if cls is None:
        raise ValueError(f"unknown detector class {meta['class']!r}")
    params = {k: _detuple(v) for k, v in meta["params"].items()}
    detector = cls(**params)
    detector.set_state(
        {"class": meta["class"], "params": params, "arrays": arrays,
         "scalars": meta["scalars"]}
    )
    return detector, meta


def _jsonable(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        out[k] = list(v) if isinstance(v, tuple) else v
    return out


def _detuple(value):
    return tuple(value) if isinstance(value, list) else value
