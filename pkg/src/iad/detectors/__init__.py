"""Base anomaly detectors behind a uniform train/score protocol."""

from .autoencoder import Autoencoder
from .base import BaseDetector, default_hidden_dims
from .checkpoint import load_checkpoint, save_checkpoint
from .maf import MaskedAutoregressiveFlow
from .svdd import DeepSVDD, ONE_CLASS, SOFT_BOUNDARY

DETECTOR_CLASSES = {
    "DeepSVDD": DeepSVDD,
    "Autoencoder": Autoencoder,
    "MaskedAutoregressiveFlow": MaskedAutoregressiveFlow,
}


def make_detector(name: str, **overrides) -> BaseDetector:
    """Build a detector from its CLI name (svdd-oc, svdd-sb, ae, maf)."""
    if name == "svdd-oc":
        return DeepSVDD(mode=ONE_CLASS, **overrides)
    if name == "svdd-sb":
        return DeepSVDD(mode=SOFT_BOUNDARY, **overrides)
    if name == "ae":
        return Autoencoder(**overrides)
    if name == "maf":
        return MaskedAutoregressiveFlow(**overrides)
    raise ValueError(f"unknown detector {name!r}; expected svdd-oc, svdd-sb, ae or maf")


__all__ = [
    "Autoencoder",
    "BaseDetector",
    "DeepSVDD",
    "DETECTOR_CLASSES",
    "MaskedAutoregressiveFlow",
    "ONE_CLASS",
    "SOFT_BOUNDARY",
    "default_hidden_dims",
    "load_checkpoint",
    "make_detector",
    "save_checkpoint",
]
