"""Part-ensemble weapon detector.

Configs are plain dicts with the same keys as the TOML/JSON config files;
missing keys take their defaults and unknown keys raise ConfigError.
"""

import json

from . import _snnw
from ._snnw import (
    ConfigError,
    ConsistencyError,
    ImageIoError,
    ModelFileError,
    PartNetwork,
    compute_metrics,
    exact_miss_probability,
    iou,
    load_image,
    load_model,
    paper_accuracy_bound,
    paper_miss_bound,
    save_png,
    slide_windows,
)

__all__ = [
    "ConfigError",
    "ConsistencyError",
    "ImageIoError",
    "ModelFileError",
    "PartNetwork",
    "compute_metrics",
    "default_config",
    "detect",
    "evaluate",
    "exact_miss_probability",
    "iou",
    "load_image",
    "load_model",
    "normalize_config",
    "paper_accuracy_bound",
    "paper_miss_bound",
    "save_png",
    "slide_windows",
    "synthesize",
    "train",
]


def _dump(config):
    return "" if config is None else json.dumps(config)


def default_config():
    return json.loads(_snnw.default_config())


def normalize_config(config):
    return json.loads(_snnw.normalize_config(_dump(config)))


def synthesize(config=None):
    """Writes part datasets, the negative set and scene sets under data_dir."""
    _snnw.synthesize(_dump(config))


def train(config=None, jobs=1):
    """Trains every part network; returns one training report per part."""
    return json.loads(_snnw.train(_dump(config), jobs))


def detect(image, config=None):
    """Scans an image (path or float array) with the models in models_dir."""
    if not hasattr(image, "shape"):
        image = load_image(image)
    return json.loads(_snnw.detect(image, _dump(config)))


def evaluate(config=None, scenes=()):
    """Returns (report dict, report text)."""
    report, text = _snnw.evaluate(_dump(config), list(scenes))
    return json.loads(report), text
