"""Large-deviation rates and Renyi bounds for location-shift families."""

from ._core import *  # noqa: F401,F403
from ._core import __version__, ExperimentConfig

import json as _json
import os as _os


def config(source=None, **overrides):
    """Build an ExperimentConfig from a dict, a JSON string or a file path,
    then apply keyword overrides (for example ``reps=1000``)."""
    if source is None:
        cfg = ExperimentConfig()
    elif isinstance(source, dict):
        cfg = ExperimentConfig.from_json(_json.dumps(source))
    elif isinstance(source, (str, _os.PathLike)) and _os.path.exists(source):
        cfg = ExperimentConfig.load(source)
    else:
        cfg = ExperimentConfig.from_json(source)
    for key, value in overrides.items():
        if not hasattr(cfg, key):
            raise AttributeError(f"unknown configuration key '{key}'")
        setattr(cfg, key, value)
    cfg.validate()
    return cfg
