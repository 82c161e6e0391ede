"""Named scenarios. A config file may name one and override any of its fields."""

import math
from typing import Dict

from pydantic import ValidationError

from .exceptions import ConfigError
from .models import RunConfig

_SHAPE_DEFAULTS = {
    "dim": 2,
    "n": 64,
    "domain": [0.0, 4.0],
    "boundary_mode": "copy-trace",
    "center": [2.0, 2.0],
    "adaptive": True,
    "eps_scaling": "h",
    "dt": 0.001,
    "dt_scaling": "h",
    "tableau": "sirk2",
}

PRESETS: Dict[str, Dict] = {
    "ellipse": {
        **_SHAPE_DEFAULTS,
        "scenario": "ellipse",
        "semi_axes": [1.2, 0.6],
        "eps": 1.0,
        "final_time": 0.1,
        "snapshot_times": [0.0, 0.01, 0.05, 0.1],
    },
    "square": {
        **_SHAPE_DEFAULTS,
        "scenario": "square",
        "side": 1.6,
        "eps": 1.0,
        "final_time": 0.002,
        "snapshot_times": [0.0, 0.0005, 0.001, 0.002],
    },
    "asteroid": {
        **_SHAPE_DEFAULTS,
        "scenario": "asteroid",
        "scale": 1.2,
        "eps": 1.0,
        "final_time": 0.005,
        "snapshot_times": [0.0, 0.0001, 0.0005, 0.005],
    },
    "singular": {
        **_SHAPE_DEFAULTS,
        "scenario": "singular",
        "domain": [-4.0, 4.0],
        "center": [0.0, 0.0],
        "scale": 1.6,
        "amplitude": 0.8,
        "petals": 4,
        "eps": 10.0,
        "final_time": 0.1,
        "snapshot_times": [0.0, 0.0005, 0.01, 0.1],
    },
    "two-squares": {
        **_SHAPE_DEFAULTS,
        "scenario": "two-squares",
        "side": 1.2,
        "gap": 0.2,
        "eps": 5.0,
        "dt": 1e-6,
        "dt_scaling": "constant",
        "tableau": "sirk1",
        "final_time": 7e-4,
        "snapshot_times": [0.0, 2e-4, 2.2e-4, 2.3e-4, 2.5e-4, 3e-4, 7e-4],
    },
    "circle-in-ellipse": {
        **_SHAPE_DEFAULTS,
        "scenario": "circle-in-ellipse",
        "radius": 0.8,
        "semi_axes": [1.4, 1.0],
        "eps": 5.0,
        "dt": 1e-6,
        "dt_scaling": "constant",
        "tableau": "sirk1",
        "final_time": 1e-3,
        "snapshot_times": [0.0, 2e-5, 1e-4, 1e-3],
    },
    "circle": {
        **_SHAPE_DEFAULTS,
        "scenario": "circle",
        "n": 96,
        "radius": 1.0,
        "eps": 0.1,
        "eps_scaling": "h2",
        "final_time": 0.05,
        "snapshot_times": [0.0, 0.01, 0.02, 0.03, 0.04, 0.05],
    },
    "mms": {
        "scenario": "mms",
        "dim": 1,
        "n": 32,
        "domain": [0.0, 2 * math.pi],
        "boundary_mode": "periodic",
        "adaptive": False,
        "degree": 2,
        "eps": 1.0,
        "eps_scaling": "constant",
        "dt": 0.005,
        "dt_scaling": "constant",
        "tableau": "sirk2",
        "final_time": 0.5,
        "snapshot_times": [0.0, 0.5],
    },
}

# Same curve, eps = 10 h^2
PRESETS["singular-h2"] = {**PRESETS["singular"], "eps_scaling": "h2"}


def preset_names():
    return sorted(PRESETS)


def resolve_config(raw: Dict) -> RunConfig:
    """
    Merge a raw config over its named preset

    Args:
        raw: Flat mapping, optionally naming a `preset`

    Returns:
        RunConfig: preset values overridden by every key present in raw
    """
    name = raw.get("preset")
    values = {}
    if name is not None:
        if name not in PRESETS:
            raise ConfigError(f"Unknown preset '{name}', expected one of {preset_names()}")
        values.update(PRESETS[name])
    values.update(raw)
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid run configuration: {e}")
