"""Built-in steering presets: one constraint per published threshold block.

Each preset names the outcome it steers toward; REFERENCE_RATES carries the
originally reported outcome percentages so batch runs can print a
measured-vs-reference calibration dashboard.
"""

from __future__ import annotations

from .initcond import ConstraintSpec

STEERING_PRESETS: dict[str, ConstraintSpec] = {
    "quartermoon-left": ConstraintSpec("x", 3, lower=0.315),
    "quartermoon-right": ConstraintSpec("x", 3, upper=-0.315),
    "ellipse-single": ConstraintSpec("y", 4, lower=2.18),
    "ellipse-two": ConstraintSpec("y", 4, upper=1.85),
    "discs-three": ConstraintSpec("x", 2, upper=10_270.0),
    "discs-no-three": ConstraintSpec("x", 2, lower=15_500.0),
    "discs-four": ConstraintSpec("x", 4, lower=1.99, upper=2.09),
    "lines-two": ConstraintSpec("x", 4, upper=1.90),
    "lines-one": ConstraintSpec("x", 4, lower=2.29),
}

# originally reported outcome percentages, keyed by family:
#   "unbiased" -> label -> percent; preset name -> label -> percent
REFERENCE_RATES: dict[str, dict[str, dict[str, float]]] = {
    "quartermoon": {
        "unbiased": {"left-pointing": 50.0, "right-pointing": 50.0},
        "quartermoon-left": {"left-pointing": 100.0},
        "quartermoon-right": {"right-pointing": 100.0},
    },
    "ellipse": {
        "unbiased": {"single-ellipse": 50.0, "other": 50.0},
        "ellipse-single": {"single-ellipse": 100.0},
        "ellipse-two": {"two-ellipses": 100.0},
    },
    "discs": {
        "unbiased": {"4-discs": 50.0, "5-discs": 50.0},
        "discs-three": {"3-discs": 100.0},
        "discs-no-three": {"3-discs": 0.0},
        "discs-four": {"3-discs": 4.0, "4-discs": 75.0},
    },
    "lines": {
        "unbiased": {"two-lines": 84.1, "one-line": 15.9},
        "lines-two": {"two-lines": 100.0},
        "lines-one": {"one-line": 100.0},
    },
}


def preset_family(name: str) -> str:
    if name not in STEERING_PRESETS:
        raise KeyError(f"unknown steering preset {name!r}; expected one of {sorted(STEERING_PRESETS)}")
    return name.split("-")[0]


def get_preset(name: str) -> ConstraintSpec:
    if name not in STEERING_PRESETS:
        raise KeyError(f"unknown steering preset {name!r}; expected one of {sorted(STEERING_PRESETS)}")
    return STEERING_PRESETS[name]
