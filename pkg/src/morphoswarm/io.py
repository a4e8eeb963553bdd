"""File formats: position/moment/stats CSVs, summaries, and run manifests.

Positions round to 6 decimal places (generation keeps a small extra
separation margin so the rounding cannot break the 2R invariant); moment
values use shortest-round-trip float formatting so a reread is exact and
reruns are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .moments import CHANNELS, MomentVector

FEATURE_COLUMNS = list(CHANNELS) + ["K" + c[1:] for c in CHANNELS]


def write_positions_csv(positions: np.ndarray, path) -> None:
    pos = np.asarray(positions, dtype=float)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("x,y\n")
        for x, y in pos:
            fh.write(f"{x:.6f},{y:.6f}\n")


def read_positions_csv(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["x", "y"]:
            raise ValueError(f"{path}: expected 'x,y' header")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    return np.array(rows, dtype=float).reshape(-1, 2)


def write_moments_csv(records: Sequence[tuple[int, MomentVector]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("step," + ",".join(CHANNELS) + "\n")
        for step, mv in records:
            vals = ",".join(repr(float(v)) for v in mv.as_array())
            fh.write(f"{step},{vals}\n")


def read_moments_csv(path) -> list[tuple[int, MomentVector]]:
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["step"] + list(CHANNELS):
            raise ValueError(f"{path}: unexpected moment-log header")
        return [
            (int(row[0]), MomentVector.from_array([float(v) for v in row[1:9]]))
            for row in reader
            if row
        ]


def write_features_csv(rows: Sequence[tuple[int, np.ndarray]], path) -> None:
    """Rows of (step, 16-value feature vector)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("step," + ",".join(FEATURE_COLUMNS) + "\n")
        for step, vec in rows:
            fh.write(f"{step}," + ",".join(repr(float(v)) for v in vec) + "\n")


def write_stats_csv(stats, path) -> None:
    """class_moment_stats rows: step,channel,class,mean,std."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("step,channel,class,mean,std\n")
        for step, channel, cls, mean, std in stats.rows():
            fh.write(f"{step},{channel},{cls},{repr(float(mean))},{repr(float(std))}\n")


def read_stats_csv(path):
    """Back into a ClassMomentStats (column layout per write_stats_csv)."""
    from .analysis import ClassMomentStats

    per: dict[str, dict[int, dict[str, tuple[float, float]]]] = {}
    steps: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            step = int(row["step"])
            if step not in steps:
                steps.append(step)
            per.setdefault(row["class"], {}).setdefault(step, {})[row["channel"]] = (
                float(row["mean"]),
                float(row["std"]),
            )
    classes = sorted(per)
    mean = {}
    std = {}
    for cls in classes:
        m = np.empty((len(steps), len(CHANNELS)))
        s = np.empty_like(m)
        for si, step in enumerate(steps):
            for ci, ch in enumerate(CHANNELS):
                m[si, ci], s[si, ci] = per[cls][step][ch]
        mean[cls] = m
        std[cls] = s
    return ClassMomentStats(steps, classes, mean, std)


def write_summary(result, path_csv, path_json, spec_text: str, seed_range: str) -> None:
    counts = result.counts
    pcts = result.percentages
    with open(path_csv, "w", encoding="utf-8", newline="") as fh:
        fh.write("class,count,percentage,spec,seeds\n")
        for cls in counts:
            fh.write(f"{cls},{counts[cls]},{pcts[cls]:.1f},{spec_text},{seed_range}\n")
    payload = {
        "spec": spec_text,
        "seeds": seed_range,
        "classes": [
            {"class": cls, "count": counts[cls], "percentage": round(pcts[cls], 1)}
            for cls in counts
        ],
        "failures": [{"seed": oc.seed, "error": oc.error} for oc in result.failures],
    }
    with open(path_json, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def write_manifest(path, config: dict) -> None:
    """Provenance record: the full config, its hash, and library versions."""
    import numba

    from . import __version__

    payload = {
        "config": config,
        "config_sha256": config_hash(config),
        "versions": {
            "morphoswarm": __version__,
            "numpy": np.__version__,
            "numba": numba.__version__,
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
