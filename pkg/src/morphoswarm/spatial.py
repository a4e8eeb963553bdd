"""Uniform-grid spatial hash for fixed-radius neighbor queries.

Agents are binned into square cells; a radius-r query around a point only
scans the cell block covering that radius, so a simulation step stays
O(n * k) with k the mean neighbor count. The flat CSR layout (`order`,
`starts`) is consumed directly by the jit-compiled simulation kernels.
"""

from __future__ import annotations

import math

import numpy as np


class SpatialHash:
    def __init__(self, positions: np.ndarray, cell_size: float, extent: float = 1000.0):
        if cell_size <= 0:
            raise ValueError("cell_size must be positive")
        pos = np.asarray(positions, dtype=float)
        self.positions = pos
        self.cell_size = float(cell_size)
        self.extent = float(extent)
        self.ncells = max(1, int(math.ceil(extent / cell_size)))
        cx = np.clip((pos[:, 0] / cell_size).astype(np.int64), 0, self.ncells - 1)
        cy = np.clip((pos[:, 1] / cell_size).astype(np.int64), 0, self.ncells - 1)
        ids = cx * self.ncells + cy
        self.order = np.argsort(ids, kind="stable").astype(np.int64)
        counts = np.bincount(ids, minlength=self.ncells * self.ncells)
        self.starts = np.zeros(self.ncells * self.ncells + 1, dtype=np.int64)
        np.cumsum(counts, out=self.starts[1:])

    def cell_of(self, point) -> tuple[int, int]:
        cx = min(max(int(point[0] / self.cell_size), 0), self.ncells - 1)
        cy = min(max(int(point[1] / self.cell_size), 0), self.ncells - 1)
        return cx, cy

    def query(self, point, radius: float, exclude: int | None = None) -> np.ndarray:
        """Indices of agents within `radius` (inclusive) of `point`, ascending."""
        cx, cy = self.cell_of(point)
        reach = int(math.ceil(radius / self.cell_size))
        found: list[np.ndarray] = []
        for gx in range(max(0, cx - reach), min(self.ncells - 1, cx + reach) + 1):
            for gy in range(max(0, cy - reach), min(self.ncells - 1, cy + reach) + 1):
                cid = gx * self.ncells + gy
                members = self.order[self.starts[cid] : self.starts[cid + 1]]
                if members.size:
                    found.append(members)
        if not found:
            return np.empty(0, dtype=np.int64)
        cand = np.concatenate(found)
        d = self.positions[cand] - np.asarray(point, dtype=float)
        keep = d[:, 0] ** 2 + d[:, 1] ** 2 <= radius * radius
        out = cand[keep]
        if exclude is not None:
            out = out[out != exclude]
        return np.sort(out)


def brute_force_query(positions, point, radius: float, exclude: int | None = None) -> np.ndarray:
    """O(n) reference for SpatialHash.query, used as the test oracle."""
    pos = np.asarray(positions, dtype=float)
    d = pos - np.asarray(point, dtype=float)
    keep = d[:, 0] ** 2 + d[:, 1] ** 2 <= radius * radius
    out = np.flatnonzero(keep).astype(np.int64)
    if exclude is not None:
        out = out[out != exclude]
    return out
