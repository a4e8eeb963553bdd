"""Jit-compiled inner loops for the simulation.

The gradient kernel is generated per field expression (the expression source
comes from fieldexpr.scalar_source and is inlined by the compiler). Agents
are independent within a step, so the gradient loop is parallelized over
agents; each agent's receptor sums stay serial in cell order, which keeps
results bitwise reproducible regardless of thread count.
"""

from __future__ import annotations

import math
import warnings

import numba

# the portable threading backend; the TBB probe warning is environment noise
numba.config.THREADING_LAYER = "workqueue"
warnings.filterwarnings("ignore", message=".*TBB.*", module=r"numba\.np\.ufunc\.parallel")

import numpy as np
from numba import njit, prange

TWO_PI = 2.0 * math.pi


def make_gradient_kernel(field_eval):
    """Build the all-agents gradient kernel around a jitted field function."""

    @njit(cache=False, parallel=True, error_model="numpy")
    def kernel(pos, order, starts, ncells, cell_size, radius, cutoff, ox, oy, ux, uy, out, scratch):
        n = pos.shape[0]
        cutoff2 = cutoff * cutoff
        reach = cutoff + radius
        reach2 = reach * reach
        for a in prange(n):
            ax = pos[a, 0]
            ay = pos[a, 1]
            cx = min(max(int(ax / cell_size), 0), ncells - 1)
            cy = min(max(int(ay / cell_size), 0), ncells - 1)
            c = scratch[a]
            for k in range(8):
                c[k] = 0.0
            for gx in range(max(0, cx - 1), min(ncells - 1, cx + 1) + 1):
                for gy in range(max(0, cy - 1), min(ncells - 1, cy + 1) + 1):
                    cid = gx * ncells + gy
                    for t in range(starts[cid], starts[cid + 1]):
                        i = order[t]
                        if i == a:
                            continue
                        bx = ax - pos[i, 0]
                        by = ay - pos[i, 1]
                        if bx * bx + by * by > reach2:
                            continue
                        for k in range(8):
                            rx = bx + ox[k]
                            ry = by + oy[k]
                            d2 = rx * rx + ry * ry
                            if d2 <= cutoff2:
                                dd = math.sqrt(d2)
                                th = math.atan2(ry, rx)
                                th += TWO_PI * (th < 0.0)
                                c[k] += field_eval(dd, th)
            gx_ = 0.0
            gy_ = 0.0
            for k in range(8):
                gx_ += c[k] * ux[k]
                gy_ += c[k] * uy[k]
            out[a, 0] = gx_ / (4.0 * radius)
            out[a, 1] = gy_ / (4.0 * radius)

    return kernel


@njit(cache=True)
def resolve_overlaps(pos, radius, lo, hi, extent, max_sweeps, tol):
    """Push overlapping discs apart to center distance 2R, in place.

    Symmetric half-deficit pushes along the pair's center line, swept
    repeatedly (Gauss-Seidel) until no pair is deficient by more than `tol`
    or the sweep cap is hit; every move is clamped to the [lo, hi] square.
    Pairs are pushed to 2R + tol so that later pushes of their neighbors do
    not re-trigger them at machine precision. Deeply compressed piles relax
    one contact layer per sweep, so after the first 8 sweeps the push is
    over-relaxed 1.5x to propagate pressure outward faster. Returns
    (sweeps_used, residual_deficit); residual 0.0 means resolved to tol.
    """
    n = pos.shape[0]
    two_r = 2.0 * radius
    target = two_r + tol
    trigger2 = (two_r - tol) * (two_r - tol)
    cell = target
    ncells = max(1, int(math.ceil(extent / cell)))

    for i in range(n):
        if pos[i, 0] < lo:
            pos[i, 0] = lo
        elif pos[i, 0] > hi:
            pos[i, 0] = hi
        if pos[i, 1] < lo:
            pos[i, 1] = lo
        elif pos[i, 1] > hi:
            pos[i, 1] = hi

    cellids = np.empty(n, np.int64)
    starts = np.empty(ncells * ncells + 1, np.int64)
    fill = np.empty(ncells * ncells + 1, np.int64)
    order = np.empty(n, np.int64)

    sweeps = 0
    for _ in range(max_sweeps + 1):
        # counting-sort agents into cells at their current positions
        starts[:] = 0
        for i in range(n):
            cx = min(max(int(pos[i, 0] / cell), 0), ncells - 1)
            cy = min(max(int(pos[i, 1] / cell), 0), ncells - 1)
            cid = cx * ncells + cy
            cellids[i] = cid
            starts[cid + 1] += 1
        for c in range(1, ncells * ncells + 1):
            starts[c] += starts[c - 1]
        fill[:] = starts[:]
        for i in range(n):
            order[fill[cellids[i]]] = i
            fill[cellids[i]] += 1

        moved = False
        max_deficit = 0.0
        omega = 1.0 if sweeps < 8 else 1.5
        for i in range(n):
            cx = min(max(int(pos[i, 0] / cell), 0), ncells - 1)
            cy = min(max(int(pos[i, 1] / cell), 0), ncells - 1)
            for gx in range(max(0, cx - 1), min(ncells - 1, cx + 1) + 1):
                for gy in range(max(0, cy - 1), min(ncells - 1, cy + 1) + 1):
                    cid = gx * ncells + gy
                    for t in range(starts[cid], starts[cid + 1]):
                        j = order[t]
                        if j <= i:
                            continue
                        dx = pos[i, 0] - pos[j, 0]
                        dy = pos[i, 1] - pos[j, 1]
                        d2 = dx * dx + dy * dy
                        if d2 >= trigger2:
                            continue
                        d = math.sqrt(d2)
                        if sweeps == max_sweeps:
                            # cap reached: only measure what is left
                            deficit = two_r - d
                            if deficit > max_deficit:
                                max_deficit = deficit
                            continue
                        if d > 0.0:
                            nx = dx / d
                            ny = dy / d
                        else:
                            nx = 1.0
                            ny = 0.0
                        half = 0.5 * omega * (target - d)
                        pos[i, 0] = min(max(pos[i, 0] + nx * half, lo), hi)
                        pos[i, 1] = min(max(pos[i, 1] + ny * half, lo), hi)
                        pos[j, 0] = min(max(pos[j, 0] - nx * half, lo), hi)
                        pos[j, 1] = min(max(pos[j, 1] - ny * half, lo), hi)
                        moved = True
        if sweeps == max_sweeps:
            return sweeps, max_deficit
        if not moved:
            return sweeps, 0.0
        sweeps += 1
    return sweeps, 0.0
