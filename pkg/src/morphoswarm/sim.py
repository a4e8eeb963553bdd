"""Chemotaxis simulation core.

Each agent is a disc that senses the cumulative field emitted by its
neighbors at eight surface receptors, estimates the local gradient from
those samples, and moves with speed proportional to the gradient magnitude
(capped at v_max) plus Gaussian positional noise. Updates are synchronous:
all gradients are computed from the pre-step state, then displacements are
applied, overlaps resolved, and the arena boundary enforced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from . import _kernels, fieldexpr
from .fieldexpr import FieldExpr
from .moments import MomentVector, swarm_moments
from .spatial import SpatialHash

EPS_OVERLAP = 1e-6
# Compressive fields pile agents into dense packs whose relaxation needs on
# the order of a hundred sweeps; the cap only exists to bound pathological
# states, and leftover deficits are reported in RunLog.unresolved.
RESOLVE_SWEEPS = 256
_RESOLVE_TOL = EPS_OVERLAP / 2

# receptor directions, counterclockwise from +x in pi/4 increments
_K = np.arange(8)
RECEPTOR_UX = np.cos(_K * math.pi / 4.0)
RECEPTOR_UY = np.sin(_K * math.pi / 4.0)


@dataclass(frozen=True)
class SimParams:
    """Physical and run parameters; the arena is the [0, arena]^2 square."""

    n: int = 500
    radius: float = 5.0
    cutoff: float = 100.0
    gain: float = 1.0  # displacement per unit gradient magnitude
    v_max: float = 2.5
    noise_sigma: float = 0.25
    steps: int = 1000
    record_interval: int = 100
    seed: int = 0
    arena: float = 1000.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.cutoff <= 2 * self.radius:
            raise ValueError("cutoff must exceed the agent diameter")
        if self.v_max <= 0:
            raise ValueError("v_max must be positive")
        if self.record_interval < 1:
            raise ValueError("record_interval must be >= 1")
        if self.arena <= 4 * self.radius:
            raise ValueError("arena too small for the agent radius")

    @property
    def lo(self) -> float:
        return self.radius

    @property
    def hi(self) -> float:
        return self.arena - self.radius


@dataclass(frozen=True)
class SwarmState:
    positions: np.ndarray  # (n, 2), treated as immutable
    step: int = 0


@dataclass
class RunLog:
    """Moment records every record_interval steps plus the final state."""

    records: list[tuple[int, MomentVector]] = field(default_factory=list)
    final: SwarmState | None = None
    snapshots: list[tuple[int, np.ndarray]] = field(default_factory=list)
    # steps where overlap resolution hit its sweep cap, with the leftover deficit
    unresolved: list[tuple[int, float]] = field(default_factory=list)

    @property
    def record_steps(self) -> list[int]:
        return [s for s, _ in self.records]


def receptor_points(center, radius: float) -> np.ndarray:
    """The 8 receptor positions on an agent's surface, k*pi/4 order."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    c = np.asarray(center, dtype=float)
    return np.column_stack((c[0] + radius * RECEPTOR_UX, c[1] + radius * RECEPTOR_UY))


def cumulative_field(
    point, self_id: int | None, state: SwarmState, expr: FieldExpr, cutoff: float
) -> float:
    """Total concentration at `point`: sum of every other agent's emission
    within `cutoff`, each evaluated at its own (d, theta)."""
    pos = state.positions
    p = np.asarray(point, dtype=float)
    v = p - pos  # emitter-to-sample vectors
    d = np.sqrt(v[:, 0] ** 2 + v[:, 1] ** 2)
    keep = d <= cutoff
    if self_id is not None:
        keep[self_id] = False
    if not np.any(keep):
        return 0.0
    theta = np.arctan2(v[keep, 1], v[keep, 0])
    theta = np.where(theta < 0.0, theta + _kernels.TWO_PI, theta)
    return float(np.sum(fieldexpr.evaluate_many(expr, d[keep], theta)))


def gradient_from_receptor_values(values: Sequence[float], radius: float) -> np.ndarray:
    """g = (1/4R) * sum_k c_k u_k; exact for fields affine in position."""
    c = np.asarray(values, dtype=float)
    if c.shape != (8,):
        raise ValueError("expected 8 receptor values")
    return np.array(
        [float(c @ RECEPTOR_UX), float(c @ RECEPTOR_UY)]
    ) / (4.0 * radius)


def gradient(agent: int, state: SwarmState, expr: FieldExpr, params: SimParams) -> np.ndarray:
    """Field gradient sensed by one agent (reference path, used by tests)."""
    pts = receptor_points(state.positions[agent], params.radius)
    c = [cumulative_field(p, agent, state, expr, params.cutoff) for p in pts]
    return gradient_from_receptor_values(c, params.radius)


# ---------------------------------------------------------------------------
# Fast path: jitted gradient kernel per field expression
# ---------------------------------------------------------------------------

_KERNEL_CACHE: dict[str, object] = {}


def _gradient_kernel(expr: FieldExpr):
    key = fieldexpr.serialize(expr)
    kernel = _KERNEL_CACHE.get(key)
    if kernel is None:
        ns: dict = {"math": math}
        exec(fieldexpr.scalar_source(expr), ns)
        kernel = _kernels.make_gradient_kernel(njit(cache=False)(ns["field_eval"]))
        _KERNEL_CACHE[key] = kernel
    return kernel


def gradients_all(
    state: SwarmState,
    expr: FieldExpr,
    params: SimParams,
    out: np.ndarray | None = None,
    scratch: np.ndarray | None = None,
    kernel=None,
) -> np.ndarray:
    """Gradients for every agent from the shared pre-step state."""
    pos = np.ascontiguousarray(state.positions)
    cell_size = params.cutoff + params.radius
    grid = SpatialHash(pos, cell_size, params.arena)
    if out is None:
        out = np.empty_like(pos)
    if scratch is None:
        scratch = np.empty((pos.shape[0], 8))
    if kernel is None:
        kernel = _gradient_kernel(expr)
    kernel(
        pos,
        grid.order,
        grid.starts,
        grid.ncells,
        cell_size,
        params.radius,
        params.cutoff,
        params.radius * RECEPTOR_UX,
        params.radius * RECEPTOR_UY,
        RECEPTOR_UX,
        RECEPTOR_UY,
        out,
        scratch,
    )
    return out


def validate_ic(positions: np.ndarray, params: SimParams, slack: float = 0.0) -> None:
    """Reject initial conditions that violate containment or overlap bounds."""
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 2:
        raise ValueError("positions must be an (n, 2) array")
    if pos.shape[0] != params.n:
        raise ValueError(f"expected {params.n} agents, got {pos.shape[0]}")
    if np.any(pos < params.lo - slack) or np.any(pos > params.hi + slack):
        raise ValueError("initial positions outside the arena margin")
    if pos.shape[0] > 1:
        grid = SpatialHash(pos, 2 * params.radius, params.arena)
        limit = 2 * params.radius - EPS_OVERLAP - slack
        for i in range(pos.shape[0]):
            for j in grid.query(pos[i], 2 * params.radius, exclude=i):
                if j > i:
                    d = math.dist(pos[i], pos[j])
                    if d < limit:
                        raise ValueError(
                            f"agents {i} and {j} overlap (distance {d:.6f})"
                        )


class _Workspace:
    """Reusable per-run buffers so the step loop does not reallocate."""

    def __init__(self, n: int, expr: FieldExpr | None = None):
        self.grad = np.empty((n, 2))
        self.scratch = np.empty((n, 8))
        self.norm = np.empty(n)
        self.scale = np.empty(n)
        self.noise = np.empty((n, 2))
        self.kernel = _gradient_kernel(expr) if expr is not None else None


def _advance(
    state: SwarmState,
    expr: FieldExpr,
    params: SimParams,
    rng: np.random.Generator,
    ws: _Workspace | None = None,
) -> tuple[SwarmState, float]:
    if ws is None:
        ws = _Workspace(params.n, expr)
    g = gradients_all(state, expr, params, out=ws.grad, scratch=ws.scratch, kernel=ws.kernel)
    disp = g
    disp *= params.gain
    np.sqrt(disp[:, 0] ** 2 + disp[:, 1] ** 2, out=ws.norm)
    ws.scale.fill(1.0)
    np.divide(params.v_max, ws.norm, out=ws.scale, where=ws.norm > params.v_max)
    disp *= ws.scale[:, None]
    rng.standard_normal(out=ws.noise)
    ws.noise *= params.noise_sigma
    new_pos = state.positions + disp
    new_pos += ws.noise
    _, residual = _kernels.resolve_overlaps(
        new_pos, params.radius, params.lo, params.hi, params.arena, RESOLVE_SWEEPS, _RESOLVE_TOL
    )
    return SwarmState(new_pos, state.step + 1), residual


def step(
    state: SwarmState, expr: FieldExpr, params: SimParams, rng: np.random.Generator
) -> SwarmState:
    """One synchronous update; restores containment and non-overlap."""
    new_state, _ = _advance(state, expr, params, rng)
    return new_state


def run(
    ic: np.ndarray,
    expr: FieldExpr,
    params: SimParams,
    snapshot_steps: Iterable[int] = (),
    on_state=None,
) -> RunLog:
    """Run params.steps updates from `ic`, recording swarm moments every
    record_interval steps (always including step 0 and the final step).

    `on_state`, when given, is called with each post-step SwarmState; it
    must not mutate the positions.
    """
    validate_ic(ic, params)
    state = SwarmState(np.array(ic, dtype=float), 0)
    rng = np.random.default_rng(params.seed)
    wanted = set(int(s) for s in snapshot_steps)

    log = RunLog()
    log.records.append((0, swarm_moments(state.positions)))
    if 0 in wanted:
        log.snapshots.append((0, state.positions.copy()))
    ws = _Workspace(params.n, expr)
    for s in range(1, params.steps + 1):
        state, residual = _advance(state, expr, params, rng, ws)
        if residual > EPS_OVERLAP:
            log.unresolved.append((s, residual))
        if s % params.record_interval == 0 or s == params.steps:
            log.records.append((s, swarm_moments(state.positions)))
        if s in wanted:
            log.snapshots.append((s, state.positions.copy()))
        if on_state is not None:
            on_state(state)
    log.final = state
    return log


def snapshot_schedule(steps: int, count: int = 6) -> list[int]:
    """`count` evenly spaced snapshot steps from 0 to `steps` inclusive."""
    if count < 1 or steps < 0:
        return []
    if count == 1 or steps == 0:
        return [steps]
    marks = {round(i * steps / (count - 1)) for i in range(count)}
    return sorted(marks)
