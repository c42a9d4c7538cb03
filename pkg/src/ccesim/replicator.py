"""Selection analysis on the strategy simplex.

Strategy payoffs at a fixed population composition are estimated by
Monte Carlo over the searching-and-learning step: build a well-mixed
population whose strategy counts match the composition, let every agent
draw a post-learning skill around the population maximum, and average
the draws per strategy. The estimated payoffs feed the replicator
vector field ``dx_s = x_s (pi_s - pi_bar)``, which is evaluated on a
barycentric grid and integrated with fixed-step RK4.

Payoffs at a composition where all agents hold identical skills do not
depend on the composition (every strategy sees the same model), so the
field would degenerate. A configurable number of warmup learning steps
runs before measurement to let the maximum reflect the composition's
dispersion mix; acceptance-style field runs use warmup_steps=5.

Monte Carlo cost along integrated trajectories is bounded by memoizing
payoffs on composition cells: queries are rounded to a barycentric
lattice (largest-remainder, with a reserved count for any strategy
whose frequency is alive but would round to zero). Each cell owns a
private stream derived from the master seed and the cell coordinates,
so fields and trajectories are reproducible at any thread count and in
any evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import ConfigError
from .population import PopulationConfig, largest_remainder_counts
from .seeds import DOMAIN_REPLICATOR, stream_for

_REPLICATE_BLOCK = 1024

VERTEX_LABELS = ("noai", "complement", "substitute")


@dataclass(frozen=True)
class SimplexPoint:
    """Population composition (frequencies of NoAI, Complement, Substitute)."""

    x0: float
    xc: float
    xs: float

    def __post_init__(self) -> None:
        for name, value in (("x0", self.x0), ("xc", self.xc), ("xs", self.xs)):
            if not (0.0 <= value <= 1.0):
                raise ConfigError(f"{name} must be in [0, 1]; got {value}")
        if abs(self.x0 + self.xc + self.xs - 1.0) > 1e-12:
            raise ConfigError("simplex coordinates must sum to 1 within 1e-12")

    def as_array(self) -> np.ndarray:
        return np.array([self.x0, self.xc, self.xs], dtype=np.float64)

    @classmethod
    def from_array(cls, x: Sequence[float]) -> "SimplexPoint":
        return cls(float(x[0]), float(x[1]), float(x[2]))

    def counts(self, n: int) -> np.ndarray:
        return largest_remainder_counts(self.as_array(), n)


@dataclass(frozen=True)
class PayoffEstimate:
    """Monte Carlo payoff means and standard errors at one composition.

    Entries for strategies absent from the composition are NaN with
    ``present`` False; they are flagged absent rather than set to zero.
    """

    point: SimplexPoint
    values: tuple[float, float, float]
    std_errors: tuple[float, float, float]
    present: tuple[bool, bool, bool]
    replicates: int


@dataclass(frozen=True)
class FieldSample:
    """Replicator velocity at one composition."""

    point: SimplexPoint
    velocity: tuple[float, float, float]
    speed: float
    low_confidence: bool


def composition_counts(x: SimplexPoint, n: int) -> np.ndarray:
    """Integer strategy counts for ``n`` agents matching ``x``.

    Rejects compositions whose rounded count is zero for a strategy with
    frequency above half an agent (the composition cannot be represented
    at this population size).
    """
    counts = x.counts(n)
    freqs = x.as_array()
    for s in range(3):
        if counts[s] == 0 and freqs[s] > 0.5 / n:
            raise ConfigError(
                f"composition {tuple(freqs)} is not representable with n={n}: "
                f"strategy {VERTEX_LABELS[s]} rounds to zero agents"
            )
    return counts


def _payoff_kernel(
    counts: np.ndarray,
    alphas: np.ndarray,
    betas: np.ndarray,
    replicates: int,
    warmup_steps: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-strategy mean post-learning skill for each replicate.

    Returns (means[R, 3] with NaN for absent strategies, counts).
    Replicates are vectorized in fixed-size blocks so the stream layout
    does not depend on the requested replicate count.
    """
    n = int(counts.sum())
    strategies = np.repeat(np.arange(3), counts)
    alpha_a = alphas[strategies]
    beta_a = betas[strategies]
    bounds = np.concatenate(([0], np.cumsum(counts)))
    means = np.full((replicates, 3), np.nan)
    eps = 2.0 ** -52
    done = 0
    while done < replicates:
        block = min(_REPLICATE_BLOCK, replicates - done)
        skills = np.zeros((block, n))
        for _ in range(warmup_steps + 1):
            model = skills.max(axis=1, keepdims=True)
            u = np.clip(rng.random((block, n)), eps, 1.0 - eps)
            skills = (model - alpha_a) - beta_a * np.log(-np.log(u))
        for s in range(3):
            lo, hi = int(bounds[s]), int(bounds[s + 1])
            if hi > lo:
                means[done: done + block, s] = skills[:, lo:hi].mean(axis=1)
        done += block
    return means, counts


def estimate_payoffs(
    x: SimplexPoint,
    config: PopulationConfig,
    replicates: int,
    warmup_steps: int = 0,
    rng: np.random.Generator | None = None,
) -> PayoffEstimate:
    """Estimate expected post-learning skill per strategy at composition x.

    The population is well-mixed regardless of ``config.m``: every agent
    learns from the population-wide maximum. Skills start at zero, the
    same initialization as the agent-based model. When no stream is
    supplied, one is derived from ``config.seed`` and the composition's
    agent counts, so repeated estimates at one point agree bit for bit.
    """
    if replicates < 1:
        raise ConfigError("replicates must be >= 1")
    if warmup_steps < 0:
        raise ConfigError("warmup_steps must be >= 0")
    counts = composition_counts(x, config.n)
    if rng is None:
        rng = stream_for(config.seed, DOMAIN_REPLICATOR, *counts.tolist())
    alphas, betas = config.param_table()
    means, _ = _payoff_kernel(counts, alphas, betas, replicates, warmup_steps, rng)
    values, errors, present = [], [], []
    for s in range(3):
        if counts[s] == 0:
            values.append(math.nan)
            errors.append(math.nan)
            present.append(False)
            continue
        col = means[:, s]
        values.append(float(col.mean()))
        errors.append(float(col.std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else 0.0)
        present.append(True)
    return PayoffEstimate(x, tuple(values), tuple(errors), tuple(present), replicates)


def replicator_velocity(x: SimplexPoint, payoffs: PayoffEstimate) -> FieldSample:
    """Replicator velocity dx_s = x_s (pi_s - pi_bar) at composition x.

    The mean payoff averages over strategies with payoff estimates,
    weighted by their (renormalized) frequencies; strategies without an
    estimate must carry negligible frequency and get velocity zero, so
    the components sum to zero exactly.
    """
    freqs = x.as_array()
    values = np.array(payoffs.values)
    present = np.array(payoffs.present)
    weight = freqs[present].sum()
    if weight <= 0.0:
        raise ConfigError("payoffs must be present for at least one carried strategy")
    pi_bar = float((freqs[present] * values[present]).sum() / weight)
    velocity = np.where(present, freqs * (np.where(present, values, 0.0) - pi_bar), 0.0)
    speed = float(np.sqrt((velocity ** 2).sum()))

    errors = np.array(payoffs.std_errors)
    low = False
    idx = np.flatnonzero(present)
    for i in idx:
        for j in idx:
            if i < j:
                gap = abs(values[i] - values[j])
                pooled = math.sqrt(errors[i] ** 2 + errors[j] ** 2)
                if gap < 3.0 * pooled:
                    low = True
    return FieldSample(x, tuple(float(v) for v in velocity), speed, low)


def barycentric_grid(resolution: int) -> list[tuple[int, int, int]]:
    """All integer triples (i, j, k) with i+j+k = resolution."""
    if resolution < 1:
        raise ConfigError("grid resolution must be >= 1")
    return [
        (i, j, resolution - i - j)
        for i in range(resolution + 1)
        for j in range(resolution - i + 1)
    ]


def build_field(
    grid_resolution: int,
    config: PopulationConfig,
    replicates: int,
    warmup_steps: int = 0,
    threads: int = 1,
) -> tuple[list[FieldSample], list[SimplexPoint]]:
    """Evaluate the replicator field at every barycentric grid point.

    Points whose composition cannot be represented with ``config.n``
    agents are skipped and returned separately. Each point's estimate
    uses its own derived stream, so the field is identical at any
    thread count.
    """
    if grid_resolution < 2:
        raise ConfigError("grid_resolution must be >= 2")
    triples = barycentric_grid(grid_resolution)
    points = [
        SimplexPoint(i / grid_resolution, j / grid_resolution, k / grid_resolution)
        for (i, j, k) in triples
    ]
    tasks = [(p, config, replicates, warmup_steps) for p in points]
    results = _run_tasks(_field_point_task, tasks, threads)
    samples, skipped = [], []
    for point, result in zip(points, results):
        if result is None:
            skipped.append(point)
        else:
            samples.append(result)
    return samples, skipped


def _field_point_task(args) -> FieldSample | None:
    point, config, replicates, warmup_steps = args
    try:
        payoffs = estimate_payoffs(point, config, replicates, warmup_steps)
    except ConfigError:
        return None
    return replicator_velocity(point, payoffs)


def _run_tasks(fn, tasks, threads):
    if threads == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    import concurrent.futures as cf
    import os

    workers = threads if threads > 0 else (os.cpu_count() or 1)
    with cf.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (workers * 4))))


class PayoffCache:
    """Memoized payoff estimates keyed by lattice-rounded composition.

    A query at x is rounded to ``memo_resolution`` lattice counts; any
    strategy with frequency at or above ``alive_threshold`` is
    guaranteed a nonzero lattice count (taken from the largest count),
    so live strategies always receive payoff estimates. Each cell owns
    a stream derived from the config seed and the cell coordinates.
    """

    def __init__(
        self,
        config: PopulationConfig,
        replicates: int,
        warmup_steps: int = 0,
        memo_resolution: int = 15,
    ):
        self.config = config
        self.replicates = replicates
        self.warmup_steps = warmup_steps
        self.memo_resolution = memo_resolution
        self.alive_threshold = 0.5 / config.n
        self._cells: dict[tuple[int, int, int], PayoffEstimate] = {}

    def _cell_key(self, freqs: np.ndarray) -> tuple[int, int, int]:
        g = self.memo_resolution
        counts = largest_remainder_counts(np.maximum(freqs, 0.0), g)
        for s in range(3):
            if freqs[s] >= self.alive_threshold and counts[s] == 0:
                counts[int(np.argmax(counts))] -= 1
                counts[s] = 1
            elif freqs[s] < self.alive_threshold and counts[s] > 0:
                # dead strategies contribute no lattice mass
                live = np.argmax(np.where(freqs >= self.alive_threshold, counts, -1))
                counts[live] += counts[s]
                counts[s] = 0
        return tuple(int(c) for c in counts)

    def payoffs_at(self, freqs: np.ndarray) -> PayoffEstimate:
        key = self._cell_key(freqs)
        if key not in self._cells:
            g = self.memo_resolution
            point = SimplexPoint(key[0] / g, key[1] / g, key[2] / g)
            self._cells[key] = estimate_payoffs(
                point, self.config, self.replicates, self.warmup_steps
            )
        return self._cells[key]

    def velocity_at(self, freqs: np.ndarray) -> np.ndarray:
        payoffs = self.payoffs_at(freqs)
        values = np.array(payoffs.values)
        present = np.array(payoffs.present) & (freqs > 0.0)
        if not present.any():
            return np.zeros(3)
        weight = freqs[present].sum()
        pi_bar = (freqs[present] * values[present]).sum() / weight
        return np.where(present, freqs * (np.where(present, values, 0.0) - pi_bar), 0.0)


def integrate_trajectory(
    x0: SimplexPoint,
    config: PopulationConfig,
    replicates: int,
    dt: float = 0.01,
    t_max: float = 300.0,
    warmup_steps: int = 0,
    cache: PayoffCache | None = None,
    speed_tol: float = 1e-6,
    record_every: int = 1,
) -> list[tuple[float, SimplexPoint]]:
    """Fixed-step RK4 integration of the replicator dynamics from x0.

    After each step components are clipped at zero and renormalized;
    a strategy whose frequency falls below half an agent's worth
    (0.5/n) is treated as extinct and snapped to zero, which preserves
    boundary invariance: a strategy at frequency zero never re-enters.
    Integration stops at ``t_max`` or when the speed drops under
    ``speed_tol``.
    """
    if dt <= 0:
        raise ConfigError("dt must be > 0")
    if cache is None:
        cache = PayoffCache(config, replicates, warmup_steps)
    extinct = 0.5 / config.n

    def clip_normalize(x: np.ndarray) -> np.ndarray:
        x = np.clip(x, 0.0, None)
        total = x.sum()
        return x / total if total > 0 else x

    def snap(x: np.ndarray) -> np.ndarray:
        x = np.where(x < extinct, 0.0, x)
        return clip_normalize(x)

    def rhs(x: np.ndarray) -> np.ndarray:
        return cache.velocity_at(clip_normalize(x))

    x = snap(x0.as_array())
    t = 0.0
    out = [(0.0, SimplexPoint.from_array(x))]
    step_index = 0
    while t < t_max:
        k1 = rhs(x)
        if float(np.sqrt((k1 ** 2).sum())) < speed_tol:
            break
        k2 = rhs(x + 0.5 * dt * k1)
        k3 = rhs(x + 0.5 * dt * k2)
        k4 = rhs(x + dt * k3)
        x = snap(x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        t += dt
        step_index += 1
        if step_index % record_every == 0:
            out.append((t, SimplexPoint.from_array(x)))
    if out[-1][0] != t:
        out.append((t, SimplexPoint.from_array(x)))
    return out


def classify_terminal(point: SimplexPoint, tol: float = 0.05) -> str:
    """Label a terminal composition by the vertex within L1 distance tol,
    else ``interior``."""
    freqs = point.as_array()
    for s, label in enumerate(VERTEX_LABELS):
        vertex = np.zeros(3)
        vertex[s] = 1.0
        if np.abs(freqs - vertex).sum() <= tol:
            return label
    return "interior"


def interior_lattice_starts(degree: int = 6) -> list[SimplexPoint]:
    """Strictly interior barycentric lattice points of the given degree.

    Degree 6 yields the ten compositions (i, j, k)/6 with i, j, k >= 1.
    """
    pts = [
        SimplexPoint(i / degree, j / degree, (degree - i - j) / degree)
        for i in range(1, degree - 1)
        for j in range(1, degree - i)
    ]
    return pts
