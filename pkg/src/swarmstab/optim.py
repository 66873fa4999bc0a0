"""Population metaheuristics over a box-bounded decision space.

Two optimizers share the same contract: seeded, reproducible runs over a
total objective (the cost function never raises), candidates clamped to the
box, best-ever tracking, and a per-iteration convergence history. The RNG
is a single numpy Generator (PCG64) owned by the run loop; every random
draw happens in a fixed order before candidate evaluation, so evaluations
may be dispatched concurrently without changing any result.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .objective import DEFAULT_BOUNDS, DecisionVector


@dataclass(frozen=True)
class SwarmingParams:
    enabled: bool = False
    d_attract: float = 0.1
    w_attract: float = 0.2
    h_repel: float = 0.1
    w_repel: float = 10.0


@dataclass(frozen=True)
class PsoConfig:
    n_particles: int = 20
    n_iters: int = 80
    w: float | tuple[float, float] = (0.9, 0.4)   # scalar or linear schedule
    c1: float = 1.5
    c2: float = 1.5
    v_max: float | tuple[float, ...] | None = None  # default: half the box span
    v_init: float | tuple[float, ...] | None = None  # default: rest
    seed: int = 0

    def __post_init__(self):
        if self.n_particles < 2:
            raise ValueError("n_particles must be at least 2")
        if self.n_iters < 1:
            raise ValueError("n_iters must be at least 1")
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("acceleration coefficients must be non-negative")

    def to_dict(self) -> dict:
        w = list(self.w) if isinstance(self.w, (tuple, list)) else self.w
        return {"n_particles": self.n_particles, "n_iters": self.n_iters,
                "w": w, "c1": self.c1, "c2": self.c2,
                "v_max": self.v_max if self.v_max is None or np.isscalar(self.v_max)
                else list(self.v_max),
                "v_init": self.v_init if self.v_init is None or np.isscalar(self.v_init)
                else list(self.v_init),
                "seed": self.seed}


@dataclass(frozen=True)
class BfoConfig:
    s_pop: int = 20
    n_c: int = 8          # chemotactic steps per reproduction step
    n_s: int = 3          # maximum swim length
    n_re: int = 2         # reproduction steps per dispersal event
    n_ed: int = 2         # elimination-dispersal events
    p_ed: float = 0.25
    step_size: float | tuple[float, ...] = 0.1
    swarming: SwarmingParams = field(default_factory=SwarmingParams)
    j_min: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.s_pop < 2 or self.s_pop % 2:
            raise ValueError("s_pop must be even and at least 2")
        if not 0.0 <= self.p_ed <= 1.0:
            raise ValueError("p_ed must be a probability")
        for name in ("n_c", "n_s", "n_re", "n_ed"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")

    def to_dict(self) -> dict:
        return {"s_pop": self.s_pop, "n_c": self.n_c, "n_s": self.n_s,
                "n_re": self.n_re, "n_ed": self.n_ed, "p_ed": self.p_ed,
                "step_size": self.step_size if np.isscalar(self.step_size)
                else list(self.step_size),
                "swarming": dict(vars(self.swarming)),
                "j_min": self.j_min, "seed": self.seed}


@dataclass(frozen=True)
class HistoryRecord:
    iteration: int
    best_cost_so_far: float
    mean_cost: float
    dispersal_probability_used: float | None = None


@dataclass(frozen=True)
class OptResult:
    best: DecisionVector
    best_cost: float
    history: tuple[HistoryRecord, ...]
    evaluations: int
    seed: int


# Canonical benchmark configurations (6-D sphere on [-5, 5]^6). The
# chemotactic step is calibrated so the fixed-step stall radius sits well
# below the 1e-3 benchmark threshold.
SPHERE_BOUNDS = tuple((-5.0, 5.0) for _ in range(6))
SPHERE_BENCHMARK_PSO = PsoConfig(n_particles=30, n_iters=200, w=0.7,
                                 c1=1.5, c2=1.5)
SPHERE_BENCHMARK_BFO = BfoConfig(s_pop=20, n_c=50, n_s=4, n_re=4, n_ed=2,
                                 p_ed=0.25, step_size=0.05)


def tumble_direction(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Isotropic random unit vector (normalized standard normals)."""
    if dim < 1:
        raise ValueError("dim must be at least 1")
    while True:
        v = rng.standard_normal(dim)
        norm = np.linalg.norm(v)
        if norm > 0.0:
            return v / norm


def swarming_term(position, others, params: SwarmingParams) -> float:
    """Cell-to-cell attractant/repellent signal from the rest of the swarm."""
    pos = np.asarray(position, dtype=float)
    total = 0.0
    for other in others:
        d2 = float(np.sum((pos - np.asarray(other, dtype=float)) ** 2))
        total += (-params.d_attract * np.exp(-params.w_attract * d2)
                  + params.h_repel * np.exp(-params.w_repel * d2))
    return total


def _bounds_arrays(bounds):
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    if np.any(lo >= hi):
        raise ValueError("bounds must satisfy lo < hi in every dimension")
    return lo, hi


def _make_caller(objective, bounds, counter):
    """Wrap the user objective: array in, float out, with call accounting."""
    def call(x: np.ndarray) -> float:
        counter[0] += 1
        return float(objective(DecisionVector(values=tuple(x), bounds=tuple(bounds))))
    return call


def _batch(call, candidates, workers):
    if workers > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(call, candidates))
    return [call(x) for x in candidates]


def pso_run(cfg: PsoConfig, objective, bounds=DEFAULT_BOUNDS,
            workers: int = 1) -> OptResult:
    """Particle swarm search: inertia plus cognitive and social pulls.

    Positions start uniform in the box with velocities at rest (unless
    cfg.v_init says otherwise); each iteration draws fresh r1, r2 per
    particle per dimension, caps the velocity, moves, clamps to the box,
    and keeps personal/global bests on strict improvement only.
    """
    lo, hi = _bounds_arrays(bounds)
    dim = lo.size
    rng = np.random.default_rng(cfg.seed)
    span = hi - lo
    if cfg.v_max is None:
        v_max = 0.5 * span
    else:
        v_max = np.broadcast_to(np.asarray(cfg.v_max, dtype=float), (dim,)).copy()
    if np.any(v_max <= 0):
        raise ValueError("v_max must be positive in every dimension")

    counter = [0]
    call = _make_caller(objective, bounds, counter)

    x = rng.uniform(lo, hi, size=(cfg.n_particles, dim))
    if cfg.v_init is None:
        v = np.zeros_like(x)
    else:
        v = np.broadcast_to(np.asarray(cfg.v_init, dtype=float), x.shape).copy()
        v = np.clip(v, -v_max, v_max)

    costs = np.array(_batch(call, list(x), workers))
    pbest = x.copy()
    pbest_cost = costs.copy()
    g_idx = int(np.argmin(pbest_cost))
    gbest = pbest[g_idx].copy()
    gbest_cost = float(pbest_cost[g_idx])

    if isinstance(cfg.w, (tuple, list)):
        w_start, w_end = cfg.w
    else:
        w_start = w_end = float(cfg.w)

    history = []
    for it in range(1, cfg.n_iters + 1):
        frac = (it - 1) / (cfg.n_iters - 1) if cfg.n_iters > 1 else 0.0
        w_t = w_start + (w_end - w_start) * frac
        r1 = rng.uniform(size=(cfg.n_particles, dim))
        r2 = rng.uniform(size=(cfg.n_particles, dim))
        v = w_t * v + cfg.c1 * r1 * (pbest - x) + cfg.c2 * r2 * (gbest - x)
        v = np.clip(v, -v_max, v_max)
        x = np.clip(x + v, lo, hi)
        costs = np.array(_batch(call, list(x), workers))
        improved = costs < pbest_cost
        pbest[improved] = x[improved]
        pbest_cost[improved] = costs[improved]
        g_idx = int(np.argmin(pbest_cost))
        if pbest_cost[g_idx] < gbest_cost:
            gbest_cost = float(pbest_cost[g_idx])
            gbest = pbest[g_idx].copy()
        history.append(HistoryRecord(iteration=it,
                                     best_cost_so_far=gbest_cost,
                                     mean_cost=float(np.mean(costs))))
    return OptResult(best=DecisionVector(values=tuple(gbest), bounds=tuple(bounds)),
                     best_cost=gbest_cost, history=tuple(history),
                     evaluations=counter[0], seed=cfg.seed)


def reproduce(positions: np.ndarray, costs: np.ndarray,
              health: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Keep and duplicate the healthier half (lower accumulated cost).

    Population size is conserved exactly: the surviving half splits in two,
    the other half is discarded.
    """
    s = len(positions)
    order = np.argsort(health, kind="stable")
    keep = order[:s // 2]
    new_pos = np.concatenate([positions[keep], positions[keep]], axis=0)
    new_cost = np.concatenate([costs[keep], costs[keep]])
    return new_pos, new_cost


def bfo_run(cfg: BfoConfig, objective, bounds=DEFAULT_BOUNDS,
            workers: int = 1) -> OptResult:
    """Bacterial foraging search: chemotaxis with swim, optional swarming
    signal, reproduction by accumulated health, and random dispersal.

    Per chemotactic step every bacterium tumbles along a random unit
    direction, moves one step, then swims up to n_s further steps while the
    (swarming-adjusted) cost strictly improves. Health is the sum of the
    costs a bacterium held over its chemotactic lifetime; reproduction
    duplicates the healthier half in place of the weaker. Dispersal
    relocates each bacterium with probability p_ed. The best raw cost ever
    seen is tracked across all phases; the run stops early once it reaches
    j_min.
    """
    lo, hi = _bounds_arrays(bounds)
    dim = lo.size
    rng = np.random.default_rng(cfg.seed)
    step = np.broadcast_to(np.asarray(cfg.step_size, dtype=float), (dim,)).copy()
    if np.any(step <= 0):
        raise ValueError("step_size must be positive in every dimension")

    counter = [0]
    call = _make_caller(objective, bounds, counter)
    swarm = cfg.swarming

    def effective(i, pos, raw):
        if not swarm.enabled:
            return raw
        others = [positions[j] for j in range(cfg.s_pop) if j != i]
        return raw + swarming_term(pos, others, swarm)

    positions = rng.uniform(lo, hi, size=(cfg.s_pop, dim))
    costs = np.array(_batch(call, list(positions), workers))
    b_idx = int(np.argmin(costs))
    best = positions[b_idx].copy()
    best_cost = float(costs[b_idx])

    history = []
    iteration = 0

    def record(dispersal=0.0):
        history.append(HistoryRecord(iteration=iteration,
                                     best_cost_so_far=best_cost,
                                     mean_cost=float(np.mean(costs)),
                                     dispersal_probability_used=dispersal))

    def done():
        return best_cost <= cfg.j_min

    def result():
        return OptResult(best=DecisionVector(values=tuple(best), bounds=tuple(bounds)),
                         best_cost=best_cost, history=tuple(history),
                         evaluations=counter[0], seed=cfg.seed)

    for _ell in range(cfg.n_ed):
        for _k in range(cfg.n_re):
            health = np.zeros(cfg.s_pop)
            for _j in range(cfg.n_c):
                iteration += 1
                for i in range(cfg.s_pop):
                    j_cur = effective(i, positions[i], costs[i])
                    direction = tumble_direction(rng, dim)
                    swims = 0
                    while True:
                        candidate = np.clip(positions[i] + step * direction, lo, hi)
                        raw = call(candidate)
                        if raw < best_cost:
                            best_cost = raw
                            best = candidate.copy()
                        j_new = effective(i, candidate, raw)
                        if j_new < j_cur:
                            positions[i] = candidate
                            costs[i] = raw
                            j_cur = j_new
                            swims += 1
                            if swims > cfg.n_s:
                                break
                        else:
                            break
                    health[i] += j_cur
                record()
                if done():
                    return result()
            positions, costs = reproduce(positions, costs, health)
        # elimination-dispersal: fresh uniform positions with probability p_ed
        relocate = rng.uniform(size=cfg.s_pop) < cfg.p_ed
        fresh = rng.uniform(lo, hi, size=(cfg.s_pop, dim))
        if np.any(relocate):
            positions[relocate] = fresh[relocate]
            moved = np.flatnonzero(relocate)
            new_costs = _batch(call, [positions[i] for i in moved], workers)
            for i, c in zip(moved, new_costs):
                costs[i] = c
                if c < best_cost:
                    best_cost = float(c)
                    best = positions[i].copy()
        iteration += 1
        record(dispersal=cfg.p_ed)
        if done():
            return result()
    return result()
