"""Trajectory generation: Gillespie SSA, DTMC stepping and Euler-Maruyama.

Every trajectory in an ensemble draws from its own generator, seeded by
``derive_seed(base_seed, i)``, so results do not depend on how work is
split across threads.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numba
import numpy as np

from .errors import ModelError, NonFiniteState, UnboundedGrowthGuard
from .model import DtmcModel, ReactionNetwork, SdeModel, as_counts, as_theta

DEFAULT_MAX_JUMPS = 10**8


def derive_seed(base_seed: int, index: int) -> int:
    """Per-trajectory seed from a (base_seed, index) counter."""
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("PATHSENS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ModelError(f"PATHSENS_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _parallel_map(fn, items, workers):
    workers = worker_count(workers)
    if workers == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True, eq=False)
class JumpTrajectory:
    """Piecewise-constant CTMC path on ``[0, horizon]``.

    ``states[k]`` is occupied on ``[times[k], times[k+1])``; the last state
    is held until the horizon.  ``channels[k]`` is the reaction that fired
    at ``times[k+1]``.
    """

    times: np.ndarray
    states: np.ndarray
    horizon: float
    channels: np.ndarray

    @property
    def jump_count(self) -> int:
        return len(self.times) - 1

    @property
    def sojourns(self) -> np.ndarray:
        return np.diff(np.append(self.times, self.horizon))


@dataclass(frozen=True, eq=False)
class DiscreteTrajectory:
    states: np.ndarray

    @property
    def n_steps(self) -> int:
        return len(self.states) - 1


@dataclass(frozen=True, eq=False)
class SdeTrajectory:
    dt: float
    states: np.ndarray  # (n_steps + 1, d)
    horizon: float

    @property
    def n_steps(self) -> int:
        return len(self.states) - 1


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """A batch of trajectories sharing model, parameters and horizon.

    ``weights`` is only set for exhaustively enumerated ensembles, where each
    member carries its exact path probability instead of weight ``1/M``.
    """

    trajectories: list
    base_seed: int | None
    seeds: list[int]
    horizon: float
    theta: np.ndarray
    weights: np.ndarray | None = None
    sde_array: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.trajectories)

    def __getitem__(self, i):
        return self.trajectories[i]

    def __iter__(self):
        return iter(self.trajectories)

    @property
    def kind(self) -> str:
        first = self.trajectories[0]
        return {JumpTrajectory: "ctmc", DiscreteTrajectory: "dtmc", SdeTrajectory: "sde"}[type(first)]

    @cached_property
    def stacked(self) -> "StackedJumps":
        return StackedJumps.build(self.trajectories)

    def dtmc_states(self) -> np.ndarray:
        return np.stack([np.asarray(t.states) for t in self.trajectories])

    def sde_states(self) -> np.ndarray:
        if self.sde_array is not None:
            return self.sde_array
        return np.stack([t.states for t in self.trajectories])


@dataclass(frozen=True, eq=False)
class StackedJumps:
    """All sojourns of an ensemble concatenated, for vectorized integrals."""

    states: np.ndarray  # (S, N)
    starts: np.ndarray  # (S,)
    ends: np.ndarray  # (S,)
    offsets: np.ndarray  # (M,) first row of each trajectory
    owner: np.ndarray  # (S,) trajectory id of each row

    @classmethod
    def build(cls, trajectories: Sequence[JumpTrajectory]):
        states = np.concatenate([t.states for t in trajectories])
        starts = np.concatenate([t.times for t in trajectories])
        ends = np.concatenate([np.append(t.times[1:], t.horizon) for t in trajectories])
        sizes = np.array([len(t.times) for t in trajectories])
        offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
        owner = np.repeat(np.arange(len(trajectories)), sizes)
        return cls(states, starts, ends, offsets, owner)

    def durations(self, t0: float, t1: float) -> np.ndarray:
        """Time each sojourn spends inside ``[t0, t1]``."""
        return np.clip(np.minimum(self.ends, t1) - np.maximum(self.starts, t0), 0.0, None)

    def per_trajectory(self, values: np.ndarray) -> np.ndarray:
        return np.add.reduceat(values, self.offsets, axis=0)


# ---------------------------------------------------------------------------
# SSA


@numba.njit(nogil=True, cache=True)
def _propensities_into(x, theta, kind, rate_idx, km_idx, substrate, rsp, rord, out):
    total = 0.0
    for j in range(kind.shape[0]):
        if kind[j] == 0:
            a = theta[rate_idx[j]]
            for c in range(rsp.shape[1]):
                s = rsp[j, c]
                if s < 0:
                    break
                o = rord[j, c]
                n = x[s]
                if n < o:
                    a = 0.0
                    break
                f = 1.0
                for i in range(o):
                    f *= n - i
                for i in range(2, o + 1):
                    f /= i
                a *= f
        else:
            xa = float(x[substrate[j]])
            a = theta[rate_idx[j]] * xa / (theta[km_idx[j]] + xa)
        out[j] = a
        total += a
    return total


@numba.njit(nogil=True, cache=True)
def _ssa_kernel(x0, theta, horizon, kind, rate_idx, km_idx, substrate, rsp, rord, change, rng, max_jumps):
    m = kind.shape[0]
    n = x0.shape[0]
    cap = 64
    times = np.empty(cap)
    states = np.empty((cap, n), dtype=np.int64)
    channels = np.empty(cap, dtype=np.int64)
    x = x0.copy()
    times[0] = 0.0
    states[0] = x
    props = np.empty(m)
    t = 0.0
    k = 0
    while True:
        a0 = _propensities_into(x, theta, kind, rate_idx, km_idx, substrate, rsp, rord, props)
        if a0 <= 0.0:
            break
        t += rng.exponential(1.0) / a0
        if t > horizon:
            break
        r = rng.random() * a0
        acc = 0.0
        j = m - 1
        for c in range(m):
            acc += props[c]
            if r < acc:
                j = c
                break
        while props[j] <= 0.0:  # guard against r landing on the rounding tail
            j -= 1
        k += 1
        if k > max_jumps:
            return times[:0], states[:0], channels[:0], -1
        if k >= cap:
            cap *= 2
            nt = np.empty(cap)
            nt[:k] = times[:k]
            times = nt
            ns = np.empty((cap, n), dtype=np.int64)
            ns[:k] = states[:k]
            states = ns
            nc = np.empty(cap, dtype=np.int64)
            nc[: k - 1] = channels[: k - 1]
            channels = nc
        for s in range(n):
            x[s] += change[j, s]
        times[k] = t
        states[k] = x
        channels[k - 1] = j
    return times[: k + 1].copy(), states[: k + 1].copy(), channels[:k].copy(), k


def _ssa_with_rng(net: ReactionNetwork, theta: np.ndarray, x0: np.ndarray, horizon: float,
                  rng: np.random.Generator, max_jumps: int) -> JumpTrajectory:
    times, states, channels, k = _ssa_kernel(
        x0, theta, float(horizon), net.kind, net.rate_idx, net.km_idx, net.substrate,
        net.react_species, net.react_order, net.change, rng, int(max_jumps))
    if k < 0:
        raise UnboundedGrowthGuard(f"more than {max_jumps} jumps before t={horizon}")
    for arr in (times, states, channels):
        arr.setflags(write=False)
    return JumpTrajectory(times, states, float(horizon), channels)


def ssa_simulate(net: ReactionNetwork, theta, x0, horizon: float, seed: int,
                 max_jumps: int = DEFAULT_MAX_JUMPS) -> JumpTrajectory:
    """Gillespie direct method on ``[0, horizon]``."""
    if not horizon > 0:
        raise ModelError("horizon must be positive")
    theta = as_theta(theta)
    x0 = as_counts(x0, net.n_species)
    return _ssa_with_rng(net, theta, x0, horizon, np.random.default_rng(seed), max_jumps)


InitialSampler = Callable[[np.random.Generator], np.ndarray]


def _initial_draw(x0, rng):
    if callable(x0):
        return x0(rng)
    if hasattr(x0, "sample"):
        return x0.sample(rng)
    return x0


def ssa_ensemble(net: ReactionNetwork, theta, x0, horizon: float, n_paths: int, base_seed: int,
                 workers: int | None = None, max_jumps: int = DEFAULT_MAX_JUMPS) -> PathEnsemble:
    """``n_paths`` SSA trajectories.

    ``x0`` is a count vector, an object with ``sample(rng)`` (e.g. an
    ``InitialDistribution``) or a callable ``rng -> counts``; random initial
    states are drawn from the trajectory's own generator before the path.
    """
    if not horizon > 0:
        raise ModelError("horizon must be positive")
    theta = as_theta(theta)
    seeds = [derive_seed(base_seed, i) for i in range(n_paths)]

    def one(i):
        rng = np.random.default_rng(seeds[i])
        start = as_counts(_initial_draw(x0, rng), net.n_species)
        return _ssa_with_rng(net, theta, start, horizon, rng, max_jumps)

    trajs = _parallel_map(one, list(range(n_paths)), workers)
    return PathEnsemble(trajs, base_seed, seeds, float(horizon), theta)


def state_at(traj: JumpTrajectory, t: float) -> np.ndarray:
    """Right-continuous lookup: at a jump time the post-jump state is returned."""
    if not 0 <= t <= traj.horizon:
        raise ModelError(f"t={t} outside [0, {traj.horizon}]")
    return traj.states[np.searchsorted(traj.times, t, side="right") - 1]


def states_on_grid(ensemble: PathEnsemble, grid: np.ndarray) -> np.ndarray:
    """Rows of ``ensemble.stacked.states`` occupied at each grid time; ``(M, n_grid)``."""
    grid = np.asarray(grid, dtype=float)
    if grid.min() < 0 or grid.max() > ensemble.horizon * (1 + 1e-12):
        raise ModelError("grid extends outside [0, horizon]")
    st = ensemble.stacked
    rows = np.empty((len(ensemble), grid.size), dtype=np.int64)
    for i, traj in enumerate(ensemble.trajectories):
        rows[i] = st.offsets[i] + np.searchsorted(traj.times, grid, side="right") - 1
    return rows


def write_trajectories_csv(ensemble: PathEnsemble, species: Sequence[str], handle) -> None:
    w = csv.writer(handle, lineterminator="\n")
    w.writerow(["trajectory_id", "jump_index", "time", *species])
    for i, traj in enumerate(ensemble.trajectories):
        for k, (t, x) in enumerate(zip(traj.times, traj.states)):
            w.writerow([i, k, repr(float(t)), *map(int, x)])


# ---------------------------------------------------------------------------
# DTMC


def dtmc_simulate(model: DtmcModel, theta, x0, n_steps: int, seed: int) -> DiscreteTrajectory:
    return _dtmc_with_rng(model, as_theta(theta), x0, n_steps, np.random.default_rng(seed))


def _dtmc_with_rng(model, theta, x0, n_steps, rng):
    if n_steps < 1:
        raise ModelError("a discrete trajectory needs at least one step")
    P = model.transition(theta) if hasattr(model, "transition") else None
    states = [x0]
    x = x0
    if P is not None:
        cum = np.cumsum(P, axis=1)
        u = rng.random(n_steps)
        for i in range(n_steps):
            row = cum[int(x)]
            nxt = int(np.searchsorted(row, u[i], side="right"))
            # rounding tail: fall back to the last state with positive mass
            while nxt >= P.shape[0] or P[int(x), nxt] <= 0:
                nxt -= 1
            x = nxt
            states.append(x)
    else:
        for _ in range(n_steps):
            x = model.sample_next(theta, x, rng)
            states.append(x)
    arr = np.asarray(states)
    arr.setflags(write=False)
    return DiscreteTrajectory(arr)


def dtmc_ensemble(model: DtmcModel, theta, x0, n_steps: int, n_paths: int, base_seed: int,
                  workers: int | None = None) -> PathEnsemble:
    theta = as_theta(theta)
    seeds = [derive_seed(base_seed, i) for i in range(n_paths)]

    def one(i):
        rng = np.random.default_rng(seeds[i])
        return _dtmc_with_rng(model, theta, _initial_draw(x0, rng), n_steps, rng)

    trajs = _parallel_map(one, list(range(n_paths)), workers)
    return PathEnsemble(trajs, base_seed, seeds, float(n_steps), theta)


def enumerate_dtmc_paths(P: np.ndarray, nu0: np.ndarray, n_steps: int, theta) -> PathEnsemble:
    """Every path of a finite chain, weighted by its exact probability.

    Paths of zero probability are dropped.
    """
    n = P.shape[0]
    paths = np.array(np.meshgrid(*[np.arange(n)] * (n_steps + 1), indexing="ij")).reshape(n_steps + 1, -1).T
    prob = np.asarray(nu0, dtype=float)[paths[:, 0]]
    for i in range(n_steps):
        prob = prob * P[paths[:, i], paths[:, i + 1]]
    keep = prob > 0
    trajs = [DiscreteTrajectory(p) for p in paths[keep]]
    return PathEnsemble(trajs, None, [], float(n_steps), as_theta(theta), weights=prob[keep])


# ---------------------------------------------------------------------------
# Euler-Maruyama


def _n_steps(horizon: float, dt: float) -> int:
    if not dt > 0 or not horizon > 0:
        raise ModelError("horizon and step must be positive")
    n = int(round(horizon / dt))
    if n < 1 or abs(n * dt - horizon) > 1e-12 * max(1.0, horizon):
        raise ModelError(f"step {dt} does not divide horizon {horizon}")
    return n


def _em_integrate(sde: SdeModel, theta, X0, noise, dt):
    # X0: (M, d); noise: (M, n, d) standard normals
    M, n, d = noise.shape
    out = np.empty((M, n + 1, d))
    out[:, 0] = X0
    x = np.array(X0, dtype=float)
    sq = math.sqrt(dt)
    for k in range(n):
        with np.errstate(over="ignore", invalid="ignore"):
            b = sde.drift(theta, x)
            s = sde.diffusion(x)
            x = x + b * dt + np.einsum("mij,mj->mi", s, noise[:, k]) * sq
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(f"non-finite state at step {k + 1} (t={(k + 1) * dt:g}); reduce dt")
        out[:, k + 1] = x
    return out


def em_simulate(sde: SdeModel, theta, x0, horizon: float, dt: float, seed: int) -> SdeTrajectory:
    """Fixed-step Euler-Maruyama path."""
    n = _n_steps(horizon, dt)
    theta = as_theta(theta) if sde.n_params else np.zeros(0)
    rng = np.random.default_rng(seed)
    start = np.asarray(_initial_draw(x0, rng), dtype=float).reshape(sde.dimension)
    noise = rng.standard_normal((n, sde.dimension))
    path = _em_integrate(sde, theta, start[None], noise[None], dt)[0]
    path.setflags(write=False)
    return SdeTrajectory(float(dt), path, float(horizon))


def em_ensemble(sde: SdeModel, theta, x0, horizon: float, dt: float, n_paths: int,
                base_seed: int) -> PathEnsemble:
    """Vectorized Euler-Maruyama ensemble; member ``i`` uses ``derive_seed(base_seed, i)``."""
    n = _n_steps(horizon, dt)
    theta = as_theta(theta) if sde.n_params else np.zeros(0)
    seeds = [derive_seed(base_seed, i) for i in range(n_paths)]
    d = sde.dimension
    X0 = np.empty((n_paths, d))
    noise = np.empty((n_paths, n, d))
    for i, s in enumerate(seeds):
        rng = np.random.default_rng(s)
        X0[i] = np.asarray(_initial_draw(x0, rng), dtype=float).reshape(d)
        noise[i] = rng.standard_normal((n, d))
    paths = _em_integrate(sde, theta, X0, noise, dt)
    del noise
    paths.setflags(write=False)
    trajs = [SdeTrajectory(float(dt), paths[i], float(horizon)) for i in range(n_paths)]
    return PathEnsemble(trajs, base_seed, seeds, float(horizon), theta, sde_array=paths)


__all__ = [
    "DEFAULT_MAX_JUMPS", "DiscreteTrajectory", "JumpTrajectory", "PathEnsemble",
    "SdeTrajectory", "StackedJumps", "derive_seed", "dtmc_ensemble", "dtmc_simulate", "em_ensemble",
    "em_simulate", "enumerate_dtmc_paths", "ssa_ensemble", "ssa_simulate", "state_at",
    "states_on_grid", "worker_count", "write_trajectories_csv",
]
