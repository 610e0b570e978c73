"""Pathwise relative entropy and Fisher information estimators.

The instantaneous relative entropy (IRE) and instantaneous Fisher
information (IFIM) are state functions averaged over trajectories of the
unperturbed process.  For jump processes the time integrals are exact: the
integrands are piecewise constant, so each trajectory contributes
``sum(sojourn * integrand(state))``.

All ensemble means reduce along the trajectory axis in a fixed order
(pairwise summation on a contiguous axis), so results are independent of
how the ensemble was produced.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import AbsoluteContinuityViolation, ModelError, SingularDiffusion
from .model import (
    DtmcModel,
    ReactionNetwork,
    SdeModel,
    as_counts,
    as_delta,
    as_theta,
    log_propensity_terms,
    perturbed,
    propensities,
)
from .simulate import PathEnsemble, states_on_grid

# ---------------------------------------------------------------------------
# result containers


@dataclass(frozen=True)
class TimeGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ModelError("a time grid needs at least two points")
        if pts[0] != 0 or np.any(np.diff(pts) <= 0):
            raise ModelError("grid must start at 0 and increase strictly")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, horizon: float, n_points: int) -> "TimeGrid":
        if n_points < 2:
            raise ModelError("a time grid needs at least two points")
        pts = np.linspace(0.0, horizon, n_points)
        pts[-1] = horizon
        return cls(pts)

    @property
    def horizon(self) -> float:
        return float(self.points[-1])

    def __len__(self):
        return self.points.size


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    n: int
    note: str = ""

    def __float__(self):
        return float(self.value)

    @property
    def degenerate(self) -> bool:
        return self.n < 2


@dataclass(frozen=True)
class MatrixEstimate:
    value: np.ndarray
    std_error: np.ndarray
    n: int
    note: str = ""

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.value, dtype=dtype)


@dataclass(frozen=True, eq=False)
class IRECurve:
    grid: TimeGrid
    values: np.ndarray
    std_errors: np.ndarray
    ensemble_size: int
    samples: np.ndarray | None = field(default=None, repr=False)

    @property
    def degenerate(self) -> bool:
        """Standard errors are meaningless for a single-trajectory ensemble."""
        return self.ensemble_size < 2

    def slope(self) -> tuple[float, float]:
        """Least-squares trend of the curve and its standard error."""
        if self.samples is None:
            raise ModelError("curve was built without per-trajectory samples")
        return trend(self.samples, self.grid.points)


@dataclass(frozen=True, eq=False)
class IFIMCurve:
    grid: TimeGrid
    matrices: np.ndarray  # (G, K, K)
    std_errors: np.ndarray
    ensemble_size: int
    samples: np.ndarray | None = field(default=None, repr=False)  # (M, G, K, K)

    @property
    def degenerate(self) -> bool:
        return self.ensemble_size < 2

    def entry(self, p: int, q: int) -> np.ndarray:
        return self.matrices[:, p, q]

    def slope(self, p: int, q: int) -> tuple[float, float]:
        if self.samples is None:
            raise ModelError("curve was built with keep_samples=False")
        return trend(self.samples[:, :, p, q], self.grid.points)


def trend(samples: np.ndarray, t: np.ndarray) -> tuple[float, float]:
    """Mean per-trajectory OLS slope of ``samples`` (M, G) against ``t``, with SE.

    Curve points share trajectories, so residual-based OLS errors would be
    wrong; averaging per-trajectory slopes keeps the draws independent.
    """
    t = np.asarray(t, dtype=float)
    tc = t - t.mean()
    y = samples - samples.mean(axis=1, keepdims=True)
    slopes = y @ tc / (tc @ tc)
    m, se = _mean_se(slopes)
    return float(m), float(se)


def _mean_se(samples: np.ndarray, weights: np.ndarray | None = None):
    """Mean and standard error along axis 0 with pairwise summation.

    Weighted ensembles are exact enumerations and report zero error.
    """
    x = np.asarray(samples, dtype=float)
    n = x.shape[0]
    xt = np.ascontiguousarray(np.moveaxis(x, 0, -1))
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        mean = (xt * w).sum(axis=-1) / w.sum()
        return mean, np.zeros_like(mean)
    mean = xt.sum(axis=-1) / n
    if n < 2:
        return mean, np.zeros_like(mean)
    dev = xt - mean[..., None]
    var = (dev * dev).sum(axis=-1) / (n - 1)
    # identical samples: report exactly zero rather than rounding residue
    var = np.where(xt.max(axis=-1) == xt.min(axis=-1), 0.0, var)
    return mean, np.sqrt(var / n)


# ---------------------------------------------------------------------------
# initial distributions


@dataclass(frozen=True, eq=False)
class PointMass:
    state: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "state", np.asarray(self.state))

    def atoms(self):
        return self.state[None], np.ones(1)

    def sample(self, rng):
        return self.state


@dataclass(frozen=True, eq=False)
class Discrete:
    """Finite distribution over states; ``grad_log[i]`` is grad_theta log nu at atom i."""

    states: np.ndarray
    probabilities: np.ndarray
    grad_log: np.ndarray | None = None

    def __post_init__(self):
        states = np.asarray(self.states)
        probs = np.asarray(self.probabilities, dtype=float)
        if states.shape[0] != probs.size:
            raise ModelError("one probability per atom required")
        if np.any(probs < 0) or abs(probs.sum() - 1) > 1e-12:
            raise ModelError("initial probabilities must sum to 1")
        if self.grad_log is not None:
            g = np.asarray(self.grad_log, dtype=float)
            if g.ndim != 2 or g.shape[0] != probs.size:
                raise ModelError("grad_log must have one row per atom")
            object.__setattr__(self, "grad_log", g)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "probabilities", probs)

    def atoms(self):
        return self.states, self.probabilities

    def sample(self, rng):
        i = int(np.searchsorted(np.cumsum(self.probabilities), rng.random(), side="right"))
        return self.states[min(i, len(self.probabilities) - 1)]


InitialDistribution = PointMass | Discrete


def poisson_initial(mean: float, species: int = 0, base=None, n_species: int = 1,
                    param_index: int | None = None, n_params: int | None = None,
                    max_count: int | None = None) -> Discrete:
    """Poisson(mean) count of one species, the rest fixed at ``base``.

    The tail beyond ``max_count`` (default: where it drops below 1e-15) is
    cut and the remaining mass renormalized.  With ``param_index`` the atoms
    carry the score ``x/mean - 1`` of a parameter equal to the mean.
    """
    if max_count is None:
        max_count = int(stats.poisson.isf(1e-15, mean)) + 1
    counts = np.arange(max_count + 1)
    probs = stats.poisson.pmf(counts, mean)
    probs = probs / probs.sum()
    base = np.zeros(n_species, dtype=np.int64) if base is None else as_counts(base)
    states = np.repeat(base[None], counts.size, axis=0)
    states[:, species] = counts
    grad = None
    if param_index is not None:
        grad = np.zeros((counts.size, n_params))
        grad[:, param_index] = counts / mean - 1.0
    return Discrete(states, probs, grad)


def _atom_key(x) -> tuple:
    return tuple(np.atleast_1d(np.asarray(x)).tolist())


def initial_re(nu, nu_bar) -> float:
    """Relative entropy of ``nu`` w.r.t. ``nu_bar``; ``inf`` when ``nu`` is not dominated."""
    s1, p1 = nu.atoms()
    s2, p2 = nu_bar.atoms()
    ref: dict[tuple, float] = {}
    for s, p in zip(s2, p2):
        ref[_atom_key(s)] = ref.get(_atom_key(s), 0.0) + float(p)
    terms = []
    for s, p in zip(s1, p1):
        if p == 0:
            continue
        q = ref.get(_atom_key(s), 0.0)
        if q == 0:
            return math.inf
        terms.append(p * math.log(p / q))
    return float(np.sum(terms)) if terms else 0.0


def initial_fim(nu, n_params: int) -> np.ndarray:
    """Fisher information of the initial law; zero for parameter-free laws."""
    if isinstance(nu, PointMass) or nu.grad_log is None:
        return np.zeros((n_params, n_params))
    g = nu.grad_log
    return np.einsum("i,ik,il->kl", nu.probabilities, g, g)


def _initial_pair(nu, nu_bar) -> float:
    if nu is None and nu_bar is None:
        return 0.0
    if nu is None or nu_bar is None:
        raise ModelError("give both initial distributions or neither")
    return initial_re(nu, nu_bar)


# ---------------------------------------------------------------------------
# CTMC integrands


def _ire_from_propensities(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    za, zb = A == 0, B == 0
    if np.any(za != zb):
        j = np.argwhere(np.atleast_2d(za != zb))[0][-1]
        raise AbsoluteContinuityViolation(f"reaction {j}: exactly one of the two propensities is zero")
    safe = np.where(za, 1.0, A)
    d = (np.where(za, 1.0, B) - safe) / safe
    # a log(a/b) - (a - b) = a (d - log1p(d)), d = (b - a)/a; >= 0 up to rounding
    per_channel = np.where(za, 0.0, A * np.maximum(d - np.log1p(d), 0.0))
    return per_channel.sum(axis=-1)


def ire_values_ctmc(net: ReactionNetwork, theta, eps, X) -> np.ndarray:
    """IRE integrand at a batch of states ``X`` (S, N)."""
    theta, bar = perturbed(theta, eps)
    X = np.atleast_2d(as_counts(X, net.n_species))
    if np.array_equal(theta, bar):
        return np.zeros(X.shape[0])
    return _ire_from_propensities(propensities(net, theta, X), propensities(net, bar, X))


def ire_integrand_ctmc(net: ReactionNetwork, theta, eps, x) -> float:
    """``sum_j a_j log(a_j / abar_j) - (a_0 - abar_0)`` at one state."""
    return float(ire_values_ctmc(net, theta, eps, x)[0])


def ifim_values_ctmc(net: ReactionNetwork, theta, X) -> np.ndarray:
    """IFIM integrand at a batch of states, shape ``(S, K, K)``."""
    theta = as_theta(theta)
    X = np.atleast_2d(as_counts(X, net.n_species))
    out = np.zeros((X.shape[0], theta.size, theta.size))
    for p, q, v in log_propensity_terms(net, theta, X):
        out[:, p, q] += v
    return out


def ifim_integrand_ctmc(net: ReactionNetwork, theta, x) -> np.ndarray:
    return ifim_values_ctmc(net, theta, x)[0]


def _ifim_terms_reduced(net, theta, X, reduce) -> np.ndarray:
    """Apply a linear ``reduce`` to every sparse IFIM term; assemble ``(..., K, K)``."""
    K = as_theta(theta).size
    out = None
    for p, q, v in log_propensity_terms(net, theta, X):
        r = reduce(v)
        if out is None:
            out = np.zeros(r.shape + (K, K))
        out[..., p, q] += r
    return out


# ---------------------------------------------------------------------------
# CTMC estimators


def estimate_ire_ctmc(ensemble: PathEnsemble, grid: TimeGrid, net: ReactionNetwork, theta, eps) -> IRECurve:
    """Ensemble mean of the IRE integrand at each grid time.

    The ensemble must have been simulated under ``theta`` (not ``theta+eps``).
    """
    rows = states_on_grid(ensemble, grid.points)
    X = ensemble.stacked.states
    uniq, inv = np.unique(rows, return_inverse=True)
    g = ire_values_ctmc(net, theta, eps, X[uniq])
    samples = g[inv.reshape(rows.shape)]
    mean, se = _mean_se(samples)
    return IRECurve(grid, mean, se, len(ensemble), samples)


def estimate_ifim_ctmc(ensemble: PathEnsemble, grid: TimeGrid, net: ReactionNetwork, theta,
                       keep_samples: bool = False) -> IFIMCurve:
    theta = as_theta(theta)
    rows = states_on_grid(ensemble, grid.points)
    X = ensemble.stacked.states[rows.ravel()]
    K = theta.size
    M, G = rows.shape
    pairs: dict[tuple[int, int], np.ndarray] = {}
    for p, q, v in log_propensity_terms(net, theta, X):
        v = v.reshape(M, G)
        pairs[(p, q)] = pairs[(p, q)] + v if (p, q) in pairs else v.copy()
    mean = np.zeros((G, K, K))
    se = np.zeros((G, K, K))
    for (p, q), v in pairs.items():
        mean[:, p, q], se[:, p, q] = _mean_se(v)
    samples = None
    if keep_samples:
        samples = np.zeros((M, G, K, K))
        for (p, q), v in pairs.items():
            samples[:, :, p, q] = v
    return IFIMCurve(grid, mean, se, M, samples)


def sojourn_integrals_re(ensemble: PathEnsemble, net: ReactionNetwork, theta, eps,
                         t0: float, t1: float) -> np.ndarray:
    """Per-trajectory exact integral of the IRE integrand over ``[t0, t1]``."""
    st = ensemble.stacked
    g = ire_values_ctmc(net, theta, eps, st.states)
    return st.per_trajectory(st.durations(t0, t1) * g)


def sojourn_integrals_fim(ensemble: PathEnsemble, net: ReactionNetwork, theta,
                          t0: float, t1: float) -> np.ndarray:
    """Per-trajectory exact integral of the IFIM integrand; shape ``(M, K, K)``."""
    st = ensemble.stacked
    dur = st.durations(t0, t1)
    K = as_theta(theta).size
    out = _ifim_terms_reduced(net, theta, st.states, lambda v: st.per_trajectory(dur * v))
    return np.zeros((len(ensemble), K, K)) if out is None else out


def _check_window(ensemble, t0, t1):
    if not 0 <= t0 < t1 <= ensemble.horizon * (1 + 1e-12):
        raise ModelError(f"window [{t0}, {t1}] not inside (0, {ensemble.horizon}]")


def averaged_re(ensemble: PathEnsemble, net: ReactionNetwork, theta, eps, t: float) -> Estimate:
    """``(1/t) * integral_0^t IRE(s) ds``."""
    _check_window(ensemble, 0.0, t)
    per = sojourn_integrals_re(ensemble, net, theta, eps, 0.0, t) / t
    m, se = _mean_se(per)
    return Estimate(float(m), float(se), len(ensemble))


def averaged_re_curve(ensemble: PathEnsemble, grid: TimeGrid, net: ReactionNetwork, theta, eps) -> IRECurve:
    """Averaged RE at every positive grid time (the value at t=0 is the IRE at 0)."""
    st = ensemble.stacked
    g = ire_values_ctmc(net, theta, eps, st.states)
    samples = np.empty((len(ensemble), len(grid)))
    for c, t in enumerate(grid.points):
        if t == 0:
            rows = states_on_grid(ensemble, np.array([0.0]))[:, 0]
            samples[:, c] = g[rows]
        else:
            samples[:, c] = st.per_trajectory(st.durations(0.0, t) * g) / t
    mean, se = _mean_se(samples)
    return IRECurve(grid, mean, se, len(ensemble), samples)


def pathwise_re_ctmc(ensemble: PathEnsemble, net: ReactionNetwork, theta, eps, horizon: float | None = None,
                     nu=None, nu_bar=None) -> Estimate:
    """Initial-law relative entropy plus the integrated IRE over ``[0, horizon]``."""
    horizon = ensemble.horizon if horizon is None else horizon
    init = _initial_pair(nu, nu_bar)
    if horizon == 0:
        return Estimate(init, 0.0, len(ensemble))
    _check_window(ensemble, 0.0, horizon)
    m, se = _mean_se(sojourn_integrals_re(ensemble, net, theta, eps, 0.0, horizon))
    return Estimate(init + float(m), float(se), len(ensemble))


def pathwise_fim_ctmc(ensemble: PathEnsemble, net: ReactionNetwork, theta, horizon: float | None = None,
                      nu=None) -> MatrixEstimate:
    theta = as_theta(theta)
    horizon = ensemble.horizon if horizon is None else horizon
    init = np.zeros((theta.size, theta.size)) if nu is None else initial_fim(nu, theta.size)
    if horizon == 0:
        return MatrixEstimate(init, np.zeros_like(init), len(ensemble))
    _check_window(ensemble, 0.0, horizon)
    m, se = _mean_se(sojourn_integrals_fim(ensemble, net, theta, 0.0, horizon))
    return MatrixEstimate(init + m, se, len(ensemble))


_NOMINAL = "ergodic-average SE: nominal"


def rer_stationary_ctmc(ensemble: PathEnsemble, net: ReactionNetwork, theta, eps, burn_in: float = 0.0,
                        horizon: float | None = None) -> Estimate:
    """Time average of the IRE integrand over ``[burn_in, horizon]``.

    With a single long trajectory the reported SE is zero and flagged
    nominal: no autocorrelation correction is attempted.
    """
    horizon = ensemble.horizon if horizon is None else horizon
    _check_window(ensemble, burn_in, horizon)
    per = sojourn_integrals_re(ensemble, net, theta, eps, burn_in, horizon) / (horizon - burn_in)
    m, se = _mean_se(per)
    return Estimate(float(m), float(se), len(ensemble), _NOMINAL if len(ensemble) < 2 else "")


def fim_rer_stationary_ctmc(ensemble: PathEnsemble, net: ReactionNetwork, theta, burn_in: float = 0.0,
                            horizon: float | None = None) -> MatrixEstimate:
    horizon = ensemble.horizon if horizon is None else horizon
    _check_window(ensemble, burn_in, horizon)
    per = sojourn_integrals_fim(ensemble, net, theta, burn_in, horizon) / (horizon - burn_in)
    m, se = _mean_se(per)
    return MatrixEstimate(m, se, len(ensemble), _NOMINAL if len(ensemble) < 2 else "")


# ---------------------------------------------------------------------------
# DTMC


def _dtmc_inner_re(model: DtmcModel, theta, bar, x) -> float:
    s1, p = model.support(theta, x)
    s2, q = model.support(bar, x)
    if not np.array_equal(s1, s2):
        raise AbsoluteContinuityViolation(f"next-state supports differ at state {x!r}")
    d = (q - p) / p
    # sum p log(p/q) with the zero-sum sum(q - p) added: termwise nonnegative
    return float(np.sum(p * np.maximum(d - np.log1p(d), 0.0)))


def _dtmc_inner_fim(model: DtmcModel, theta, x) -> np.ndarray:
    _, p = model.support(theta, x)
    g = model.grad_log_density(theta, x)
    return np.einsum("i,ik,il->kl", p, g, g)


def _dtmc_step_values(fn, step_states):
    cache: dict[tuple, object] = {}
    out = []
    for x in step_states:
        key = _atom_key(x)
        if key not in cache:
            cache[key] = fn(x)
        out.append(cache[key])
    return np.asarray(out)


def _dtmc_check_step(ensemble, i):
    n_steps = len(ensemble[0].states) - 1
    if not 1 <= i <= n_steps:
        raise ModelError(f"step {i} outside 1..{n_steps}")


def ire_dtmc(model: DtmcModel, ensemble: PathEnsemble, theta, eps, i: int) -> Estimate:
    """Instantaneous RE at step ``i``: mean over ``x_{i-1}`` of the row divergence."""
    theta, bar = perturbed(theta, eps)
    _dtmc_check_step(ensemble, i)
    xs = [t.states[i - 1] for t in ensemble]
    vals = _dtmc_step_values(lambda x: _dtmc_inner_re(model, theta, bar, x), xs)
    m, se = _mean_se(vals, ensemble.weights)
    return Estimate(float(m), float(se), len(ensemble))


def ifim_dtmc(model: DtmcModel, ensemble: PathEnsemble, theta, i: int) -> MatrixEstimate:
    theta = as_theta(theta)
    _dtmc_check_step(ensemble, i)
    xs = [t.states[i - 1] for t in ensemble]
    vals = _dtmc_step_values(lambda x: _dtmc_inner_fim(model, theta, x), xs)
    m, se = _mean_se(vals, ensemble.weights)
    return MatrixEstimate(m, se, len(ensemble))


def pathwise_re_dtmc(model: DtmcModel, ensemble: PathEnsemble, theta, eps, n_steps: int | None = None,
                     nu=None, nu_bar=None) -> Estimate:
    """Initial RE plus the sum of instantaneous REs over steps ``1..n_steps``.

    The SE is taken over per-trajectory sums, so correlations between steps
    are accounted for.
    """
    theta, bar = perturbed(theta, eps)
    n_steps = len(ensemble[0].states) - 1 if n_steps is None else n_steps
    init = _initial_pair(nu, nu_bar)
    if n_steps == 0:
        return Estimate(init, 0.0, len(ensemble))
    _dtmc_check_step(ensemble, n_steps)
    cache: dict[tuple, float] = {}
    per = np.zeros(len(ensemble))
    for r, traj in enumerate(ensemble):
        acc = []
        for x in traj.states[:n_steps]:
            key = _atom_key(x)
            if key not in cache:
                cache[key] = _dtmc_inner_re(model, theta, bar, x)
            acc.append(cache[key])
        per[r] = np.sum(acc)
    m, se = _mean_se(per, ensemble.weights)
    return Estimate(init + float(m), float(se), len(ensemble))


def pathwise_fim_dtmc(model: DtmcModel, ensemble: PathEnsemble, theta, n_steps: int | None = None,
                      nu=None) -> MatrixEstimate:
    theta = as_theta(theta)
    K = theta.size
    n_steps = len(ensemble[0].states) - 1 if n_steps is None else n_steps
    init = np.zeros((K, K)) if nu is None else initial_fim(nu, K)
    cache: dict[tuple, np.ndarray] = {}
    per = np.zeros((len(ensemble), K, K))
    for r, traj in enumerate(ensemble):
        for x in traj.states[:n_steps]:
            key = _atom_key(x)
            if key not in cache:
                cache[key] = _dtmc_inner_fim(model, theta, x)
            per[r] += cache[key]
    m, se = _mean_se(per, ensemble.weights)
    return MatrixEstimate(init + m, se, len(ensemble))


# ---------------------------------------------------------------------------
# SDE


def _solve_diffusion(sde: SdeModel, X: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    S = sde.diffusion(X)
    try:
        sol = np.linalg.solve(S, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularDiffusion(str(exc)) from None
    if not np.all(np.isfinite(sol)):
        raise SingularDiffusion("non-finite solve against the diffusion matrix")
    return sol


def ire_values_sde(sde: SdeModel, theta, eps, X: np.ndarray) -> np.ndarray:
    """``0.5 |sigma^{-1}(b_bar - b)|^2`` at a batch of states (..., d)."""
    theta = as_theta(theta)
    delta = as_delta(eps, theta.size)
    if not np.any(delta):
        return np.zeros(X.shape[:-1])
    bar = theta + delta
    diff = sde.drift(bar, X) - sde.drift(theta, X)
    u = _solve_diffusion(sde, X, diff[..., None])[..., 0]
    return 0.5 * np.sum(u * u, axis=-1)


def ifim_values_sde(sde: SdeModel, theta, X: np.ndarray) -> np.ndarray:
    """``J^T (sigma sigma^T)^{-1} J`` at a batch of states; ``(..., K, K)``."""
    theta = as_theta(theta) if sde.n_params else np.zeros(0)
    J = sde.drift_jacobian(theta, X)
    if J.shape[-1] == 0:
        return np.zeros(X.shape[:-1] + (0, 0))
    L = _solve_diffusion(sde, X, J)
    return np.einsum("...dk,...dl->...kl", L, L)


def _lattice_index(ensemble: PathEnsemble, t: float) -> int:
    dt = ensemble[0].dt
    k = int(round(t / dt))
    if abs(k * dt - t) > 1e-9 * max(1.0, abs(t)) or not 0 <= k <= ensemble[0].n_steps:
        raise ModelError(f"t={t} is not on the Euler lattice (dt={dt})")
    return k


def ire_sde(sde: SdeModel, ensemble: PathEnsemble, theta, eps, t: float) -> Estimate:
    k = _lattice_index(ensemble, t)
    vals = ire_values_sde(sde, theta, eps, ensemble.sde_states()[:, k])
    m, se = _mean_se(vals)
    return Estimate(float(m), float(se), len(ensemble))


def ifim_sde(sde: SdeModel, ensemble: PathEnsemble, theta, t: float) -> MatrixEstimate:
    k = _lattice_index(ensemble, t)
    vals = ifim_values_sde(sde, theta, ensemble.sde_states()[:, k])
    m, se = _mean_se(vals)
    return MatrixEstimate(m, se, len(ensemble))


def _lattice_grid(ensemble, stride):
    n = ensemble[0].n_steps
    if stride < 1 or n % stride:
        raise ModelError(f"stride {stride} must divide the step count {n}")
    idx = np.arange(0, n + 1, stride)
    pts = idx * ensemble[0].dt
    pts[-1] = ensemble.horizon
    return idx, TimeGrid(pts)


def ire_sde_curve(sde: SdeModel, ensemble: PathEnsemble, theta, eps, stride: int = 1) -> IRECurve:
    idx, grid = _lattice_grid(ensemble, stride)
    samples = ire_values_sde(sde, theta, eps, ensemble.sde_states()[:, idx])
    mean, se = _mean_se(samples)
    return IRECurve(grid, mean, se, len(ensemble), samples)


def ifim_sde_curve(sde: SdeModel, ensemble: PathEnsemble, theta, stride: int = 1,
                   keep_samples: bool = False) -> IFIMCurve:
    idx, grid = _lattice_grid(ensemble, stride)
    samples = ifim_values_sde(sde, theta, ensemble.sde_states()[:, idx])
    mean, se = _mean_se(samples)
    return IFIMCurve(grid, mean, se, len(ensemble), samples if keep_samples else None)


def pathwise_re_sde(sde: SdeModel, ensemble: PathEnsemble, theta, eps, nu=None, nu_bar=None) -> Estimate:
    """Initial RE plus the left-point Riemann sum of the IRE on the Euler lattice."""
    dt = ensemble[0].dt
    X = ensemble.sde_states()[:, :-1]
    per = ire_values_sde(sde, theta, eps, X).sum(axis=1) * dt
    m, se = _mean_se(per)
    return Estimate(_initial_pair(nu, nu_bar) + float(m), float(se), len(ensemble))


# ---------------------------------------------------------------------------
# local quadratic check


def re_quadratic_ratio(re_estimate: float, fim, eps) -> float:
    """``RE / (0.5 eps^T F eps)``; tends to 1 as the perturbation shrinks."""
    F = np.atleast_2d(np.asarray(fim, dtype=float))
    delta = as_delta(eps, F.shape[0])
    quad = 0.5 * float(delta @ F @ delta)
    if not quad > 0:
        raise ModelError("quadratic form must be positive")
    return float(re_estimate) / quad
