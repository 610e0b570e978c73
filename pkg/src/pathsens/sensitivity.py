"""Observable sensitivities by finite differences and the Fisher-information
screening bound ``|S_kl| <= sqrt(Var f_l) * sqrt(F_kk)``.

Paired ensembles always share per-trajectory seeds (common random numbers),
so an unperturbed comparison is bit-identical and differences are low-noise.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ModelError
from .estimators import Estimate, TimeGrid, _mean_se, pathwise_fim_ctmc
from .model import ReactionNetwork, as_theta
from .simulate import PathEnsemble, ssa_ensemble, states_on_grid

DEFAULT_FLOOR = 1e-9
REL_STEP = 0.1


# ---------------------------------------------------------------------------
# observables


@dataclass(frozen=True, eq=False)
class Observable:
    """A path functional; ``evaluate`` returns one value per trajectory."""

    name: str
    fn: Callable | None = None
    ensemble_fn: Callable[[PathEnsemble], np.ndarray] | None = field(default=None, repr=False)

    def evaluate(self, ensemble: PathEnsemble) -> np.ndarray:
        if self.ensemble_fn is not None:
            out = np.asarray(self.ensemble_fn(ensemble), dtype=float)
        else:
            out = np.array([float(self.fn(t)) for t in ensemble], dtype=float)
        if not np.all(np.isfinite(out)):
            raise ModelError(f"observable {self.name!r} is not finite on every trajectory")
        return out


def species_count_at(species: int, t: float, name: str | None = None) -> Observable:
    def ens(e):
        rows = states_on_grid(e, np.array([t]))[:, 0]
        return e.stacked.states[rows, species].astype(float)

    return Observable(name or f"x{species}(t={t:g})", ensemble_fn=ens)


def time_averaged_count(species: int, horizon: float, name: str | None = None) -> Observable:
    """``(1/T) * integral_0^T X_species(s) ds``, exact over sojourns."""

    def ens(e):
        st = e.stacked
        return st.per_trajectory(st.durations(0.0, horizon) * st.states[:, species]) / horizon

    return Observable(name or f"mean_x{species}[0,{horizon:g}]", ensemble_fn=ens)


# ---------------------------------------------------------------------------
# species relative differences


@dataclass(frozen=True, eq=False)
class SpeciesSensitivity:
    """Relative species differences ``(m - m_pert) / m`` for one parameter.

    ``values`` has shape ``(N, n_grid)``; undefined entries are NaN.  The
    denominator is the ensemble mean count, not a single trajectory.
    """

    parameter: int
    grid: TimeGrid
    values: np.ndarray
    mean_base: np.ndarray
    mean_perturbed: np.ndarray
    note: str = "relative difference divides by the ensemble-mean count"


def _mean_counts(ensemble: PathEnsemble, grid: np.ndarray) -> np.ndarray:
    rows = states_on_grid(ensemble, grid)
    X = ensemble.stacked.states[rows].astype(float)  # (M, G, N)
    mean, _ = _mean_se(X)  # (G, N)
    return mean.T


def fd_species_si(net: ReactionNetwork, theta, param: int, grid: TimeGrid, n_paths: int, base_seed: int,
                  x0, rel: float = REL_STEP, floor: float = DEFAULT_FLOOR, eps: float | None = None,
                  workers: int | None = None, base: PathEnsemble | None = None) -> SpeciesSensitivity:
    """One-sided relative species differences for a perturbation of ``param``.

    The step is ``rel * theta[param]`` unless ``eps`` is given.  ``base`` may
    pass in an already simulated unperturbed ensemble with the same seed.
    """
    theta = as_theta(theta)
    amount = rel * theta[param] if eps is None else eps
    bumped = theta.copy()
    bumped[param] += amount
    if bumped[param] <= 0:
        raise ModelError("perturbed parameter must stay positive")
    horizon = grid.horizon
    if base is None:
        base = ssa_ensemble(net, theta, x0, horizon, n_paths, base_seed, workers)
    pert = ssa_ensemble(net, bumped, x0, horizon, n_paths, base_seed, workers)
    m = _mean_counts(base, grid.points)
    mp = _mean_counts(pert, grid.points)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(np.abs(m) < floor, np.nan, (m - mp) / m)
    return SpeciesSensitivity(param, grid, values, m, mp)


def total_si(per_species: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Species-averaged relative difference and the number of skipped entries per time."""
    S = np.asarray(per_species, dtype=float)
    defined = ~np.isnan(S)
    counts = defined.sum(axis=0)
    sums = np.where(defined, S, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        total = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return total, S.shape[0] - counts


# ---------------------------------------------------------------------------
# derivative of an expectation


def _step(theta: np.ndarray, k: int, h: float | None) -> float:
    h = REL_STEP * theta[k] if h is None else float(h)
    if not h > 0:
        raise ModelError("finite-difference step must be positive")
    if theta[k] - h <= 0:
        raise ModelError(f"step {h} drives parameter {k} nonpositive; use a smaller step")
    return h


def paired_ensembles(net, theta, k, h, x0, horizon, n_paths, base_seed, workers=None):
    up, down = theta.copy(), theta.copy()
    up[k] += h
    down[k] -= h
    return (ssa_ensemble(net, up, x0, horizon, n_paths, base_seed, workers),
            ssa_ensemble(net, down, x0, horizon, n_paths, base_seed, workers))


def fd_observable_si(net: ReactionNetwork, theta, k: int, f: Observable, n_paths: int, base_seed: int,
                     x0, horizon: float, h: float | None = None, workers: int | None = None) -> Estimate:
    """Central difference ``(E f(theta+h) - E f(theta-h)) / 2h`` with common random numbers.

    The SE comes from the per-trajectory paired differences.
    """
    theta = as_theta(theta)
    h = _step(theta, k, h)
    up, down = paired_ensembles(net, theta, k, h, x0, horizon, n_paths, base_seed, workers)
    diff = (f.evaluate(up) - f.evaluate(down)) / (2 * h)
    m, se = _mean_se(diff)
    return Estimate(float(m), float(se), n_paths)


# ---------------------------------------------------------------------------
# screening


def screening_bound(var_f: float, fim, k: int) -> float:
    F = np.atleast_2d(np.asarray(fim, dtype=float))
    if var_f < 0:
        raise ModelError("variance must be nonnegative")
    return math.sqrt(var_f) * math.sqrt(max(F[k, k], 0.0))


@dataclass(frozen=True)
class ReportRow:
    observable: str
    parameter: str
    bound: float
    bound_se: float
    var_f: float
    fim_diag: float
    fd_estimate: float | None
    fd_se: float | None
    screened: bool
    rank: int

    def consistent(self, n_se: float = 3.0) -> bool:
        """``|fd| <= bound + n_se * combined SE`` (true when no FD value exists)."""
        if self.fd_estimate is None:
            return True
        combined = math.hypot(self.fd_se or 0.0, self.bound_se)
        return abs(self.fd_estimate) <= self.bound + n_se * combined


@dataclass(frozen=True, eq=False)
class SensitivityReport:
    rows: list[ReportRow]
    threshold: float
    note: str = ""

    def for_observable(self, name: str) -> list[ReportRow]:
        return sorted((r for r in self.rows if r.observable == name), key=lambda r: r.rank)

    def ranking(self, name: str) -> list[str]:
        return [r.parameter for r in self.for_observable(name)]

    def screened_out(self) -> set[tuple[str, str]]:
        return {(r.observable, r.parameter) for r in self.rows if r.screened}

    def write_csv(self, handle) -> None:
        w = csv.writer(handle, lineterminator="\n")
        w.writerow(["observable", "parameter", "bound", "fd_estimate", "fd_se", "screened", "rank"])
        for r in self.rows:
            w.writerow([r.observable, r.parameter, repr(r.bound),
                        "" if r.fd_estimate is None else repr(r.fd_estimate),
                        "" if r.fd_se is None else repr(r.fd_se),
                        str(r.screened).lower(), r.rank])


def rank_parameters(observables: Sequence[str], parameters: Sequence[str], bounds, threshold: float = 0.0,
                    fd: dict[tuple[int, int], Estimate] | None = None, bound_se=None, var_f=None,
                    fim_diag=None, note: str = "") -> SensitivityReport:
    """Order parameters by descending bound for every observable.

    Ties are broken by parameter index.  Pairs whose bound is below
    ``threshold`` are flagged screened-out.
    """
    B = np.asarray(bounds, dtype=float)
    L, K = B.shape
    bse = np.zeros_like(B) if bound_se is None else np.asarray(bound_se, dtype=float)
    var = np.zeros(L) if var_f is None else np.asarray(var_f, dtype=float)
    diag = np.zeros(K) if fim_diag is None else np.asarray(fim_diag, dtype=float)
    fd = fd or {}
    rows = []
    for l in range(L):
        order = sorted(range(K), key=lambda k: (-B[l, k], k))
        for rank, k in enumerate(order, start=1):
            est = fd.get((l, k))
            rows.append(ReportRow(
                observables[l], parameters[k], float(B[l, k]), float(bse[l, k]), float(var[l]),
                float(diag[k]), None if est is None else est.value, None if est is None else est.std_error,
                bool(B[l, k] < threshold), rank))
    return SensitivityReport(rows, threshold, note)


def screen(net: ReactionNetwork, theta, x0, horizon: float, observables: Sequence[Observable], n_paths: int,
           base_seed: int, threshold: float = 0.0, screen_then_estimate: bool = False,
           rel_step: float = REL_STEP, estimate: bool = True, workers: int | None = None,
           parameter_names: Sequence[str] | None = None) -> SensitivityReport:
    """Bounds for every (observable, parameter) pair, then FD estimates.

    FD estimates are computed for every pair, or only for pairs surviving
    the threshold when ``screen_then_estimate`` is set; ``estimate=False``
    skips them entirely.
    """
    theta = as_theta(theta)
    K = theta.size
    names = list(parameter_names or net.parameter_names)
    ens = ssa_ensemble(net, theta, x0, horizon, n_paths, base_seed, workers)
    fim = pathwise_fim_ctmc(ens, net, theta, horizon)
    diag = np.diag(fim.value).copy()
    diag_se = np.diag(fim.std_error)
    L = len(observables)
    var = np.zeros(L)
    var_se = np.zeros(L)
    for l, f in enumerate(observables):
        vals = f.evaluate(ens)
        dev2 = (vals - vals.mean()) ** 2
        var[l] = dev2.sum() / max(len(vals) - 1, 1)
        var_se[l] = dev2.std(ddof=1) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
    bounds = np.sqrt(np.outer(var, np.maximum(diag, 0.0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.sqrt(np.add.outer(np.where(var > 0, var_se / var, 0.0) ** 2,
                                   np.where(diag > 0, diag_se / diag, 0.0) ** 2))
    bound_se = 0.5 * bounds * rel

    fd: dict[tuple[int, int], Estimate] = {}
    if estimate:
        for k in range(K):
            wanted = [l for l in range(L) if not (screen_then_estimate and bounds[l, k] < threshold)]
            if not wanted:
                continue
            h = _step(theta, k, rel_step * theta[k])
            up, down = paired_ensembles(net, theta, k, h, x0, horizon, n_paths, base_seed, workers)
            for l in wanted:
                diff = (observables[l].evaluate(up) - observables[l].evaluate(down)) / (2 * h)
                m, se = _mean_se(diff)
                fd[(l, k)] = Estimate(float(m), float(se), n_paths)
    return rank_parameters([f.name for f in observables], names, bounds, threshold, fd, bound_se, var, diag,
                           note="central differences with common random numbers")
