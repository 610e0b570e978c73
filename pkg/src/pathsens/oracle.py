"""Deterministic reference values: exact DTMC propagation, brute-force path
enumeration, and closed forms for Poisson and Ornstein-Uhlenbeck models.

None of these touch the Monte Carlo code paths they are used to check.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import AbsoluteContinuityViolation, ModelError

MAX_STATES = 64
ENUM_MAX_STATES = 4
ENUM_MAX_STEPS = 8


@dataclass(frozen=True, eq=False)
class FiniteDtmc:
    """Transition matrix at a fixed parameter, with optional ``d P / d theta``."""

    matrix: np.ndarray
    grad: np.ndarray | None = None

    def __post_init__(self):
        P = np.asarray(self.matrix, dtype=float)
        n = P.shape[0]
        if P.shape != (n, n) or not 1 <= n <= MAX_STATES:
            raise ModelError(f"transition matrix must be square with at most {MAX_STATES} states")
        if np.any(P < 0) or np.any(P > 1) or np.max(np.abs(P.sum(axis=1) - 1)) > 1e-12:
            raise ModelError("rows must be probability vectors")
        object.__setattr__(self, "matrix", P)
        if self.grad is not None:
            G = np.asarray(self.grad, dtype=float)
            if G.shape[:2] != (n, n):
                raise ModelError("gradient tensor must be (n, n, K)")
            object.__setattr__(self, "grad", G)

    @property
    def n_states(self) -> int:
        return self.matrix.shape[0]


def _probability_vector(nu, n):
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (n,) or np.any(nu < 0) or abs(nu.sum() - 1) > 1e-12:
        raise ModelError("initial law must be a probability vector over the states")
    return nu


def exact_dtmc_marginals(chain: FiniteDtmc, nu0, n_steps: int) -> np.ndarray:
    """Chapman-Kolmogorov propagation; row ``i`` is the law at step ``i``."""
    nu = _probability_vector(nu0, chain.n_states)
    out = np.empty((n_steps + 1, chain.n_states))
    out[0] = nu
    for i in range(1, n_steps + 1):
        out[i] = out[i - 1] @ chain.matrix
    return out


def _kl(p, q) -> float:
    mask = p > 0
    if np.any(mask & (q == 0)):
        return math.inf
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def row_divergences(chain: FiniteDtmc, chain_bar: FiniteDtmc) -> np.ndarray:
    P, Q = chain.matrix, chain_bar.matrix
    if P.shape != Q.shape or np.any((P > 0) != (Q > 0)):
        raise AbsoluteContinuityViolation("the two chains have different transition supports")
    return np.array([_kl(P[x], Q[x]) for x in range(P.shape[0])])


def exact_dtmc_pathwise_re(chain: FiniteDtmc, chain_bar: FiniteDtmc, nu0, nu0_bar, n_steps: int) -> float:
    """Initial divergence plus exact instantaneous terms summed over the horizon."""
    n = chain.n_states
    nu0 = _probability_vector(nu0, n)
    nu0_bar = _probability_vector(nu0_bar, n)
    rows = row_divergences(chain, chain_bar)
    marg = exact_dtmc_marginals(chain, nu0, n_steps)
    return _kl(nu0, nu0_bar) + float(sum(marg[i - 1] @ rows for i in range(1, n_steps + 1)))


def exact_dtmc_pathwise_fim(chain: FiniteDtmc, nu0, n_steps: int) -> np.ndarray:
    """Exact pathwise FIM for a parameter-free initial law."""
    if chain.grad is None:
        raise ModelError("chain has no parameter gradient")
    P, G = chain.matrix, chain.grad
    K = G.shape[2]
    row_fim = np.zeros((chain.n_states, K, K))
    for x in range(chain.n_states):
        for y in np.flatnonzero(P[x] > 0):
            g = G[x, y] / P[x, y]
            row_fim[x] += P[x, y] * np.outer(g, g)
    marg = exact_dtmc_marginals(chain, nu0, n_steps)
    return sum(np.einsum("x,xkl->kl", marg[i - 1], row_fim) for i in range(1, n_steps + 1))


def enumerate_paths_re(chain: FiniteDtmc, chain_bar: FiniteDtmc, nu0, nu0_bar, n_steps: int) -> float:
    """Relative entropy of the path laws by summing over every path.

    Capped at ``ENUM_MAX_STATES`` states and ``ENUM_MAX_STEPS`` steps.
    """
    n = chain.n_states
    if n > ENUM_MAX_STATES or n_steps > ENUM_MAX_STEPS:
        raise ModelError(f"enumeration capped at {ENUM_MAX_STATES} states and {ENUM_MAX_STEPS} steps")
    nu0 = _probability_vector(nu0, n)
    nu0_bar = _probability_vector(nu0_bar, n)
    paths = np.array(list(itertools.product(range(n), repeat=n_steps + 1)))
    with np.errstate(divide="ignore"):
        logq = np.log(nu0[paths[:, 0]])
        logq_bar = np.log(nu0_bar[paths[:, 0]])
        for i in range(n_steps):
            logq = logq + np.log(chain.matrix[paths[:, i], paths[:, i + 1]])
            logq_bar = logq_bar + np.log(chain_bar.matrix[paths[:, i], paths[:, i + 1]])
    q = np.exp(logq)
    live = q > 0
    if np.any(np.isneginf(logq_bar[live])):
        return math.inf
    return float(np.sum(q[live] * (logq[live] - logq_bar[live])))


def poisson_rer(lam: float, lam_bar: float) -> float:
    """RE rate between Poisson processes; also the RE between Poisson laws."""
    if not lam > 0 or not lam_bar > 0:
        raise ModelError("rates must be positive")
    return lam * math.log(lam / lam_bar) - (lam - lam_bar)


def ou_second_moment(theta: float, sigma: float, x0: float, t: float) -> float:
    decay = math.exp(-2.0 * theta * t)
    return x0 * x0 * decay + sigma * sigma / (2.0 * theta) * (1.0 - decay)


def ou_ire(theta: float, eps: float, sigma: float, x0: float, t: float) -> float:
    """IRE of ``dX = -theta X dt + sigma dW`` against rate ``theta + eps``."""
    if not theta > 0 or not sigma > 0:
        raise ModelError("theta and sigma must be positive")
    return eps * eps / (2.0 * sigma * sigma) * ou_second_moment(theta, sigma, x0, t)


def ou_ifim(theta: float, sigma: float, x0: float, t: float) -> float:
    if not theta > 0 or not sigma > 0:
        raise ModelError("theta and sigma must be positive")
    return ou_second_moment(theta, sigma, x0, t) / (sigma * sigma)


def two_state(a: float, b: float) -> FiniteDtmc:
    """Chain with ``p(0,1) = a``, ``p(1,0) = b``; gradient w.r.t. ``(a, b)``."""
    G = np.zeros((2, 2, 2))
    G[0, 0, 0], G[0, 1, 0] = -1.0, 1.0
    G[1, 0, 1], G[1, 1, 1] = 1.0, -1.0
    return FiniteDtmc(np.array([[1 - a, a], [b, 1 - b]]), G)


def random_chain(n: int, rng: np.random.Generator, concentration: float = 1.0) -> FiniteDtmc:
    """Dense random chain with Dirichlet rows (all entries positive)."""
    return FiniteDtmc(rng.dirichlet(np.full(n, concentration), size=n))


def verify_table() -> list[tuple[str, float]]:
    """Labeled reference constants reproducible from the closed forms above."""
    base, pert = two_state(0.3, 0.5), two_state(0.33, 0.5)
    start = np.array([1.0, 0.0])
    stationary = np.array([5 / 8, 3 / 8])
    re01 = poisson_rer(1.0, 1.1)
    re005 = poisson_rer(1.0, 1.05)
    return [
        ("poisson_rer(1,1.1)", re01),
        ("poisson_rer(1,1.05)", re005),
        ("poisson_pathwise_re(T=10)", 10 * re01),
        ("quadratic_ratio(eps=0.1)", re01 / (0.5 * 0.1**2)),
        ("quadratic_ratio(eps=0.05)", re005 / (0.5 * 0.05**2)),
        ("mass_action_A+B(k=2,xA=3,xB=5)", 2.0 * 3 * 5),
        ("mass_action_2A(k=1,xA=4)", float(math.comb(4, 2))),
        ("michaelis_menten(V=5,K=10,x=10)", 5.0 * 10 / (10 + 10)),
        ("two_state_marginal_step1_p0", float(exact_dtmc_marginals(base, start, 1)[1, 0])),
        ("two_state_stationary_p0", float(exact_dtmc_marginals(base, stationary, 5)[5, 0])),
        ("two_state_re(T=1)", exact_dtmc_pathwise_re(base, pert, start, start, 1)),
        ("two_state_re_enumerated(T=1)", enumerate_paths_re(base, pert, start, start, 1)),
        ("two_state_re(T=10)", exact_dtmc_pathwise_re(base, pert, start, start, 10)),
        ("two_state_re_enumerated(T=8)", enumerate_paths_re(base, pert, start, start, 8)),
        ("two_state_re(T=8)", exact_dtmc_pathwise_re(base, pert, start, start, 8)),
        ("bernoulli_fisher(0.3)", 1 / (0.3 * 0.7)),
        ("ou_second_moment(1,1,0,1)", ou_second_moment(1.0, 1.0, 0.0, 1.0)),
        ("ou_ire(1,0.1,1,0,1)", ou_ire(1.0, 0.1, 1.0, 0.0, 1.0)),
        ("ou_ifim(1,1,0,1)", ou_ifim(1.0, 1.0, 0.0, 1.0)),
        ("ou_stationary_ifim(1,1)", 1 / 2.0),
        ("point_mass_vs_half", math.log(2.0)),
    ]
