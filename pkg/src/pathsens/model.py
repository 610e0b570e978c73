"""Parametrized stochastic models and their pointwise rate evaluations.

Three process classes are covered:

* reaction networks (continuous-time Markov chains) with mass-action and
  Michaelis-Menten propensities,
* discrete-time chains with an enumerable next-state support,
* drift/diffusion systems integrated by Euler-Maruyama.

All objects are immutable after construction.
"""
from __future__ import annotations

import json
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import (
    AbsoluteContinuityViolation,
    CountOverflow,
    ModelError,
    NetworkFormatError,
    ZeroPropensity,
)

INT64_MAX = np.iinfo(np.int64).max


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class ParameterVector:
    values: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        names = tuple(self.names)
        if values.size < 1:
            raise ModelError("parameter vector must have at least one entry")
        if len(names) != values.size:
            raise ModelError(f"{len(names)} names for {values.size} parameter values")
        if len(set(names)) != len(names):
            raise ModelError("parameter names must be unique")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ModelError(f"parameter values must be finite and strictly positive, got {values}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ModelError(f"unknown parameter {name!r}") from None

    def with_values(self, values) -> "ParameterVector":
        return ParameterVector(np.asarray(values, dtype=float), self.names)


@dataclass(frozen=True)
class Perturbation:
    """Additive perturbation of a parameter vector, ``theta + delta``."""

    delta: np.ndarray
    description: str = ""

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float).ravel()
        if not np.all(np.isfinite(delta)):
            raise ModelError("perturbation must be finite")
        delta.setflags(write=False)
        object.__setattr__(self, "delta", delta)
        if not self.description:
            moved = np.flatnonzero(delta)
            object.__setattr__(self, "description", "coords " + ",".join(map(str, moved)) if moved.size else "zero")

    @classmethod
    def single(cls, n_params: int, index: int, amount: float) -> "Perturbation":
        delta = np.zeros(n_params)
        delta[index] = amount
        return cls(delta, f"coord {index} by {amount:g}")

    @classmethod
    def relative(cls, theta, index: int, rel: float = 0.1) -> "Perturbation":
        """Perturb one coordinate by ``rel * theta[index]``."""
        theta = as_theta(theta)
        return cls.single(theta.size, index, rel * theta[index])

    def apply(self, theta) -> np.ndarray:
        theta = as_theta(theta)
        if self.delta.size != theta.size:
            raise ModelError(f"perturbation has length {self.delta.size}, parameters {theta.size}")
        out = theta + self.delta
        if np.any(out <= 0):
            raise ModelError("perturbed parameters must stay strictly positive")
        return out


def as_theta(theta) -> np.ndarray:
    """Coerce a ParameterVector or array-like into a positive float array."""
    if isinstance(theta, ParameterVector):
        return theta.values
    arr = np.asarray(theta, dtype=float).ravel()
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ModelError(f"parameter values must be finite and strictly positive, got {arr}")
    return arr


def as_delta(eps, n_params: int) -> np.ndarray:
    if isinstance(eps, Perturbation):
        delta = eps.delta
    else:
        delta = np.asarray(eps, dtype=float).ravel()
    if delta.size != n_params:
        raise ModelError(f"perturbation has length {delta.size}, parameters {n_params}")
    return delta


def perturbed(theta, eps) -> tuple[np.ndarray, np.ndarray]:
    theta = as_theta(theta)
    delta = as_delta(eps, theta.size)
    bar = theta + delta
    if np.any(bar <= 0):
        raise ModelError("perturbed parameters must stay strictly positive")
    return theta, bar


# ---------------------------------------------------------------------------
# reaction networks


@dataclass(frozen=True)
class MassAction:
    param: int
    reactants: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "reactants", tuple((int(s), int(o)) for s, o in self.reactants))
        if any(o < 1 for _, o in self.reactants):
            raise ModelError("reactant orders must be >= 1")


@dataclass(frozen=True)
class MichaelisMenten:
    V: int
    K: int
    substrate: int


RateLaw = MassAction | MichaelisMenten


@dataclass(frozen=True)
class Reaction:
    reactants: np.ndarray
    products: np.ndarray
    law: RateLaw

    def __post_init__(self):
        reactants = np.asarray(self.reactants, dtype=np.int64)
        products = np.asarray(self.products, dtype=np.int64)
        if reactants.shape != products.shape or reactants.ndim != 1:
            raise ModelError("reactants and products must be vectors of equal length")
        if np.any(reactants < 0) or np.any(products < 0):
            raise ModelError("stoichiometric counts must be nonnegative")
        if isinstance(self.law, MassAction):
            orders = np.zeros_like(reactants)
            for s, o in self.law.reactants:
                if not 0 <= s < reactants.size:
                    raise ModelError(f"species index {s} out of range")
                orders[s] += o
            if not np.array_equal(orders, reactants):
                raise ModelError("mass-action orders disagree with the reactant counts")
        for arr in (reactants, products):
            arr.setflags(write=False)
        object.__setattr__(self, "reactants", reactants)
        object.__setattr__(self, "products", products)

    @property
    def state_change(self) -> np.ndarray:
        return self.products - self.reactants

    @classmethod
    def mass_action(cls, n_species: int, reactants: dict[int, int], products: dict[int, int], param: int):
        r = np.zeros(n_species, dtype=np.int64)
        p = np.zeros(n_species, dtype=np.int64)
        for s, c in reactants.items():
            r[s] += c
        for s, c in products.items():
            p[s] += c
        return cls(r, p, MassAction(param, tuple(sorted(reactants.items()))))


@dataclass(frozen=True, eq=False)
class ReactionNetwork:
    """Species, reactions and parameter names; the generator of a CTMC.

    On construction the rate laws are compiled into flat integer tables
    (``kind``, ``rate_idx``, ``km_idx``, ``substrate``, ``react_species``,
    ``react_order``) shared by the vectorized evaluators and the SSA kernel.
    """

    species_names: tuple[str, ...]
    reactions: tuple[Reaction, ...]
    parameter_names: tuple[str, ...]
    kind: np.ndarray = field(init=False, repr=False)
    rate_idx: np.ndarray = field(init=False, repr=False)
    km_idx: np.ndarray = field(init=False, repr=False)
    substrate: np.ndarray = field(init=False, repr=False)
    react_species: np.ndarray = field(init=False, repr=False)
    react_order: np.ndarray = field(init=False, repr=False)
    change: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        species = tuple(self.species_names)
        reactions = tuple(self.reactions)
        params = tuple(self.parameter_names)
        object.__setattr__(self, "species_names", species)
        object.__setattr__(self, "reactions", reactions)
        object.__setattr__(self, "parameter_names", params)
        n, m, k = len(species), len(reactions), len(params)
        if n < 1 or m < 1:
            raise ModelError("a network needs at least one species and one reaction")
        if len(set(params)) != k:
            raise ModelError("parameter names must be unique")
        if len(set(species)) != n:
            raise ModelError("species names must be unique")

        kind = np.zeros(m, dtype=np.int64)
        rate_idx = np.zeros(m, dtype=np.int64)
        km_idx = np.full(m, -1, dtype=np.int64)
        substrate = np.full(m, -1, dtype=np.int64)
        width = max([len(r.law.reactants) for r in reactions if isinstance(r.law, MassAction)] + [1])
        react_species = np.full((m, width), -1, dtype=np.int64)
        react_order = np.zeros((m, width), dtype=np.int64)
        change = np.zeros((m, n), dtype=np.int64)
        for j, r in enumerate(reactions):
            if r.reactants.size != n:
                raise ModelError(f"reaction {j} has {r.reactants.size} species entries, network has {n}")
            change[j] = r.state_change
            law = r.law
            if isinstance(law, MassAction):
                _check_index(law.param, k, "parameter")
                rate_idx[j] = law.param
                for c, (s, o) in enumerate(law.reactants):
                    react_species[j, c] = s
                    react_order[j, c] = o
            elif isinstance(law, MichaelisMenten):
                _check_index(law.V, k, "parameter")
                _check_index(law.K, k, "parameter")
                _check_index(law.substrate, n, "species")
                kind[j] = 1
                rate_idx[j] = law.V
                km_idx[j] = law.K
                substrate[j] = law.substrate
            else:
                raise ModelError(f"unknown rate law {law!r}")
        for name, arr in [("kind", kind), ("rate_idx", rate_idx), ("km_idx", km_idx),
                          ("substrate", substrate), ("react_species", react_species),
                          ("react_order", react_order), ("change", change)]:
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_species(self) -> int:
        return len(self.species_names)

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    @property
    def n_params(self) -> int:
        return len(self.parameter_names)

    def species_index(self, name: str) -> int:
        try:
            return self.species_names.index(name)
        except ValueError:
            raise ModelError(f"unknown species {name!r}") from None

    def param_index(self, name: str) -> int:
        try:
            return self.parameter_names.index(name)
        except ValueError:
            raise ModelError(f"unknown parameter {name!r}") from None


def _check_index(i: int, bound: int, what: str):
    if not 0 <= i < bound:
        raise ModelError(f"{what} index {i} out of range [0, {bound})")


def as_counts(x, n_species: int | None = None) -> np.ndarray:
    arr = np.asarray(x)
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.round(arr)):
            raise ModelError("molecule counts must be integers")
    arr = arr.astype(np.int64)
    if np.any(arr < 0):
        raise ModelError("molecule counts must be nonnegative")
    if n_species is not None and arr.shape[-1] != n_species:
        raise ModelError(f"state has {arr.shape[-1]} species, network has {n_species}")
    return arr


# ---------------------------------------------------------------------------
# propensities


def _comb_exact(n: int, k: int) -> int:
    c = math.comb(n, k)
    if c > INT64_MAX:
        raise CountOverflow(f"C({n}, {k}) overflows int64")
    return c


def propensity(net: ReactionNetwork, theta, x, j: int) -> float:
    """Propensity of reaction ``j`` at count state ``x``."""
    theta = as_theta(theta)
    x = as_counts(x, net.n_species)
    _check_index(j, net.n_reactions, "reaction")
    if net.kind[j] == 0:
        value = 1
        for s, o in zip(net.react_species[j], net.react_order[j]):
            if s < 0:
                break
            value *= _comb_exact(int(x[s]), int(o))
            if value > INT64_MAX:
                raise CountOverflow("mass-action count factor overflows int64")
        return float(theta[net.rate_idx[j]] * value)
    xa = float(x[net.substrate[j]])
    return float(theta[net.rate_idx[j]] * xa / (theta[net.km_idx[j]] + xa))


def total_rate(net: ReactionNetwork, theta, x) -> float:
    return float(propensities(net, theta, x).sum())


def _binomial_float(counts: np.ndarray, order: int) -> np.ndarray:
    # falling factorial / order!; exact zero when counts < order
    out = np.ones(counts.shape, dtype=float)
    for i in range(order):
        out *= counts - i
    return out / math.factorial(order)


def propensities(net: ReactionNetwork, theta, X) -> np.ndarray:
    """All propensities at one state (shape ``(M,)``) or a batch (``(S, M)``)."""
    theta = as_theta(theta)
    X = as_counts(X, net.n_species)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    _guard_overflow(net, X2)
    Xf = X2.astype(float)
    A = np.empty((X2.shape[0], net.n_reactions))
    for j in range(net.n_reactions):
        if net.kind[j] == 0:
            a = np.full(X2.shape[0], theta[net.rate_idx[j]])
            for s, o in zip(net.react_species[j], net.react_order[j]):
                if s < 0:
                    break
                a = a * _binomial_float(Xf[:, s], int(o))
        else:
            xa = Xf[:, net.substrate[j]]
            a = theta[net.rate_idx[j]] * xa / (theta[net.km_idx[j]] + xa)
        A[:, j] = a
    return A[0] if single else A


def _guard_overflow(net: ReactionNetwork, X: np.ndarray):
    if X.size == 0:
        return
    max_order = int(net.react_order.max(initial=0))
    if max_order < 2:
        return
    top = int(X.max())
    if top > 0 and _comb_safe_bound(max_order) < top:
        raise CountOverflow(f"count {top} too large for order-{max_order} mass-action factor")


def _comb_safe_bound(order: int) -> int:
    # largest n with C(n, order) <= INT64_MAX, found by bisection
    lo, hi = order, 2**63
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if math.comb(mid, order) <= INT64_MAX:
            lo = mid
        else:
            hi = mid - 1
    return lo


def grad_log_propensity(net: ReactionNetwork, theta, x, j: int) -> np.ndarray:
    """Gradient of ``log a_j`` in the parameters; dense vector of length K."""
    theta = as_theta(theta)
    if propensity(net, theta, x, j) <= 0:
        raise ZeroPropensity(f"reaction {j} has zero propensity; skip the channel")
    x = as_counts(x, net.n_species)
    g = np.zeros(theta.size)
    if net.kind[j] == 0:
        g[net.rate_idx[j]] += 1.0 / theta[net.rate_idx[j]]
    else:
        xa = float(x[net.substrate[j]])
        g[net.rate_idx[j]] += 1.0 / theta[net.rate_idx[j]]
        g[net.km_idx[j]] += -1.0 / (theta[net.km_idx[j]] + xa)
    return g


def log_propensity_terms(net: ReactionNetwork, theta, X) -> list[tuple[int, int, np.ndarray]]:
    """Sparse pieces of ``sum_j a_j grad log a_j grad log a_j^T`` over a batch.

    Returns ``(p, q, values)`` triples, ``values`` of shape ``(S,)``, whose
    sum over triples (accumulated into entry ``[p, q]``) is the instantaneous
    Fisher information at every state of ``X``.  Only nonzero-gradient pairs
    are emitted, which keeps memory at O(S * M) for large parameter sets.
    """
    theta = as_theta(theta)
    X = np.atleast_2d(as_counts(X, net.n_species))
    A = propensities(net, theta, X)
    terms = []
    for j in range(net.n_reactions):
        a = A[:, j]
        v = net.rate_idx[j]
        gv = 1.0 / theta[v]
        if net.kind[j] == 0:
            terms.append((v, v, a * gv * gv))
            continue
        km = net.km_idx[j]
        gk = -1.0 / (theta[km] + X[:, net.substrate[j]].astype(float))
        if v == km:
            g = gv + gk
            terms.append((v, v, a * g * g))
            continue
        terms.append((v, v, a * gv * gv))
        terms.append((km, km, a * gk * gk))
        cross = a * gv * gk
        terms.append((v, km, cross))
        terms.append((km, v, cross))
    return terms


def propensity_log_ratio(net: ReactionNetwork, theta, eps, x, j: int) -> float:
    theta, bar = perturbed(theta, eps)
    a = propensity(net, theta, x, j)
    b = propensity(net, bar, x, j)
    if a == 0 and b == 0:
        return 0.0
    if a == 0 or b == 0:
        raise AbsoluteContinuityViolation(f"reaction {j}: propensities {a} vs {b}")
    return math.log(a / b)


# ---------------------------------------------------------------------------
# discrete-time chains


class DtmcModel(ABC):
    """Parametrized transition kernel with a finite, enumerable next-state support."""

    n_params: int

    @abstractmethod
    def support(self, theta, x) -> tuple[np.ndarray, np.ndarray]:
        """Next states reachable from ``x`` and their (positive) probabilities."""

    @abstractmethod
    def grad_log_density(self, theta, x) -> np.ndarray:
        """``grad_theta log p(x, x')`` for every ``x'`` in ``support``; shape ``(n, K)``."""

    def log_density(self, theta, x, x_next) -> float:
        states, probs = self.support(theta, x)
        hit = np.flatnonzero(states == x_next)
        if hit.size == 0:
            return -math.inf
        return float(np.log(probs[hit[0]]))

    def sample_next(self, theta, x, rng: np.random.Generator):
        states, probs = self.support(theta, x)
        u = rng.random()
        i = int(np.searchsorted(np.cumsum(probs), u, side="right"))
        return states[min(i, len(states) - 1)]


@dataclass(frozen=True, eq=False)
class ParametricDtmc(DtmcModel):
    """Finite-state chain whose transition matrix is a smooth function of theta.

    ``matrix(theta)`` returns the ``(n, n)`` transition matrix and
    ``matrix_grad(theta)`` the ``(n, n, K)`` tensor of partial derivatives.
    """

    n_states: int
    n_params: int
    matrix: Callable[[np.ndarray], np.ndarray]
    matrix_grad: Callable[[np.ndarray], np.ndarray]

    def transition(self, theta) -> np.ndarray:
        P = np.asarray(self.matrix(as_theta(theta)), dtype=float)
        if P.shape != (self.n_states, self.n_states):
            raise ModelError(f"transition matrix has shape {P.shape}")
        if np.any(P < 0) or np.any(P > 1) or np.max(np.abs(P.sum(axis=1) - 1)) > 1e-12:
            raise ModelError("transition matrix rows must be probability vectors")
        return P

    def support(self, theta, x):
        row = self.transition(theta)[int(x)]
        states = np.flatnonzero(row > 0)
        return states, row[states]

    def grad_log_density(self, theta, x):
        theta = as_theta(theta)
        row = self.transition(theta)[int(x)]
        states = np.flatnonzero(row > 0)
        G = np.asarray(self.matrix_grad(theta), dtype=float)[int(x)]
        return G[states] / row[states, None]


def two_state_chain() -> ParametricDtmc:
    """Chain on {0, 1} parametrized directly by theta = (p(0,1), p(1,0))."""

    def matrix(theta):
        a, b = theta
        return np.array([[1 - a, a], [b, 1 - b]])

    def grad(theta):
        G = np.zeros((2, 2, 2))
        G[0, 0, 0], G[0, 1, 0] = -1.0, 1.0
        G[1, 0, 1], G[1, 1, 1] = 1.0, -1.0
        return G

    return ParametricDtmc(2, 2, matrix, grad)


# ---------------------------------------------------------------------------
# SDEs


@dataclass(frozen=True, eq=False)
class SdeModel:
    """``dX = b(theta, X) dt + sigma(X) dW`` in dimension ``d``.

    The callables act on batches: ``x`` has shape ``(..., d)``; ``drift``
    returns ``(..., d)``, ``drift_jacobian`` ``(..., d, K)`` and
    ``diffusion`` ``(..., d, d)``.  Invertibility of ``sigma`` is a model
    assumption checked lazily when a solve is attempted.
    """

    dimension: int
    n_params: int
    drift: Callable[[np.ndarray, np.ndarray], np.ndarray]
    drift_jacobian: Callable[[np.ndarray, np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]


def ornstein_uhlenbeck(sigma: float = 1.0) -> SdeModel:
    """One-dimensional ``dX = -theta X dt + sigma dW`` with theta = (rate,)."""

    def drift(theta, x):
        return -theta[0] * x

    def jac(theta, x):
        return -x[..., None]

    def diffusion(x):
        return np.full(x.shape + (1,), sigma, dtype=float)

    return SdeModel(1, 1, drift, jac, diffusion)


def brownian(dimension: int = 1, sigma: float = 1.0, n_params: int = 1) -> SdeModel:
    """Driftless Brownian motion (parameters are inert)."""

    def drift(theta, x):
        return np.zeros_like(x, dtype=float)

    def jac(theta, x):
        return np.zeros(x.shape + (n_params,))

    def diffusion(x):
        eye = np.eye(dimension) * sigma
        return np.broadcast_to(eye, x.shape[:-1] + (dimension, dimension))

    return SdeModel(dimension, n_params, drift, jac, diffusion)


# ---------------------------------------------------------------------------
# network definition files


@dataclass(frozen=True, eq=False)
class NetworkFile:
    network: ReactionNetwork
    theta: ParameterVector
    initial: np.ndarray
    # species index -> Poisson mean, for species whose initial count is random
    initial_poisson: dict[int, float]
    sha256: str


_LAW_KEYS = {"massAction": {"param"}, "michaelisMenten": {"V", "K", "substrate"}}


def _reject_unknown(obj: dict, allowed: set[str], where: str):
    if not isinstance(obj, dict):
        raise NetworkFormatError(f"{where}: expected an object")
    extra = set(obj) - allowed
    if extra:
        raise NetworkFormatError(f"{where}: unknown keys {sorted(extra)}")
    missing = allowed - set(obj)
    if missing:
        raise NetworkFormatError(f"{where}: missing keys {sorted(missing)}")


def parse_network(doc: dict, sha256: str = "") -> NetworkFile:
    """Build a network from the JSON schema; names are resolved to indices."""
    _reject_unknown(doc, {"species", "parameters", "reactions"}, "top level")
    species, initial, poisson = [], [], {}
    for i, s in enumerate(doc["species"]):
        _reject_unknown(s, {"name", "initial"}, f"species[{i}]")
        species.append(str(s["name"]))
        init = s["initial"]
        if isinstance(init, dict):
            _reject_unknown(init, {"poisson"}, f"species[{i}].initial")
            mean = float(init["poisson"])
            if not mean > 0:
                raise ModelError(f"species[{i}]: Poisson mean must be positive")
            poisson[i] = mean
            initial.append(0)
        else:
            if not isinstance(init, int) or isinstance(init, bool) or init < 0:
                raise ModelError(f"species[{i}]: initial count must be a nonnegative integer")
            initial.append(init)
    names, values = [], []
    for i, p in enumerate(doc["parameters"]):
        _reject_unknown(p, {"name", "value"}, f"parameters[{i}]")
        names.append(str(p["name"]))
        values.append(float(p["value"]))
    if len(set(species)) != len(species):
        raise ModelError("species names must be unique")
    if len(set(names)) != len(names):
        raise ModelError("parameter names must be unique")
    s_idx = {n: i for i, n in enumerate(species)}
    p_idx = {n: i for i, n in enumerate(names)}

    def sp(name, where):
        if name not in s_idx:
            raise ModelError(f"{where}: unknown species {name!r}")
        return s_idx[name]

    def pa(name, where):
        if name not in p_idx:
            raise ModelError(f"{where}: unknown parameter {name!r}")
        return p_idx[name]

    reactions = []
    n = len(species)
    for j, r in enumerate(doc["reactions"]):
        where = f"reactions[{j}]"
        _reject_unknown(r, {"reactants", "products", "law"}, where)
        reac = np.zeros(n, dtype=np.int64)
        prod = np.zeros(n, dtype=np.int64)
        for target, table in ((reac, r["reactants"]), (prod, r["products"])):
            if not isinstance(table, dict):
                raise NetworkFormatError(f"{where}: stoichiometry must be an object")
            for name, count in table.items():
                if not isinstance(count, int) or isinstance(count, bool) or count < 0:
                    raise ModelError(f"{where}: stoichiometric count must be a nonnegative integer")
                target[sp(name, where)] += count
        law = r["law"]
        if not isinstance(law, dict) or len(law) != 1 or next(iter(law)) not in _LAW_KEYS:
            raise NetworkFormatError(f"{where}: law must be one of {sorted(_LAW_KEYS)}")
        key, body = next(iter(law.items()))
        _reject_unknown(body, _LAW_KEYS[key], f"{where}.law.{key}")
        if key == "massAction":
            pairs = tuple((int(s), int(c)) for s, c in enumerate(reac) if c > 0)
            rl = MassAction(pa(body["param"], where), pairs)
        else:
            rl = MichaelisMenten(pa(body["V"], where), pa(body["K"], where), sp(body["substrate"], where))
        reactions.append(Reaction(reac, prod, rl))
    net = ReactionNetwork(tuple(species), tuple(reactions), tuple(names))
    theta = ParameterVector(np.array(values), tuple(names))
    return NetworkFile(net, theta, np.array(initial, dtype=np.int64), poisson, sha256)


def load_network(path: str | Path) -> NetworkFile:
    import hashlib

    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise NetworkFormatError(f"{path}: {exc}") from None
    return parse_network(doc, hashlib.sha256(raw).hexdigest())


def fixture_path(name: str) -> Path:
    """Path of a network shipped with the package (``poisson``, ``birthdeath``, ...)."""
    here = Path(__file__).parent / "fixtures"
    p = here / (name if name.endswith(".json") else name + ".json")
    if not p.exists():
        raise FileNotFoundError(p)
    return p


def network_from_reactions(species: Sequence[str], params: Sequence[str],
                           reactions: Sequence[tuple[dict, dict, RateLaw]]) -> ReactionNetwork:
    """Convenience builder taking ``(reactants, products, law)`` triples keyed by species index."""
    n = len(species)
    built = []
    for reac, prod, law in reactions:
        r = np.zeros(n, dtype=np.int64)
        p = np.zeros(n, dtype=np.int64)
        for s, c in reac.items():
            r[s] += c
        for s, c in prod.items():
            p[s] += c
        built.append(Reaction(r, p, law))
    return ReactionNetwork(tuple(species), tuple(built), tuple(params))
