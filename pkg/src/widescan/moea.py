"""Steady-state epsilon-dominance MOEA for two minimised objectives.

A fixed-size population and an epsilon-box archive co-evolve; each
iteration breeds exactly one offspring from a population parent (binary
dominance tournament) and an archive parent (uniform pick) using SBX
crossover and polynomial mutation.

Variables may be bounded intervals or circular (angles stored in
``[-pi, pi)``); circular variables wrap instead of being clipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Protocol, Sequence

import numpy as np

from .errors import ConfigError


def pareto_dominates(a, b) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    better = False
    for ai, bi in zip(a, b):
        if ai > bi:
            return False
        if ai < bi:
            better = True
    return better


box_dominates = pareto_dominates


@dataclass(frozen=True)
class EpsilonSpec:
    """Box sizes per objective, applied after dividing by ``scale``."""

    eps: tuple = (5e-3, 2.5e-2)
    scale: tuple = (1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        object.__setattr__(self, "scale", tuple(float(s) for s in self.scale))
        if len(self.eps) != len(self.scale):
            raise ConfigError("eps and scale must have the same length")
        if not all(e > 0 for e in self.eps) or not all(s > 0 for s in self.scale):
            raise ConfigError("epsilon values and normalisation scales must be positive")

    def normalize(self, f):
        return tuple(fi / si for fi, si in zip(f, self.scale))

    def box(self, f):
        return tuple(int(math.floor(fi / ei)) for fi, ei in zip(self.normalize(f), self.eps))

    def corner_distance(self, f, box=None):
        """Euclidean distance (normalised space) from ``f`` to its box's lower corner."""
        box = self.box(f) if box is None else box
        fn = self.normalize(f)
        return math.sqrt(sum((x - b * e) ** 2 for x, b, e in zip(fn, box, self.eps)))


def epsilon_box(f, eps: EpsilonSpec):
    return eps.box(f)


@dataclass(frozen=True, eq=False)
class Individual:
    x: np.ndarray
    f: tuple

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "f", tuple(float(v) for v in self.f))


class OfferResult(NamedTuple):
    accepted: bool
    evicted: tuple


class ParetoArchive:
    """Epsilon-box archive: at most one member per box, no member box-dominated by another."""

    def __init__(self, eps: EpsilonSpec):
        self.eps = eps
        self._by_box: dict[tuple, Individual] = {}

    def __len__(self):
        return len(self._by_box)

    def __iter__(self):
        return iter(self._by_box.values())

    def __getitem__(self, i):
        return self.members[i]

    @property
    def members(self) -> list[Individual]:
        return list(self._by_box.values())

    @property
    def boxes(self) -> list[tuple]:
        return list(self._by_box.keys())

    def objectives(self):
        return np.array([m.f for m in self], dtype=float).reshape(-1, len(self.eps.eps))

    def offer(self, cand: Individual) -> OfferResult:
        b = self.eps.box(cand.f)
        for ob in self._by_box:
            if box_dominates(ob, b):
                return OfferResult(False, ())
        evicted = tuple(self._by_box[ob] for ob in list(self._by_box) if box_dominates(b, ob))
        if evicted:
            for ob in [ob for ob in self._by_box if box_dominates(b, ob)]:
                del self._by_box[ob]
            self._by_box[b] = cand
            return OfferResult(True, evicted)
        inc = self._by_box.get(b)
        if inc is None:
            self._by_box[b] = cand
            return OfferResult(True, ())
        if pareto_dominates(cand.f, inc.f):
            replace = True
        elif pareto_dominates(inc.f, cand.f):
            replace = False
        else:
            replace = self.eps.corner_distance(cand.f, b) < self.eps.corner_distance(inc.f, b)
        if replace:
            self._by_box[b] = cand
            return OfferResult(True, (inc,))
        return OfferResult(False, ())


def archive_offer(archive: ParetoArchive, candidate: Individual) -> OfferResult:
    return archive.offer(candidate)


class Problem(Protocol):
    lower: np.ndarray
    upper: np.ndarray
    circular: np.ndarray

    def evaluate(self, x) -> tuple: ...


@dataclass(eq=False)
class FunctionProblem:
    """Adapter turning a plain callable into a :class:`Problem`."""

    func: object
    lower: np.ndarray
    upper: np.ndarray
    circular: np.ndarray | None = None

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.circular is None:
            self.circular = np.zeros(self.lower.size, dtype=bool)
        self.circular = np.asarray(self.circular, dtype=bool)

    def evaluate(self, x):
        return tuple(self.func(x))


@dataclass
class MoeaConfig:
    population_size: int = 50
    iterations: int = 1000
    eta_c: float = 15.0
    eta_m: float = 20.0
    mutation_prob: float | None = None  # None -> 1 / n_vars
    seed: int = 0

    def validate(self):
        if self.population_size < 2:
            raise ConfigError("population size must be at least 2")
        if self.iterations < 0:
            raise ConfigError("iteration budget must be non-negative")
        if not (self.eta_c > 0 and self.eta_m > 0):
            raise ConfigError("distribution indices must be positive")
        if self.mutation_prob is not None and not 0 <= self.mutation_prob <= 1:
            raise ConfigError("mutation probability must lie in [0, 1]")
        return self


def wrap_angle(x):
    """Map angles onto ``[-pi, pi)``."""
    return np.mod(np.asarray(x) + np.pi, 2 * np.pi) - np.pi


def sbx_child(p1, p2, lower, upper, circular, eta, rng):
    """One simulated-binary-crossover offspring (each variable crossed with probability 1/2)."""
    n = p1.size
    child = p1.copy()
    u_cross = rng.random(n)
    u_beta = rng.random(n)
    u_pick = rng.random(n)
    span = upper - lower
    p2 = np.where(circular, p1 + wrap_angle(p2 - p1), p2)
    for i in range(n):
        y1, y2 = min(p1[i], p2[i]), max(p1[i], p2[i])
        if u_cross[i] > 0.5 or y2 - y1 < 1e-14:
            continue
        u = u_beta[i]
        if circular[i]:
            if u <= 0.5:
                bq = (2 * u) ** (1 / (eta + 1))
            else:
                bq = (1 / (2 * (1 - u))) ** (1 / (eta + 1))
            c1 = 0.5 * ((y1 + y2) - bq * (y2 - y1))
            c2 = 0.5 * ((y1 + y2) + bq * (y2 - y1))
        else:
            d = y2 - y1
            out = []
            for beta in (1 + 2 * (y1 - lower[i]) / d, 1 + 2 * (upper[i] - y2) / d):
                alpha = 2 - beta ** -(eta + 1)
                if u <= 1 / alpha:
                    bq = (u * alpha) ** (1 / (eta + 1))
                else:
                    bq = (1 / (2 - u * alpha)) ** (1 / (eta + 1))
                out.append(bq)
            c1 = 0.5 * ((y1 + y2) - out[0] * d)
            c2 = 0.5 * ((y1 + y2) + out[1] * d)
        child[i] = c1 if u_pick[i] < 0.5 else c2
    child = np.where(circular, lower + np.mod(child - lower, span), np.clip(child, lower, upper))
    return child


def polynomial_mutation(x, lower, upper, circular, eta, prob, rng):
    n = x.size
    y = x.copy()
    u_mut = rng.random(n)
    u = rng.random(n)
    span = upper - lower
    for i in range(n):
        if u_mut[i] >= prob or span[i] <= 0:
            continue
        if circular[i]:
            if u[i] < 0.5:
                dq = (2 * u[i]) ** (1 / (eta + 1)) - 1
            else:
                dq = 1 - (2 * (1 - u[i])) ** (1 / (eta + 1))
            y[i] += 0.5 * dq * span[i]
        else:
            d1 = (y[i] - lower[i]) / span[i]
            d2 = (upper[i] - y[i]) / span[i]
            if u[i] < 0.5:
                val = 2 * u[i] + (1 - 2 * u[i]) * (1 - d1) ** (eta + 1)
                dq = val ** (1 / (eta + 1)) - 1
            else:
                val = 2 * (1 - u[i]) + 2 * (u[i] - 0.5) * (1 - d2) ** (eta + 1)
                dq = 1 - val ** (1 / (eta + 1))
            y[i] += dq * span[i]
    return np.where(circular, lower + np.mod(y - lower, span), np.clip(y, lower, upper))


@dataclass(eq=False)
class EpsilonMOEA:
    """Optimizer state. Call :meth:`initialize` once, then :meth:`step` repeatedly.

    ``seed_individuals`` are decision vectors that replace the first random
    individuals of the initial population.
    """

    problem: Problem
    config: MoeaConfig
    eps: EpsilonSpec
    seed_individuals: Sequence = ()
    rng: np.random.Generator | None = None
    archive: ParetoArchive = field(init=False)
    n_evaluations: int = field(init=False, default=0)

    def __post_init__(self):
        self.config.validate()
        self.rng = np.random.default_rng(self.config.seed if self.rng is None else self.rng)
        self.lower = np.asarray(self.problem.lower, dtype=float)
        self.upper = np.asarray(self.problem.upper, dtype=float)
        circ = getattr(self.problem, "circular", None)
        self.circular = np.zeros(self.lower.size, bool) if circ is None else np.asarray(circ, bool)
        self.n_vars = self.lower.size
        self.mutation_prob = self.config.mutation_prob
        if self.mutation_prob is None:
            self.mutation_prob = 1.0 / self.n_vars
        if len(self.seed_individuals) > self.config.population_size:
            raise ConfigError("more seed individuals than population slots")
        self.archive = ParetoArchive(self.eps)
        self.X = None
        self.F = None

    def _repair(self, x):
        repair = getattr(self.problem, "repair", None)
        return np.asarray(repair(x), dtype=float) if repair is not None else x

    def _evaluate(self, x):
        self.n_evaluations += 1
        return tuple(float(v) for v in self.problem.evaluate(x))

    def initialize(self):
        P = self.config.population_size
        X = self.lower + self.rng.random((P, self.n_vars)) * (self.upper - self.lower)
        for i, s in enumerate(self.seed_individuals):
            X[i] = np.asarray(getattr(s, "x", s), dtype=float)
        X = np.where(self.circular, wrap_angle(X), X)
        X = np.array([self._repair(x) for x in X])
        F = np.array([self._evaluate(x) for x in X])
        self.X, self.F = X, F
        for x, f in zip(X, F):
            self.archive.offer(Individual(x, f))
        return self

    def _tournament(self):
        a, b = self.rng.choice(self.config.population_size, size=2, replace=False)
        if pareto_dominates(self.F[a], self.F[b]):
            return a
        if pareto_dominates(self.F[b], self.F[a]):
            return b
        return a if self.rng.random() < 0.5 else b

    def step(self) -> Individual:
        """Breed, evaluate and integrate exactly one offspring."""
        if self.X is None:
            raise RuntimeError("initialize() must be called before step()")
        p = self._tournament()
        members = self.archive.members
        mate = members[int(self.rng.integers(len(members)))]
        child = sbx_child(self.X[p], mate.x, self.lower, self.upper, self.circular, self.config.eta_c, self.rng)
        child = polynomial_mutation(
            child, self.lower, self.upper, self.circular, self.config.eta_m, self.mutation_prob, self.rng
        )
        child = self._repair(child)
        f = self._evaluate(child)
        fa = np.asarray(f)
        le = np.all(fa <= self.F, axis=1) & np.any(fa < self.F, axis=1)
        ge = np.all(self.F <= fa, axis=1) & np.any(self.F < fa, axis=1)
        if le.any():
            slot = int(self.rng.choice(np.flatnonzero(le)))
        elif ge.any():
            slot = None
        else:
            slot = int(self.rng.integers(self.config.population_size))
        if slot is not None:
            self.X[slot] = child
            self.F[slot] = fa
        ind = Individual(child, f)
        self.archive.offer(ind)
        return ind

    def run(self) -> ParetoArchive:
        if self.X is None:
            self.initialize()
        for _ in range(self.config.iterations):
            self.step()
        return self.archive


def run(problem, config: MoeaConfig, eps: EpsilonSpec, seed_individuals=(), rng=None) -> ParetoArchive:
    """Initialise ``P`` individuals, perform ``C`` steady-state steps, return the archive."""
    return EpsilonMOEA(problem, config, eps, tuple(seed_individuals), rng).run()
