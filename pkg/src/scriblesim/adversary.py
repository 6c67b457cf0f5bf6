"""Loss generators: approximately linear sequences and a lower-bound adversary.

A loss here is f_t(y) = theta_t' y + sigma_t(y): a linear part with
||theta_t|| <= G plus a per-round perturbation whose absolute values are
globally limited by a budget C. The BudgetAccountant enforces the budget by
clipping each charge toward zero once the running total would exceed C, so
sum_t |sigma_t| <= C holds no matter what a schedule asks for.

BlackBoxAdversary implements the information-theoretic hard instance for
value-only access: it answers every query with the same constant +epsilon
and only afterwards commits to a hidden point (never queried, never the
reported optimum) where the function dips to -epsilon. Any algorithm that
only saw constants cannot certify a gap smaller than 2 * epsilon.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, DomainError, ProtocolError
from .geometry import AnyDomain, Ball, Box, Domain
from .rng import RngStream, sample_unit_sphere

NORM_RTOL = 1e-9
BUDGET_TOL = 1e-12


class LossEval(NamedTuple):
    """Loss at a query point, split into its parts (total = linear + sigma)."""

    total: float
    linear: float
    sigma: float


@dataclass(frozen=True)
class LinearLossSequence:
    """A fixed (oblivious) sequence theta_1..theta_T with ||theta_t|| <= G."""

    thetas: np.ndarray
    bound: float

    def __post_init__(self):
        th = np.asarray(self.thetas, dtype=float)
        if th.ndim != 2:
            raise ConfigurationError("thetas must have shape (T, d)")
        if self.bound < 0.0:
            raise ConfigurationError(f"norm bound must be >= 0, got {self.bound}")
        norms = np.linalg.norm(th, axis=1)
        worst = float(norms.max(initial=0.0))
        if worst > self.bound * (1.0 + NORM_RTOL) + BUDGET_TOL:
            raise ConfigurationError(
                f"theta norm {worst} exceeds bound {self.bound}")
        object.__setattr__(self, "thetas", th)

    @property
    def horizon(self) -> int:
        return self.thetas.shape[0]

    @property
    def dim(self) -> int:
        return self.thetas.shape[1]

    def theta(self, t: int) -> np.ndarray:
        """Round-t vector, rounds numbered from 1."""
        if not 1 <= t <= self.horizon:
            raise ConfigurationError(f"round {t} outside 1..{self.horizon}")
        return self.thetas[t - 1]

    @property
    def total(self) -> np.ndarray:
        return self.thetas.sum(axis=0)


def gen_linear_sequence(rng: RngStream, T: int, d: int, G: float) -> LinearLossSequence:
    """Draw theta_t = r_t * u_t with u_t uniform on the sphere, r_t ~ U[0, G]."""
    if T < 1:
        raise ConfigurationError(f"horizon must be >= 1, got {T}")
    if G < 0.0:
        raise ConfigurationError(f"G must be >= 0, got {G}")
    u = sample_unit_sphere(rng, d, n=T)
    r = rng.uniform(0.0, G, size=T)
    return LinearLossSequence(thetas=r[:, None] * u, bound=G)


@dataclass(frozen=True)
class NoPerturbation:
    """sigma_t = 0 for every round."""


@dataclass(frozen=True, eq=False)
class SinusoidalPerturbation:
    """sigma(y) = epsilon * sin(pi * y'direction), plus `offset` whenever the
    query's domain gauge reaches boundary_threshold.

    Raw values are capped at |sigma| <= 1 + offset before budget accounting
    so a single round stays finite-scale; set per_round_cap to override.
    """

    epsilon: float
    direction: np.ndarray
    offset: float = 0.0
    boundary_threshold: float = 0.95
    per_round_cap: float | None = None

    def __post_init__(self):
        if self.epsilon < 0.0:
            raise ConfigurationError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0.0 < self.boundary_threshold <= 1.0:
            raise ConfigurationError("boundary_threshold must lie in (0, 1]")
        object.__setattr__(self, "direction",
                           np.asarray(self.direction, dtype=float))

    @property
    def cap(self) -> float:
        return (1.0 + abs(self.offset)) if self.per_round_cap is None \
            else self.per_round_cap

    def raw(self, y: np.ndarray, gauge: float) -> float:
        s = self.epsilon * float(np.sin(np.pi * float(y @ self.direction)))
        if gauge >= self.boundary_threshold:
            s += self.offset
        return s


@dataclass(frozen=True)
class SpikePerturbation:
    """Explicit per-round raw values: {round -> sigma}; zero elsewhere.

    The default per-round cap of 1 keeps single rounds finite-scale; set
    per_round_cap (possibly to inf) to let spikes concentrate the budget
    in fewer rounds.
    """

    magnitudes: dict[int, float]
    per_round_cap: float | None = None

    @property
    def cap(self) -> float:
        return 1.0 if self.per_round_cap is None else self.per_round_cap

    def raw(self, t: int) -> float:
        return float(self.magnitudes.get(t, 0.0))


PerturbationKind = NoPerturbation | SinusoidalPerturbation | SpikePerturbation


@dataclass(frozen=True)
class PerturbationSchedule:
    """A perturbation shape plus the budget C it must respect.

    The regime constraint C <= (2/3) * T is rechecked against the actual
    horizon when the schedule is attached to an oracle; allow_large_budget
    downgrades that failure to a warning.
    """

    kind: PerturbationKind
    budget: float
    allow_large_budget: bool = False

    def __post_init__(self):
        if self.budget < 0.0 or not np.isfinite(self.budget):
            raise ConfigurationError(f"budget must be finite and >= 0, got {self.budget}")


class BudgetAccountant:
    """Tracks spent perturbation budget; clips charges toward zero at the cap.

    used is monotone and never exceeds the budget (up to BUDGET_TOL float
    slack). clip_events counts budget clips, cap_events per-round caps.
    """

    def __init__(self, budget: float):
        if budget < 0.0:
            raise ConfigurationError(f"budget must be >= 0, got {budget}")
        self.budget = float(budget)
        self.used = 0.0
        self.clip_events = 0
        self.cap_events = 0

    def charge(self, raw: float, cap: float | None = None) -> float:
        """Return the sigma actually applied for a requested raw value."""
        s = float(raw)
        if cap is not None and abs(s) > cap:
            s = np.copysign(cap, s)
            self.cap_events += 1
        allowed = max(self.budget - self.used, 0.0)
        if abs(s) > allowed:
            s = np.copysign(allowed, s)
            self.clip_events += 1
        self.used += abs(s)
        return s


def evaluate_perturbation(schedule: PerturbationSchedule,
                          accountant: BudgetAccountant,
                          domain: AnyDomain, y: np.ndarray, t: int) -> float:
    """Applied sigma_t(y): the schedule's raw value after cap and budget clip."""
    kind = schedule.kind
    if isinstance(kind, NoPerturbation):
        return 0.0
    if isinstance(kind, SinusoidalPerturbation):
        raw = kind.raw(y, domain.gauge(y))
        return accountant.charge(raw, cap=kind.cap)
    if isinstance(kind, SpikePerturbation):
        return accountant.charge(kind.raw(t), cap=kind.cap)
    raise ConfigurationError(f"unknown perturbation kind {type(kind).__name__}")


class LossOracle:
    """Oblivious loss sequence f_t(y) = theta_t' y + sigma_t(y) over a domain.

    The linear sequence and schedule are fixed up front; only the budget
    accountant is stateful. Use fresh() to replay the same losses against
    another learner with an untouched budget.
    """

    def __init__(self, linear: LinearLossSequence,
                 schedule: PerturbationSchedule, domain: Domain):
        if linear.dim != domain.dim:
            raise ConfigurationError(
                f"sequence dim {linear.dim} != domain dim {domain.dim}")
        budget_cap = (2.0 / 3.0) * linear.horizon
        if schedule.budget > budget_cap and not isinstance(schedule.kind, NoPerturbation):
            if not schedule.allow_large_budget:
                raise ConfigurationError(
                    f"budget {schedule.budget} exceeds (2/3)*T = {budget_cap}; "
                    "set allow_large_budget to override")
            warnings.warn(
                f"budget {schedule.budget} exceeds (2/3)*T = {budget_cap}",
                RuntimeWarning, stacklevel=2)
        self.linear = linear
        self.schedule = schedule
        self.domain = domain
        self.accountant = BudgetAccountant(schedule.budget)

    @property
    def horizon(self) -> int:
        return self.linear.horizon

    def fresh(self) -> "LossOracle":
        """Same losses, new accountant; for paired runs against the same sequence."""
        return LossOracle(self.linear, self.schedule, self.domain)

    def evaluate(self, y: np.ndarray, t: int) -> LossEval:
        """Loss at query y in round t; y must belong to the domain."""
        y = np.asarray(y, dtype=float)
        if not self.domain.contains(y):
            raise DomainError(
                f"query gauge {self.domain.gauge(y):.17g} > 1 at round {t}")
        lin = float(self.linear.theta(t) @ y)
        sig = evaluate_perturbation(self.schedule, self.accountant,
                                    self.domain, y, t)
        return LossEval(total=lin + sig, linear=lin, sigma=sig)


class BlackBoxAdversary:
    """Value-only adversary that defers choosing where its minimum sits.

    query() always returns +epsilon. finalize(x_hat) then draws the hidden
    dip point z uniformly from the domain, redrawing on the (measure-zero)
    event that z collides bit-for-bit with a queried point or with x_hat,
    and returns the certified gap f(x_hat) - f(z) = 2 * epsilon exactly.
    """

    def __init__(self, domain: Domain, epsilon: float, rng: RngStream):
        if epsilon <= 0.0:
            raise ConfigurationError(f"epsilon must be > 0, got {epsilon}")
        self.domain = domain
        self.epsilon = float(epsilon)
        self.rng = rng
        self.queried: set[bytes] = set()
        self.query_count = 0
        self.hidden_point: np.ndarray | None = None

    @property
    def finalized(self) -> bool:
        return self.hidden_point is not None

    def query(self, x: np.ndarray) -> float:
        if self.finalized:
            raise ProtocolError("adversary already finalized; no more queries")
        x = np.asarray(x, dtype=float)
        if not self.domain.contains(x):
            raise DomainError("query outside the domain")
        self.queried.add(x.tobytes())
        self.query_count += 1
        return self.epsilon

    def finalize(self, x_hat: np.ndarray) -> float:
        """Commit to the hidden point and return the optimality gap at x_hat."""
        if self.finalized:
            raise ProtocolError("adversary already finalized")
        x_hat = np.asarray(x_hat, dtype=float)
        forbidden = self.queried | {x_hat.tobytes()}
        z = sample_uniform(self.domain, self.rng)
        while z.tobytes() in forbidden:
            z = sample_uniform(self.domain, self.rng)
        self.hidden_point = z
        # x_hat is not z, so f(x_hat) = +eps while f(z) = -eps.
        return self.epsilon - (-self.epsilon)

    def as_oracle(self, horizon: int) -> "_BlackBoxOracle":
        """Adapt to the run_episode oracle interface for the given horizon."""
        return _BlackBoxOracle(self, horizon)


class _BlackBoxOracle:
    def __init__(self, adversary: BlackBoxAdversary, horizon: int):
        self.adversary = adversary
        self.horizon = horizon

    def evaluate(self, y: np.ndarray, t: int) -> LossEval:
        v = self.adversary.query(y)
        return LossEval(total=v, linear=0.0, sigma=v)


def evaluate_loss(oracle: LossOracle, y: np.ndarray, t: int) -> LossEval:
    """Functional spelling of LossOracle.evaluate."""
    return oracle.evaluate(y, t)


def blackbox_query(adv: BlackBoxAdversary, x: np.ndarray) -> float:
    """Functional spelling of BlackBoxAdversary.query."""
    return adv.query(x)


def blackbox_finalize(adv: BlackBoxAdversary, x_hat: np.ndarray) -> float:
    """Functional spelling of BlackBoxAdversary.finalize."""
    return adv.finalize(x_hat)


def sample_uniform(domain: Domain, rng: RngStream) -> np.ndarray:
    """Uniform draw from a ball or box."""
    if isinstance(domain, Ball):
        u = sample_unit_sphere(rng, domain.dim)
        r = domain.radius * float(rng.uniform()) ** (1.0 / domain.dim)
        return r * u
    if isinstance(domain, Box):
        h = domain.halfwidths
        return rng.uniform(-1.0, 1.0, size=domain.dim) * h
    raise ConfigurationError(f"cannot sample uniformly from {type(domain).__name__}")
