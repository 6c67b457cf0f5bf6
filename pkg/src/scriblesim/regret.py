"""Regret accounting, parameter policies, and regret bound calculators.

Regret is measured against the best fixed point for the linear part of the
losses: h = argmin_{x in K} sum_t theta_t' x, which for centrally symmetric
domains is available in closed form. Perturbations are accounted as the
adversary's budget spend, not as part of the comparator's loss, so reports
also expose the [measured - 2C, measured + 2C] interval that brackets the
purely linear notion of regret.

The bound calculators implement

    expected(T):  4 d sqrt(nu T log(1/delta))
                  + 2 C d (nu + 2 sqrt(nu)) (1 - delta) / delta
                  + delta G D T + 2 C

    high probability (level gamma), additionally paying

    S * (G D sqrt(8 T log(S / gamma)) + 2 G D log(S / gamma)),
    S = ceil(log(G D)) * ceil(log((G D)^2 T))

where D bounds the norm of every action. The second formula presumes
G * D > 1 (otherwise S degenerates) and raises ConfigurationError below that.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .geometry import Ball, Box, Domain
from .learner import RoundRecord

DELTA_MAX = 2.0 / 3.0

ETA_PRESETS = ("theory", "experiment", "theory_logT")


def linear_comparator(domain: Domain, theta_total: np.ndarray) -> np.ndarray:
    """argmin_{x in domain} theta_total' x.

    Ball: the point at radius D opposite theta_total (origin if the total
    vanishes). Box: each coordinate sits at the signed halfwidth opposing
    its coefficient; exactly zero coefficients pin the coordinate at 0,
    which is one of the minimizers.
    """
    theta_total = np.asarray(theta_total, dtype=float)
    if isinstance(domain, Ball):
        n = float(np.linalg.norm(theta_total))
        if n == 0.0:
            return np.zeros(domain.dim)
        return (-domain.radius / n) * theta_total
    if isinstance(domain, Box):
        return -domain.halfwidths * np.sign(theta_total)
    raise ConfigurationError(f"no comparator rule for {type(domain).__name__}")


@dataclass(frozen=True)
class RegretReport:
    """Per-round accounting of one episode against a fixed comparator."""

    comparator: np.ndarray
    comparator_loss: float          # sum_t theta_t' h
    cumulative_loss: np.ndarray     # running sum of observed f_t(y_t)
    regret: np.ndarray              # cumulative_loss - running comparator loss
    deviation_track: np.ndarray     # running sum of theta_t' (y_t - x_t)
    error_track: np.ndarray         # running sum of d sigma_t est_dir' (x_t - h)
    budget_used: float              # sum_t |sigma_t| actually applied

    @property
    def final_regret(self) -> float:
        return float(self.regret[-1])

    def corrected_interval(self, budget: float) -> tuple[float, float]:
        """Bracket on linear-loss regret: measured regret +- 2 * budget."""
        return self.final_regret - 2.0 * budget, self.final_regret + 2.0 * budget


def compute_regret(records: list[RoundRecord], oracle,
                   comparator: np.ndarray | None = None) -> RegretReport:
    """Score an episode's records against the linear comparator.

    Args:
        records: output of run_episode.
        oracle: the LossOracle the episode was played against (supplies the
            theta sequence and domain).
        comparator: override the default argmin of the summed thetas.

    Returns:
        RegretReport with full per-round tracks.
    """
    if not records:
        raise ConfigurationError("cannot score an empty episode")
    T = len(records)
    d = records[0].x.size
    thetas = oracle.linear.thetas[:T]
    if comparator is None:
        comparator = linear_comparator(oracle.domain, thetas.sum(axis=0))
    h = np.asarray(comparator, dtype=float)

    losses = np.array([r.loss for r in records])
    sigmas = np.array([r.sigma for r in records])
    comp_per_round = thetas @ h
    cum_loss = np.cumsum(losses)
    regret = cum_loss - np.cumsum(comp_per_round)

    ys = np.array([r.y for r in records])
    xs = np.array([r.x for r in records])
    deviation = np.cumsum(np.einsum("td,td->t", thetas, ys - xs))
    dirs = np.array([r.est_dir for r in records])
    error = np.cumsum(d * sigmas * np.einsum("td,td->t", dirs, xs - h))

    return RegretReport(comparator=h,
                        comparator_loss=float(comp_per_round.sum()),
                        cumulative_loss=cum_loss, regret=regret,
                        deviation_track=deviation, error_track=error,
                        budget_used=float(np.sum(np.abs(sigmas))))


def delta_policy(C: float, T: int) -> float:
    """Default shrinkage: 1/T^2 when the budget is zero, else C/T.

    The value is clamped into (0, 2/3]; a clamp emits a warning since it
    means the inputs left the regime the policy was derived for. Returning
    0 (baseline mode) is never done implicitly; that is an explicit config
    choice.
    """
    if T < 1:
        raise ConfigurationError(f"horizon must be >= 1, got {T}")
    if C < 0.0:
        raise ConfigurationError(f"budget must be >= 0, got {C}")
    delta = 1.0 / (T * T) if C == 0.0 else C / T
    if delta > DELTA_MAX:
        warnings.warn(
            f"delta policy value {delta:.6g} clamped to {DELTA_MAX:.6g}",
            RuntimeWarning, stacklevel=2)
        delta = DELTA_MAX
    return delta


def resolve_eta(eta, nu: float, delta: float, d: int, T: int) -> float:
    """Turn an eta setting (number or preset name) into a value.

    Presets:
        theory:       sqrt(nu * log(1/delta)) / (2 d sqrt(T))
        experiment:   sqrt(log(1/delta)) / (4 d sqrt(T))
        theory_logT:  sqrt(nu * log(T)) / (2 d sqrt(T)), the variant whose
                      tuning needs no delta knowledge.
    """
    if isinstance(eta, (int, float)) and not isinstance(eta, bool):
        if not (np.isfinite(eta) and eta > 0.0):
            raise ConfigurationError(f"eta must be positive, got {eta}")
        return float(eta)
    if eta == "theory":
        value = math.sqrt(nu * math.log(1.0 / delta)) / (2.0 * d * math.sqrt(T))
    elif eta == "experiment":
        value = math.sqrt(math.log(1.0 / delta)) / (4.0 * d * math.sqrt(T))
    elif eta == "theory_logT":
        value = math.sqrt(nu * math.log(T)) / (2.0 * d * math.sqrt(T))
    else:
        raise ConfigurationError(
            f"eta must be a positive number or one of {ETA_PRESETS}, got {eta!r}")
    if value <= 0.0:
        raise ConfigurationError(
            f"eta preset {eta!r} degenerates to {value} at delta={delta}, T={T}")
    return value


@dataclass(frozen=True)
class BoundInputs:
    """Inputs of the regret bound calculators.

    D is the norm bound on actions (ball radius; for a box, the halfwidth
    vector's Euclidean norm). gamma is only needed for the high-probability
    bound.
    """

    d: int
    nu: float
    T: int
    G: float
    D: float
    C: float
    delta: float
    gamma: float | None = None

    def __post_init__(self):
        if self.d < 1:
            raise ConfigurationError(f"d must be >= 1, got {self.d}")
        if self.nu <= 0.0:
            raise ConfigurationError(f"nu must be > 0, got {self.nu}")
        if self.T < 1:
            raise ConfigurationError(f"T must be >= 1, got {self.T}")
        if self.G < 0.0 or self.D <= 0.0 or self.C < 0.0:
            raise ConfigurationError("G, C must be >= 0 and D > 0")
        if not 0.0 < self.delta < 1.0:
            raise ConfigurationError(f"delta must lie in (0, 1), got {self.delta}")
        if self.gamma is not None and not 0.0 < self.gamma < 1.0:
            raise ConfigurationError(f"gamma must lie in (0, 1), got {self.gamma}")


def expected_bound(inputs: BoundInputs) -> float:
    """Expected-regret bound of the shrunk-domain learner at the theory eta."""
    b = inputs
    exploration = 4.0 * b.d * math.sqrt(b.nu * b.T * math.log(1.0 / b.delta))
    estimator_bias = 2.0 * b.C * b.d * (b.nu + 2.0 * math.sqrt(b.nu)) \
        * (1.0 - b.delta) / b.delta
    shrink_cost = b.delta * b.G * b.D * b.T
    direct = 2.0 * b.C
    return exploration + estimator_bias + shrink_cost + direct


def highprob_interval_count(inputs: BoundInputs) -> int:
    """S = ceil(log(GD)) * ceil(log((GD)^2 T)); requires G * D > 1."""
    gd = inputs.G * inputs.D
    if gd <= 1.0:
        raise ConfigurationError(
            f"high-probability bound needs G*D > 1, got G*D = {gd}")
    return math.ceil(math.log(gd)) * math.ceil(math.log(gd * gd * inputs.T))


def highprob_bound(inputs: BoundInputs) -> float:
    """High-probability regret bound at confidence level 1 - gamma."""
    if inputs.gamma is None:
        raise ConfigurationError("high-probability bound needs gamma")
    S = highprob_interval_count(inputs)
    gd = inputs.G * inputs.D
    log_term = math.log(S / inputs.gamma)
    martingale = S * (gd * math.sqrt(8.0 * inputs.T * log_term)
                      + 2.0 * gd * log_term)
    return expected_bound(inputs) + martingale
