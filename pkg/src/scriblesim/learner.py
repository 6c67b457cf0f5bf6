"""Self-concordant barrier FTRL with one-point bandit gradient estimates.

One round of play has three phases, driven in order:

    propose_action   y_t = x_t + H(x_t)^{-1/2} mu_t,  mu_t uniform on sphere
    build_estimator  g_t = d * f_t(y_t) * H(x_t)^{1/2} mu_t
    ftrl_update      x_{t+1} = argmin_{x in U} eta * sum_{s<=t} g_s' x + R(x)

where R is the barrier of the full action set K and the update set U is
either K itself (delta = 0, the unshrunk baseline) or the (1 - delta)-scaled
copy of K. Driving the phases out of order raises ProtocolError.

For the ball and box domains the update argmin has a closed form (a 1-D
monotone equation per radius or per coordinate); a damped Newton fallback
with a fraction-to-boundary rule covers any future domain and doubles as a
cross-check target for the closed forms.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (ConfigurationError, InvariantError, ProtocolError,
                     SolverError)
from .geometry import (INTERIOR_GAUGE_MAX, AnyDomain, Ball, Barrier, Box,
                       Domain, ShrunkDomain, hessian_sqrt_pair, shrink)
from .rng import RngStream, sample_unit_sphere

# Tolerances for runtime invariants; generous relative to float accuracy so
# a trip always means a real bug.
DUAL_NORM_TOL = 1e-9
STEP_BOUND_TOL = 1e-9


@dataclass(frozen=True)
class LearnerConfig:
    """Static parameters of one learner instance.

    Attributes:
        domain: full action set K (ball or box).
        horizon: number of rounds T, >= 1.
        eta: FTRL step size, > 0.
        delta: shrinkage in [0, 2/3]; 0 selects the unshrunk baseline,
            which runs the identical code with update set K.
        solver_tolerance: KKT residual target of the Newton fallback.
    """

    domain: Domain
    horizon: int
    eta: float
    delta: float
    solver_tolerance: float = 1e-10

    def __post_init__(self):
        if isinstance(self.domain, ShrunkDomain):
            raise ConfigurationError("configure the full domain; shrinkage is delta's job")
        if self.horizon < 1:
            raise ConfigurationError(f"horizon must be >= 1, got {self.horizon}")
        if not (np.isfinite(self.eta) and self.eta > 0.0):
            raise ConfigurationError(f"eta must be positive, got {self.eta}")
        if not (0.0 <= self.delta <= 2.0 / 3.0):
            raise ConfigurationError(
                f"delta must lie in [0, 2/3], got {self.delta}")
        if self.solver_tolerance <= 0.0:
            raise ConfigurationError("solver_tolerance must be positive")

    @property
    def barrier(self) -> Barrier:
        return Barrier(self.domain)

    @property
    def update_set(self) -> AnyDomain:
        return shrink(self.domain, self.delta) if self.delta > 0.0 else self.domain

    @property
    def dim(self) -> int:
        return self.domain.dim


@dataclass
class LearnerState:
    """Mutable per-round state; create via init_learner."""

    config: LearnerConfig
    t: int
    x: np.ndarray
    grad_sum: np.ndarray
    hess: np.ndarray            # H(x)
    hess_inv_sqrt: np.ndarray   # H(x)^{-1/2}, the exploration map
    hess_sqrt: np.ndarray       # H(x)^{+1/2}, the estimator map
    phase: str = "propose"
    pending_mu: np.ndarray | None = None
    last_step_norm: float = 0.0

    def _require_phase(self, expected: str, op: str):
        if self.phase != expected:
            raise ProtocolError(
                f"{op} called in phase '{self.phase}' (expected '{expected}')")


@dataclass(frozen=True)
class RoundRecord:
    """Everything observed and played in one round."""

    t: int
    x: np.ndarray               # iterate the round started from
    mu: np.ndarray
    y: np.ndarray               # queried point x + H^{-1/2} mu
    loss: float                 # f_t(y_t) as returned by the oracle
    sigma: float                # perturbation component of the loss
    g: np.ndarray               # one-point gradient estimate
    est_dir: np.ndarray         # H(x)^{1/2} mu, i.e. g / (d * loss)
    step_local_norm: float      # ||x_{t+1} - x_t||_{x_t}
    dual_norm_dev: float        # | ||g||*_x - d|loss| |


def _refresh_geometry(state: LearnerState):
    state.hess = state.config.barrier.hessian(state.x)
    state.hess_inv_sqrt, state.hess_sqrt = hessian_sqrt_pair(state.hess)


def init_learner(config: LearnerConfig) -> LearnerState:
    """Start at the barrier minimizer of the update set.

    Both supported domains are centrally symmetric, so the minimizer of R
    over the update set is the origin whether or not shrinkage is active.
    """
    x = np.zeros(config.dim)
    state = LearnerState(config=config, t=1, x=x,
                         grad_sum=np.zeros(config.dim),
                         hess=np.empty(0), hess_inv_sqrt=np.empty(0),
                         hess_sqrt=np.empty(0))
    _refresh_geometry(state)
    return state


def propose_action(state: LearnerState, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """Draw mu on the unit sphere and return (y, mu) with y = x + H^{-1/2} mu.

    The query point lies in the Dikin ellipsoid of x and therefore in K;
    membership is re-checked and a failure raises InvariantError because it
    can only come from a Hessian or factorization bug.
    """
    state._require_phase("propose", "propose_action")
    mu = sample_unit_sphere(rng, state.config.dim)
    y = state.x + state.hess_inv_sqrt @ mu
    if not state.config.domain.contains(y):
        raise InvariantError(
            f"proposed point left the domain (gauge {state.config.domain.gauge(y):.17g})")
    state.pending_mu = mu
    state.phase = "estimate"
    return y, mu


def build_estimator(loss: float, state: LearnerState, mu: np.ndarray) -> np.ndarray:
    """One-point gradient estimate g = d * loss * H(x)^{1/2} mu.

    `mu` must be the direction returned by the matching propose_action call;
    the sqrt factor is reused from that round's eigendecomposition rather
    than refactorized.
    """
    state._require_phase("estimate", "build_estimator")
    if state.pending_mu is None or not np.array_equal(mu, state.pending_mu):
        raise ProtocolError("mu does not match the pending proposal")
    if not np.isfinite(loss):
        raise InvariantError(f"non-finite loss {loss}")
    d = state.config.dim
    est_dir = state.hess_sqrt @ mu
    g = (d * float(loss)) * est_dir
    state._last_est_dir = est_dir
    state.phase = "update"
    return g


def ftrl_update(state: LearnerState, g: np.ndarray) -> LearnerState:
    """Fold g into the running sum and move x to the new regularized argmin.

    Records the step's local norm at the outgoing iterate, then refreshes
    the Hessian factor pair at the incoming one.
    """
    state._require_phase("update", "ftrl_update")
    state.grad_sum = state.grad_sum + np.asarray(g, dtype=float)
    c = state.config.eta * state.grad_sum
    x_new = solve_ftrl(state.config.update_set, state.config.barrier, c,
                       tol=state.config.solver_tolerance)
    if not state.config.update_set.contains(x_new):
        raise InvariantError("FTRL solution left the update set")
    dx = x_new - state.x
    state.last_step_norm = float(np.sqrt(max(dx @ state.hess @ dx, 0.0)))
    state.x = x_new
    state.t += 1
    state.pending_mu = None
    _refresh_geometry(state)
    state.phase = "propose"
    return state


def _same_domain(a, b) -> bool:
    if a is b:
        return True
    if type(a) is not type(b):
        return False
    if isinstance(a, Ball):
        return a.radius == b.radius and a.dim == b.dim
    if isinstance(a, Box):
        return np.array_equal(a.halfwidths, b.halfwidths)
    return False


def solve_ftrl(update_set: AnyDomain, barrier: Barrier, c: np.ndarray,
               tol: float = 1e-10) -> np.ndarray:
    """argmin_{x in update_set} c'x + R(x) for the supported geometries.

    Ball: the objective is radially monotone around -c, so the minimizer is
    -r * c/||c|| with r solving 2r/(D^2 - r^2) = ||c||, clamped to the
    update set's radius:

        r = (sqrt(1 + ||c||^2 D^2) - 1) / ||c||

    Box: separable; per coordinate u solves c_i + 2u/(h_i^2 - u^2) = 0,
    clamped to the update set's halfwidth:

        u = (1 - sqrt(1 + c_i^2 h_i^2)) / c_i

    Shrunk sets may put the clamped solution exactly on their boundary;
    that point is still strictly interior to the full domain, whereas with
    an unshrunk update set the unclamped solution is already interior and
    the clamp (at a hair inside the boundary) exists only as float armor.
    """
    c = np.asarray(c, dtype=float)
    base = update_set.base if isinstance(update_set, ShrunkDomain) else update_set
    if not _same_domain(barrier.domain, base):
        raise ConfigurationError("barrier and update set disagree on the domain")
    scale = update_set.scale if isinstance(update_set, ShrunkDomain) else INTERIOR_GAUGE_MAX

    if isinstance(base, Ball):
        D = base.radius
        nc = float(np.linalg.norm(c))
        if nc == 0.0:
            return np.zeros(base.dim)
        r = (np.sqrt(1.0 + nc * nc * D * D) - 1.0) / nc
        r = min(r, scale * D)
        return (-r / nc) * c

    if isinstance(base, Box):
        h = base.halfwidths
        u = np.zeros(base.dim)
        nz = c != 0.0
        u[nz] = (1.0 - np.sqrt(1.0 + c[nz] ** 2 * h[nz] ** 2)) / c[nz]
        return np.clip(u, -scale * h, scale * h)

    return solve_ftrl_newton(update_set, barrier, c, tol=tol)


def solve_ftrl_newton(update_set: AnyDomain, barrier: Barrier, c: np.ndarray,
                      tol: float = 1e-10, max_iter: int = 200) -> np.ndarray:
    """Damped Newton solver for argmin c'x + R(x) over the update set.

    Geometry-agnostic fallback: steps are damped by the Newton decrement and
    additionally capped by a fraction-to-boundary rule that keeps iterates
    at central gauge <= INTERIOR_GAUGE_MAX of the update set. Terminates on
    a projected KKT residual (gradient norm, with the outward radial
    component dropped when the gauge cap is active).

    Raises:
        SolverError: residual above tol after max_iter iterations; the
            error carries the final residual.
    """
    c = np.asarray(c, dtype=float)
    x = np.zeros(update_set.dim)
    gauge_cap = INTERIOR_GAUGE_MAX
    residual = np.inf
    for _ in range(max_iter):
        grad = c + barrier.gradient(x)
        residual = float(np.linalg.norm(
            _drop_blocked(update_set, x, -grad, gauge_cap)))
        if residual <= tol:
            return x
        H = barrier.hessian(x)
        step = np.linalg.solve(H, -grad)
        step = _drop_blocked(update_set, x, step, gauge_cap)
        if not np.any(step):
            break
        lam = float(np.sqrt(max(step @ H @ step, 0.0)))
        s = 1.0 / (1.0 + lam)
        exit_u = update_set._ray_exit(x / gauge_cap, step / gauge_cap)
        if np.isfinite(exit_u):
            s = min(s, 0.999 * exit_u)
        x = x + s * step
    grad = c + barrier.gradient(x)
    residual = float(np.linalg.norm(
        _drop_blocked(update_set, x, -grad, gauge_cap)))
    if residual <= tol:
        return x
    raise SolverError(
        f"newton FTRL solve stalled at residual {residual:.3e} (tol {tol:.1e})",
        residual=residual)


def _drop_blocked(update_set: AnyDomain, x: np.ndarray, v: np.ndarray,
                  gauge_cap: float) -> np.ndarray:
    """Project v onto the directions that stay feasible from x.

    At faces of the update set that are active (within float slack of the
    gauge cap) only inward-pointing motion counts: for a box the outward
    coordinate components are zeroed face by face, for a ball (or any other
    gauge, treated radially) the outward radial component is removed.
    Applied both to Newton steps, so a single active face cannot truncate
    the whole step to nothing, and to -grad, giving the KKT residual.
    """
    base = update_set.base if isinstance(update_set, ShrunkDomain) else update_set
    scale = update_set.scale if isinstance(update_set, ShrunkDomain) else 1.0
    v = np.asarray(v, dtype=float).copy()
    if isinstance(base, Box):
        cap = gauge_cap * scale * base.halfwidths
        active = np.abs(x) >= cap - 1e-12 * base.halfwidths
        v[active & (v * np.sign(x) > 0.0)] = 0.0
        return v
    if np.any(x) and update_set.gauge(x) >= gauge_cap - 1e-12:
        outward = x / np.linalg.norm(x)
        comp = float(v @ outward)
        if comp > 0.0:
            v = v - comp * outward
    return v


def run_episode(config: LearnerConfig, oracle, rng: RngStream,
                strict_invariants: bool = False) -> list[RoundRecord]:
    """Play `config.horizon` rounds against a loss oracle.

    Args:
        config: learner parameters.
        oracle: object with `horizon` (int) and `evaluate(y, t)` returning
            an object with fields total, linear, sigma.
        rng: stream consumed only for the exploration directions mu_t.
        strict_invariants: when True, asserts the per-round step norm stays
            under 4*d*eta. Rounds with |f| > 1 can legitimately exceed that
            radius and only warn; a violation at |f| <= 1 raises
            InvariantError. When False the step norm is logged, not judged.

    Returns:
        One RoundRecord per round, in order.
    """
    if oracle.horizon < config.horizon:
        raise ProtocolError(
            f"oracle horizon {oracle.horizon} shorter than learner horizon {config.horizon}")
    state = init_learner(config)
    d = config.dim
    records: list[RoundRecord] = []
    for t in range(1, config.horizon + 1):
        x_before = state.x.copy()
        y, mu = propose_action(state, rng)
        ev = oracle.evaluate(y, t)
        g = build_estimator(ev.total, state, mu)
        dual = float(np.linalg.norm(state.hess_inv_sqrt @ g))
        target = d * abs(float(ev.total))
        dual_dev = abs(dual - target)
        if dual_dev > DUAL_NORM_TOL * max(1.0, target):
            raise InvariantError(
                f"dual norm identity broke at t={t}: ||g||*={dual:.17g}, d|f|={target:.17g}")
        est_dir = state._last_est_dir
        ftrl_update(state, g)
        step = state.last_step_norm
        if strict_invariants and step >= 4.0 * d * config.eta + STEP_BOUND_TOL:
            msg = (f"step norm {step:.6g} reached 4*d*eta = "
                   f"{4.0 * d * config.eta:.6g} at t={t} (|f|={abs(ev.total):.6g})")
            if abs(ev.total) <= 1.0:
                raise InvariantError(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
        records.append(RoundRecord(
            t=t, x=x_before, mu=mu, y=y, loss=float(ev.total),
            sigma=float(ev.sigma), g=g, est_dir=est_dir,
            step_local_norm=step, dual_norm_dev=dual_dev))
    return records


def best_iterate(records: list[RoundRecord]) -> np.ndarray:
    """Queried point with the lowest observed loss; ties go to the earliest round."""
    if not records:
        raise ConfigurationError("best_iterate needs at least one round")
    best = min(records, key=lambda r: (r.loss, r.t))
    return best.y
