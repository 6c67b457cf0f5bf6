"""Property checks behind `scriblesim verify`.

Each check runs a fixed-seed Monte Carlo (or a small deterministic episode)
against one of the mathematical facts the simulator relies on and reports a
worst-case margin. Margins for bound-type checks are max(lhs - rhs) over
the sample, so any positive value is a violation; other checks document
their margin in the detail string.

The FTRL cross-check deliberately re-solves the update through a plain 1-D
bisection on the stationarity condition rather than reusing the production
closed forms, so the two routes are independent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .adversary import (LossOracle, NoPerturbation, PerturbationSchedule,
                        SinusoidalPerturbation, SpikePerturbation,
                        BlackBoxAdversary, gen_linear_sequence)
from .errors import ConfigurationError
from .geometry import (Ball, Barrier, Box, ShrunkDomain, hessian_sqrt_pair,
                       local_norm, minkowski_gauge, shrink)
from .learner import (LearnerConfig, best_iterate, run_episode, solve_ftrl)
from .regret import compute_regret, delta_policy, resolve_eta
from .rng import RngStream, fork_stream, sample_unit_sphere

VERIFY_SEED = 20240917


@dataclass(frozen=True)
class CheckResult:
    name: str
    samples: int
    worst_margin: float
    passed: bool
    detail: str = ""

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: samples={self.samples}, "
                f"worst_margin={self.worst_margin:.3e}  {self.detail}")


def _domains(d: int = 5):
    return [Ball(radius=5.0, dim=d), Box(halfwidths=np.full(d, 2.0))]


def _sample_interior(rng: RngStream, domain, n: int, max_gauge: float = 0.999):
    """n points with a mix of moderate and near-boundary gauges."""
    d = domain.dim
    u = sample_unit_sphere(rng, d, n=n)
    g = rng.uniform(0.0, max_gauge, size=n)
    near = rng.uniform(size=n) < 0.3
    g[near] = max_gauge * (1.0 - 10.0 ** rng.uniform(-6.0, -1.0, size=int(near.sum())))
    if isinstance(domain, Ball):
        return (g * domain.radius)[:, None] * u
    # Project sphere directions onto the box's boundary shell, then scale in.
    w = u / np.max(np.abs(u / domain.halfwidths), axis=1, keepdims=True) \
        / domain.halfwidths
    return g[:, None] * w * domain.halfwidths


def check_barrier(seed: int = VERIFY_SEED, samples: int = 200) -> CheckResult:
    """Finite-difference agreement of barrier gradient (1e-5) and Hessian (1e-4)."""
    rng = RngStream(seed, 1)
    worst = 0.0
    for domain in _domains():
        barrier = Barrier(domain)
        pts = _sample_interior(rng, domain, samples, max_gauge=0.9)
        eps = 1e-6
        for x in pts:
            gradient = barrier.gradient(x)
            hessian = barrier.hessian(x)
            for i in range(domain.dim):
                e = np.zeros(domain.dim)
                e[i] = eps
                fd_g = (barrier.value(x + e) - barrier.value(x - e)) / (2 * eps)
                rel_g = abs(fd_g - gradient[i]) / max(1.0, abs(gradient[i]))
                fd_h = (barrier.gradient(x + e) - barrier.gradient(x - e)) / (2 * eps)
                rel_h = np.max(np.abs(fd_h - hessian[i])) / max(1.0, np.max(np.abs(hessian[i])))
                worst = max(worst, rel_g - 1e-5, rel_h - 1e-4)
    return CheckResult("barrier", samples * 2, worst, worst <= 0.0,
                       "finite differences vs closed forms, margin rel err minus tol")


def check_dikin(seed: int = VERIFY_SEED, samples: int = 100_000) -> CheckResult:
    """Unit local-norm steps stay inside the domain (membership tol 1e-12)."""
    rng = RngStream(seed, 2)
    worst = -np.inf
    bad = 0
    for domain in _domains():
        d = domain.dim
        x = _sample_interior(rng, domain, samples)
        u = sample_unit_sphere(rng, d, n=samples)
        if isinstance(domain, Ball):
            q = domain.radius**2 - np.sum(x * x, axis=1)
            a = 2.0 / q
            b = 4.0 / q**2
            nx = np.linalg.norm(x, axis=1)
            xhat = np.divide(x, nx[:, None], out=np.zeros_like(x), where=nx[:, None] > 0)
            upar = np.sum(u * xhat, axis=1)[:, None] * xhat
            uperp = u - upar
            lam_par = a + b * nx**2
            h = upar / np.sqrt(lam_par)[:, None] + uperp / np.sqrt(a)[:, None]
            gauge = np.linalg.norm(x + h, axis=1) / domain.radius
        else:
            hw = domain.halfwidths
            hess_diag = 1.0 / (hw - x) ** 2 + 1.0 / (hw + x) ** 2
            h = u / np.sqrt(hess_diag)
            gauge = np.max(np.abs(x + h) / hw, axis=1)
        worst = max(worst, float(np.max(gauge) - (1.0 + 1e-12)))
        bad += int(np.sum(gauge > 1.0 + 1e-12))
    # Small pass through the production factorization path as well.
    for domain in _domains():
        barrier = Barrier(domain)
        for x in _sample_interior(rng, domain, 500):
            A, _ = hessian_sqrt_pair(barrier.hessian(x))
            y = x + A @ sample_unit_sphere(rng, domain.dim)
            if not domain.contains(y):
                bad += 1
                worst = max(worst, domain.gauge(y) - (1.0 + 1e-12))
    return CheckResult("dikin", 2 * samples + 1000, worst, bad == 0,
                       f"{bad} membership violations, margin gauge minus (1+1e-12)")


def check_lemma2(seed: int = VERIFY_SEED, samples: int = 10_000) -> CheckResult:
    """Barrier growth along rays: R(z) - R(x) <= nu*log(1/(1 - pi_x(z))) + 1e-9."""
    rng = RngStream(seed, 3)
    worst = -np.inf
    bad = 0
    for domain in _domains():
        barrier = Barrier(domain)
        xs = _sample_interior(rng, domain, samples, max_gauge=0.9)
        zs = _sample_interior(rng, domain, samples, max_gauge=0.999)
        for x, z in zip(xs, zs):
            pi = minkowski_gauge(domain, x, z)
            lhs = barrier.value(z) - barrier.value(x)
            rhs = barrier.nu * math.log(1.0 / (1.0 - pi)) if pi < 1.0 else math.inf
            margin = lhs - rhs - 1e-9
            worst = max(worst, margin)
            bad += margin > 0.0
    return CheckResult("lemma2", 2 * samples, worst, bad == 0,
                       f"{bad} violations of the gauge log growth bound")


def check_lemma3(seed: int = VERIFY_SEED, samples: int = 10_000) -> CheckResult:
    """Shrunk-set local-norm diameter: ||y - x||_x <= 2(1/delta - 1)(nu + 2 sqrt(nu))."""
    rng = RngStream(seed, 4)
    worst = -np.inf
    bad = 0
    total = 0
    for domain in _domains():
        barrier = Barrier(domain)
        for delta in (0.1, 0.5, 2.0 / 3.0):
            shrunk = shrink(domain, delta)
            bound = 2.0 * (1.0 / delta - 1.0) * (barrier.nu + 2.0 * math.sqrt(barrier.nu))
            n = samples // 2
            # Boundary-biased: points of K_delta at gauges up to ~1.
            xs = _shrunk_points(rng, shrunk, n)
            ys = _shrunk_points(rng, shrunk, n)
            for x, y in zip(xs, ys):
                margin = local_norm(barrier, x, y - x) - bound - 1e-9
                worst = max(worst, margin)
                bad += margin > 0.0
                total += 1
    return CheckResult("lemma3", total, worst, bad == 0,
                       f"{bad} violations across delta in {{0.1, 0.5, 2/3}}")


def _shrunk_points(rng: RngStream, shrunk: ShrunkDomain, n: int):
    # K_delta is the scaled base set, so scale base samples inward.
    pts = _sample_interior(rng, shrunk.base, n, max_gauge=0.9999)
    return pts * shrunk.scale


def check_lemma4(seed: int = VERIFY_SEED) -> CheckResult:
    """Per-round FTRL step norms against the 4*d*eta yardstick.

    Hard requirements: no round with |f| <= 1 may exceed 4*d*eta, and a
    small-loss fixture (G=0.1, D=1) must comply in every round. On the
    reference-scale episode (G=3, D=5) the compliant fraction is reported;
    rounds with |f| > 1 may legitimately exceed the yardstick (the bound
    that always holds is 4*d*eta*|f|) and only draw a warning.
    """
    results = []
    for G, D, label in ((3.0, 5.0, "reference"), (0.1, 1.0, "scaled")):
        T, d = 2000, 5
        domain = Ball(radius=D, dim=d)
        delta = delta_policy(0.0, T)
        eta = resolve_eta("theory", 1.0, delta, d, T)
        config = LearnerConfig(domain=domain, horizon=T, eta=eta, delta=delta)
        seq = gen_linear_sequence(RngStream(seed, 5), T, d, G)
        oracle = LossOracle(seq, PerturbationSchedule(NoPerturbation(), 0.0), domain)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            records = run_episode(config, oracle, RngStream(seed, 6))
        steps = np.array([r.step_local_norm for r in records])
        losses = np.abs([r.loss for r in records])
        yardstick = 4.0 * d * eta
        ok = steps < yardstick
        small = losses <= 1.0
        frac = float(np.mean(ok))
        small_violations = int(np.sum(~ok & small))
        results.append((label, frac, small_violations))
    ref = results[0]
    scaled = results[1]
    passed = ref[2] == 0 and scaled[2] == 0 and scaled[1] == 1.0
    if ref[1] < 0.999:
        warnings.warn(
            f"step bound compliance {ref[1]:.4f} < 0.999 on the reference "
            "episode; all excesses occur at |f| > 1 where only the "
            "4*d*eta*|f| form is guaranteed", RuntimeWarning, stacklevel=2)
    return CheckResult(
        "lemma4", 4000, 1.0 - ref[1], passed,
        f"reference compliance {ref[1]:.4f} (small-loss violations {ref[2]}), "
        f"scaled fixture compliance {scaled[1]:.4f}")


def check_lemma5(seed: int = VERIFY_SEED, samples: int = 200_000) -> CheckResult:
    """One-point estimator is unbiased for theta under purely linear losses."""
    d = 5
    domain = Ball(radius=5.0, dim=d)
    barrier = Barrier(domain)
    rng = RngStream(seed, 7)
    x = 0.5 * domain.radius * sample_unit_sphere(rng, d)
    theta = 3.0 * sample_unit_sphere(rng, d)
    from .geometry import hessian_sqrt_pair
    A, Ainv = hessian_sqrt_pair(barrier.hessian(x))
    mu = sample_unit_sphere(rng, d, n=samples)
    f = (x + mu @ A) @ theta
    g = d * f[:, None] * (mu @ Ainv)
    mean = g.mean(axis=0)
    se = g.std(axis=0, ddof=1) / math.sqrt(samples)
    margins = np.abs(mean - theta) / se
    worst = float(np.max(margins))
    return CheckResult("lemma5", samples, worst, worst <= 4.0,
                       "max |mean(g) - theta| in standard errors (limit 4)")


def _bisect_ftrl_ball(c: np.ndarray, D: float, rmax: float) -> np.ndarray:
    nc = float(np.linalg.norm(c))
    if nc == 0.0:
        return np.zeros_like(c)

    def dphi(r):
        return -nc + 2.0 * r / (D * D - r * r)

    if dphi(rmax) <= 0.0:
        r = rmax
    else:
        lo, hi = 0.0, rmax
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if dphi(mid) <= 0.0:
                lo = mid
            else:
                hi = mid
        r = 0.5 * (lo + hi)
    return (-r / nc) * c


def _bisect_ftrl_box(c: np.ndarray, halfwidths: np.ndarray, scale: float) -> np.ndarray:
    out = np.zeros_like(c)
    for i, (ci, hi) in enumerate(zip(c, halfwidths)):
        if ci == 0.0:
            continue
        m = scale * hi

        def dpsi(u):
            return ci + 2.0 * u / (hi * hi - u * u)

        lo, hi_end = (-m, 0.0) if ci > 0.0 else (0.0, m)
        if ci > 0.0 and dpsi(-m) >= 0.0:
            out[i] = -m
            continue
        if ci < 0.0 and dpsi(m) <= 0.0:
            out[i] = m
            continue
        lo_, hi_ = lo, hi_end
        for _ in range(200):
            mid = 0.5 * (lo_ + hi_)
            if dpsi(mid) <= 0.0:
                lo_ = mid
            else:
                hi_ = mid
        out[i] = 0.5 * (lo_ + hi_)
    return out


def check_ftrl_oracle(seed: int = VERIFY_SEED, samples: int = 1000) -> CheckResult:
    """Closed-form FTRL solutions vs an independent bisection, 1e-8 Euclidean."""
    rng = RngStream(seed, 8)
    worst = 0.0
    count = 0
    for domain in _domains():
        barrier = Barrier(domain)
        for _ in range(samples // 2):
            delta = [0.0, 0.2, 0.5][int(rng.integers(0, 3))]
            update_set = shrink(domain, delta) if delta > 0 else domain
            scale = (1.0 - delta) if delta > 0 else 1.0 - 1e-9
            mag = 10.0 ** float(rng.uniform(-3.0, 3.0))
            c = mag * sample_unit_sphere(rng, domain.dim)
            x_prod = solve_ftrl(update_set, barrier, c)
            if isinstance(domain, Ball):
                x_ref = _bisect_ftrl_ball(c, domain.radius, scale * domain.radius)
            else:
                x_ref = _bisect_ftrl_box(c, domain.halfwidths, scale)
            worst = max(worst, float(np.linalg.norm(x_prod - x_ref)))
            count += 1
    return CheckResult("ftrl_oracle", count, worst, worst <= 1e-8,
                       "max Euclidean gap closed form vs bisection")


def check_budget(seed: int = VERIFY_SEED) -> CheckResult:
    """A schedule asking for 1.5x the budget is clipped and never overdraws."""
    T, d, C = 100, 5, 10.0
    domain = Ball(radius=5.0, dim=d)
    spikes = SpikePerturbation({t: 0.5 for t in range(1, 31)})  # asks 15 = 1.5 C
    schedule = PerturbationSchedule(spikes, budget=C)
    seq = gen_linear_sequence(RngStream(seed, 9), T, d, 3.0)
    oracle = LossOracle(seq, schedule, domain)
    config = LearnerConfig(domain=domain, horizon=T, eta=0.01, delta=delta_policy(C, T))
    records = run_episode(config, oracle, RngStream(seed, 10))
    used = oracle.accountant.used
    from_records = float(np.sum(np.abs([r.sigma for r in records])))
    over = used - (C + 1e-12)
    consistent = abs(used - from_records) <= 1e-9
    clipped = oracle.accountant.clip_events > 0
    # Budget runs out at t = 20; everything after must be exactly zero.
    tail_zero = all(r.sigma == 0.0 for r in records if r.t > 20)
    passed = over <= 0.0 and consistent and clipped and tail_zero
    return CheckResult("budget", T, over, passed,
                       f"used={used:.12g}, clip_events={oracle.accountant.clip_events}")


def check_lowerbound(seed: int = VERIFY_SEED) -> CheckResult:
    """Constant-feedback adversary certifies a gap of exactly 2*epsilon."""
    eps, T, d = 0.01, 200, 5
    domain = Ball(radius=5.0, dim=d)
    gaps = []
    for eta in (0.01, 0.05):  # two different learners, same adversary law
        adv = BlackBoxAdversary(domain, eps, RngStream(seed, 11))
        config = LearnerConfig(domain=domain, horizon=T, eta=eta, delta=1.0 / T**2)
        records = run_episode(config, adv.as_oracle(T), RngStream(seed, 12))
        gaps.append(adv.finalize(best_iterate(records)))
    exact = all(g == 2.0 * eps for g in gaps)
    identical = gaps[0] == gaps[1]
    worst = max(abs(g - 2.0 * eps) for g in gaps)
    return CheckResult("lowerbound", 2 * T, worst, exact and identical,
                       f"gaps={gaps}, floor 2C = {2.0 * eps * T}")


def check_martingale(seed: int = VERIFY_SEED, reps: int = 200, T: int = 500) -> CheckResult:
    """The exploration deviation sum theta_t'(y_t - x_t) is mean zero."""
    d, G = 5, 3.0
    domain = Ball(radius=5.0, dim=d)
    seq = gen_linear_sequence(RngStream(seed, 13), T, d, G)
    delta = delta_policy(0.0, T)
    eta = resolve_eta("theory", 1.0, delta, d, T)
    config = LearnerConfig(domain=domain, horizon=T, eta=eta, delta=delta)
    schedule = PerturbationSchedule(NoPerturbation(), 0.0)
    finals = []
    root = RngStream(seed, 14)
    for rep in range(reps):
        oracle = LossOracle(seq, schedule, domain)
        records = run_episode(config, oracle, fork_stream(root, rep))
        report = compute_regret(records, oracle)
        finals.append(report.deviation_track[-1])
    finals = np.array(finals)
    se = finals.std(ddof=1) / math.sqrt(reps)
    margin = abs(float(finals.mean())) / se
    return CheckResult("martingale", reps, margin, margin <= 4.0,
                       f"|mean| = {abs(finals.mean()):.4f} vs SE {se:.4f} (limit 4 SE)")


CHECKS = {
    "barrier": check_barrier,
    "dikin": check_dikin,
    "lemma2": check_lemma2,
    "lemma3": check_lemma3,
    "lemma4": check_lemma4,
    "lemma5": check_lemma5,
    "ftrl_oracle": check_ftrl_oracle,
    "budget": check_budget,
    "lowerbound": check_lowerbound,
    "martingale": check_martingale,
}


def verify(suite: list[str] | None = None) -> list[CheckResult]:
    """Run the named checks (all of them by default) and return their results."""
    names = list(CHECKS) if suite is None else list(suite)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ConfigurationError(
            f"unknown verify suite name(s) {unknown}; choose from {sorted(CHECKS)}")
    return [CHECKS[name]() for name in names]
