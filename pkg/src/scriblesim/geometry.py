"""Convex action sets, self-concordant barriers, and local norms.

Two concrete centrally symmetric domains are provided: the Euclidean ball
of radius D and the axis-aligned box with per-coordinate halfwidths h.
Each carries a canonical logarithmic barrier:

    ball:  R(x) = -log(1 - ||x||^2 / D^2)            nu = 1
    box:   R(x) = -sum_i [log(h_i - x_i) + log(h_i + x_i)]   nu = 2d

The barrier Hessian at an interior point induces the local norm
||v||_x = sqrt(v' H(x) v) and its dual ||v||*_x = sqrt(v' H(x)^-1 v).
The open unit ball of the local norm (the Dikin ellipsoid) is contained
in the domain, which is what makes one-point bandit exploration at
x + H(x)^{-1/2} mu feasible.

ShrunkDomain wraps a base domain and represents its scaling by (1 - delta)
about the origin; it is used as the constraint set of the FTRL update while
the barrier stays that of the base domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError, FactorizationError

# Points whose gauge exceeds this are treated as boundary: the barrier and
# its derivatives are refused there to keep Hessians finite.
INTERIOR_GAUGE_MAX = 1.0 - 1e-9

# Relative slack for membership checks; absorbs float rounding in x + A mu.
MEMBERSHIP_RTOL = 1e-12

DELTA_MAX = 2.0 / 3.0


def _as_vector(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise DomainError(f"expected a vector of shape ({dim},), got {x.shape}")
    return x


@dataclass(frozen=True)
class Ball:
    """Euclidean ball { x : ||x|| <= radius } in R^dim.

    The radius must be at least 1 so the set contains the unit ball;
    the barrier's exploration step is calibrated to that normalization.
    """

    radius: float
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError(f"dim must be >= 1, got {self.dim}")
        if not np.isfinite(self.radius) or self.radius < 1.0:
            raise ConfigurationError(
                f"ball radius must be finite and >= 1, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def gauge(self, x) -> float:
        """Minkowski gauge about the origin: ||x|| / radius."""
        x = _as_vector(x, self.dim)
        return float(np.linalg.norm(x)) / self.radius

    def contains(self, x, rtol: float = MEMBERSHIP_RTOL) -> bool:
        return self.gauge(x) <= 1.0 + rtol

    def _ray_exit(self, x: np.ndarray, v: np.ndarray) -> float:
        # Largest u >= 0 with x + u v still inside; positive root of
        # ||x + u v||^2 = radius^2.
        vv = float(v @ v)
        if vv == 0.0:
            return np.inf
        xv = float(x @ v)
        slack = self.radius**2 - float(x @ x)
        disc = xv * xv + vv * slack
        return (-xv + np.sqrt(disc)) / vv


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box { x : |x_i| <= halfwidths_i } in R^dim.

    Every halfwidth must be at least 1 (the set contains the unit ball).
    Equality is identity; ndarray fields make field-wise == ambiguous.
    """

    halfwidths: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.halfwidths, dtype=float))
        if h.ndim != 1 or h.size < 1:
            raise ConfigurationError("halfwidths must be a 1-D vector")
        if not np.all(np.isfinite(h)) or np.any(h < 1.0):
            raise ConfigurationError(
                f"box halfwidths must be finite and >= 1, got {h}")
        object.__setattr__(self, "halfwidths", h)
        object.__setattr__(self, "dim", h.size)

    @property
    def diameter(self) -> float:
        return 2.0 * float(np.linalg.norm(self.halfwidths))

    def gauge(self, x) -> float:
        x = _as_vector(x, self.dim)
        return float(np.max(np.abs(x) / self.halfwidths))

    def contains(self, x, rtol: float = MEMBERSHIP_RTOL) -> bool:
        return self.gauge(x) <= 1.0 + rtol

    def _ray_exit(self, x: np.ndarray, v: np.ndarray) -> float:
        h = self.halfwidths
        with np.errstate(divide="ignore"):
            hi = np.where(v > 0, (h - x) / v, np.inf)
            lo = np.where(v < 0, (-h - x) / v, np.inf)
        return float(min(np.min(hi), np.min(lo)))


@dataclass(frozen=True)
class ShrunkDomain:
    """The base domain scaled by (1 - delta) about the origin.

    Membership is tested against the base set: x is in the shrunk set iff
    x / (1 - delta) is in the base set. delta must lie in (0, 2/3]; the
    upper cap keeps the shrunk set a constant-fraction copy of the base.
    """

    base: Ball | Box
    delta: float

    def __post_init__(self):
        if not (0.0 < self.delta <= DELTA_MAX):
            raise ConfigurationError(
                f"delta must lie in (0, {DELTA_MAX}], got {self.delta}")

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def scale(self) -> float:
        return 1.0 - self.delta

    @property
    def diameter(self) -> float:
        return self.scale * self.base.diameter

    def gauge(self, x) -> float:
        return self.base.gauge(x) / self.scale

    def contains(self, x, rtol: float = MEMBERSHIP_RTOL) -> bool:
        return self.gauge(x) <= 1.0 + rtol

    def _ray_exit(self, x: np.ndarray, v: np.ndarray) -> float:
        s = self.scale
        return self.base._ray_exit(np.asarray(x, dtype=float) / s,
                                   np.asarray(v, dtype=float) / s)


Domain = Ball | Box
AnyDomain = Ball | Box | ShrunkDomain


def shrink(domain: Domain, delta: float) -> ShrunkDomain:
    """Return the (1 - delta)-scaled copy of `domain` as a ShrunkDomain."""
    if isinstance(domain, ShrunkDomain):
        raise ConfigurationError("cannot shrink an already shrunk domain")
    return ShrunkDomain(base=domain, delta=delta)


class Barrier:
    """Canonical self-concordant barrier of a ball or box domain.

    Exposes value/gradient/hessian at strictly interior points plus the
    barrier parameter nu (1 for the ball, 2*dim for the box). Evaluation
    at a point with gauge > INTERIOR_GAUGE_MAX raises DomainError.
    """

    def __init__(self, domain: Domain):
        if isinstance(domain, ShrunkDomain):
            raise ConfigurationError(
                "the barrier belongs to the base domain, not the shrunk copy")
        self.domain = domain

    @property
    def nu(self) -> float:
        if isinstance(self.domain, Ball):
            return 1.0
        return 2.0 * self.domain.dim

    def _check_interior(self, x: np.ndarray):
        g = self.domain.gauge(x)
        if g > INTERIOR_GAUGE_MAX:
            raise DomainError(
                f"barrier evaluated at gauge {g:.17g} > {INTERIOR_GAUGE_MAX}")

    def value(self, x) -> float:
        x = _as_vector(x, self.domain.dim)
        self._check_interior(x)
        if isinstance(self.domain, Ball):
            d2 = self.domain.radius**2
            return float(-np.log(1.0 - (x @ x) / d2))
        h = self.domain.halfwidths
        return float(-np.sum(np.log(h - x)) - np.sum(np.log(h + x)))

    def gradient(self, x) -> np.ndarray:
        x = _as_vector(x, self.domain.dim)
        self._check_interior(x)
        if isinstance(self.domain, Ball):
            q = self.domain.radius**2 - float(x @ x)
            return (2.0 / q) * x
        h = self.domain.halfwidths
        return 1.0 / (h - x) - 1.0 / (h + x)

    def hessian(self, x) -> np.ndarray:
        x = _as_vector(x, self.domain.dim)
        self._check_interior(x)
        if isinstance(self.domain, Ball):
            q = self.domain.radius**2 - float(x @ x)
            return (2.0 / q) * np.eye(self.domain.dim) \
                + (4.0 / q**2) * np.outer(x, x)
        h = self.domain.halfwidths
        return np.diag(1.0 / (h - x) ** 2 + 1.0 / (h + x) ** 2)


def barrier_value(barrier: Barrier, x) -> float:
    """Functional spelling of Barrier.value."""
    return barrier.value(x)


def barrier_gradient(barrier: Barrier, x) -> np.ndarray:
    """Functional spelling of Barrier.gradient."""
    return barrier.gradient(x)


def barrier_hessian(barrier: Barrier, x) -> np.ndarray:
    """Functional spelling of Barrier.hessian."""
    return barrier.hessian(x)


def local_norm(barrier: Barrier, x, v) -> float:
    """||v||_x = sqrt(v' H(x) v) under the barrier Hessian at x."""
    v = _as_vector(v, barrier.domain.dim)
    H = barrier.hessian(x)
    return float(np.sqrt(max(v @ H @ v, 0.0)))


def dual_local_norm(barrier: Barrier, x, v) -> float:
    """||v||*_x = sqrt(v' H(x)^-1 v); computed by solving, not inverting."""
    v = _as_vector(v, barrier.domain.dim)
    H = barrier.hessian(x)
    try:
        w = np.linalg.solve(H, v)
    except np.linalg.LinAlgError as exc:  # cannot occur interior; guard anyway
        raise FactorizationError(f"singular Hessian in dual norm: {exc}") from exc
    return float(np.sqrt(max(v @ w, 0.0)))


def hessian_sqrt_pair(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (H^{-1/2}, H^{+1/2}) from a single eigendecomposition.

    Args:
        H: symmetric positive definite matrix.

    Returns:
        Pair (A, B) of symmetric matrices with A = H^{-1/2}, B = H^{1/2},
        so A B = I and A H A = I up to rounding.

    Raises:
        FactorizationError: if H has a non-positive eigenvalue; the message
            reports the smallest one.
    """
    H = np.asarray(H, dtype=float)
    w, V = np.linalg.eigh(0.5 * (H + H.T))
    if w[0] <= 0.0:
        raise FactorizationError(
            f"matrix is not positive definite; smallest eigenvalue {w[0]:.6e}")
    s = np.sqrt(w)
    inv_sqrt = (V / s) @ V.T
    sqrt = (V * s) @ V.T
    # Symmetrize exactly; downstream identities are tested to 1e-10.
    inv_sqrt = 0.5 * (inv_sqrt + inv_sqrt.T)
    sqrt = 0.5 * (sqrt + sqrt.T)
    return inv_sqrt, sqrt


def hessian_inverse_sqrt(H: np.ndarray) -> np.ndarray:
    """H^{-1/2} of a symmetric positive definite matrix (see hessian_sqrt_pair)."""
    return hessian_sqrt_pair(H)[0]


def minkowski_gauge(domain: AnyDomain, x, z) -> float:
    """Gauge of z with respect to `domain` recentered at interior point x.

    pi_x(z) = inf { t > 0 : x + (z - x)/t in domain }; it is 0 at z = x and
    approaches 1 as z approaches the boundary along the ray from x.

    Args:
        domain: ball, box, or shrunk copy.
        x: strictly interior base point (central gauge <= INTERIOR_GAUGE_MAX).
        z: any point of the domain.

    Returns:
        The recentered gauge in [0, 1].

    Raises:
        DomainError: if x is not strictly interior or z is outside the domain.
    """
    x = _as_vector(x, domain.dim)
    z = _as_vector(z, domain.dim)
    if domain.gauge(x) > INTERIOR_GAUGE_MAX:
        raise DomainError("recentering point must be strictly interior")
    if not domain.contains(z):
        raise DomainError(f"point has gauge {domain.gauge(z):.17g} > 1")
    v = z - x
    if not np.any(v):
        return 0.0
    u = domain._ray_exit(x, v)
    # z inside the set guarantees u >= 1 up to rounding.
    return min(1.0, 1.0 / u) if np.isfinite(u) else 0.0
