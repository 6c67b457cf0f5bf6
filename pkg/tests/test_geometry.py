"""Domain, barrier, local norm, factorization, and gauge tests.

Reference values are recomputed here with mpmath at 50 digits or by
independent numerical routes (central finite differences, 1-D bisection on
the ray-boundary equation, explicit matrix inverses) rather than reusing
the package's own formulas.
"""

import mpmath
import numpy as np
import pytest

from scriblesim import (Ball, Barrier, Box, DomainError, ConfigurationError,
                        FactorizationError, ShrunkDomain, dual_local_norm,
                        RngStream, hessian_inverse_sqrt, hessian_sqrt_pair,
                        local_norm, minkowski_gauge, sample_unit_sphere,
                        shrink, barrier_value, barrier_gradient,
                        barrier_hessian)

mpmath.mp.dps = 50


# --- independent oracles -------------------------------------------------

def mp_ball_value(x, D):
    s = sum(mpmath.mpf(v) ** 2 for v in x) / mpmath.mpf(D) ** 2
    return float(-mpmath.log(1 - s))


def mp_box_value(x, h):
    total = mpmath.mpf(0)
    for xi, hi in zip(x, h):
        total -= mpmath.log(hi - xi) + mpmath.log(hi + xi)
    return float(total)


def fd_gradient(f, x, eps=1e-6):
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = eps
        g[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return g


def ray_exit_bisect(domain, x, v, iters=200):
    # Largest u with x + u v inside, via pure membership bisection.
    lo, hi = 0.0, 1.0
    while domain.contains(x + hi * v, rtol=0.0) and hi < 1e12:
        hi *= 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if domain.contains(x + mid * v, rtol=0.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


BALL = Ball(radius=5.0, dim=5)
BOX = Box(halfwidths=np.array([2.0, 1.5, 3.0, 1.0, 2.5]))


# --- construction and membership ----------------------------------------

def test_domain_construction_rejects_small_sets():
    with pytest.raises(ConfigurationError):
        Ball(radius=0.5, dim=3)
    with pytest.raises(ConfigurationError):
        Box(halfwidths=np.array([2.0, 0.9]))
    with pytest.raises(ConfigurationError):
        Ball(radius=5.0, dim=0)


def test_membership_and_gauge():
    assert BALL.contains(np.zeros(5))
    assert BALL.gauge(np.array([5.0, 0, 0, 0, 0])) == pytest.approx(1.0)
    assert not BALL.contains(np.full(5, 3.0))
    assert BOX.gauge(np.array([1.0, 0, 0, 0, 0])) == pytest.approx(0.5)
    assert not BOX.contains(np.array([0, 1.6, 0, 0, 0]))


def test_central_symmetry():
    rng = RngStream(11)
    for domain in (BALL, BOX):
        for _ in range(50):
            x = 0.99 * sample_unit_sphere(rng, 5) * rng.uniform()
            x = x * (domain.radius if isinstance(domain, Ball) else domain.halfwidths)
            assert domain.contains(x) == domain.contains(-x)


def test_diameter():
    assert BALL.diameter == 10.0
    assert BOX.diameter == pytest.approx(2.0 * np.linalg.norm(BOX.halfwidths))


# --- barrier values -------------------------------------------------------

def test_ball_barrier_center_and_reference_point():
    b = Barrier(Ball(radius=1.0, dim=2))
    assert b.value(np.zeros(2)) == 0.0
    x = np.array([0.6, 0.0])
    assert b.value(x) == pytest.approx(mp_ball_value(x, 1.0), abs=1e-14)
    big = Barrier(BALL)
    x5 = np.array([1.0, -2.0, 0.5, 0.25, 3.0])
    assert big.value(x5) == pytest.approx(mp_ball_value(x5, 5.0), abs=1e-13)


def test_box_barrier_center_and_reference_point():
    b = Barrier(Box(halfwidths=np.ones(2)))
    assert b.value(np.zeros(2)) == 0.0
    x = np.array([0.3, -0.2])
    assert b.value(x) == pytest.approx(mp_box_value(x, [1.0, 1.0]), abs=1e-14)
    bb = Barrier(BOX)
    x5 = np.array([1.0, -0.5, 2.0, 0.1, -2.0])
    assert bb.value(x5) == pytest.approx(
        mp_box_value(x5, BOX.halfwidths), abs=1e-13)


def test_barrier_nu():
    assert Barrier(BALL).nu == 1.0
    assert Barrier(BOX).nu == 10.0


def test_ball_gradient_reference():
    b = Barrier(Ball(radius=1.0, dim=2))
    np.testing.assert_allclose(b.gradient(np.array([0.6, 0.0])),
                               [1.875, 0.0], atol=1e-14)
    np.testing.assert_allclose(b.gradient(np.zeros(2)), [0.0, 0.0])


def test_hessian_reference_at_center():
    np.testing.assert_allclose(Barrier(BALL).hessian(np.zeros(5)),
                               (2.0 / 25.0) * np.eye(5), atol=1e-15)
    iso = Box(halfwidths=np.full(3, np.sqrt(2.0)))
    np.testing.assert_allclose(Barrier(iso).hessian(np.zeros(3)),
                               np.eye(3), atol=1e-15)


def test_gradient_hessian_finite_differences():
    rng = RngStream(12)
    for domain in (BALL, BOX):
        b = Barrier(domain)
        for _ in range(25):
            u = sample_unit_sphere(rng, 5)
            scale = domain.radius if isinstance(domain, Ball) else domain.halfwidths
            x = 0.85 * float(rng.uniform()) * u * scale
            g = b.gradient(x)
            g_fd = fd_gradient(b.value, x)
            np.testing.assert_allclose(g, g_fd, rtol=1e-5, atol=1e-5)
            H = b.hessian(x)
            for i in range(5):
                e = np.zeros(5)
                e[i] = 1e-6
                h_fd = (b.gradient(x + e) - b.gradient(x - e)) / 2e-6
                np.testing.assert_allclose(H[i], h_fd, rtol=1e-4, atol=1e-4)


def test_barrier_unbounded_toward_boundary():
    b = Barrier(BALL)
    direction = np.array([1.0, 0, 0, 0, 0])
    values = [b.value((1.0 - 10.0 ** -k) * 5.0 * direction * (1 - 1e-12))
              for k in range(1, 8)]
    assert all(v2 > v1 for v1, v2 in zip(values, values[1:]))
    assert values[-1] > 15.0


def test_barrier_rejects_boundary_and_exterior():
    b = Barrier(BALL)
    with pytest.raises(DomainError):
        b.value(np.array([5.0, 0, 0, 0, 0]))
    with pytest.raises(DomainError):
        b.gradient(np.array([6.0, 0, 0, 0, 0]))
    with pytest.raises(DomainError):
        b.hessian(np.array([5.0 * (1 - 1e-12), 0, 0, 0, 0]))


def test_functional_barrier_aliases():
    b = Barrier(BALL)
    x = np.array([1.0, 0.5, 0, 0, -1.0])
    assert barrier_value(b, x) == b.value(x)
    np.testing.assert_array_equal(barrier_gradient(b, x), b.gradient(x))
    np.testing.assert_array_equal(barrier_hessian(b, x), b.hessian(x))


# --- local norms ----------------------------------------------------------

def test_local_norm_basics():
    b = Barrier(BALL)
    assert local_norm(b, np.zeros(5), np.zeros(5)) == 0.0
    e1 = np.eye(5)[0]
    assert local_norm(b, np.zeros(5), e1) == pytest.approx(np.sqrt(2.0 / 25.0))
    iso = Barrier(Box(halfwidths=np.full(5, np.sqrt(2.0))))
    h = np.array([3.0, -1.0, 0.5, 2.0, 0.0])
    assert local_norm(iso, np.zeros(5), h) == pytest.approx(np.linalg.norm(h))
    assert dual_local_norm(iso, np.zeros(5), h) == pytest.approx(np.linalg.norm(h))


def test_dual_norm_matches_explicit_inverse():
    rng = RngStream(13)
    b = Barrier(BALL)
    for _ in range(20):
        x = 2.0 * sample_unit_sphere(rng, 5) * float(rng.uniform())
        h = rng.normal(size=5)
        H = b.hessian(x)
        expected = float(np.sqrt(h @ np.linalg.inv(H) @ h))
        assert dual_local_norm(b, x, h) == pytest.approx(expected, rel=1e-10)


def test_norm_homogeneity_and_triangle():
    rng = RngStream(14)
    b = Barrier(BOX)
    x = np.array([0.5, -0.2, 1.0, 0.1, -1.5])
    u, v = rng.normal(size=5), rng.normal(size=5)
    assert local_norm(b, x, 2.5 * u) == pytest.approx(2.5 * local_norm(b, x, u))
    assert local_norm(b, x, u + v) <= local_norm(b, x, u) + local_norm(b, x, v) + 1e-12


# --- factorization --------------------------------------------------------

def test_hessian_sqrt_pair_reference():
    A, B = hessian_sqrt_pair(4.0 * np.eye(3))
    np.testing.assert_allclose(A, 0.5 * np.eye(3), atol=1e-14)
    np.testing.assert_allclose(B, 2.0 * np.eye(3), atol=1e-14)
    np.testing.assert_allclose(hessian_inverse_sqrt(np.eye(4)), np.eye(4),
                               atol=1e-14)


def test_hessian_sqrt_pair_random_spd():
    rng = RngStream(15)
    for _ in range(30):
        M = rng.normal(size=(5, 5))
        H = M @ M.T + 0.5 * np.eye(5)
        A, B = hessian_sqrt_pair(H)
        np.testing.assert_allclose(A @ H @ A, np.eye(5), atol=1e-10)
        np.testing.assert_allclose(A @ B, np.eye(5), atol=1e-10)
        np.testing.assert_allclose(A, A.T, atol=0)
        # A^2 equals the explicit inverse.
        np.testing.assert_allclose(A @ A, np.linalg.inv(H), rtol=1e-9, atol=1e-12)


def test_hessian_sqrt_pair_rejects_indefinite():
    H = np.diag([1.0, -2.0, 3.0])
    with pytest.raises(FactorizationError, match="smallest eigenvalue"):
        hessian_sqrt_pair(H)
    with pytest.raises(FactorizationError):
        hessian_inverse_sqrt(np.zeros((2, 2)))


# --- minkowski gauge -------------------------------------------------------

def test_gauge_at_recentering_point_is_zero():
    assert minkowski_gauge(BALL, np.array([1.0, 0, 0, 0, 0]),
                           np.array([1.0, 0, 0, 0, 0])) == 0.0


def test_gauge_from_center_matches_central_gauge():
    z = np.array([1.0, 2.0, 0, 0, 1.0])
    assert minkowski_gauge(BALL, np.zeros(5), z) == pytest.approx(
        np.linalg.norm(z) / 5.0, rel=1e-12)
    zb = np.array([1.0, 0.3, -2.4, 0.2, 0.0])
    assert minkowski_gauge(BOX, np.zeros(5), zb) == pytest.approx(
        BOX.gauge(zb), rel=1e-12)


def test_gauge_against_bisection_oracle():
    rng = RngStream(16)
    for domain in (BALL, BOX):
        scale = domain.radius if isinstance(domain, Ball) else domain.halfwidths
        for _ in range(40):
            x = 0.7 * float(rng.uniform()) * sample_unit_sphere(rng, 5) * scale
            z = 0.95 * float(rng.uniform()) * sample_unit_sphere(rng, 5) * scale
            pi = minkowski_gauge(domain, x, z)
            if np.allclose(x, z):
                continue
            u = ray_exit_bisect(domain, x, z - x)
            assert pi == pytest.approx(1.0 / u, rel=1e-9, abs=1e-12)


def test_gauge_near_boundary_point_is_near_one():
    z = np.array([5.0 * (1 - 1e-9), 0, 0, 0, 0])
    pi = minkowski_gauge(BALL, np.array([0.0, 1.0, 0, 0, 0]), z)
    assert 0.999999 < pi <= 1.0


def test_gauge_rejects_bad_inputs():
    with pytest.raises(DomainError):
        minkowski_gauge(BALL, np.array([5.0, 0, 0, 0, 0]), np.zeros(5))
    with pytest.raises(DomainError):
        minkowski_gauge(BALL, np.zeros(5), np.full(5, 4.0))


# --- shrink ----------------------------------------------------------------

def test_shrink_scales_the_set():
    s = shrink(BALL, 0.2)
    assert isinstance(s, ShrunkDomain)
    assert s.contains(np.array([4.0, 0, 0, 0, 0]))
    assert not s.contains(np.array([4.0 + 1e-6, 0, 0, 0, 0]))
    assert s.gauge(np.array([2.0, 0, 0, 0, 0])) == pytest.approx(0.5)
    assert s.diameter == pytest.approx(8.0)


def test_shrink_delta_range():
    for bad in (0.0, -0.1, 0.7, 1.0):
        with pytest.raises(ConfigurationError):
            shrink(BALL, bad)
    shrink(BALL, 2.0 / 3.0)  # boundary value allowed
    with pytest.raises(ConfigurationError):
        shrink(shrink(BALL, 0.5), 0.5)


def test_shrunk_membership_matches_rescaled_base():
    rng = RngStream(17)
    s = shrink(BOX, 0.3)
    for _ in range(200):
        x = sample_unit_sphere(rng, 5) * BOX.halfwidths * float(rng.uniform(0, 1.1))
        assert s.contains(x, rtol=0.0) == BOX.contains(x / 0.7, rtol=0.0)


# --- Dikin ellipsoid and barrier growth (module-scale Monte Carlo) ---------

def test_dikin_containment_through_factorization():
    rng = RngStream(18)
    for domain in (BALL, BOX):
        b = Barrier(domain)
        scale = domain.radius if isinstance(domain, Ball) else domain.halfwidths
        for _ in range(400):
            gauge = float(rng.uniform(0.0, 0.999))
            x = gauge * sample_unit_sphere(rng, 5) * scale
            if isinstance(domain, Box):
                x = np.clip(x, -0.999 * domain.halfwidths, 0.999 * domain.halfwidths)
            A, _ = hessian_sqrt_pair(b.hessian(x))
            h = A @ sample_unit_sphere(rng, 5)
            assert local_norm(b, x, h) == pytest.approx(1.0, abs=1e-9)
            assert domain.contains(x + h)


def test_local_norm_comparison_along_short_moves():
    # ||h||_y >= ||h||_x (1 - ||y - x||_x) - 1e-9 whenever ||y - x||_x < 1.
    rng = RngStream(19)
    for domain in (BALL, BOX):
        b = Barrier(domain)
        scale = domain.radius if isinstance(domain, Ball) else domain.halfwidths
        done = 0
        while done < 300:
            x = float(rng.uniform(0, 0.95)) * sample_unit_sphere(rng, 5) * scale
            y = float(rng.uniform(0, 0.95)) * sample_unit_sphere(rng, 5) * scale
            r = local_norm(b, x, y - x)
            if r >= 1.0:
                continue
            h = rng.normal(size=5)
            assert local_norm(b, y, h) >= local_norm(b, x, h) * (1.0 - r) - 1e-9
            done += 1


def test_gauge_log_growth_bound():
    rng = RngStream(20)
    for domain in (BALL, BOX):
        b = Barrier(domain)
        scale = domain.radius if isinstance(domain, Ball) else domain.halfwidths
        for _ in range(2000):
            x = float(rng.uniform(0, 0.9)) * sample_unit_sphere(rng, 5) * scale
            z = float(rng.uniform(0, 0.999)) * sample_unit_sphere(rng, 5) * scale
            if isinstance(domain, Box):
                x = np.clip(x, -0.9 * domain.halfwidths, 0.9 * domain.halfwidths)
                z = np.clip(z, -0.999 * domain.halfwidths, 0.999 * domain.halfwidths)
            pi = minkowski_gauge(domain, x, z)
            bound = b.nu * np.log(1.0 / (1.0 - pi)) if pi < 1 else np.inf
            assert b.value(z) - b.value(x) <= bound + 1e-9


def test_shrunk_pair_local_norm_bound():
    rng = RngStream(21)
    for domain in (BALL, BOX):
        b = Barrier(domain)
        scale = domain.radius if isinstance(domain, Ball) else domain.halfwidths
        for delta in (0.1, 0.5, 2.0 / 3.0):
            bound = 2.0 * (1.0 / delta - 1.0) * (b.nu + 2.0 * np.sqrt(b.nu))
            for _ in range(500):
                x = (1 - delta) * float(rng.uniform(0, 0.9999)) \
                    * sample_unit_sphere(rng, 5) * scale
                y = (1 - delta) * float(rng.uniform(0, 0.9999)) \
                    * sample_unit_sphere(rng, 5) * scale
                assert local_norm(b, x, y - x) <= bound + 1e-9
