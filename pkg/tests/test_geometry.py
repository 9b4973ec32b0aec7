import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from ghzclock.geometry import (
    LATTICE_PAIR_CAP, GeometryIntegrals, LatticeGeometry, continuum_average, integral_I,
    integral_J, kernel_A, kernel_S, lattice_sites, lattice_sum_average, pair_moment, radius_for,
)

# exact moments of the uniform disk/ball, derived independently of the kernels
EXACT = {("2d", 6): 7 / 2, ("3d", 6): 64 / 15, ("2d", 12): 429 / 7, ("3d", 12): 1024 / 15}


def test_kernel_S_examples():
    R = 2.0
    assert kernel_S(0.0, R / 2, R) == pytest.approx(2 * math.pi * R / 2)
    assert kernel_S(R / 2, 2 * R, R) == 0.0
    eps = 1e-6 * R
    assert kernel_S(R, 2 * R - eps, R) == pytest.approx(0.0, abs=1e-2 * R)
    assert kernel_S(R, 2 * R - eps, R) > kernel_S(R, 2 * R - eps / 4, R) > 0


def test_kernel_A_examples():
    R = 1.5
    for x in (0.1, 0.7, 1.4):
        assert kernel_A(0.0, x, R) == pytest.approx(4 * math.pi * x * x)
    r = R / 2
    assert kernel_A(r, R + r, R) == pytest.approx(0.0, abs=1e-12)
    x = R - r
    inside = 4 * math.pi * x * x
    cap = math.pi * (x / r) * (R * R - (x - r) ** 2)
    assert abs(cap / inside - 1) < 1e-9


@pytest.mark.parametrize("kernel", [kernel_S, kernel_A])
def test_kernels_reject_r_outside(kernel):
    with pytest.raises(ValueError):
        kernel(1.1, 0.5, 1.0)


@given(st.floats(0.1, 10.0), st.floats(0.01, 1.0))
def test_kernel_continuity(R, frac):
    # on each seam the middle branch must meet the neighbouring closed form
    r = frac * R
    inner, outer = R - r, R + r
    assert abs(kernel_S(r, inner, R) - 2 * math.pi * inner) <= 1e-9 * 2 * math.pi * R
    assert abs(kernel_S(r, outer, R)) <= 1e-9 * 2 * math.pi * R
    assert abs(kernel_A(r, inner, R) - 4 * math.pi * inner**2) <= 1e-9 * 4 * math.pi * R * R
    assert abs(kernel_A(r, outer, R)) <= 1e-9 * 4 * math.pi * R * R
    # arccos form, as an independent reference away from the seams
    x = inner + 0.37 * (outer - inner)
    ref = 2 * x * math.acos((x * x + r * r - R * R) / (2 * x * r))
    assert kernel_S(r, x, R) == pytest.approx(ref, rel=1e-10)


def test_kernel_zero_radius_circle():
    assert kernel_S(1.0, 0.0, 1.0) == 0.0
    assert kernel_A(1.0, 0.0, 1.0) == 0.0


@pytest.mark.parametrize("frac", [0.0, 0.1, 0.5, 0.9, 1.0])
@pytest.mark.parametrize("R", [0.3, 1.0, 4.0])
def test_kernel_normalization(frac, R):
    r = frac * R
    pts = [R - r] if 0 < r < R else None
    s, _ = integrate.quad(lambda x: kernel_S(r, x, R), 0, R + r, points=pts, limit=200)
    a, _ = integrate.quad(lambda x: kernel_A(r, x, R), 0, R + r, points=pts, limit=200)
    assert s == pytest.approx(math.pi * R**2, rel=1e-8)
    assert a == pytest.approx(4 * math.pi * R**3 / 3, rel=1e-8)


@pytest.mark.parametrize(
    "fn, dim, reference, tol",
    [(integral_I, "2d", 3.5, 0.05), (integral_I, "3d", 4.27, 0.02),
     (integral_J, "2d", 61.29, 0.5), (integral_J, "3d", 68.26, 0.5)],
)
def test_integrals_match_reference_values(fn, dim, reference, tol):
    assert abs(fn(dim) - reference) <= tol


@pytest.mark.parametrize("dim, power", list(EXACT))
def test_integrals_match_exact_moments(dim, power):
    got = integral_I(dim) if power == 6 else integral_J(dim)
    assert got == pytest.approx(EXACT[(dim, power)], abs=1e-4)


def test_geometry_integrals_bundle():
    g = GeometryIntegrals.compute()
    assert 3.4 <= g.I_2D <= 3.6 and 4.2 <= g.I_3D <= 4.35
    assert 60.5 <= g.J_2D <= 62.0 and 67.5 <= g.J_3D <= 69.0


@pytest.mark.parametrize("dim", ["2d", "3d"])
@pytest.mark.parametrize("power", [6, 12])
def test_scale_invariance(dim, power):
    v1, _ = pair_moment(dim, power, R=1.0)
    v2, _ = pair_moment(dim, power, R=3.0)
    assert v2 / 3.0**power == pytest.approx(v1, rel=1e-7)


def _uniform_ball(rng, n, d):
    x = rng.normal(size=(n, d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x * rng.random(n)[:, None] ** (1.0 / d)


@pytest.mark.parametrize("dim", ["2d", "3d"])
def test_monte_carlo_oracle(dim):
    d = 2 if dim == "2d" else 3
    rng = np.random.default_rng(20240611)
    sums = {6: [0.0, 0.0], 12: [0.0, 0.0]}
    total, chunk = 10_000_000, 1_000_000
    for _ in range(total // chunk):
        d2 = ((_uniform_ball(rng, chunk, d) - _uniform_ball(rng, chunk, d)) ** 2).sum(axis=1)
        for p in (6, 12):
            v = d2 ** (p // 2)
            sums[p][0] += v.sum()
            sums[p][1] += (v * v).sum()
    for p, fn in ((6, integral_I), (12, integral_J)):
        mean = sums[p][0] / total
        se = math.sqrt((sums[p][1] / total - mean**2) / total)
        assert abs(mean - fn(dim)) < 3 * se


def test_lattice_radius_relations():
    g2 = LatticeGeometry("2d", 54, a=2e-7)
    g3 = LatticeGeometry("3d", 146, a=2e-7)
    assert math.pi * g2.radius_R**2 == pytest.approx(54 * (2e-7) ** 2, rel=1e-12)
    assert 4 * math.pi / 3 * g3.radius_R**3 == pytest.approx(146 * (2e-7) ** 3, rel=1e-12)
    assert radius_for(146, 1.0, "3d") == pytest.approx(g3.radius_R / 2e-7)


def test_lattice_validation():
    with pytest.raises(ValueError):
        LatticeGeometry("2d", 1)
    with pytest.raises(ValueError):
        LatticeGeometry("1d", 10)
    with pytest.raises(ValueError):
        lattice_sum_average(LatticeGeometry("2d", LATTICE_PAIR_CAP + 1), 6)
    with pytest.raises(ValueError):
        lattice_sum_average(LatticeGeometry("2d", 10), 8)


def test_lattice_sites_deterministic_and_distinct():
    a = lattice_sites(146, "3d")
    assert np.array_equal(a, lattice_sites(146, "3d"))
    assert len({tuple(p) for p in a}) == 146


def test_lattice_single_pair():
    assert lattice_sum_average(LatticeGeometry("2d", 2, a=1.0), 6) == 1.0


@pytest.mark.parametrize(
    "dim, n, exponent, tol",
    [("3d", 146, 6, 0.10), ("3d", 146, 12, 0.10), ("2d", 1000, 6, 0.05), ("2d", 1000, 12, 0.05)],
)
def test_lattice_oracle_near_continuum(dim, n, exponent, tol):
    g = LatticeGeometry(dim, n, a=275.75e-9)
    assert abs(lattice_sum_average(g, exponent) / continuum_average(g, exponent) - 1) < tol


@pytest.mark.parametrize("exponent", [6, 12])
def test_lattice_oracle_converges_in_2d(exponent):
    errs = []
    for n in (100, 400, 1600, 6400):
        g = LatticeGeometry("2d", n)
        errs.append(abs(lattice_sum_average(g, exponent) / continuum_average(g, exponent) - 1))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-3
