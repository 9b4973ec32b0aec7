"""Pair-distance moments of atoms filling a disk or a ball.

The continuum averages reduce to one-dimensional integrals over the kernels
:func:`kernel_S` (2D) and :func:`kernel_A` (3D); :func:`lattice_sum_average`
enumerates actual lattice sites as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

DIMS = ("2d", "3d")
LATTICE_PAIR_CAP = 20_000

_INNER_TOL = 1e-6
_OUTER_TOL = 1e-5
# below this fraction of R the x/r factor in kernel_A uses its analytic limit
_SMALL_R = 1e-9
_SEAM_ULPS = 8


def check_dim(dim: str) -> str:
    d = str(dim).lower()
    if d not in DIMS:
        raise ValueError(f"dim must be one of {DIMS}, got {dim!r}")
    return d


def radius_for(n: float, a: float, dim: str) -> float:
    """Radius of the disk (ball) holding ``n`` sites of a square (cubic) lattice."""
    if check_dim(dim) == "2d":
        return math.sqrt(n / math.pi) * a
    return (3.0 * n / (4.0 * math.pi)) ** (1.0 / 3.0) * a


@dataclass(frozen=True)
class LatticeGeometry:
    dim: str
    n: int
    a: float = 1.0
    radius_R: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dim", check_dim(self.dim))
        if self.n < 2:
            raise ValueError("need at least two atoms for a pair average")
        if self.a <= 0:
            raise ValueError("lattice constant must be positive")
        object.__setattr__(self, "radius_R", radius_for(self.n, self.a, self.dim))


def kernel_S(r: float, x: float, R: float) -> float:
    """Length of the circle of radius ``x``, centred ``r`` from the origin, inside a disk of radius ``R``."""
    if r > R or r < 0:
        raise ValueError(f"need 0 <= r <= R, got r={r}, R={R}")
    if x < R - r or x == 0.0:
        return 2.0 * math.pi * x
    if x > R + r:
        return 0.0
    # arccos((x^2 + r^2 - R^2) / 2xr) as an atan2 of factored 1 -/+ cos. The
    # arc has a square-root edge at both seams, so seam distances within a few
    # ulps are snapped to zero; the plain arccos would leave ~1e-8 there.
    d_out, d_in = R + r - x, x + r - R
    snap = _SEAM_ULPS * math.ulp(R + r)
    d_out = 0.0 if d_out < snap else d_out
    d_in = 0.0 if d_in < snap else d_in
    one_minus = d_out * (R + x - r)
    one_plus = d_in * (x + r + R)
    return 4.0 * x * math.atan2(math.sqrt(one_minus), math.sqrt(one_plus))


def kernel_A(r: float, x: float, R: float) -> float:
    """Area of the sphere of radius ``x``, centred ``r`` from the origin, inside a ball of radius ``R``."""
    if r > R or r < 0:
        raise ValueError(f"need 0 <= r <= R, got r={r}, R={R}")
    if x < R - r or r < _SMALL_R * R:
        # the second test covers r -> 0, where the seam and outer edge coincide
        return 4.0 * math.pi * x * x if x <= R else 0.0
    if x > R + r:
        return 0.0
    return math.pi * (x / r) * (R * R - (x - r) ** 2)


class QuadratureError(RuntimeError):
    pass


def pair_moment(dim: str, power: int, R: float = 1.0) -> tuple[float, float]:
    """Unnormalized ``(1/V^2) int_V int_V |r_j - r_k|^power`` and an error bound.

    Dividing by ``R**power`` gives the pure number returned by
    :func:`integral_I` / :func:`integral_J`.
    """
    dim = check_dim(dim)
    if dim == "2d":
        kernel, volume = kernel_S, math.pi * R**2
        shell = lambda r: 2.0 * math.pi * r  # noqa: E731
    else:
        kernel, volume = kernel_A, 4.0 * math.pi * R**3 / 3.0
        shell = lambda r: 4.0 * math.pi * r * r  # noqa: E731
    # tolerances are stated for the normalized integrand
    scale = volume**2 * R**power
    inner_err = 0.0

    def inner(r):
        nonlocal inner_err
        total = 0.0
        # split at the seam x = R - r so each piece is smooth
        for lo, hi in ((0.0, R - r), (R - r, R + r)):
            if hi <= lo:
                continue
            val, err = integrate.quad(
                lambda x: kernel(r, x, R) * x**power, lo, hi,
                epsabs=_INNER_TOL * scale / (R * shell(R)), epsrel=1e-10, limit=200,
            )
            total += val
            inner_err = max(inner_err, err)
        return shell(r) * total

    val, err = integrate.quad(inner, 0.0, R, epsabs=_OUTER_TOL * scale, epsrel=1e-10, limit=200)
    bound = (err + inner_err * R * shell(R)) / scale
    return val / volume**2, bound


@lru_cache(maxsize=None)
def _moment(dim: str, power: int) -> float:
    val, err = pair_moment(dim, power)
    if not err < 1e-4:
        raise QuadratureError(f"pair moment {dim}/{power} reached only {err:.2e}")
    return val


def integral_I(dim: str) -> float:
    """Sixth pair-distance moment of a uniform disk/ball in units of ``R**6``."""
    return _moment(check_dim(dim), 6)


def integral_J(dim: str) -> float:
    """Twelfth pair-distance moment of a uniform disk/ball in units of ``R**12``."""
    return _moment(check_dim(dim), 12)


@dataclass(frozen=True)
class GeometryIntegrals:
    I_2D: float
    I_3D: float
    J_2D: float
    J_3D: float

    @classmethod
    def compute(cls) -> "GeometryIntegrals":
        return cls(integral_I("2d"), integral_I("3d"), integral_J("2d"), integral_J("3d"))


def lattice_sites(n: int, dim: str, a: float = 1.0) -> np.ndarray:
    """The ``n`` lattice sites closest to a plaquette (cell) centre.

    Ties in distance are broken by lexicographic order of the integer
    coordinates, which makes the filling deterministic.
    """
    dim = check_dim(dim)
    d = 2 if dim == "2d" else 3
    half = int(math.ceil(radius_for(n, 1.0, dim))) + 2
    axis = np.arange(-half, half + 1)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    dist2 = ((grid - 0.5) ** 2).sum(axis=1)
    # lexsort: last key is primary
    order = np.lexsort(tuple(grid[:, k] for k in reversed(range(d))) + (dist2,))
    return grid[order[:n]].astype(float) * a


def lattice_sum_average(geom: LatticeGeometry, exponent: int) -> float:
    """Exact mean of ``|r_j - r_k|**exponent`` over all unordered site pairs."""
    if exponent not in (6, 12):
        raise ValueError("exponent must be 6 or 12")
    if geom.n > LATTICE_PAIR_CAP:
        raise ValueError(f"n={geom.n} exceeds the pair-enumeration cap {LATTICE_PAIR_CAP}")
    sites = lattice_sites(geom.n, geom.dim, geom.a)
    half = exponent // 2
    total = 0.0
    # row blocks keep memory bounded at large n
    for start in range(0, geom.n - 1, 512):
        block = sites[start : start + 512]
        d2 = ((block[:, None, :] - sites[None, :, :]) ** 2).sum(axis=-1)
        idx = np.arange(start, start + len(block))[:, None]
        mask = np.arange(geom.n)[None, :] > idx
        total += float((d2[mask] ** half).sum())
    return total / (geom.n * (geom.n - 1) / 2)


def continuum_average(geom: LatticeGeometry, exponent: int) -> float:
    moment = integral_I(geom.dim) if exponent == 6 else integral_J(geom.dim)
    return geom.radius_R**exponent * moment
