"""Native-model hyperbolic plane primitives.

Points live in polar coordinates (r, theta) on the disk B_O(R) with
curvature -1. Distances, threshold angles, ball measures and the radial
sampling transform are implemented in forms that stay finite far beyond
any disk radius used here (naive cosh products overflow near r ~ 710).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# Above this total radius, cosh/sinh products overflow float64.
_FAR_BRANCH = 700.0


class InvalidArgument(ValueError):
    """A precondition on a geometric argument was violated."""


@dataclass(frozen=True)
class PolarPoint:
    """A point (r, theta) with r >= 0 and theta normalized to [0, 2*pi)."""

    r: float
    theta: float

    def __post_init__(self):
        if not (self.r >= 0.0) or not math.isfinite(self.r):
            raise InvalidArgument(f"radius must be finite and >= 0, got {self.r}")
        if not math.isfinite(self.theta):
            raise InvalidArgument(f"angle must be finite, got {self.theta}")
        t = self.theta % TWO_PI
        if t >= TWO_PI:  # fmod can round up to the period
            t = 0.0
        object.__setattr__(self, "theta", t)


@dataclass(frozen=True)
class ModelParams:
    """Graph model parameters. The disk radius R is always derived from n and nu."""

    alpha: float
    nu: float
    n: int

    def __post_init__(self):
        if not (0.5 < self.alpha < 1.0):
            raise InvalidArgument(f"alpha must lie in (1/2, 1), got {self.alpha}")
        if not (self.nu > 0.0):
            raise InvalidArgument(f"nu must be positive, got {self.nu}")
        if not (self.n >= 1):
            raise InvalidArgument(f"n must be >= 1, got {self.n}")

    @property
    def R(self) -> float:
        # Recomputed on access so it can never drift from (n, nu).
        return 2.0 * math.log(self.n / self.nu)


def angular_difference(t1: float, t2: float) -> float:
    """Absolute angle between two directions, folded into [0, pi]."""
    d = abs(t1 - t2) % TWO_PI
    return math.pi - abs(math.pi - d)


def hyperbolic_distance(p: PolarPoint, q: PolarPoint) -> float:
    """Distance in the native model via the hyperbolic law of cosines.

    Arguments are ordered canonically first so the function is exactly
    symmetric, bit for bit.
    """
    if (q.r, q.theta) < (p.r, p.theta):
        p, q = q, p
    dt = angular_difference(p.theta, q.theta)
    omc = 2.0 * math.sin(0.5 * dt) ** 2  # 1 - cos(dt), accurate near 0
    s = p.r + q.r
    if s > _FAR_BRANCH:
        # cosh d ~ e^d / 2; relative error of the log form is O(e^-2r).
        return s + math.log(math.sin(0.5 * dt) ** 2 + math.exp(abs(p.r - q.r) - s))
    ch = math.cosh(p.r - q.r) + math.sinh(p.r) * math.sinh(q.r) * omc
    return math.acosh(max(ch, 1.0))


def edge_mask(r_a, theta_a, r_b, theta_b, R: float):
    """Vectorized adjacency test: distance strictly below R.

    All radius/angle arguments broadcast. This single kernel is shared by
    the scalar is_edge and by both graph builders so their edge decisions
    are identical bit for bit.
    """
    d = np.abs(np.asarray(theta_a) - np.asarray(theta_b)) % TWO_PI
    dt = np.pi - np.abs(np.pi - d)
    omc = 2.0 * np.sin(0.5 * dt) ** 2
    with np.errstate(over="ignore", invalid="ignore"):
        prod = np.sinh(r_a) * np.sinh(r_b) * omc
        # inf * 0 from a far pair at equal angle: the true product is 0.
        prod = np.where(np.isnan(prod), 0.0, prod)
        ch = np.cosh(np.asarray(r_a) - np.asarray(r_b)) + prod
    return ch < math.cosh(R)


def is_edge(p: PolarPoint, q: PolarPoint, R: float) -> bool:
    """True iff d(p, q) < R. Ties at exactly R are non-edges."""
    return bool(edge_mask(p.r, p.theta, q.r, q.theta, R))


def theta_R_exact(r: float, r2: float, R: float) -> float:
    """Largest angle at which a point at radius r2 stays within distance R of
    a point at radius r (pi when every angle does).

    Uses the law of cosines rescaled by 4*e^(-r-r2), which keeps every term
    in [0, 4] regardless of R.
    """
    if r < 0.0 or r2 < 0.0 or R <= 0.0:
        raise InvalidArgument(f"radii must be >= 0 and R > 0, got {(r, r2, R)}")
    if r + r2 < R:
        return math.pi
    if r == 0.0 or r2 == 0.0:
        # Concentric case: distance is the other radius at every angle.
        return math.pi if max(r, r2) <= R else 0.0
    ea, eb = math.exp(-2.0 * r), math.exp(-2.0 * r2)
    den = (1.0 - ea) * (1.0 - eb)
    # 1 - cos(theta), regrouped so nothing near-equal is subtracted unless
    # theta itself is genuinely tiny
    diff = 2.0 * (math.exp(R - r - r2) * (1.0 + math.exp(-2.0 * R)) - ea - eb)
    omc = diff / den
    if omc <= 0.0:
        return 0.0
    if omc < 1e-4:
        # acos(1 - x) = sqrt(2x) (1 + x/12 + 3x^2/160 + ...)
        return math.sqrt(2.0 * omc) * (1.0 + omc / 12.0 + 3.0 * omc * omc / 160.0)
    return math.acos(min(1.0, max(-1.0, 1.0 - omc)))


def theta_R_approx(r: float, r2: float, R: float) -> float:
    """First-order threshold angle 2*e^((R - r - r2)/2).

    Only meaningful inside the regime 0 <= r, r2 <= R with r + r2 >= R;
    anything else is rejected.
    """
    if not (0.0 <= r <= R and 0.0 <= r2 <= R):
        raise InvalidArgument(f"radii must lie in [0, R], got {(r, r2)} with R={R}")
    if r + r2 < R:
        raise InvalidArgument(f"approximation needs r + r2 >= R, got {r + r2} < {R}")
    return 2.0 * math.exp(0.5 * (R - r - r2))


def mu_ball_origin(r: float, params: ModelParams) -> float:
    """Normalized model measure of B_O(r), exact.

    Equals (cosh(alpha*min(r,R)) - 1) / (cosh(alpha*R) - 1), evaluated as a
    ratio of sinh^2 halves so small radii do not cancel catastrophically.
    """
    if r < 0.0:
        raise InvalidArgument(f"radius must be >= 0, got {r}")
    R = params.R
    rc = min(r, R)
    q = math.sinh(0.5 * params.alpha * rc) / math.sinh(0.5 * params.alpha * R)
    return q * q


def mu_ball_origin_approx(r: float, params: ModelParams) -> float:
    """First-order companion e^(-alpha*(R - r)) for r <= R."""
    R = params.R
    if not (0.0 <= r <= R):
        raise InvalidArgument(f"approximation needs 0 <= r <= R, got {r}")
    return math.exp(-params.alpha * (R - r))


def mu_ball_intersection_approx(p: PolarPoint, params: ModelParams) -> float:
    """First-order measure of B_p(R) intersected with the disk.

    Accurate when p is well inside the disk but far from the origin; the
    relative error grows toward both extremes.
    """
    if p.r > params.R:
        raise InvalidArgument(f"point radius {p.r} exceeds R={params.R}")
    a = params.alpha
    return 2.0 * a / (math.pi * (a - 0.5)) * math.exp(-0.5 * p.r)


def mu_ball_intersection_quad(p: PolarPoint, params: ModelParams) -> float:
    """Reference measure of B_p(R) intersected with the disk, by quadrature.

    The angular integral is done analytically (the admissible arc at radius
    r has half-width theta_R_exact(p.r, r)), leaving a 1-D radial integral
    of the density. Slow; used as the oracle for the approximation.
    """
    from scipy.integrate import quad

    R = params.R
    a = params.alpha
    norm = math.cosh(a * R) - 1.0

    def integrand(r: float) -> float:
        if r <= 0.0:
            return 0.0
        return a * math.sinh(a * r) / norm * (theta_R_exact(p.r, r, R) / math.pi)

    kink = R - p.r  # theta_R switches off pi here
    pts = [kink] if 0.0 < kink < R else None
    val, _ = quad(integrand, 0.0, R, points=pts, limit=200, epsabs=1e-13, epsrel=1e-11)
    return val


def radial_quantile(u, params: ModelParams):
    """Inverse CDF of the radial density alpha*sinh(alpha*r)/(cosh(alpha*R)-1).

    Accepts a scalar or an ndarray. Evaluated via log1p so u near 0 maps
    smoothly to r near 0; u = 1 maps to R up to roundoff.
    """
    u_arr = np.asarray(u, dtype=np.float64)
    if np.any(u_arr < 0.0) or np.any(u_arr > 1.0):
        raise InvalidArgument("quantile argument must lie in [0, 1]")
    a = params.alpha
    s = math.sinh(0.5 * a * params.R)
    y = u_arr * (2.0 * s * s)  # u * (cosh(alpha R) - 1)
    r = np.log1p(y + np.sqrt(y * (y + 2.0))) / a
    if np.isscalar(u) or u_arr.ndim == 0:
        return float(r)
    return r


def radial_cdf(r, params: ModelParams):
    """CDF companion of radial_quantile (same stable form as mu_ball_origin)."""
    r_arr = np.asarray(r, dtype=np.float64)
    a = params.alpha
    s = math.sinh(0.5 * a * params.R)
    q = np.sinh(0.5 * a * np.minimum(r_arr, params.R)) / s
    out = q * q
    if np.isscalar(r) or r_arr.ndim == 0:
        return float(out)
    return out
