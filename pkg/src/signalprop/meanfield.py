"""Forward-propagation mean-field maps, fixed points, and depth scales.

The layer-to-layer statistics of a wide random network are deterministic
maps on the pre-activation variance q and the pre-activation correlation c
of a pair of inputs:

    variance map      q  ->  (sigma_w^2 / rho) E[phi(sqrt(q) z)^2] + sigma_b^2
    covariance map    q_ab -> sigma_w^2 E[phi(u1) phi(u2)] + sigma_b^2

With dropout keep-probability rho < 1 the variance map carries the
effective weight variance sigma_w^2 / rho, while the covariance map keeps
the bare sigma_w^2 (the two independent masks contribute E[p_a] E[p_b] =
rho^2, which cancels the 1/rho^2 prefactor). That asymmetry is what
removes the c = 1 fixed point for any rho < 1.

Depth scales are the e-folding lengths of exponential convergence toward
the fixed points (q*, c*); they are read off from the linearization of
each map about its fixed point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .activations import Activation
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DegenerateVarianceError,
    DomainError,
    NoFixedPointError,
)
from .quadrature import CorrelatedPair, QuadratureRule, gauss_expect_1d, gauss_expect_2d

#: |factor - 1| below this counts as criticality (depth scale +inf).
CRITICALITY_TOL = 1e-12

#: Displacement tolerance and iteration cap for fixed-point solvers.
FIXED_POINT_TOL = 1e-12
MAX_ITERATIONS = 100_000

#: q* iterates below this with sigma_b^2 == 0 collapse to the exact
#: degenerate fixed point q* = 0.
_DEGENERATE_Q = 1e-8

DEFAULT_Q0 = 0.8
DEFAULT_C0 = 0.6


@dataclass(frozen=True)
class HyperParams:
    """Ensemble parameters of the random network."""

    sigma_w_sq: float
    sigma_b_sq: float = 0.0
    rho: float = 1.0

    def __post_init__(self):
        if self.sigma_w_sq <= 0:
            raise DomainError(f"sigma_w_sq must be > 0, got {self.sigma_w_sq}")
        if self.sigma_b_sq < 0:
            raise DomainError(f"sigma_b_sq must be >= 0, got {self.sigma_b_sq}")
        if not 0 < self.rho <= 1:
            raise DomainError(f"rho must lie in (0, 1], got {self.rho}")

    @property
    def effective_sigma_w_sq(self) -> float:
        """Weight variance as seen by a single input (dropout rescaling)."""
        return self.sigma_w_sq / self.rho


@dataclass(frozen=True)
class FixedPoint:
    q_star: float
    c_star: float
    iterations_q: int
    iterations_c: int
    converged: bool
    degenerate: bool = False


@dataclass(frozen=True)
class DepthScales:
    """Depth scales (in layers) at one hyperparameter point.

    xi values may be +inf (at criticality) or nan (non-exponential
    regime, e.g. an oscillatory linearization factor <= 0).
    """

    chi1: float
    xi_q: float
    xi_c: float
    xi_grad: float


@dataclass(frozen=True)
class Trajectory:
    """Layer-by-layer statistics from jointly iterating the maps."""

    layers: int
    q_aa: np.ndarray
    q_bb: np.ndarray
    c_ab: np.ndarray
    q_star: float
    c_star: float


def _check_activation(act: Activation, hp: HyperParams) -> None:
    if act.bounded:
        return
    if act.name == "linear":
        if hp.effective_sigma_w_sq >= 1.0:
            raise NoFixedPointError(
                "linear activation has no variance fixed point for "
                f"sigma_w_sq/rho = {hp.effective_sigma_w_sq} >= 1"
            )
        return
    raise ConfigurationError(
        f"activation {act.name!r} is unbounded; fixed-point computations "
        "require a bounded activation (or linear with sigma_w_sq/rho < 1)"
    )


def variance_map(q: float, hp: HyperParams, act: Activation,
                 quad: QuadratureRule | None = None) -> float:
    """One step of the single-input variance recursion."""
    if q < 0:
        raise DomainError(f"variance must be nonnegative, got q={q}")
    sq = math.sqrt(q)
    second_moment = gauss_expect_1d(lambda z: act.phi(sq * z) ** 2, quad)
    return hp.effective_sigma_w_sq * second_moment + hp.sigma_b_sq


def covariance_map(c: float, q_a: float, q_b: float, hp: HyperParams,
                   act: Activation, quad: QuadratureRule | None = None) -> float:
    """One step of the pair-covariance recursion (unnormalized)."""
    pair = CorrelatedPair(q_a=q_a, q_b=q_b, c=c)
    moment = gauss_expect_2d(lambda u1, u2: act.phi(u1) * act.phi(u2), pair, quad)
    return hp.sigma_w_sq * moment + hp.sigma_b_sq


def correlation_map(c: float, q_a: float, q_b: float, hp: HyperParams,
                    act: Activation, quad: QuadratureRule | None = None) -> float:
    """Next-layer correlation, normalized by the input variances.

    Exact when q_a and q_b already sit at their fixed point (the regime in
    which c-fixed points are solved, since the variance relaxes much
    faster than the correlation).
    """
    if q_a * q_b == 0:
        raise DegenerateVarianceError(
            f"correlation undefined for q_a={q_a}, q_b={q_b}"
        )
    return covariance_map(c, q_a, q_b, hp, act, quad) / math.sqrt(q_a * q_b)


def solve_q_star(hp: HyperParams, act: Activation, q0: float = DEFAULT_Q0,
                 quad: QuadratureRule | None = None,
                 tol: float = FIXED_POINT_TOL,
                 max_iterations: int = MAX_ITERATIONS) -> tuple[float, int]:
    """Iterate the variance map to its fixed point.

    Returns (q*, iteration count). Plain iteration is adequate here: the
    variance map converges at a rate bounded away from 1 whenever
    sigma_b^2 > 0, even on the critical line.
    """
    _check_activation(act, hp)
    q = float(q0)
    for iteration in range(1, max_iterations + 1):
        q_next = variance_map(q, hp, act, quad)
        if abs(q_next - q) < tol:
            return q_next, iteration
        q = q_next
    raise ConvergenceError(
        f"variance fixed point did not converge within {max_iterations} "
        f"iterations (last iterate {q})",
        last_iterate=q,
        iterations=max_iterations,
    )


def _q_star_robust(hp: HyperParams, act: Activation,
                   quad: QuadratureRule | None = None) -> float:
    """Fixed point of the variance map by root bracketing.

    Used inside the critical-line search, where plain iteration slows
    down arbitrarily as sigma_b^2 -> 0. Bounded activations shipped here
    satisfy sup |phi| <= 1, so the fixed point lies below
    sigma_w^2/rho + sigma_b^2.
    """
    _check_activation(act, hp)
    displacement = lambda q: variance_map(q, hp, act, quad) - q
    hi = hp.effective_sigma_w_sq + hp.sigma_b_sq + 1.0
    if hp.sigma_b_sq == 0.0:
        # q = 0 is always a fixed point when phi(0) = 0; a positive one
        # exists only if the map leaves the origin with slope > 1.
        slope0 = hp.effective_sigma_w_sq * float(act.d_phi(np.float64(0.0))) ** 2
        if slope0 <= 1.0:
            return 0.0
        lo = 1e-300
        if displacement(lo) <= 0:
            return 0.0
        return float(brentq(displacement, lo, hi, xtol=1e-15, rtol=8.9e-16))
    return float(brentq(displacement, 0.0, hi, xtol=1e-15, rtol=8.9e-16))


def chi1(hp: HyperParams, act: Activation, q_star: float,
         quad: QuadratureRule | None = None) -> float:
    """Stability coefficient of the c = 1 fixed point.

    With dropout this carries the effective weight variance
    sigma_w^2/rho, consistent with the variance map, so it remains the
    gradient-stability coefficient.
    """
    if q_star < 0:
        raise DomainError(f"q_star must be >= 0, got {q_star}")
    sq = math.sqrt(q_star)
    return hp.effective_sigma_w_sq * gauss_expect_1d(
        lambda z: act.d_phi(sq * z) ** 2, quad
    )


def _scale_from_factor(factor: float, allow_growth: bool = False) -> float:
    """Map a per-layer linearization factor to a depth scale.

    Returns +inf at criticality and nan outside the exponential regime.
    With ``allow_growth`` a factor > 1 yields a negative scale (exploding
    rather than decaying) instead of nan.
    """
    if abs(factor - 1.0) <= CRITICALITY_TOL:
        return math.inf
    if factor <= 0.0 or (factor > 1.0 and not allow_growth):
        return math.nan
    return -1.0 / math.log(factor)


def xi_q(hp: HyperParams, act: Activation, q_star: float,
         quad: QuadratureRule | None = None) -> float:
    """Depth scale of single-input variance convergence."""
    if q_star < 0:
        raise DomainError(f"q_star must be >= 0, got {q_star}")
    sq = math.sqrt(q_star)
    curvature = hp.effective_sigma_w_sq * gauss_expect_1d(
        lambda z: act.dd_phi(sq * z) * act.phi(sq * z), quad
    )
    factor = chi1(hp, act, q_star, quad) + curvature
    return _scale_from_factor(factor)


def correlation_slope(hp: HyperParams, act: Activation, q_star: float,
                      c_star: float, quad: QuadratureRule | None = None) -> float:
    """Linearization of the correlation map about its fixed point.

    Carries the bare sigma_w^2 even with dropout. For the degenerate
    q* = 0 point the integrand is constant and the slope reduces to
    sigma_w^2 phi'(0)^2.
    """
    if q_star == 0.0:
        return hp.sigma_w_sq * float(act.d_phi(np.float64(0.0))) ** 2
    pair = CorrelatedPair(q_a=q_star, q_b=q_star, c=c_star)
    moment = gauss_expect_2d(lambda u1, u2: act.d_phi(u1) * act.d_phi(u2), pair, quad)
    return hp.sigma_w_sq * moment


def xi_c(hp: HyperParams, act: Activation, q_star: float, c_star: float,
         quad: QuadratureRule | None = None) -> float:
    """Depth scale of pair-correlation convergence.

    At c* = 1 the slope integral collapses to the chi1 integral, so the
    general formula agrees with -1/log(chi1) in the ordered phase.
    """
    if not 0 <= c_star <= 1:
        raise DomainError(f"c_star must lie in [0, 1], got {c_star}")
    return _scale_from_factor(correlation_slope(hp, act, q_star, c_star, quad))


def _solve_c_star_detail(hp: HyperParams, act: Activation, q_star: float,
                         quad: QuadratureRule | None = None,
                         tol: float = 1e-12) -> tuple[float, int]:
    if q_star <= 0:
        raise DomainError(f"c* requires q_star > 0, got {q_star}")

    displacement = lambda c: correlation_map(c, q_star, q_star, hp, act, quad) - c

    if hp.rho == 1.0:
        # c = 1 is an exact fixed point without dropout; it is the stable
        # one iff the map's slope there does not exceed 1.
        slope_at_one = correlation_slope(hp, act, q_star, 1.0, quad)
        if slope_at_one <= 1.0 + CRITICALITY_TOL:
            return 1.0, 0
        # Chaotic: the stable root sits strictly below 1. Treat c = 1 as
        # the (exclusive) upper end of the bracket; just below it the
        # displacement is negative by the slope argument, which avoids
        # evaluating the map where rounding noise dominates.
        grid = np.linspace(0.0, 1.0, 41)[:-1]
        upper_is_virtual = True
    else:
        grid = np.linspace(0.0, 1.0, 41)
        upper_is_virtual = False

    values = [displacement(c) for c in grid]
    positive = [i for i, v in enumerate(values) if v > 0]
    if not positive:
        # No interior sign change: fall back to a boundary fixed point.
        for boundary in (0.0, 1.0):
            if abs(displacement(boundary)) <= 1e-10:
                return boundary, 0
        raise ConvergenceError(
            "no sign change found when bracketing the correlation fixed point",
            last_iterate=None,
        )
    lo = grid[positive[-1]]
    if positive[-1] + 1 < len(grid):
        hi = grid[positive[-1] + 1]
    elif upper_is_virtual:
        hi = 1.0
    else:
        # Positive all the way to c = 1 without dropout means ordered.
        return 1.0, 0

    iterations = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        iterations += 1
        if displacement(mid) > 0:
            lo = mid
        else:
            hi = mid
        if iterations > 200:
            break
    c_star = 0.5 * (lo + hi)
    slope = correlation_slope(hp, act, q_star, c_star, quad)
    if abs(slope) >= 1.0 + 1e-6:
        raise ConvergenceError(
            f"bracketed correlation fixed point c={c_star} is unstable "
            f"(|slope|={abs(slope)}); possible multi-root map",
            last_iterate=c_star,
            iterations=iterations,
        )
    return c_star, iterations


def solve_c_star(hp: HyperParams, act: Activation, q_star: float,
                 quad: QuadratureRule | None = None) -> float:
    """Stable fixed point of the correlation map at q_a = q_b = q*."""
    c_star, _ = _solve_c_star_detail(hp, act, q_star, quad)
    return c_star


def fixed_point(hp: HyperParams, act: Activation, q0: float = DEFAULT_Q0,
                quad: QuadratureRule | None = None) -> FixedPoint:
    """Solve both fixed points, handling the degenerate q* = 0 case.

    With sigma_b^2 = 0 in the ordered phase the variance collapses to
    zero and the correlation is formally 0/0; the sigma_b^2 -> 0 limit is
    c* = 1, reported with ``degenerate=True``.
    """
    if hp.sigma_b_sq == 0.0:
        # Plain iteration slows to a polynomial crawl as q* -> 0 (the
        # map's slope tends to 1 at the origin); bracket the root instead.
        q_star, iterations_q = _q_star_robust(hp, act, quad), 0
    else:
        q_star, iterations_q = solve_q_star(hp, act, q0, quad)
    if hp.sigma_b_sq == 0.0 and q_star < _DEGENERATE_Q:
        return FixedPoint(q_star=0.0, c_star=1.0, iterations_q=iterations_q,
                          iterations_c=0, converged=True, degenerate=True)
    c_star, iterations_c = _solve_c_star_detail(hp, act, q_star, quad)
    return FixedPoint(q_star=q_star, c_star=c_star, iterations_q=iterations_q,
                      iterations_c=iterations_c, converged=True)


def depth_scales(hp: HyperParams, act: Activation,
                 quad: QuadratureRule | None = None,
                 fp: FixedPoint | None = None) -> DepthScales:
    """chi1 and all depth scales at one hyperparameter point."""
    if fp is None:
        fp = fixed_point(hp, act, quad=quad)
    chi = chi1(hp, act, fp.q_star, quad)
    return DepthScales(
        chi1=chi,
        xi_q=xi_q(hp, act, fp.q_star, quad),
        xi_c=xi_c(hp, act, fp.q_star, fp.c_star, quad),
        xi_grad=_scale_from_factor(chi, allow_growth=True),
    )


def critical_sigma_w(sigma_b_sq: float, act: Activation,
                     quad: QuadratureRule | None = None,
                     bracket: tuple[float, float] = (1e-3, 10.0),
                     tol: float = 1e-9) -> float:
    """Weight variance on the order-to-chaos boundary at this bias variance.

    Only defined without dropout (dropout has no sharp critical point).
    At sigma_b^2 = 0 the fixed point is q* = 0 and chi1 = sigma_w^2
    phi'(0)^2 exactly, which pins the boundary analytically; iterative
    probing is numerically ill-posed there because q* -> 0 makes the
    variance iteration arbitrarily slow.
    """
    if sigma_b_sq < 0:
        raise DomainError(f"sigma_b_sq must be >= 0, got {sigma_b_sq}")
    if not act.bounded:
        raise ConfigurationError(
            f"critical line requires a bounded activation, got {act.name!r}"
        )
    slope0 = float(act.d_phi(np.float64(0.0))) ** 2
    if sigma_b_sq == 0.0:
        return 1.0 / slope0

    def excess(sigma_w_sq: float) -> float:
        hp = HyperParams(sigma_w_sq=sigma_w_sq, sigma_b_sq=sigma_b_sq, rho=1.0)
        q_star = _q_star_robust(hp, act, quad)
        return chi1(hp, act, q_star, quad) - 1.0

    lo, hi = bracket
    f_lo, f_hi = excess(lo), excess(hi)
    if not (f_lo < 0.0 < f_hi):
        raise NoFixedPointError(
            f"no critical point: chi1 - 1 does not change sign on "
            f"[{lo}, {hi}] (endpoints {f_lo}, {f_hi})"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def phase_of(chi1_value: float, tol: float = 1e-9) -> str:
    """Classify a point by its stability coefficient."""
    if abs(chi1_value - 1.0) <= tol:
        return "critical"
    return "ordered" if chi1_value < 1.0 else "chaotic"


def iterate_trajectory(hp: HyperParams, act: Activation,
                       q0_a: float = DEFAULT_Q0, q0_b: float = DEFAULT_Q0,
                       c0: float = DEFAULT_C0, layers: int = 100,
                       quad: QuadratureRule | None = None) -> Trajectory:
    """Exact joint iteration of the variance and covariance maps.

    Tracks q_aa, q_bb, and q_ab layer by layer; the reported correlation
    is q_ab normalized by the same-layer variances (no fixed-point
    approximation). The fixed points are attached for residual analysis.
    """
    if layers < 1:
        raise DomainError(f"layers must be >= 1, got {layers}")
    if abs(c0) > 1:
        raise DomainError(f"|c0| must be <= 1, got {c0}")

    q_aa = np.empty(layers + 1)
    q_bb = np.empty(layers + 1)
    c_ab = np.empty(layers + 1)
    q_aa[0], q_bb[0], c_ab[0] = q0_a, q0_b, c0

    symmetric = q0_a == q0_b
    for l in range(layers):
        q_ab_next = covariance_map(c_ab[l], q_aa[l], q_bb[l], hp, act, quad)
        q_aa[l + 1] = variance_map(q_aa[l], hp, act, quad)
        q_bb[l + 1] = q_aa[l + 1] if symmetric else variance_map(q_bb[l], hp, act, quad)
        c_ab[l + 1] = min(1.0, max(-1.0, q_ab_next / math.sqrt(q_aa[l + 1] * q_bb[l + 1])))

    fp = fixed_point(hp, act, q0=q0_a, quad=quad)
    return Trajectory(layers=layers, q_aa=q_aa, q_bb=q_bb, c_ab=c_ab,
                      q_star=fp.q_star, c_star=fp.c_star)
