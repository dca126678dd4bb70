"""Special functions and half-line quadrature.

Standard normal CDF, the noncentral chi-square density/CDF and an adaptive
Gauss-Kronrod integrator over ``(0, inf)``. The series kernels live in
``_kernels`` (compiled) or ``_kernels_py`` (fallback); this module validates
arguments and dispatches.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from numbers import Integral, Real
from typing import Callable

import numpy as np

from ._backend import BACKEND, kernels
from .errors import ConvergenceError, DomainError

__all__ = [
    "BACKEND",
    "QuadratureConfig",
    "DEFAULT_QUADRATURE",
    "std_normal_cdf",
    "noncentral_chi2_logpdf",
    "noncentral_chi2_pdf",
    "noncentral_chi2_cdf",
    "noncentral_chi2_mean",
    "integrate_halfline",
]

_SQRT1_2 = 1.0 / math.sqrt(2.0)
_EPS = np.finfo(float).eps
_MAX_DOUBLINGS = 64

# 15-point Kronrod rule with its embedded 7-point Gauss rule on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
# full symmetric node/weight vectors (Gauss weights zero on Kronrod-only nodes)
GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_wg_half = np.zeros(8)
_wg_half[1::2] = _WG
GK_GAUSS_WEIGHTS = np.concatenate([_wg_half[:-1], _wg_half[::-1]])


def std_normal_cdf(y: float) -> float:
    """Standard normal CDF ``Phi(y)`` via the complementary error function."""
    y = float(y)
    if not math.isfinite(y):
        raise DomainError(f"std_normal_cdf requires a finite argument, got {y!r}")
    return 0.5 * math.erfc(-y * _SQRT1_2)


def _check_params(dof, noncentrality):
    if isinstance(dof, bool) or not isinstance(dof, (Integral, Real)) or dof != int(dof) or dof < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {dof!r}")
    nc = float(noncentrality)
    if not (math.isfinite(nc) and nc >= 0.0):
        raise DomainError(f"noncentrality must be finite and >= 0, got {noncentrality!r}")
    return float(dof), nc


def _check_u(u):
    arr = np.asarray(u, dtype=np.float64)
    if np.isnan(arr).any() or (arr < 0.0).any():
        raise DomainError("argument u must be >= 0")
    return arr


def noncentral_chi2_logpdf(u, dof, noncentrality):
    """Log density of the noncentral chi-square; scalar in, scalar out."""
    dof, nc = _check_params(dof, noncentrality)
    arr = _check_u(u)
    if arr.ndim == 0:
        return kernels.ncx2_logpdf(float(arr), dof, nc)
    return kernels.ncx2_logpdf_array(arr, dof, nc)


def noncentral_chi2_pdf(u, dof, noncentrality):
    """Density ``chi(u; dof, noncentrality)``.

    Accepts a scalar or an array of ``u``. With ``noncentrality == 0`` this
    is the central chi-square density.
    """
    logp = noncentral_chi2_logpdf(u, dof, noncentrality)
    if np.ndim(logp) == 0:
        return math.exp(logp) if logp < 710.0 else math.inf
    return np.exp(logp)


def noncentral_chi2_cdf(u, dof, noncentrality):
    dof, nc = _check_params(dof, noncentrality)
    arr = _check_u(u)
    if arr.ndim == 0:
        return kernels.ncx2_cdf(float(arr), dof, nc)
    return kernels.ncx2_cdf_array(arr, dof, nc)


def noncentral_chi2_mean(dof, noncentrality) -> float:
    dof, nc = _check_params(dof, noncentrality)
    return dof + nc


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for :func:`integrate_halfline`.

    ``max_refinements`` bounds the total number of panel bisections.
    ``initial_upper`` is the first truncation point; it is doubled until the
    estimate stops moving.
    """

    abs_tol: float = 1e-11
    rel_tol: float = 1e-11
    tail_mass_cutoff: float = 1e-13
    max_refinements: int = 4000
    initial_upper: float = 16.0

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "tail_mass_cutoff"):
            value = getattr(self, name)
            if not (0.0 < value <= 1e-6):
                raise DomainError(f"{name} must lie in (0, 1e-6], got {value!r}")
        if self.max_refinements < 1:
            raise DomainError("max_refinements must be a positive integer")
        if not (self.initial_upper > 0.0 and math.isfinite(self.initial_upper)):
            raise DomainError("initial_upper must be positive and finite")


DEFAULT_QUADRATURE = QuadratureConfig()


def _gk15(f, a, b):
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = center + half * GK_NODES
    fx = np.asarray(f(x), dtype=np.float64)
    if fx.shape != x.shape:
        raise DomainError(f"integrand returned shape {fx.shape}, expected {x.shape}")
    if not np.isfinite(fx).all():
        bad = x[~np.isfinite(fx)][0]
        raise DomainError(f"integrand is not finite at u={bad!r}")
    resk = float(GK_KRONROD_WEIGHTS @ fx)
    resg = float(GK_GAUSS_WEIGHTS @ fx)
    resabs = float(GK_KRONROD_WEIGHTS @ np.abs(fx)) * half
    resasc = float(GK_KRONROD_WEIGHTS @ np.abs(fx - 0.5 * resk)) * half
    result = resk * half
    err = abs((resk - resg) * half)
    # QUADPACK error scaling
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > np.finfo(float).tiny / (50.0 * _EPS):
        err = max(50.0 * _EPS * resabs, err)
    return result, err


class _Adaptive:
    """Global adaptive bisection over a growing set of panels."""

    def __init__(self, f, config):
        self.f = f
        self.config = config
        self.heap = []
        self.frozen_value = 0.0
        self.frozen_err = 0.0
        self.total = 0.0
        self.err = 0.0
        self.refinements = 0

    def add(self, a, b):
        value, err = _gk15(self.f, a, b)
        self.total += value
        self.err += err
        heapq.heappush(self.heap, (-err, a, b, value))

    def target(self):
        return max(self.config.abs_tol, self.config.rel_tol * abs(self.total))

    def refine(self, previous):
        while self.err > self.target() and self.heap:
            if self.refinements >= self.config.max_refinements:
                raise ConvergenceError(
                    f"quadrature exceeded {self.config.max_refinements} refinements",
                    (previous, self.total),
                )
            neg_err, a, b, value = heapq.heappop(self.heap)
            self.total -= value
            self.err += neg_err
            mid = 0.5 * (a + b)
            if not (a < mid < b) or (b - a) <= 64 * _EPS * max(abs(a), abs(b)):
                # panel can no longer be split; keep its estimate as is
                self.frozen_value += value
                self.frozen_err += -neg_err
                self.total += value
                self.err -= neg_err
                continue
            self.add(a, mid)
            self.add(mid, b)
            self.refinements += 1
        # resum to shed accumulated rounding in the running totals
        self.total = math.fsum([item[3] for item in self.heap]) + self.frozen_value
        self.err = math.fsum([-item[0] for item in self.heap]) + self.frozen_err


def integrate_halfline(
    integrand: Callable,
    config: QuadratureConfig = DEFAULT_QUADRATURE,
    *,
    vectorized: bool = True,
) -> float:
    """Integrate ``integrand`` over ``(0, inf)``.

    Adaptive 15-point Gauss-Kronrod on ``[0, U]``; the rule never evaluates
    at the endpoints so integrable singularities at 0 are tolerated. ``U``
    starts at ``config.initial_upper`` and is doubled until two successive
    estimates agree to within ``min(abs_tol, tail_mass_cutoff)``.

    With ``vectorized=True`` the integrand receives a 1-D array of abscissas
    and must return an array of the same shape.
    """
    if vectorized:
        f = integrand
    else:
        def f(x):
            return np.array([integrand(float(t)) for t in x], dtype=np.float64)

    quad = _Adaptive(f, config)
    upper = config.initial_upper
    quad.add(0.0, upper)
    quad.refine(math.nan)
    previous = quad.total
    stop = min(config.abs_tol, config.tail_mass_cutoff)
    for _ in range(_MAX_DOUBLINGS):
        quad.add(upper, 2.0 * upper)
        upper *= 2.0
        quad.refine(previous)
        if abs(quad.total - previous) < stop:
            return quad.total
        previous = quad.total
    raise ConvergenceError("upper limit doubling did not converge", (previous, quad.total))
