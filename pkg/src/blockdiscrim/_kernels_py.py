"""Pure-Python reference kernels.

Line-for-line twin of ``_kernels.pyx``; used when the compiled extension is
unavailable or ``BLOCKDISCRIM_PURE_PYTHON`` is set. Arguments are assumed to
be validated by the caller (``blockdiscrim.numerics``).
"""
import math

import numpy as np

NAME = "python"

LOG2 = math.log(2.0)
SERIES_RTOL = 1e-15
EPS = 2.220446049250313e-16
TINY = 1e-300
MAX_TERMS = 100000


def gammainc_lower(a, x):
    """Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0."""
    if x <= 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    log_prefactor = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        ap = a
        term = 1.0 / a
        total = term
        for _ in range(MAX_TERMS):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * EPS:
                break
        return min(1.0, total * math.exp(log_prefactor))
    # modified Lentz continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_TERMS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    return max(0.0, 1.0 - math.exp(log_prefactor) * h)


def central_chi2_logpdf(u, dof):
    half = 0.5 * dof
    if u == 0.0:
        if half < 1.0:
            return math.inf
        if half == 1.0:
            return -LOG2
        return -math.inf
    if math.isinf(u):
        return -math.inf
    return (half - 1.0) * math.log(u) - 0.5 * u - half * LOG2 - math.lgamma(half)


def ncx2_logpdf(u, dof, nc):
    """Log density of the noncentral chi-square as a Poisson mixture.

    Summation starts at the mode of the mixture terms (in the mixing index)
    and proceeds outward; consecutive term ratios are applied by recurrence.
    """
    if nc == 0.0 or u == 0.0:
        return central_chi2_logpdf(u, dof) - 0.5 * nc
    if math.isinf(u):
        return -math.inf
    lam = 0.5 * nc
    half = 0.5 * dof
    # term ratio t(k+1)/t(k) = lam*u / (2 (k+1) (half+k)); mode where it crosses 1
    b = half + 1.0
    disc = b * b - 4.0 * (half - 0.5 * lam * u)
    k0 = 0
    if disc > 0.0:
        root = 0.5 * (-b + math.sqrt(disc))
        if root > 0.0:
            k0 = int(root)
    log_t0 = (
        -lam + k0 * math.log(lam) - math.lgamma(k0 + 1.0)
        + central_chi2_logpdf(u, dof + 2.0 * k0)
    )
    half_lu = 0.5 * lam * u
    total = 1.0
    r = 1.0
    k = k0
    for _ in range(MAX_TERMS):
        r *= half_lu / ((k + 1.0) * (half + k))
        k += 1
        total += r
        if r < SERIES_RTOL * total:
            break
    r = 1.0
    k = k0
    while k > 0:
        r *= k * (half + k - 1.0) / half_lu
        k -= 1
        total += r
        if r < SERIES_RTOL * total:
            break
    return log_t0 + math.log(total)


def ncx2_cdf(u, dof, nc):
    if u <= 0.0:
        return 0.0
    if math.isinf(u):
        return 1.0
    half = 0.5 * dof
    x = 0.5 * u
    if nc == 0.0:
        return gammainc_lower(half, x)
    lam = 0.5 * nc
    log_lam = math.log(lam)
    log_x = math.log(x)
    k0 = int(lam)
    pois0 = math.exp(-lam + k0 * log_lam - math.lgamma(k0 + 1.0))
    p0 = gammainc_lower(half + k0, x)
    total = pois0 * p0
    # upward: P(a+1) = P(a) - x^a e^-x / Gamma(a+1); every factor is nonincreasing
    pois = pois0
    p = p0
    k = k0
    for _ in range(MAX_TERMS):
        a = half + k
        p = max(0.0, p - math.exp(a * log_x - x - math.lgamma(a + 1.0)))
        k += 1
        pois *= lam / k
        term = pois * p
        total += term
        if term <= SERIES_RTOL * total:
            break
    # downward: P(a-1) = P(a) + x^(a-1) e^-x / Gamma(a)
    pois = pois0
    p = p0
    k = k0
    while k > 0:
        a = half + k
        p = min(1.0, p + math.exp((a - 1.0) * log_x - x - math.lgamma(a)))
        pois *= k / lam
        k -= 1
        total += pois * p
        if pois <= SERIES_RTOL * total:
            break
    return min(1.0, total)


def ncx2_logpdf_array(u, dof, nc):
    u = np.ascontiguousarray(u, dtype=np.float64)
    out = np.empty_like(u)
    flat_u = u.ravel()
    flat_out = out.ravel()
    for i in range(flat_u.shape[0]):
        flat_out[i] = ncx2_logpdf(float(flat_u[i]), dof, nc)
    return out


def ncx2_cdf_array(u, dof, nc):
    u = np.ascontiguousarray(u, dtype=np.float64)
    out = np.empty_like(u)
    flat_u = u.ravel()
    flat_out = out.ravel()
    for i in range(flat_u.shape[0]):
        flat_out[i] = ncx2_cdf(float(flat_u[i]), dof, nc)
    return out
