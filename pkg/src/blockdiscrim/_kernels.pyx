# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the noncentral chi-square series.

Same algorithms as ``_kernels_py``; keep the two in step.
"""
import numpy as np

from libc.math cimport exp, fabs, floor, isinf, lgamma, log, sqrt, INFINITY

NAME = "cython"

cdef double LOG2 = 0.6931471805599453
cdef double SERIES_RTOL = 1e-15
cdef double EPS = 2.220446049250313e-16
cdef double TINY = 1e-300
cdef int MAX_TERMS = 100000


cdef double _gammainc_lower(double a, double x) nogil:
    cdef double log_prefactor, ap, term, total, b, c, d, h, an, delta
    cdef int i
    if x <= 0.0:
        return 0.0
    if isinf(x):
        return 1.0
    log_prefactor = a * log(x) - x - lgamma(a)
    if x < a + 1.0:
        ap = a
        term = 1.0 / a
        total = term
        for i in range(MAX_TERMS):
            ap += 1.0
            term *= x / ap
            total += term
            if fabs(term) < fabs(total) * EPS:
                break
        total = total * exp(log_prefactor)
        return 1.0 if total > 1.0 else total
    b = x + 1.0 - a
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_TERMS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if fabs(d) < TINY:
            d = TINY
        c = b + an / c
        if fabs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < EPS:
            break
    h = 1.0 - exp(log_prefactor) * h
    return 0.0 if h < 0.0 else h


cdef double _central_logpdf(double u, double dof) nogil:
    cdef double half = 0.5 * dof
    if u == 0.0:
        if half < 1.0:
            return INFINITY
        if half == 1.0:
            return -LOG2
        return -INFINITY
    if isinf(u):
        return -INFINITY
    return (half - 1.0) * log(u) - 0.5 * u - half * LOG2 - lgamma(half)


cdef double _ncx2_logpdf(double u, double dof, double nc) nogil:
    cdef double lam, half, b, disc, root, log_t0, half_lu, total, r
    cdef long k0, k
    cdef int it
    if nc == 0.0 or u == 0.0:
        return _central_logpdf(u, dof) - 0.5 * nc
    if isinf(u):
        return -INFINITY
    lam = 0.5 * nc
    half = 0.5 * dof
    b = half + 1.0
    disc = b * b - 4.0 * (half - 0.5 * lam * u)
    k0 = 0
    if disc > 0.0:
        root = 0.5 * (-b + sqrt(disc))
        if root > 0.0:
            k0 = <long>floor(root)
    log_t0 = (-lam + k0 * log(lam) - lgamma(k0 + 1.0)
              + _central_logpdf(u, dof + 2.0 * k0))
    half_lu = 0.5 * lam * u
    total = 1.0
    r = 1.0
    k = k0
    for it in range(MAX_TERMS):
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
    return log_t0 + log(total)


cdef double _ncx2_cdf(double u, double dof, double nc) nogil:
    cdef double half, x, lam, log_lam, log_x, pois0, p0, total, pois, p, a, term
    cdef long k0, k
    cdef int it
    if u <= 0.0:
        return 0.0
    if isinf(u):
        return 1.0
    half = 0.5 * dof
    x = 0.5 * u
    if nc == 0.0:
        return _gammainc_lower(half, x)
    lam = 0.5 * nc
    log_lam = log(lam)
    log_x = log(x)
    k0 = <long>floor(lam)
    pois0 = exp(-lam + k0 * log_lam - lgamma(k0 + 1.0))
    p0 = _gammainc_lower(half + k0, x)
    total = pois0 * p0
    pois = pois0
    p = p0
    k = k0
    for it in range(MAX_TERMS):
        a = half + k
        p = p - exp(a * log_x - x - lgamma(a + 1.0))
        if p < 0.0:
            p = 0.0
        k += 1
        pois *= lam / k
        term = pois * p
        total += term
        if term <= SERIES_RTOL * total:
            break
    pois = pois0
    p = p0
    k = k0
    while k > 0:
        a = half + k
        p = p + exp((a - 1.0) * log_x - x - lgamma(a))
        if p > 1.0:
            p = 1.0
        pois *= k / lam
        k -= 1
        total += pois * p
        if pois <= SERIES_RTOL * total:
            break
    return 1.0 if total > 1.0 else total


def gammainc_lower(double a, double x):
    """Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0."""
    return _gammainc_lower(a, x)


def central_chi2_logpdf(double u, double dof):
    return _central_logpdf(u, dof)


def ncx2_logpdf(double u, double dof, double nc):
    return _ncx2_logpdf(u, dof, nc)


def ncx2_cdf(double u, double dof, double nc):
    return _ncx2_cdf(u, dof, nc)


def ncx2_logpdf_array(u, double dof, double nc):
    arr = np.ascontiguousarray(u, dtype=np.float64)
    out = np.empty_like(arr)
    cdef double[::1] src = arr.reshape(-1)
    cdef double[::1] dst = out.reshape(-1)
    cdef Py_ssize_t i, n = src.shape[0]
    with nogil:
        for i in range(n):
            dst[i] = _ncx2_logpdf(src[i], dof, nc)
    return out


def ncx2_cdf_array(u, double dof, double nc):
    arr = np.ascontiguousarray(u, dtype=np.float64)
    out = np.empty_like(arr)
    cdef double[::1] src = arr.reshape(-1)
    cdef double[::1] dst = out.reshape(-1)
    cdef Py_ssize_t i, n = src.shape[0]
    with nogil:
        for i in range(n):
            dst[i] = _ncx2_cdf(src[i], dof, nc)
    return out
