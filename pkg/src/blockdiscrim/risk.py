"""Growing-dimension limits of the misclassification probabilities.

Notation: ``m`` block size, ``rho = lim kappa/n``, ``pi0 = ln(pi2/pi1)``,
``H`` the limiting distribution of block powers ``gamma^2`` (finite discrete
mixture here), ``chi(u; k, g)`` the noncentral chi-square density.

Factor conventions:

* the limiting divergence carries the factor rho: ``J = 2 rho int gamma^2 dH``,
  so that ``E(1) = J/2`` equals the limiting mean of the unweighted discriminant;
* ``V(w)`` keeps the leading ``2 rho``; hence ``V(1) = 2 rho (gamma^2 + m) =
  J + 2 m rho``, the unweighted limiting variance, consistent with the closed
  form of ``R(1)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DatasetFormatError, DegenerateError, DomainError, UsageError
from .numerics import (
    QuadratureConfig,
    integrate_halfline,
    noncentral_chi2_logpdf,
    noncentral_chi2_pdf,
    std_normal_cdf,
)

__all__ = [
    "PowerDistribution",
    "Regime",
    "limiting_divergence",
    "theorem1_error_limits",
    "theorem1_risk",
    "e_of_w",
    "v_of_w",
    "weighted_error_limits",
    "w0",
    "w0_function",
    "unit_weight",
    "optimal_weight_integral",
    "optimal_risk",
    "unit_risk",
    "priors_from_log_ratio",
]


@dataclass(frozen=True)
class PowerDistribution:
    """Finite discrete distribution of block powers: ``((gamma2, prob), ...)``."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((float(g), float(p)) for g, p in self.atoms)
        if not atoms:
            raise DomainError("a power distribution needs at least one atom")
        gammas = [g for g, _ in atoms]
        if any(not math.isfinite(g) or g < 0 for g in gammas):
            raise DomainError("atom locations gamma2 must be finite and >= 0")
        if len(set(gammas)) != len(gammas):
            raise DomainError("atom locations gamma2 must be distinct")
        if any(not p > 0 for _, p in atoms):
            raise DomainError("atom probabilities must be > 0")
        if abs(math.fsum(p for _, p in atoms) - 1.0) > 1e-12:
            raise DomainError("atom probabilities must sum to 1")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def point_mass(cls, gamma2: float) -> "PowerDistribution":
        return cls(((gamma2, 1.0),))

    @property
    def is_point_mass(self) -> bool:
        return len(self.atoms) == 1

    @property
    def mean(self) -> float:
        return math.fsum(g * p for g, p in self.atoms)

    @property
    def max_gamma2(self) -> float:
        return max(g for g, _ in self.atoms)

    def to_json_dict(self) -> dict:
        return {"atoms": [{"gamma2": g, "prob": p} for g, p in self.atoms]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "PowerDistribution":
        try:
            return cls(tuple((a["gamma2"], a["prob"]) for a in data["atoms"]))
        except (KeyError, TypeError) as exc:
            raise DatasetFormatError(f"invalid power distribution JSON: {exc}") from exc

    @classmethod
    def load(cls, path) -> "PowerDistribution":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Regime:
    block_size: int
    rho: float
    log_prior_ratio: float = 0.0

    def __post_init__(self):
        if int(self.block_size) != self.block_size or self.block_size < 1:
            raise DomainError("block_size must be a positive integer")
        if not (math.isfinite(self.rho) and self.rho >= 0):
            raise DomainError("rho must be finite and >= 0")
        if not math.isfinite(self.log_prior_ratio):
            raise DomainError("log_prior_ratio must be finite")

    @property
    def c(self) -> float:
        """Limit of p/n, equal to ``m * rho``."""
        return self.block_size * self.rho


def priors_from_log_ratio(log_prior_ratio: float) -> tuple:
    pi1 = 1.0 / (1.0 + math.exp(log_prior_ratio))
    return pi1, 1.0 - pi1


def limiting_divergence(H: PowerDistribution, rho: float) -> float:
    return 2.0 * rho * H.mean


def theorem1_error_limits(J: float, regime: Regime) -> tuple:
    """Limiting ``(E1, E2)`` of the unweighted plug-in discriminant."""
    if not (math.isfinite(J) and J >= 0):
        raise DomainError(f"J must be finite and >= 0, got {J!r}")
    var = J + 2.0 * regime.block_size * regime.rho
    if var <= 0.0:
        raise DegenerateError("J + 2 m rho is zero; the limit is undefined")
    scale = 2.0 * math.sqrt(var)
    pi0 = regime.log_prior_ratio
    return std_normal_cdf(-(J - pi0) / scale), std_normal_cdf(-(J + pi0) / scale)


def theorem1_risk(J: float, regime: Regime) -> float:
    e1, e2 = theorem1_error_limits(J, regime)
    pi1, pi2 = priors_from_log_ratio(regime.log_prior_ratio)
    return pi1 * e1 + pi2 * e2


def _quadrature_for(m: int, H: PowerDistribution, config: QuadratureConfig | None) -> QuadratureConfig:
    if config is not None:
        return config
    return QuadratureConfig(initial_upper=max(16.0, 2.0 * (m + 2 + H.max_gamma2)))


def unit_weight(u):
    return np.ones_like(np.asarray(u, dtype=np.float64))


def e_of_w(w, regime: Regime, H: PowerDistribution, config: QuadratureConfig | None = None) -> float:
    """``rho * sum_j p_j gamma_j^2 int w(u) chi(u; m+2, gamma_j^2) du``.

    ``w`` must accept and return numpy arrays.
    """
    m = regime.block_size
    cfg = _quadrature_for(m, H, config)
    parts = []
    for g2, p in H.atoms:
        if g2 == 0.0:
            continue
        inner = integrate_halfline(lambda u, g2=g2: w(u) * noncentral_chi2_pdf(u, m + 2, g2), cfg)
        parts.append(p * g2 * inner)
    return regime.rho * math.fsum(parts)


def v_of_w(w, regime: Regime, H: PowerDistribution, config: QuadratureConfig | None = None) -> float:
    """``2 rho * sum_j p_j int u w(u)^2 chi(u; m, gamma_j^2) du``."""
    m = regime.block_size
    cfg = _quadrature_for(m, H, config)
    parts = []
    for g2, p in H.atoms:
        inner = integrate_halfline(lambda u, g2=g2: u * w(u) ** 2 * noncentral_chi2_pdf(u, m, g2), cfg)
        parts.append(p * inner)
    return 2.0 * regime.rho * math.fsum(parts)


def weighted_error_limits(w, regime: Regime, H: PowerDistribution,
                          config: QuadratureConfig | None = None) -> tuple:
    """Limiting ``(E1, E2)`` for the discriminant weighted by ``w(sample power)``."""
    e = e_of_w(w, regime, H, config)
    v = v_of_w(w, regime, H, config)
    if not (math.isfinite(e) and math.isfinite(v)):
        raise DegenerateError("E(w) or V(w) is not finite")
    if v <= 0.0:
        raise DegenerateError("V(w) is zero; weight function is not admissible")
    sd = math.sqrt(v)
    pi0 = regime.log_prior_ratio
    return std_normal_cdf(-(e - pi0) / sd), std_normal_cdf(-(e + pi0) / sd)


def _log_mixture(u, dof, H, weight_by_gamma):
    """``log sum_j p_j [gamma_j^2] chi(u; dof, gamma_j^2)``; -inf when empty."""
    terms = []
    for g2, p in H.atoms:
        if weight_by_gamma:
            if g2 == 0.0:
                continue
            log_coef = math.log(p) + math.log(g2)
        else:
            log_coef = math.log(p)
        terms.append(log_coef + noncentral_chi2_logpdf(u, dof, g2))
    if not terms:
        return np.full(np.shape(u), -np.inf)
    return np.logaddexp.reduce(np.stack(np.broadcast_arrays(*terms)), axis=0)


def w0(u, block_size: int, H: PowerDistribution):
    """Risk-optimal weight at sample power ``u``.

    ``sum p g chi(u; m+2, g) / (u sum p chi(u; m, g))``, evaluated as a
    difference of logs. At ``u = 0`` the continuous limit
    ``sum p g e^{-g/2} / (m sum p e^{-g/2})`` is returned.
    """
    arr = np.asarray(u, dtype=np.float64)
    if np.isnan(arr).any() or (arr < 0).any() or np.isinf(arr).any():
        raise DomainError("w0 requires finite u >= 0")
    m = block_size
    if all(g2 == 0.0 for g2, _ in H.atoms):
        out = np.zeros_like(arr)
        return float(out) if out.ndim == 0 else out
    flat = arr.reshape(-1)
    out = np.empty_like(flat)
    pos = flat > 0
    if pos.any():
        up = flat[pos]
        log_num = _log_mixture(up, m + 2, H, True)
        log_den = np.log(up) + _log_mixture(up, m, H, False)
        out[pos] = np.exp(log_num - log_den)
    if (~pos).any():
        num = math.fsum(p * g * math.exp(-0.5 * g) for g, p in H.atoms)
        den = m * math.fsum(p * math.exp(-0.5 * g) for g, p in H.atoms)
        out[~pos] = num / den
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def w0_function(block_size: int, H: PowerDistribution):
    """``w0`` bound to ``(block_size, H)`` as a vectorized callable."""
    def weight(u):
        return w0(u, block_size, H)
    return weight


def optimal_weight_integral(block_size: int, H: PowerDistribution,
                            config: QuadratureConfig | None = None) -> float:
    """``int [sum p g chi(u; m+2, g)]^2 / (u sum p chi(u; m, g)) du``."""
    m = block_size
    if all(g2 == 0.0 for g2, _ in H.atoms):
        return 0.0
    cfg = _quadrature_for(m, H, config)

    def integrand(u):
        log_num = _log_mixture(u, m + 2, H, True)
        log_den = _log_mixture(u, m, H, False)
        return np.exp(2.0 * log_num - np.log(u) - log_den)

    return integrate_halfline(integrand, cfg)


def _require_equal_priors(regime):
    if regime.log_prior_ratio != 0.0:
        raise UsageError("this limit assumes equal priors (log_prior_ratio = 0); use weighted_error_limits")


def optimal_risk(regime: Regime, H: PowerDistribution, config: QuadratureConfig | None = None) -> float:
    """Limiting Bayes risk of the ``w0``-weighted discriminant (equal priors)."""
    _require_equal_priors(regime)
    if regime.rho == 0.0:
        return 0.5
    integral = optimal_weight_integral(regime.block_size, H, config)
    return std_normal_cdf(-0.5 * math.sqrt(2.0 * regime.rho * integral))


def unit_risk(regime: Regime, H: PowerDistribution, closed_form: bool | None = None,
              config: QuadratureConfig | None = None) -> float:
    """Limiting Bayes risk without weighting (equal priors).

    Point masses use the closed form by default; ``closed_form=False`` forces
    the quadrature route through :func:`weighted_error_limits`.
    """
    _require_equal_priors(regime)
    if regime.rho == 0.0:
        return 0.5
    if closed_form is None:
        closed_form = H.is_point_mass
    if closed_form:
        if not H.is_point_mass:
            raise UsageError("the closed form applies to point-mass distributions only")
        g2 = H.atoms[0][0]
        m = regime.block_size
        return std_normal_cdf(-0.5 * math.sqrt(2.0 * regime.rho * g2 * g2 / (g2 + m)))
    e1, e2 = weighted_error_limits(unit_weight, regime, H, config)
    return 0.5 * (e1 + e2)
