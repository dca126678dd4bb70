"""Seeded Monte Carlo checks of the limiting error rates and the power law.

Each replication draws ``n`` training rows per class, fits the plug-in
classifier, resolves every weight scheme, classifies fresh balanced test
rows and records the sample powers of all blocks. Replication ``r`` draws
from streams keyed by ``(base_seed, r, purpose)``, so the report does not
depend on execution order or on whether replications run in parallel.
"""
from __future__ import annotations

import io
import json
import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .classifier import Fixed, OptimalPlugIn, Unit, resolve_weights
from .errors import BlockDiscrimError, DegenerateError, DomainError, ReplicationError, UsageError
from .model import (
    BlockParams,
    BlockPartition,
    PopulationModel,
    block_divergence,
    block_noncentrality,
    canonical_model,
    fit,
    format_float,
    sample,
)
from .numerics import noncentral_chi2_cdf, std_normal_cdf
from .risk import PowerDistribution, Regime, unit_weight, w0_function, weighted_error_limits

__all__ = [
    "ExperimentConfig",
    "SchemeResult",
    "PowerStats",
    "ExperimentReport",
    "run",
    "ks_distance",
    "scheme_label",
    "stream_seed",
]

TRAIN1, TRAIN2, TEST1, TEST2 = 1, 2, 3, 4
_SEED_MASK = (1 << 64) - 1


def stream_seed(base_seed: int, replication: int, purpose: int) -> np.random.SeedSequence:
    """Independent stream for one (replication, purpose) pair."""
    return np.random.SeedSequence([base_seed & _SEED_MASK, replication, purpose])


def scheme_label(scheme) -> str:
    if isinstance(scheme, Unit):
        return "unit"
    if isinstance(scheme, OptimalPlugIn):
        return "optimal"
    if isinstance(scheme, Fixed):
        return "fixed"
    raise UsageError(f"unknown weight scheme {scheme!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Simulation setup.

    Give either ``gamma2`` (every block gets that power) or ``power``, whose
    atoms are spread over the blocks in proportion to their probabilities and
    interleaved cyclically.
    """

    kappa: int
    block_size: int
    train_size: int
    gamma2: float | None = None
    power: PowerDistribution | None = None
    prior1: float = 0.5
    schemes: tuple = (Unit(),)
    replications: int = 100
    test_per_class: int = 100
    base_seed: int = 0

    def __post_init__(self):
        if (self.gamma2 is None) == (self.power is None):
            raise UsageError("give exactly one of gamma2 or power")
        if self.replications < 1 or self.test_per_class < 1 or self.train_size < 1:
            raise UsageError("replications, test_per_class and train_size must be >= 1")
        BlockPartition(self.kappa, self.block_size)
        if not (0.0 < self.prior1 < 1.0):
            raise UsageError("prior1 must lie strictly between 0 and 1")
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if not self.schemes:
            raise UsageError("at least one weight scheme is required")

    @property
    def rho(self) -> float:
        return self.kappa / self.train_size

    def block_gamma2(self) -> list:
        if self.gamma2 is not None:
            return [float(self.gamma2)] * self.kappa
        # largest-remainder apportionment of kappa blocks over the atoms
        quotas = [p * self.kappa for _, p in self.power.atoms]
        counts = [int(math.floor(q)) for q in quotas]
        order = sorted(range(len(quotas)), key=lambda j: (counts[j] - quotas[j], j))
        for j in order[: self.kappa - sum(counts)]:
            counts[j] += 1
        out = []
        remaining = counts[:]
        while len(out) < self.kappa:
            for j, (g, _) in enumerate(self.power.atoms):
                if remaining[j] > 0:
                    out.append(g)
                    remaining[j] -= 1
        return out

    def build_model(self) -> PopulationModel:
        if self.gamma2 is not None:
            return canonical_model(self.kappa, self.block_size, self.gamma2, self.train_size, self.prior1)
        blocks = []
        for g2 in self.block_gamma2():
            delta = np.zeros(self.block_size)
            delta[0] = math.sqrt(2.0 * g2 / self.train_size)
            blocks.append(BlockParams(0.5 * delta, -0.5 * delta, np.eye(self.block_size)))
        return PopulationModel(BlockPartition(self.kappa, self.block_size), blocks, self.prior1)

    def to_json_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "block_size": self.block_size,
            "train_size": self.train_size,
            "gamma2": self.gamma2,
            "power": None if self.power is None else self.power.to_json_dict(),
            "prior1": self.prior1,
            "schemes": [_scheme_json(s) for s in self.schemes],
            "replications": self.replications,
            "test_per_class": self.test_per_class,
            "base_seed": self.base_seed,
            "rho": self.rho,
        }


def _scheme_json(scheme) -> dict:
    out = {"name": scheme_label(scheme)}
    if isinstance(scheme, OptimalPlugIn):
        out["power"] = scheme.power.to_json_dict()
        out["block_size"] = scheme.block_size
    elif isinstance(scheme, Fixed):
        out["weights"] = list(scheme.weights)
    return out


@dataclass
class SchemeResult:
    scheme: str
    n_per_class: int
    errors1: int
    errors2: int
    e1: float
    e2: float
    risk: float
    se_e1: float
    se_e2: float
    se_risk: float
    predicted_e1: float | None
    predicted_e2: float | None
    predicted_risk: float | None


@dataclass
class PowerStats:
    mean: float
    predicted_mean: float
    ks_distance: float
    count: int


@dataclass
class ExperimentReport:
    config: dict
    rho: float
    schemes: list = field(default_factory=list)
    power_stats: PowerStats | None = None

    def scheme(self, name: str) -> SchemeResult:
        for s in self.schemes:
            if s.scheme == name:
                return s
        raise KeyError(name)

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "rho": self.rho,
            "schemes": [asdict(s) for s in self.schemes],
            "power_stats": asdict(self.power_stats),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"

    CSV_COLUMNS = (
        "kind", "scheme", "n_per_class", "errors1", "errors2", "e1", "e2", "risk",
        "se_e1", "se_e2", "se_risk", "predicted_e1", "predicted_e2", "predicted_risk",
        "power_mean", "power_predicted_mean", "ks_distance", "count",
    )

    def to_csv(self) -> str:
        def cell(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return format_float(v)
            return str(v)

        buf = io.StringIO()
        buf.write(",".join(self.CSV_COLUMNS) + "\n")
        for s in self.schemes:
            row = {"kind": "scheme", **asdict(s)}
            buf.write(",".join(cell(row.get(c)) for c in self.CSV_COLUMNS) + "\n")
        ps = self.power_stats
        row = {"kind": "power_stats", "power_mean": ps.mean, "power_predicted_mean": ps.predicted_mean,
               "ks_distance": ps.ks_distance, "count": ps.count}
        buf.write(",".join(cell(row.get(c)) for c in self.CSV_COLUMNS) + "\n")
        return buf.getvalue()

    def save(self, prefix) -> tuple:
        prefix = Path(prefix)
        json_path = prefix.with_name(prefix.name + ".json")
        csv_path = prefix.with_name(prefix.name + ".csv")
        json_path.write_text(self.to_json())
        csv_path.write_text(self.to_csv())
        return json_path, csv_path


def _ks_statistic(samples, cdf) -> float:
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.shape[0]
    f = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_distance(samples, dof: int, noncentrality: float) -> float:
    """Sup distance between the empirical CDF of ``samples`` and chi2(dof, noncentrality)."""
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    if samples.size == 0:
        raise UsageError("ks_distance needs at least one sample")
    if np.isnan(samples).any() or (samples < 0).any():
        raise DomainError("samples must be >= 0")
    return _ks_statistic(samples, lambda x: noncentral_chi2_cdf(x, dof, noncentrality))


def _empirical_power(gammas) -> PowerDistribution:
    counts = Counter(round(g, 12) for g in gammas)
    total = sum(counts.values())
    return PowerDistribution(tuple((g, c / total) for g, c in sorted(counts.items())))


def _one_replication(config: ExperimentConfig, model: PopulationModel, r: int):
    try:
        part = model.partition
        n = config.train_size
        train1 = sample(model, 1, n, stream_seed(config.base_seed, r, TRAIN1))
        train2 = sample(model, 2, n, stream_seed(config.base_seed, r, TRAIN2))
        clf = fit(train1, train2, model.covariances, part, config.prior1)
        test1 = sample(model, 1, config.test_per_class, stream_seed(config.base_seed, r, TEST1))
        test2 = sample(model, 2, config.test_per_class, stream_seed(config.base_seed, r, TEST2))
        d1 = clf.block_discriminants(test1.features)
        d2 = clf.block_discriminants(test2.features)
        errors = np.empty((len(config.schemes), 2), dtype=np.int64)
        for s, scheme in enumerate(config.schemes):
            w = resolve_weights(scheme, clf)
            errors[s, 0] = np.count_nonzero(d1 @ w <= clf.log_prior_ratio)
            errors[s, 1] = np.count_nonzero(d2 @ w > clf.log_prior_ratio)
        return errors, np.array(clf.block_powers)
    except BlockDiscrimError as exc:
        raise ReplicationError(r, exc) from exc
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        raise ReplicationError(r, exc) from exc


def _run_chunk(config: ExperimentConfig, indices):
    model = config.build_model()
    return [(r, *_one_replication(config, model, r)) for r in indices]


def _worker_count() -> int:
    env = os.environ.get("BLOCKDISCRIM_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"BLOCKDISCRIM_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _predict(scheme, config, regime, truth, block_js):
    """Limiting (E1, E2) for a scheme, or None when undefined."""
    try:
        if isinstance(scheme, Unit):
            return weighted_error_limits(unit_weight, regime, truth)
        if isinstance(scheme, OptimalPlugIn):
            if scheme.block_size != config.block_size:
                return None
            return weighted_error_limits(w0_function(scheme.block_size, scheme.power), regime, truth)
        # fixed weights do not depend on the data: finite-kappa Gaussian approximation
        w = np.asarray(scheme.weights, dtype=np.float64)
        if w.shape != block_js.shape:
            return None
        mean = 0.5 * float(w @ block_js)
        var = float(w ** 2 @ (block_js + 2.0 * config.block_size / config.train_size))
        if var <= 0:
            return None
        sd = math.sqrt(var)
        pi0 = regime.log_prior_ratio
        return std_normal_cdf(-(mean - pi0) / sd), std_normal_cdf(-(mean + pi0) / sd)
    except DegenerateError:
        return None


def run(config: ExperimentConfig, parallel: bool = False, max_workers: int | None = None) -> ExperimentReport:
    """Run all replications and aggregate them into a report.

    With ``parallel=True`` replications are spread over worker processes
    (``max_workers`` or ``BLOCKDISCRIM_THREADS`` or the CPU count); the
    result is identical to a serial run.
    """
    model = config.build_model()
    indices = list(range(config.replications))
    if parallel:
        workers = max_workers or _worker_count()
        chunks = [indices[i::workers] for i in range(workers) if indices[i::workers]]
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            results = [item for part in pool.map(_run_chunk, [config] * len(chunks), chunks) for item in part]
    else:
        results = [(r, *_one_replication(config, model, r)) for r in indices]
    results.sort(key=lambda item: item[0])

    errors = np.sum([item[1] for item in results], axis=0)
    powers = np.concatenate([item[2] for item in results])

    pi1 = config.prior1
    pi2 = 1.0 - pi1
    pi0 = math.log(pi2 / pi1)
    n_test = config.replications * config.test_per_class
    regime = Regime(config.block_size, config.rho, pi0)
    gammas = [block_noncentrality(b, config.train_size) for b in model.blocks]
    block_js = np.array([block_divergence(b) for b in model.blocks])
    truth = _empirical_power(gammas)

    report = ExperimentReport(config=config.to_json_dict(), rho=config.rho)
    for s, scheme in enumerate(config.schemes):
        k1, k2 = int(errors[s, 0]), int(errors[s, 1])
        e1, e2 = k1 / n_test, k2 / n_test
        se1 = math.sqrt(e1 * (1 - e1) / n_test)
        se2 = math.sqrt(e2 * (1 - e2) / n_test)
        pred = _predict(scheme, config, regime, truth, block_js)
        report.schemes.append(SchemeResult(
            scheme=scheme_label(scheme),
            n_per_class=n_test,
            errors1=k1,
            errors2=k2,
            e1=e1,
            e2=e2,
            risk=pi1 * e1 + pi2 * e2,
            se_e1=se1,
            se_e2=se2,
            se_risk=math.sqrt((pi1 * se1) ** 2 + (pi2 * se2) ** 2),
            predicted_e1=None if pred is None else pred[0],
            predicted_e2=None if pred is None else pred[1],
            predicted_risk=None if pred is None else pi1 * pred[0] + pi2 * pred[1],
        ))

    m = config.block_size
    if truth.is_point_mass:
        ks = ks_distance(powers, m, truth.atoms[0][0])
    else:
        def mixture_cdf(x):
            return sum(p * noncentral_chi2_cdf(x, m, g) for g, p in truth.atoms)
        ks = _ks_statistic(powers, mixture_cdf)
    report.power_stats = PowerStats(
        mean=float(math.fsum(powers.tolist()) / powers.size),
        predicted_mean=m + truth.mean,
        ks_distance=ks,
        count=int(powers.size),
    )
    return report
