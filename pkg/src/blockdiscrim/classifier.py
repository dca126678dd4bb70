"""Plug-in block-additive discriminant, its weighted form and the decision rule."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DatasetFormatError, UsageError
from .model import BlockPartition, cholesky_spd
from .risk import PowerDistribution, w0

__all__ = [
    "FittedBlock",
    "FittedClassifier",
    "Unit",
    "OptimalPlugIn",
    "Fixed",
    "WeightScheme",
    "block_discriminant",
    "block_power",
    "discriminant",
    "resolve_weights",
    "classify",
]


@dataclass(frozen=True, eq=False)
class FittedBlock:
    mean1_hat: np.ndarray
    mean2_hat: np.ndarray
    covariance: np.ndarray

    @cached_property
    def direction(self) -> np.ndarray:
        """``Sigma^{-1} (mean1_hat - mean2_hat)``."""
        chol = cholesky_spd(self.covariance)
        delta = np.asarray(self.mean1_hat, dtype=np.float64) - np.asarray(self.mean2_hat, dtype=np.float64)
        return np.linalg.solve(chol.T, np.linalg.solve(chol, delta))


def block_discriminant(block: FittedBlock, x_block) -> float:
    """Gaussian log density ratio of one block at ``x_block``."""
    x_block = np.asarray(x_block, dtype=np.float64)
    if x_block.shape != np.shape(block.mean1_hat):
        raise UsageError(f"block input has shape {x_block.shape}, expected {np.shape(block.mean1_hat)}")
    mid = 0.5 * (np.asarray(block.mean1_hat) + np.asarray(block.mean2_hat))
    return float(block.direction @ (x_block - mid))


def block_power(block: FittedBlock, n: int) -> float:
    """Sample discriminative power ``(n/2) delta_hat' Sigma^{-1} delta_hat``."""
    if n < 1:
        raise UsageError("training size n must be >= 1")
    delta = np.asarray(block.mean1_hat) - np.asarray(block.mean2_hat)
    return 0.5 * n * float(delta @ block.direction)


@dataclass(frozen=True)
class Unit:
    """All block weights equal to one (the plain augmented naive Bayes)."""


@dataclass(frozen=True)
class OptimalPlugIn:
    """Risk-optimal weight function evaluated at each block's sample power."""

    power: PowerDistribution
    block_size: int


@dataclass(frozen=True)
class Fixed:
    weights: tuple

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        if not all(math.isfinite(w) and w >= 0.0 for w in weights):
            raise UsageError("fixed weights must be finite and nonnegative")
        object.__setattr__(self, "weights", weights)


WeightScheme = Union[Unit, OptimalPlugIn, Fixed]


@dataclass(frozen=True, eq=False)
class FittedClassifier:
    partition: BlockPartition
    mean1: np.ndarray
    mean2: np.ndarray
    covariances: np.ndarray
    train_size: int
    log_prior_ratio: float = 0.0
    _weight_cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        k, m = self.partition.num_blocks, self.partition.block_size
        mean1 = np.array(self.mean1, dtype=np.float64).reshape(k, m)
        mean2 = np.array(self.mean2, dtype=np.float64).reshape(k, m)
        covs = np.array(self.covariances, dtype=np.float64).reshape(k, m, m)
        for arr in (mean1, mean2, covs):
            arr.setflags(write=False)
        object.__setattr__(self, "mean1", mean1)
        object.__setattr__(self, "mean2", mean2)
        object.__setattr__(self, "covariances", covs)
        if self.train_size < 1:
            raise UsageError("train_size must be >= 1")

    @property
    def prior1(self) -> float:
        return 1.0 / (1.0 + math.exp(self.log_prior_ratio))

    @property
    def blocks(self) -> list:
        return [FittedBlock(self.mean1[i], self.mean2[i], self.covariances[i]) for i in range(self.partition.num_blocks)]

    @cached_property
    def _directions(self) -> np.ndarray:
        chols = np.stack([cholesky_spd(c) for c in self.covariances])
        delta = self.mean1 - self.mean2
        out = np.empty_like(delta)
        for i, chol in enumerate(chols):
            out[i] = np.linalg.solve(chol.T, np.linalg.solve(chol, delta[i]))
        out.setflags(write=False)
        return out

    @cached_property
    def block_powers(self) -> np.ndarray:
        """Sample power of every block, shape ``(kappa,)``."""
        delta = self.mean1 - self.mean2
        return 0.5 * self.train_size * np.einsum("km,km->k", delta, self._directions)

    def block_discriminants(self, x) -> np.ndarray:
        """Per-block discriminant values; ``(p,) -> (kappa,)`` or ``(N, p) -> (N, kappa)``."""
        blocks = self.partition.split(x)
        centered = blocks - 0.5 * (self.mean1 + self.mean2)
        return np.einsum("...km,km->...k", centered, self._directions)

    def to_json_dict(self) -> dict:
        return {
            "kappa": self.partition.num_blocks,
            "block_size": self.partition.block_size,
            "prior1": self.prior1,
            "blocks": [
                {"mean1": self.mean1[i].tolist(), "mean2": self.mean2[i].tolist(),
                 "covariance": self.covariances[i].tolist()}
                for i in range(self.partition.num_blocks)
            ],
            "train_size": self.train_size,
            "log_prior_ratio": self.log_prior_ratio,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "FittedClassifier":
        try:
            partition = BlockPartition(int(data["kappa"]), int(data["block_size"]))
            blocks = data["blocks"]
            return cls(
                partition=partition,
                mean1=[b["mean1"] for b in blocks],
                mean2=[b["mean2"] for b in blocks],
                covariances=[b["covariance"] for b in blocks],
                train_size=int(data["train_size"]),
                log_prior_ratio=float(data["log_prior_ratio"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, UsageError):
                raise
            raise DatasetFormatError(f"invalid classifier JSON: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "FittedClassifier":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def _check_weights(clf: FittedClassifier, weights) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (clf.partition.num_blocks,):
        raise UsageError(f"expected {clf.partition.num_blocks} weights, got shape {weights.shape}")
    if not np.all(np.isfinite(weights)) or (weights < 0).any():
        raise UsageError("weights must be finite and nonnegative")
    return weights


def discriminant(clf: FittedClassifier, x, weights):
    """Weighted block-additive discriminant ``sum_i w_i D_i(x_i)``.

    ``x`` may be a single ``(p,)`` row (returns a float) or an ``(N, p)``
    batch (returns an array).
    """
    weights = _check_weights(clf, weights)
    values = clf.block_discriminants(x) @ weights
    return float(values) if np.ndim(values) == 0 else values


def classify(clf: FittedClassifier, x, weights):
    """Label 1 when the discriminant strictly exceeds ``ln(pi2/pi1)``, else 2."""
    d = discriminant(clf, x, weights)
    if np.ndim(d) == 0:
        return 1 if d > clf.log_prior_ratio else 2
    return np.where(d > clf.log_prior_ratio, 1, 2)


def resolve_weights(scheme: WeightScheme, clf: FittedClassifier) -> np.ndarray:
    """Concrete block weights of ``scheme`` for a fitted classifier.

    Results are cached on the classifier; its parameters never change, so a
    racing duplicate computation stores the same value.
    """
    cached = clf._weight_cache.get(scheme)
    if cached is not None:
        return cached
    kappa = clf.partition.num_blocks
    if isinstance(scheme, Unit):
        weights = np.ones(kappa)
    elif isinstance(scheme, Fixed):
        if len(scheme.weights) != kappa:
            raise UsageError(f"fixed scheme carries {len(scheme.weights)} weights, classifier has {kappa} blocks")
        weights = np.array(scheme.weights)
    elif isinstance(scheme, OptimalPlugIn):
        if scheme.block_size != clf.partition.block_size:
            raise UsageError(
                f"scheme block size {scheme.block_size} does not match classifier block size {clf.partition.block_size}"
            )
        weights = np.asarray(w0(clf.block_powers, scheme.block_size, scheme.power), dtype=np.float64)
    else:
        raise UsageError(f"unknown weight scheme {scheme!r}")
    weights.setflags(write=False)
    clf._weight_cache[scheme] = weights
    return weights
