"""Block-partitioned Gaussian population models.

Features are split into ``kappa`` independent blocks of ``block_size``
features each. Within a block both classes are Gaussian with a shared,
known covariance, so a block is fully described by its two mean vectors
and one covariance matrix.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DatasetFormatError, ModelError, UsageError

__all__ = [
    "BlockPartition",
    "BlockParams",
    "PopulationModel",
    "LabeledDataset",
    "block_divergence",
    "total_divergence",
    "block_noncentrality",
    "canonical_model",
    "sample",
    "fit",
    "cholesky_spd",
    "read_dataset_csv",
    "write_dataset_csv",
    "format_float",
]


def format_float(x: float) -> str:
    """17 significant digits: enough to round-trip any float64."""
    return "%.17g" % x


def cholesky_spd(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; rejects non-symmetric or non-PD input."""
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ModelError(f"covariance must be square, got shape {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise ModelError("covariance has non-finite entries")
    if not np.allclose(cov, cov.T, rtol=1e-12, atol=1e-14):
        raise ModelError("covariance is not symmetric")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ModelError("covariance is not positive definite") from exc


@dataclass(frozen=True)
class BlockPartition:
    num_blocks: int
    block_size: int

    def __post_init__(self):
        if int(self.num_blocks) != self.num_blocks or self.num_blocks < 1:
            raise UsageError(f"num_blocks must be a positive integer, got {self.num_blocks!r}")
        if int(self.block_size) != self.block_size or self.block_size < 1:
            raise UsageError(f"block_size must be a positive integer, got {self.block_size!r}")

    @property
    def total_features(self) -> int:
        return self.num_blocks * self.block_size

    def split(self, x: np.ndarray) -> np.ndarray:
        """Reshape ``(..., p)`` features into ``(..., kappa, m)`` blocks."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.total_features:
            raise UsageError(f"expected {self.total_features} features, got {x.shape[-1]}")
        return x.reshape(x.shape[:-1] + (self.num_blocks, self.block_size))


@dataclass(frozen=True, eq=False)
class BlockParams:
    mean1: np.ndarray
    mean2: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean1 = np.array(self.mean1, dtype=np.float64).reshape(-1)
        mean2 = np.array(self.mean2, dtype=np.float64).reshape(-1)
        cov = np.array(self.covariance, dtype=np.float64)
        m = mean1.shape[0]
        if mean2.shape[0] != m or cov.shape != (m, m):
            raise ModelError(
                f"inconsistent block dimensions: means {mean1.shape}, {mean2.shape}, covariance {cov.shape}"
            )
        for arr in (mean1, mean2, cov):
            arr.setflags(write=False)
        object.__setattr__(self, "mean1", mean1)
        object.__setattr__(self, "mean2", mean2)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.mean1.shape[0]

    @cached_property
    def chol(self) -> np.ndarray:
        return cholesky_spd(self.covariance)

    def mahalanobis(self, v: np.ndarray) -> float:
        """``v' Sigma^{-1} v`` through the cached Cholesky factor."""
        z = np.linalg.solve(self.chol, np.asarray(v, dtype=np.float64))
        return float(z @ z)


def block_divergence(block: BlockParams) -> float:
    """Symmetric KL divergence between the two class densities of a block.

    For equal-covariance Gaussians this is ``delta' Sigma^{-1} delta``.
    """
    delta = block.mean1 - block.mean2
    if not delta.any():
        block.chol  # still reject a bad covariance
        return 0.0
    return block.mahalanobis(delta)


def block_noncentrality(block: BlockParams, n: int) -> float:
    """Discriminative power ``gamma^2 = (n/2) J_i`` of a block at training size ``n``."""
    if n < 1:
        raise UsageError("training size n must be >= 1")
    return 0.5 * n * block_divergence(block)


@dataclass(frozen=True, eq=False)
class PopulationModel:
    partition: BlockPartition
    blocks: tuple
    prior1: float = 0.5

    def __post_init__(self):
        blocks = tuple(self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if len(blocks) != self.partition.num_blocks:
            raise ModelError(f"expected {self.partition.num_blocks} blocks, got {len(blocks)}")
        for i, b in enumerate(blocks):
            if b.dim != self.partition.block_size:
                raise ModelError(f"block {i} has dimension {b.dim}, expected {self.partition.block_size}")
        if not (0.0 < self.prior1 < 1.0):
            raise ModelError(f"prior1 must lie strictly between 0 and 1, got {self.prior1!r}")

    @property
    def prior2(self) -> float:
        return 1.0 - self.prior1

    @property
    def log_prior_ratio(self) -> float:
        return math.log(self.prior2 / self.prior1)

    @property
    def covariances(self) -> list:
        return [b.covariance for b in self.blocks]

    def class_means(self, label: int) -> np.ndarray:
        """Stacked ``(kappa, m)`` means of class ``label``."""
        _check_label(label)
        return np.stack([b.mean1 if label == 1 else b.mean2 for b in self.blocks])

    def to_json_dict(self) -> dict:
        return {
            "kappa": self.partition.num_blocks,
            "block_size": self.partition.block_size,
            "prior1": self.prior1,
            "blocks": [
                {"mean1": b.mean1.tolist(), "mean2": b.mean2.tolist(), "covariance": b.covariance.tolist()}
                for b in self.blocks
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "PopulationModel":
        try:
            partition = BlockPartition(int(data["kappa"]), int(data["block_size"]))
            blocks = [BlockParams(b["mean1"], b["mean2"], b["covariance"]) for b in data["blocks"]]
            prior1 = float(data.get("prior1", 0.5))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ModelError):
                raise
            raise DatasetFormatError(f"invalid model JSON: {exc}") from exc
        return cls(partition, blocks, prior1)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "PopulationModel":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
        return cls.from_json_dict(data)


def total_divergence(model: PopulationModel) -> float:
    return math.fsum(block_divergence(b) for b in model.blocks)


def canonical_model(kappa: int, block_size: int, gamma2: float, n: int, prior1: float = 0.5) -> PopulationModel:
    """Identity-covariance model where every block has power ``gamma2`` at size ``n``.

    The mean shift sits on the first coordinate of each block:
    ``delta = (sqrt(2 gamma2 / n), 0, ..., 0)``, split symmetrically around 0.
    """
    if gamma2 < 0 or not math.isfinite(gamma2):
        raise UsageError(f"gamma2 must be finite and >= 0, got {gamma2!r}")
    if n < 1:
        raise UsageError("n must be >= 1")
    partition = BlockPartition(kappa, block_size)
    delta = np.zeros(block_size)
    delta[0] = math.sqrt(2.0 * gamma2 / n)
    eye = np.eye(block_size)
    block = BlockParams(0.5 * delta, -0.5 * delta, eye)
    return PopulationModel(partition, [block] * kappa, prior1)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Rows of ``(label, features)``; labels are 1 or 2, or 0 for unlabeled rows."""

    partition: BlockPartition
    labels: np.ndarray
    features: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        features = np.array(self.features, dtype=np.float64)
        if features.size == 0:
            features = features.reshape(0, self.partition.total_features)
        if features.ndim != 2 or features.shape[1] != self.partition.total_features:
            raise UsageError(
                f"features must have shape (N, {self.partition.total_features}), got {features.shape}"
            )
        if labels.shape[0] != features.shape[0]:
            raise UsageError("labels and features disagree in row count")
        if not np.isin(labels, (0, 1, 2)).all():
            raise UsageError("labels must be 1 or 2")
        labels.setflags(write=False)
        features.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "features", features)

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def rows(self):
        return list(zip(self.labels.tolist(), self.features))

    def of_class(self, label: int) -> np.ndarray:
        _check_label(label)
        return self.features[self.labels == label]

    @property
    def is_labeled(self) -> bool:
        return bool((self.labels != 0).all())

    @classmethod
    def concat(cls, parts: Sequence["LabeledDataset"]) -> "LabeledDataset":
        partition = parts[0].partition
        if any(p.partition != partition for p in parts):
            raise UsageError("cannot concatenate datasets with different partitions")
        return cls(
            partition,
            np.concatenate([p.labels for p in parts]),
            np.concatenate([p.features for p in parts]),
        )


def _check_label(label):
    if label not in (1, 2):
        raise UsageError(f"label must be 1 or 2, got {label!r}")


def sample(model: PopulationModel, label: int, count: int, rng_seed) -> LabeledDataset:
    """Draw ``count`` rows of class ``label``, each block independently from ``N(mu_i, Sigma_i)``.

    ``rng_seed`` may be an int, a sequence of ints, a ``SeedSequence`` or a
    ``Generator`` (the last is consumed, not copied).
    """
    _check_label(label)
    if count < 1:
        raise UsageError("count must be >= 1")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    part = model.partition
    z = rng.standard_normal((count, part.num_blocks, part.block_size))
    chols = np.stack([b.chol for b in model.blocks])
    x = np.einsum("kab,nkb->nka", chols, z) + model.class_means(label)
    return LabeledDataset(part, np.full(count, label), x.reshape(count, part.total_features))


def fit(train1, train2, model_covariances, partition: BlockPartition, prior1: float = 0.5):
    """Plug-in fit: per-block sample means for each class, covariances taken as known.

    ``train1``/``train2`` are datasets or ``(n, p)`` arrays of class-1 and
    class-2 rows. Both classes must have the same number of rows.
    """
    from .classifier import FittedClassifier

    x1 = train1.of_class(1) if isinstance(train1, LabeledDataset) else np.asarray(train1, dtype=np.float64)
    x2 = train2.of_class(2) if isinstance(train2, LabeledDataset) else np.asarray(train2, dtype=np.float64)
    if x1.ndim != 2 or x2.ndim != 2:
        raise UsageError("training data must be two-dimensional")
    if x1.shape[0] < 1 or x2.shape[0] < 1:
        raise UsageError("each class needs at least one training row")
    if x1.shape[0] != x2.shape[0]:
        raise UsageError(f"unequal class sizes n1={x1.shape[0]}, n2={x2.shape[0]}; equal sizes are required")
    covs = np.array(model_covariances, dtype=np.float64)
    m = partition.block_size
    if covs.shape != (partition.num_blocks, m, m):
        raise UsageError(f"expected {partition.num_blocks} covariances of shape ({m}, {m}), got {covs.shape}")
    mean1 = partition.split(x1).mean(axis=0)
    mean2 = partition.split(x2).mean(axis=0)
    if not (0.0 < prior1 < 1.0):
        raise UsageError("prior1 must lie strictly between 0 and 1")
    return FittedClassifier(
        partition=partition,
        mean1=mean1,
        mean2=mean2,
        covariances=covs,
        train_size=x1.shape[0],
        log_prior_ratio=math.log((1.0 - prior1) / prior1),
    )


def write_dataset_csv(dataset: LabeledDataset, path_or_file) -> None:
    p = dataset.partition.total_features
    buf = io.StringIO()
    buf.write(",".join(["label"] + [f"f{j}" for j in range(1, p + 1)]) + "\n")
    for label, row in zip(dataset.labels.tolist(), dataset.features):
        buf.write(",".join([str(label) if label else ""] + [format_float(v) for v in row.tolist()]) + "\n")
    if hasattr(path_or_file, "write"):
        path_or_file.write(buf.getvalue())
    else:
        Path(path_or_file).write_text(buf.getvalue())


def read_dataset_csv(path_or_file, partition: BlockPartition | None = None,
                     allow_unlabeled: bool = False) -> LabeledDataset:
    """Parse the dataset CSV format (``label,f1,...,fp``; ``#`` lines are comments).

    With ``partition=None`` a single-feature-per-block partition is assumed.
    A completely empty file yields an empty dataset only when a partition is given.
    """
    text = path_or_file.read() if hasattr(path_or_file, "read") else Path(path_or_file).read_text()
    header = None
    labels, rows = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = next(csv.reader([line]))
        if header is None:
            header = [c.strip() for c in cells]
            if not header or header[0] != "label" or header[1:] != [f"f{j}" for j in range(1, len(header))]:
                raise DatasetFormatError("header must be 'label,f1,...,fp'", lineno)
            continue
        if len(cells) != len(header):
            raise DatasetFormatError(f"expected {len(header)} fields, got {len(cells)}", lineno)
        raw_label = cells[0].strip()
        if raw_label == "" and allow_unlabeled:
            label = 0
        elif raw_label in ("1", "2"):
            label = int(raw_label)
        else:
            raise DatasetFormatError(f"label must be 1 or 2, got {raw_label!r}", lineno)
        try:
            values = [float(c) for c in cells[1:]]
        except ValueError as exc:
            raise DatasetFormatError(f"bad numeric field ({exc})", lineno) from exc
        if not all(math.isfinite(v) for v in values):
            raise DatasetFormatError("non-finite feature value", lineno)
        labels.append(label)
        rows.append(values)
    if header is None:
        if partition is None:
            raise DatasetFormatError("empty dataset file without header")
        return LabeledDataset(partition, np.zeros(0, dtype=np.int64), np.zeros((0, partition.total_features)))
    p = len(header) - 1
    if partition is None:
        partition = BlockPartition(p, 1)
    elif partition.total_features != p:
        raise DatasetFormatError(f"file has {p} features, model expects {partition.total_features}", 1)
    return LabeledDataset(partition, np.array(labels, dtype=np.int64), np.array(rows, dtype=np.float64).reshape(-1, p))
