"""Synthetic domain-shift generators, CSV ingestion, paired mini-batches."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    EmptyDataset,
    InvalidParam,
    LabelOutOfRange,
    MalformedRow,
    NonFiniteValue,
    UnlabeledDataset,
)
from .numerics import as_matrix, derived_rng, make_rng


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray | None
    domain_name: str
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "features", as_matrix(self.features))
        if not np.isfinite(self.features).all():
            raise NonFiniteValue("dataset features contain NaN or Inf")
        if self.labels is not None:
            y = np.asarray(self.labels, dtype=np.int64)
            if y.ndim != 1 or y.shape[0] != self.features.shape[0]:
                raise InvalidParam("labels length must equal the number of rows")
            if y.size and (y.min() < 0 or y.max() >= self.num_classes):
                raise LabelOutOfRange(
                    f"labels must lie in [0, {self.num_classes})"
                )
            object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    def unlabeled(self) -> "Dataset":
        """View of this dataset with labels withheld."""
        return replace(self, labels=None)


@dataclass(frozen=True)
class BatchPair:
    """One training batch: labeled source rows, unlabeled target rows.

    Deliberately has no target-label field.
    """

    source_features: np.ndarray
    source_labels: np.ndarray
    target_features: np.ndarray


def rotate2d(points: np.ndarray, degrees: float) -> np.ndarray:
    """Counter-clockwise rotation about the origin."""
    theta = math.radians(degrees)
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    return points @ rot.T


def gen_two_moons(n: int, noise_sd: float, rotation_deg: float, seed: int) -> Dataset:
    """Two interleaved half-circle arcs, noised then rotated about the origin.

    Class 0 sits on the upper unit semicircle at the origin; class 1 on the
    lower semicircle centered at (1, 0.5). Class counts are balanced within 1.
    """
    if n < 2:
        raise InvalidParam(f"n must be >= 2, got {n}")
    if noise_sd < 0:
        raise InvalidParam(f"noise_sd must be >= 0, got {noise_sd}")
    rng = make_rng(seed)
    n0 = n - n // 2
    n1 = n // 2
    t0 = rng.uniform(0.0, math.pi, n0)
    t1 = rng.uniform(0.0, math.pi, n1)
    pts = np.empty((n, 2))
    pts[:n0, 0] = np.cos(t0)
    pts[:n0, 1] = np.sin(t0)
    pts[n0:, 0] = 1.0 - np.cos(t1)
    pts[n0:, 1] = 0.5 - np.sin(t1)
    pts += rng.standard_normal((n, 2)) * noise_sd
    pts = rotate2d(pts, rotation_deg)
    labels = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    return Dataset(pts, labels, f"two-moons-rot{rotation_deg:g}", 2)


def gen_gaussian_shift(n: int, dim: int, mean_shift, cov_scale: float,
                       num_classes: int, seed: int) -> tuple[Dataset, Dataset]:
    """Class-conditional Gaussian source plus a shifted, rescaled target.

    Source classes are unit Gaussians at seeded centers; the target reuses
    the centers with ``mean_shift`` added and covariance scaled by
    ``cov_scale``. Both halves carry labels (target labels are meant for
    scoring only).
    """
    if num_classes < 1:
        raise InvalidParam(f"num_classes must be >= 1, got {num_classes}")
    if n < num_classes:
        raise InvalidParam(f"n must be >= num_classes ({num_classes}), got {n}")
    if dim < 1:
        raise InvalidParam(f"dim must be >= 1, got {dim}")
    if cov_scale <= 0:
        raise InvalidParam(f"cov_scale must be > 0, got {cov_scale}")
    shift = np.asarray(mean_shift, dtype=np.float64)
    if shift.shape != (dim,):
        raise InvalidParam(f"mean_shift must have length {dim}")
    rng = make_rng(seed)
    centers = rng.standard_normal((num_classes, dim)) * 3.0
    labels = np.arange(n, dtype=np.int64) % num_classes
    src = centers[labels] + rng.standard_normal((n, dim))
    tgt = centers[labels] + shift + rng.standard_normal((n, dim)) * math.sqrt(cov_scale)
    return (
        Dataset(src, labels, "gaussian-src", num_classes),
        Dataset(tgt, labels.copy(), "gaussian-tgt", num_classes),
    )


def load_csv(path, num_classes: int, labeled: bool, header: bool = False) -> Dataset:
    """Load a comma-separated feature file; the label, if any, is the last column.

    Rejects ragged rows, non-numeric cells, and non-finite values; row and
    column numbers in errors are 1-based.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if header and lines:
        lines.pop(0)
    if not lines:
        raise EmptyDataset(f"{path} contains no data rows")

    offset = 2 if header else 1
    width = None
    feats, labels = [], []
    for i, line in enumerate(lines):
        cells = line.split(",")
        if width is None:
            width = len(cells)
            if labeled and width < 2:
                raise MalformedRow(f"row {i + offset}: labeled file needs >= 2 columns", row=i + offset)
        elif len(cells) != width:
            raise MalformedRow(
                f"row {i + offset}: expected {width} columns, got {len(cells)}",
                row=i + offset,
            )
        ncols = width - 1 if labeled else width
        row = np.empty(ncols)
        for j in range(ncols):
            try:
                v = float(cells[j])
            except ValueError:
                raise MalformedRow(
                    f"row {i + offset}, column {j + 1}: not a number: {cells[j]!r}",
                    row=i + offset, col=j + 1,
                ) from None
            if not math.isfinite(v):
                raise NonFiniteValue(
                    f"row {i + offset}, column {j + 1}: non-finite value {cells[j]!r}",
                    row=i + offset, col=j + 1,
                )
            row[j] = v
        feats.append(row)
        if labeled:
            cell = cells[-1].strip()
            try:
                y = int(cell)
            except ValueError:
                raise MalformedRow(
                    f"row {i + offset}, column {width}: label is not an integer: {cell!r}",
                    row=i + offset, col=width,
                ) from None
            if not 0 <= y < num_classes:
                raise LabelOutOfRange(
                    f"row {i + offset}: label {y} outside [0, {num_classes})"
                )
            labels.append(y)

    return Dataset(
        np.array(feats),
        np.array(labels, dtype=np.int64) if labeled else None,
        path.stem,
        num_classes,
    )


def write_csv(dataset: Dataset, path) -> None:
    """Serialize features (and labels, if present) with full float precision."""
    lines = []
    for i in range(dataset.n):
        cells = [repr(float(v)) for v in dataset.features[i]]
        if dataset.labels is not None:
            cells.append(str(int(dataset.labels[i])))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def epoch_pairs(source: Dataset, target: Dataset, batch_size: int, seed: int,
                epoch: int) -> list[BatchPair]:
    """The deterministic batch list for one epoch.

    Both domains are shuffled independently per epoch (stream keyed by
    (seed, epoch)); floor(min(Ns, Nt)/batch_size) equal-size pairs result.
    """
    if batch_size < 2:
        raise InvalidParam(f"batch_size must be >= 2, got {batch_size}")
    if source.n == 0 or target.n == 0:
        raise InvalidParam("both datasets must be non-empty")
    if source.labels is None:
        raise UnlabeledDataset("source dataset must be labeled")
    rng = derived_rng(seed, 1, epoch)
    perm_s = rng.permutation(source.n)
    perm_t = rng.permutation(target.n)
    npairs = min(source.n, target.n) // batch_size
    pairs = []
    for k in range(npairs):
        rows_s = perm_s[k * batch_size:(k + 1) * batch_size]
        rows_t = perm_t[k * batch_size:(k + 1) * batch_size]
        pairs.append(BatchPair(
            source.features[rows_s],
            source.labels[rows_s],
            target.features[rows_t],
        ))
    return pairs


def batch_iter(source: Dataset, target: Dataset, batch_size: int, seed: int,
               epochs: int = 1):
    """Yield BatchPairs for the given number of epochs (see epoch_pairs)."""
    if epochs < 0:
        raise InvalidParam(f"epochs must be >= 0, got {epochs}")
    for epoch in range(epochs):
        yield from epoch_pairs(source, target, batch_size, seed, epoch)
