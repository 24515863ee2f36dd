"""Dense linear algebra and probability utilities.

Matrices are 2-D float64 NumPy arrays in row-major order: one sample per
row, one feature per column. Every function here is pure.
"""
from __future__ import annotations

import numpy as np

from .errors import DegenerateBatch, ShapeMismatch


def as_matrix(x) -> np.ndarray:
    """Coerce to a C-contiguous float64 2-D array."""
    m = np.ascontiguousarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D matrix, got ndim={m.ndim}")
    return m


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator; equal seeds give equal streams on every platform."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def derived_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for an independent stream keyed by (seed, *key)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((int(seed),) + tuple(int(k) for k in key))))


def covariance(X) -> np.ndarray:
    """Sample covariance with the (n-1) denominator.

    Computed as (X'X - (1'X)'(1'X)/n) / (n-1); requires at least 2 rows.
    """
    X = as_matrix(X)
    n = X.shape[0]
    if n < 2:
        raise DegenerateBatch(f"covariance needs >= 2 rows, got {n}")
    colsum = X.sum(axis=0)
    return (X.T @ X - np.outer(colsum, colsum) / n) / (n - 1)


def frobenius_sq(M) -> float:
    """Sum of squared entries (squared Frobenius norm)."""
    M = np.asarray(M, dtype=np.float64)
    return float((M * M).sum())


def softmax(logits) -> np.ndarray:
    """Row-wise softmax with max-subtraction; accepts a vector or a matrix."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def pca2d(X) -> np.ndarray:
    """Project mean-centered X onto its top-2 principal components.

    Sign convention: each component's largest-magnitude entry is made
    positive, so the projection is deterministic.
    """
    X = as_matrix(X)
    n, d = X.shape
    if n < 3:
        raise DegenerateBatch(f"pca2d needs >= 3 rows, got {n}")
    if d < 2:
        raise DegenerateBatch(f"pca2d needs >= 2 columns, got {d}")
    Xc = X - X.mean(axis=0)
    _, _, vt = np.linalg.svd(Xc, full_matrices=False)
    comps = vt[:2].copy()
    for c in comps:
        if c[np.argmax(np.abs(c))] < 0.0:
            c *= -1.0
    return Xc @ comps.T
