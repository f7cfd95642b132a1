"""Principal component analysis of embedding vectors.

Fits on the sample covariance (divisor n - 1) via a symmetric eigensolve
and keeps the top components by eigenvalue.  Component signs follow one
convention so repeated fits agree: the entry of largest magnitude in each
component is made positive (the earliest such entry breaks magnitude ties).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, TooFewSamplesError


@dataclass
class PcaModel:
    mean: np.ndarray          # (d,)
    components: np.ndarray    # (k, d) rows orthonormal, eigenvalue-descending
    eigenvalues: np.ndarray   # (k,) variances along components
    total_variance: float     # trace of the covariance matrix

    @property
    def n_components(self) -> int:
        return len(self.components)

    def explained_variance_ratios(self) -> np.ndarray:
        if self.total_variance <= 0.0:
            return np.zeros(self.n_components)
        return self.eigenvalues / self.total_variance


def fit_pca(x: np.ndarray, n_components: int = 3) -> PcaModel:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise TooFewSamplesError("expected a 2-d sample matrix")
    n, d = x.shape
    if n < 2:
        raise TooFewSamplesError(f"need at least 2 samples, got {n}")
    if not 1 <= n_components <= d:
        raise TooFewSamplesError(f"n_components must lie in [1, {d}]")

    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    total_variance = float(np.trace(cov))
    if total_variance <= 0.0:
        raise DegenerateDataError("samples have zero variance in every direction")

    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues)[::-1][:n_components]
    values = np.maximum(eigenvalues[order], 0.0)
    components = eigenvectors[:, order].T.copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(
        mean=mean,
        components=components,
        eigenvalues=values,
        total_variance=total_variance,
    )


def project(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """Project one vector or a stack of vectors onto the components."""
    x = np.asarray(x, dtype=np.float64)
    return (x - model.mean) @ model.components.T
