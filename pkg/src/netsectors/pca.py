"""PCA of per-vertex metrics, expressed as percentage loadings.

The metric matrix is z-scored, its correlation matrix is diagonalised with
a cyclic Jacobi rotation scheme, and eigenvectors/eigenvalues are turned
into percentages: how much each metric contributes to a component, and how
much of the total variance each component explains. Results from many
snapshots are aggregated into means and deviations.
"""

from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .metrics import METRIC_NAMES

logger = logging.getLogger(__name__)


class PcaError(ValueError):
    pass


class ConvergenceError(ArithmeticError):
    pass


def zscore(X, names: Sequence[str] = METRIC_NAMES, eps: float = 1e-12):
    """Standardise columns with population statistics, dropping constant ones.

    Returns ``(Xz, kept_names, dropped_names)``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise PcaError(f"z-score needs at least 2 rows, got shape {X.shape}")
    names = list(names)
    if len(names) != X.shape[1]:
        raise PcaError(f"{len(names)} names for {X.shape[1]} columns")
    mu = X.mean(axis=0)
    sigma = X.std(axis=0)
    scale = np.maximum(np.abs(mu), np.abs(X).max(axis=0))
    keep = sigma > eps * np.maximum(scale, 1.0)
    if not keep.any():
        raise PcaError("all metric columns are constant")
    Xz = (X[:, keep] - mu[keep]) / sigma[keep]
    kept = [n for n, k in zip(names, keep) if k]
    dropped = [n for n, k in zip(names, keep) if not k]
    return Xz, kept, dropped


def jacobi_eigh(A, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues descending and
    eigenvectors in columns, each signed so its largest-magnitude entry is
    positive.

    Raises
    ------
    ConvergenceError
        If off-diagonal mass is still above ``tol`` after ``max_sweeps``.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    V = np.eye(n)
    norm = max(np.abs(A).max(), 1.0)
    for _ in range(max_sweeps):
        off = np.sqrt((np.triu(A, 1) ** 2).sum())
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        off = np.sqrt((np.triu(A, 1) ** 2).sum())
        if off > tol * norm:
            raise ConvergenceError(f"Jacobi did not converge: off-diagonal norm {off:.3e}")
    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    w = w[order]
    V = V[:, order]
    for k in range(n):
        j = np.argmax(np.abs(V[:, k]))
        if V[j, k] < 0:
            V[:, k] = -V[:, k]
    return w, V


@dataclass(frozen=True)
class PcaResult:
    kept_columns: tuple
    dropped_columns: tuple
    loadings_percent: np.ndarray
    variance_percent: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    correlation_matrix: np.ndarray


def correlation_eig(Xz, kept: Sequence[str], dropped: Sequence[str] = ()) -> PcaResult:
    Xz = np.asarray(Xz, dtype=float)
    C = Xz.T @ Xz / Xz.shape[0]
    C = (C + C.T) / 2.0
    w, V = jacobi_eigh(C)
    absV = np.abs(V)
    loadings = 100.0 * absV / absV.sum(axis=0)
    total = w.sum()
    variance = 100.0 * w / total
    return PcaResult(tuple(kept), tuple(dropped), loadings, variance, w, V, C)


def pca(X, names: Sequence[str] = METRIC_NAMES) -> PcaResult:
    Xz, kept, dropped = zscore(X, names)
    return correlation_eig(Xz, kept, dropped)


@dataclass(frozen=True)
class PcaAggregate:
    columns: tuple
    mean_loadings: np.ndarray
    std_loadings: np.ndarray
    mean_variance: np.ndarray
    std_variance: np.ndarray
    n_snapshots: int
    excluded: tuple = ()

    def loading(self, metric: str, component: int) -> float:
        return float(self.mean_loadings[self.columns.index(metric), component])


def aggregate(results: Sequence[PcaResult], n_components: int = 3) -> PcaAggregate:
    """Mean and population deviation of loadings and variance shares.

    Only results sharing the most common set of kept columns are combined;
    the indices of the rest are reported in ``excluded``.
    """
    results = list(results)
    if not results:
        raise PcaError("nothing to aggregate")
    common, _ = Counter(r.kept_columns for r in results).most_common(1)[0]
    used = [r for r in results if r.kept_columns == common]
    excluded = tuple(i for i, r in enumerate(results) if r.kept_columns != common)
    if excluded:
        logger.info("excluding %d snapshots with different kept columns", len(excluded))
    nc = min(n_components, len(common))
    L = np.stack([r.loadings_percent[:, :nc] for r in used])
    D = np.stack([r.variance_percent[:nc] for r in used])
    return PcaAggregate(
        columns=common,
        mean_loadings=L.mean(axis=0),
        std_loadings=L.std(axis=0),
        mean_variance=D.mean(axis=0),
        std_variance=D.std(axis=0),
        n_snapshots=len(used),
        excluded=excluded,
    )


def rank_correlations(x, y):
    """Return ``(pearson, spearman)``; Spearman uses mid-ranks for ties."""
    from scipy.stats import rankdata

    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 3:
        raise ValueError("need two equal-length vectors with at least 3 entries")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ValueError("correlation undefined for a constant vector")

    def pearson(a, b):
        a = a - a.mean()
        b = b - b.mean()
        r = float((a * b).sum() / np.sqrt((a * a).sum() * (b * b).sum()))
        return max(-1.0, min(1.0, r))

    return pearson(x, y), pearson(rankdata(x), rankdata(y))


def write_loadings_csv(agg: PcaAggregate, path, names: Sequence[str] = METRIC_NAMES) -> None:
    """Table of mean/std loadings per metric and component, then variance shares."""
    nc = agg.mean_loadings.shape[1]
    header = ["metric"]
    for k in range(nc):
        header += [f"pc{k + 1}_mean", f"pc{k + 1}_std"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for name in names:
            row = [name]
            if name in agg.columns:
                j = agg.columns.index(name)
                for k in range(nc):
                    row += [f"{agg.mean_loadings[j, k]:.6f}", f"{agg.std_loadings[j, k]:.6f}"]
            else:
                row += [""] * (2 * nc)
            writer.writerow(row)
        row = ["lambda"]
        for k in range(nc):
            row += [f"{agg.mean_variance[k]:.6f}", f"{agg.std_variance[k]:.6f}"]
        writer.writerow(row)
