"""High-order proximity accumulation and shifted-PPMI feature matrices.

The node feature matrix is built in two steps: sum the first ``t`` powers of
the row-stochastic transition matrix, then apply a column-normalized,
log-shifted, zero-clamped transform. The result is the dense input row
``x_i`` fed to every generator network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Dense N x N matrices only; guard against accidental memory blowups.
# Larger graphs should supply a precomputed feature matrix instead.
DENSE_NODE_LIMIT = 20_000


@dataclass(frozen=True)
class PpmiConfig:
    """Feature construction settings: max transition step and log shift."""

    steps: int = 4
    beta: float | None = None  # None -> 1/N at build time

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.beta is not None and self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class PpmiMatrix:
    """Shifted-PPMI feature matrix with the settings that produced it."""

    matrix: np.ndarray
    steps: int
    beta: float
    zero_columns: int = 0  # columns of M that summed to zero (output forced to 0)

    @property
    def num_nodes(self):
        return self.matrix.shape[0]


def accumulate_powers(a_hat, t):
    """Sum of transition-matrix powers A + A^2 + ... + A^t.

    Computed by repeated multiplication in a fixed order so the result is
    bit-stable for a fixed input. Each row sums to t because every power of
    a row-stochastic matrix is row-stochastic.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    a_hat = np.asarray(a_hat, dtype=np.float64)
    if a_hat.ndim != 2 or a_hat.shape[0] != a_hat.shape[1]:
        raise ValueError(f"expected square matrix, got shape {a_hat.shape}")
    power = a_hat.copy()
    total = a_hat.copy()
    for _ in range(t - 1):
        power = power @ a_hat
        total += power
    return total


def shifted_ppmi(m, beta, steps=0):
    """Column-normalized log transform, shifted by -log(beta), clamped at 0.

    Cells with ``m[i, j] == 0`` are exactly 0 in the output; the log is never
    evaluated there. Columns of ``m`` summing to zero produce all-zero output
    columns and are counted in ``zero_columns``.
    """
    m = np.asarray(m, dtype=np.float64)
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if (m < 0).any():
        raise ValueError("proximity matrix must be non-negative")

    col_sums = m.sum(axis=0)
    zero_cols = int((col_sums == 0).sum())
    safe_cols = np.where(col_sums > 0, col_sums, 1.0)

    x = np.zeros_like(m)
    mask = m > 0
    x[mask] = np.log(m[mask] / np.broadcast_to(safe_cols, m.shape)[mask]) - np.log(beta)
    np.maximum(x, 0.0, out=x)
    x[:, col_sums == 0] = 0.0
    return PpmiMatrix(matrix=x, steps=steps, beta=float(beta), zero_columns=zero_cols)


def ppmi_features(graph, config=PpmiConfig(), max_nodes=DENSE_NODE_LIMIT):
    """Full pipeline from a preprocessed graph to its feature matrix."""
    from .graph import row_normalize

    n = graph.num_nodes
    if n > max_nodes:
        raise ValueError(
            f"graph has {n} nodes, above the dense limit {max_nodes}; "
            "precompute features externally and pass them in instead"
        )
    beta = config.beta if config.beta is not None else 1.0 / n
    m = accumulate_powers(row_normalize(graph), config.steps)
    return shifted_ppmi(m, beta, steps=config.steps)


def save_ppmi(ppmi, path):
    """Write a feature matrix as text: header ``N t beta`` then one row per line.

    Values are printed with 17 significant digits so reloading reproduces the
    matrix bit for bit.
    """
    mat = ppmi.matrix
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{mat.shape[0]} {ppmi.steps} {ppmi.beta:.17g}\n")
        for row in mat:
            fh.write(" ".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def load_ppmi(path):
    """Reload a matrix written by :func:`save_ppmi`."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValueError(f"{path}: expected header 'N t beta', got {header}")
        n, steps, beta = int(header[0]), int(header[1]), float(header[2])
        mat = np.empty((n, n), dtype=np.float64)
        for i in range(n):
            row = np.fromstring(fh.readline(), dtype=np.float64, sep=" ")
            if row.shape[0] != n:
                raise ValueError(f"{path}: row {i} has {row.shape[0]} values, expected {n}")
            mat[i] = row
    zero_cols = int((mat.sum(axis=0) == 0).sum())
    return PpmiMatrix(matrix=mat, steps=steps, beta=beta, zero_columns=zero_cols)


def load_feature_matrix(path):
    """Load node features from text: ``N D`` (or ``N t beta``) header plus rows.

    Accepts both the :func:`save_ppmi` cache format and a generic ``N D``
    header for externally computed features of any dimension.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) == 3:
            n, d = int(header[0]), int(header[0])
        elif len(header) == 2:
            n, d = int(header[0]), int(header[1])
        else:
            raise ValueError(f"{path}: expected 'N D' or 'N t beta' header, got {header}")
        mat = np.empty((n, d), dtype=np.float64)
        for i in range(n):
            row = np.fromstring(fh.readline(), dtype=np.float64, sep=" ")
            if row.shape[0] != d:
                raise ValueError(f"{path}: row {i} has {row.shape[0]} values, expected {d}")
            mat[i] = row
    return mat
