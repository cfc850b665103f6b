"""Readers and writers for weights matrices and design matrices.

Weights matrices come either as Matrix Market coordinate files or as plain
edge lists (one ``i j weight`` triple per line, 0-based indices, ``#``
comments allowed). Design matrices are headerless CSV, one row per
observation.
"""
import os

import numpy as np
import scipy.io
import scipy.sparse

from .exceptions import DomainError
from .model import DesignMatrix, weights_matrix

__all__ = [
    "read_matrix_market",
    "write_matrix_market",
    "read_edge_list",
    "write_edge_list",
    "read_weights",
    "read_design_csv",
]


def read_matrix_market(path):
    M = scipy.io.mmread(path)
    if scipy.sparse.issparse(M):
        M = M.toarray()
    return weights_matrix(np.asarray(M, dtype=float))


def write_matrix_market(path, W):
    W = weights_matrix(W)
    scipy.io.mmwrite(path, scipy.sparse.coo_matrix(W.entries), field="real")


def read_edge_list(path, n=None):
    """Read ``i j weight`` triples; ``n`` defaults to ``1 + max index``."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.size == 0:
        raise DomainError(f"{path}: empty edge list")
    if data.shape[1] != 3:
        raise DomainError(f"{path}: expected 3 columns, found {data.shape[1]}")
    i = data[:, 0].astype(int)
    j = data[:, 1].astype(int)
    if np.any(data[:, :2] != np.stack([i, j], axis=1)) or i.min() < 0 or j.min() < 0:
        raise DomainError(f"{path}: indices must be nonnegative integers")
    size = int(max(i.max(), j.max())) + 1 if n is None else int(n)
    W = np.zeros((size, size))
    np.add.at(W, (i, j), data[:, 2])
    return weights_matrix(W)


def write_edge_list(path, W):
    W = weights_matrix(W)
    i, j = np.nonzero(W.entries)
    with open(path, "w") as fh:
        fh.write(f"# n={W.n}\n")
        for a, b in zip(i, j):
            fh.write(f"{a} {b} {float(W.entries[a, b])!r}\n")


def read_weights(path):
    """Dispatch on file content: Matrix Market banner or edge list."""
    with open(path) as fh:
        head = fh.readline()
    if head.startswith("%%MatrixMarket"):
        return read_matrix_market(path)
    return read_edge_list(path)


def read_design_csv(path):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    X = np.loadtxt(path, delimiter=",", ndmin=2)
    return DesignMatrix(X)
