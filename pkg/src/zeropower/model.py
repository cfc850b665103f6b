"""Deterministic ingredients of the regression model.

Design matrices, spatial weights matrices, the two covariance families
(AR(1) serial correlation and the spatial autoregressive error model), the
canonical orthonormal complement basis ``C_Z`` and the limit vector ``e``
towards which the normalized covariance concentrates as ``rho -> a``.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .exceptions import (
    ConditioningError,
    DomainError,
    LimitVerificationError,
    RankError,
)

__all__ = [
    "RANK_TOL",
    "DesignMatrix",
    "ComplementBasis",
    "WeightsMatrix",
    "CovarianceModel",
    "ModelPoint",
    "design_matrix",
    "complement_basis",
    "weights_matrix",
    "build_lattice_weights",
    "perron_power_iteration",
    "ar1_model",
    "sar_model",
    "sigma_at",
    "sigma_factor",
    "sigma_dot_zero",
    "limit_vector",
    "complement_covariance",
    "sample_y",
]

RANK_TOL = 1e-10
RCOND_TOL = 1e-13
ENDPOINT_TOL = 1e-12
LIMIT_TOL = 0.01


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _check_full_rank(Z, what="Z"):
    s = np.linalg.svd(Z, compute_uv=False)
    if s.size == 0 or s[0] == 0 or s[-1] <= RANK_TOL * s[0]:
        smin = s[-1] if s.size else 0.0
        raise RankError(
            f"{what} is rank deficient (smallest singular value {smin:.3e})")


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Non-stochastic ``n x k`` regressor matrix of full column rank."""

    entries: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.entries, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise DomainError("design matrix must be two-dimensional")
        n, k = X.shape
        if not 0 < k < n:
            raise DomainError(f"need 0 < k < n, got n={n}, k={k}")
        if not np.all(np.isfinite(X)):
            raise DomainError("design matrix has non-finite entries")
        _check_full_rank(X, "design matrix")
        object.__setattr__(self, "entries", _frozen(X))

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def k(self):
        return self.entries.shape[1]

    @classmethod
    def intercept(cls, n):
        return cls(np.ones((n, 1)))

    def augment(self, column):
        """Return ``(X, column)`` as a new design matrix."""
        return DesignMatrix(np.column_stack([self.entries, column]))


def design_matrix(X):
    if isinstance(X, DesignMatrix):
        return X
    return DesignMatrix(X)


@dataclass(frozen=True, eq=False)
class ComplementBasis:
    """Rows form an orthonormal basis of ``span(Z)`` complement."""

    rows: np.ndarray
    parent_dim: int

    @property
    def n(self):
        return self.rows.shape[1]

    @property
    def dim(self):
        return self.rows.shape[0]

    def apply(self, y):
        return self.rows @ y

    def projector(self):
        return self.rows.T @ self.rows


def complement_basis(Z):
    """Canonical ``C_Z`` with ``C C' = I`` and ``C' C`` the residual projector.

    The rows are the trailing ``n - m`` columns of a complete QR factorization
    of ``Z``, each flipped so that its first non-negligible entry is positive.
    Output is a deterministic function of the input.

    Parameters
    ----------
    Z : array_like or DesignMatrix, shape (n, m)

    Returns
    -------
    ComplementBasis

    Raises
    ------
    RankError
        If ``Z`` does not have full column rank.
    """
    if isinstance(Z, DesignMatrix):
        Z = Z.entries
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    n, m = Z.shape
    if m >= n:
        raise DomainError(f"need m < n, got n={n}, m={m}")
    _check_full_rank(Z)
    Q, _ = np.linalg.qr(Z, mode="complete")
    C = Q[:, m:].T.copy()
    for row in C:
        idx = np.flatnonzero(np.abs(row) > 1e-12)
        if idx.size and row[idx[0]] < 0:
            row *= -1.0
    return ComplementBasis(_frozen(C), m)


@dataclass(frozen=True, eq=False)
class WeightsMatrix:
    """Nonnegative irreducible weights matrix with zero diagonal.

    ``perron_vector`` is the strictly positive unit right eigenvector for the
    Perron root ``spectral_radius``.
    """

    entries: np.ndarray
    spectral_radius: float
    perron_vector: np.ndarray

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def symmetric(self):
        return bool(np.allclose(self.entries, self.entries.T, atol=1e-14, rtol=0))


def perron_power_iteration(W, tol=1e-13, maxiter=100_000):
    """Perron root and vector of a nonnegative irreducible matrix.

    Iterates on ``W + I``, which is primitive, so the iteration also converges
    for periodic (e.g. bipartite) adjacency structures.
    """
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    S = W + np.eye(n)
    v = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    for _ in range(maxiter):
        w = S @ v
        lam_new = np.linalg.norm(w)
        w /= lam_new
        if np.max(np.abs(w - v)) < tol and abs(lam_new - lam) < tol * lam_new:
            v = w
            lam = lam_new
            break
        v, lam = w, lam_new
    else:
        raise ConditioningError("power iteration did not converge")
    # Rayleigh-type refinement of the root
    root = float((v @ (W @ v)) / (v @ v)) if np.allclose(W, W.T) else lam - 1.0
    return root, v


def weights_matrix(W):
    """Validate ``W`` and attach its Perron root and vector."""
    if isinstance(W, WeightsMatrix):
        return W
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DomainError("weights matrix must be square")
    n = W.shape[0]
    if n < 2:
        raise DomainError("weights matrix needs at least two units")
    if np.any(W < 0):
        raise DomainError("weights matrix has negative entries")
    if np.any(np.diag(W) != 0):
        raise DomainError("weights matrix must have a zero diagonal")
    ncomp, _ = connected_components(W > 0, directed=True, connection="strong")
    if ncomp != 1:
        raise DomainError("weights matrix is not irreducible")
    if np.allclose(W, W.T, atol=1e-14, rtol=0):
        lam, F = np.linalg.eigh((W + W.T) / 2)
        root, f = lam[-1], F[:, -1]
    else:
        lam, F = np.linalg.eig(W)
        i = int(np.argmax(lam.real))
        root, f = lam[i].real, F[:, i].real
    f = f / np.linalg.norm(f)
    if f.sum() < 0:
        f = -f
    if np.any(f <= 0):
        raise ConditioningError("Perron vector is not strictly positive")
    return WeightsMatrix(_frozen(W), float(root), _frozen(f))


def _neighbours(criterion):
    if criterion == "queen":
        return [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)]
    if criterion == "rook":
        return [(-1, 0), (1, 0), (0, -1), (0, 1)]
    raise DomainError(f"unknown contiguity criterion {criterion!r}")


def build_lattice_weights(rows, cols, criterion="queen", normalization="binary"):
    """Contiguity weights for a regular ``rows x cols`` lattice.

    Cells are numbered row-major. ``criterion`` is ``"queen"`` (shared edge
    or corner) or ``"rook"`` (shared edge); ``normalization`` is
    ``"binary"`` or ``"row"`` (row-standardized, generally non-symmetric).
    """
    criterion = criterion.lower()
    normalization = normalization.lower()
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise DomainError("lattice must contain at least two cells")
    offsets = _neighbours(criterion)
    n = rows * cols
    W = np.zeros((n, n))
    for i in range(rows):
        for j in range(cols):
            for di, dj in offsets:
                r, c = i + di, j + dj
                if 0 <= r < rows and 0 <= c < cols:
                    W[i * cols + j, r * cols + c] = 1.0
    if normalization in ("row", "rowstandardized", "row-standardized"):
        W = W / W.sum(axis=1, keepdims=True)
    elif normalization != "binary":
        raise DomainError(f"unknown normalization {normalization!r}")
    return weights_matrix(W)


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """A family ``rho -> Sigma(rho)`` on ``[0, a)`` with ``Sigma(0) = I``.

    Use :func:`ar1_model` or :func:`sar_model` to construct instances.
    """

    family: str
    n: int
    a: float
    weights: WeightsMatrix = None
    e: np.ndarray = field(default=None, repr=False)

    @property
    def symmetric_w(self):
        return self.weights is not None and self.weights.symmetric

    def fraction(self, frac):
        """``frac * a``, the usual way grids are specified."""
        return frac * self.a


def ar1_model(n):
    """Stationary AR(1) correlation ``Sigma(rho)_ij = rho**|i-j|``, ``a = 1``."""
    if n < 2:
        raise DomainError("AR(1) model needs n >= 2")
    return CovarianceModel("ar1", int(n), 1.0, None, _frozen(np.full(n, 1 / np.sqrt(n))))


def sar_model(W):
    """Spatial error model ``Sigma(rho) = [(I - rho W')(I - rho W)]^{-1}``."""
    W = weights_matrix(W)
    return CovarianceModel("sar", W.n, 1.0 / W.spectral_radius, W, W.perron_vector)


def _check_rho(model, rho):
    if not 0 <= rho < model.a:
        raise DomainError(f"rho={rho!r} outside [0, {model.a!r})")
    if model.a - rho < ENDPOINT_TOL * model.a:
        raise ConditioningError(f"rho={rho!r} is within 1e-12 of the endpoint a")


def _sar_operator(model, rho):
    A = np.eye(model.n) - rho * model.weights.entries
    if rho > 0 and 1.0 / np.linalg.cond(A, 1) < RCOND_TOL:
        raise ConditioningError(f"I - rho W is near singular at rho={rho!r}")
    return A


def sigma_factor(model, rho):
    """A square root ``L`` with ``L L' = Sigma(rho)``.

    SAR: ``(I - rho W)^{-1}``. AR(1): the exact lower-triangular Cholesky
    factor of the AR(1) recursion, stable up to the endpoint.
    """
    _check_rho(model, rho)
    n = model.n
    if model.family == "sar":
        return np.linalg.solve(_sar_operator(model, rho), np.eye(n))
    i = np.arange(n)
    lag = i[:, None] - i[None, :]
    L = np.where(lag >= 0, rho ** np.maximum(lag, 0), 0.0)
    L[:, 1:] *= np.sqrt(1 - rho * rho)
    return L


def sigma_at(model, rho):
    """Covariance matrix ``Sigma(rho)`` (symmetric positive definite)."""
    _check_rho(model, rho)
    n = model.n
    if model.family == "ar1":
        i = np.arange(n)
        return rho ** np.abs(i[:, None] - i[None, :]) if rho > 0 else np.eye(n)
    A = _sar_operator(model, rho)
    S = np.linalg.inv(A.T @ A)
    return (S + S.T) / 2


def sigma_dot_zero(model):
    """Derivative of ``Sigma`` at ``rho = 0``."""
    if model.family == "ar1":
        n = model.n
        return np.eye(n, k=1) + np.eye(n, k=-1)
    W = model.weights.entries
    return W + W.T


def complement_covariance(model, basis, rho):
    """``C Sigma(rho) C'``, formed as ``(C L)(C L)'`` so it stays PSD."""
    CL = basis.rows @ sigma_factor(model, rho)
    return CL @ CL.T


def limit_vector(model, check=True):
    """Unit vector ``e`` with ``Sigma(rho) / lambda_max -> e e'`` as ``rho -> a``.

    With ``check=True`` the concentration is verified at ``rho = a(1 - 1e-4)``
    in max-norm (tolerance 0.01); failure raises
    :class:`LimitVerificationError`.
    """
    e = np.array(model.e)
    if check:
        S = sigma_at(model, model.a * (1 - 1e-4))
        S = S / np.linalg.eigvalsh(S)[-1]
        dev = np.max(np.abs(S - np.outer(e, e)))
        if dev > LIMIT_TOL:
            raise LimitVerificationError(
                f"normalized covariance is {dev:.3g} away from e e' near a")
    return e


@dataclass(frozen=True)
class ModelPoint:
    """Parameter point ``(beta, sigma, rho)`` for simulation."""

    beta: np.ndarray
    sigma: float
    rho: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        if self.rho < 0:
            raise DomainError("rho must be nonnegative")


def sample_y(model, X, point, size, rng):
    """Draw ``size`` observation vectors ``y = X beta + sigma L g`` (columns)."""
    X = design_matrix(X)
    L = sigma_factor(model, point.rho)
    g = rng.standard_normal((model.n, size))
    mean = X.entries @ np.asarray(point.beta, dtype=float)
    return mean[:, None] + point.sigma * (L @ g)
