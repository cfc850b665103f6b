"""Positivity probabilities of central Gaussian quadratic forms.

Every size and power number in the package reduces to ``P(G' A G > 0)`` for
a centred Gaussian vector ``G`` with covariance ``Omega``, which in turn is
``P(sum_i w_i X_i > 0)`` for independent chi-square(1) variables ``X_i``
and the eigenvalues ``w_i`` of ``Omega^{1/2} A Omega^{1/2}``.

The probability is evaluated with Imhof's inversion formula

    P = 1/2 + (1/pi) int_0^inf sin(theta(u)) / (u gamma(u)) du,
    theta(u) = 1/2 sum arctan(w_i u),  gamma(u) = prod (1 + w_i^2 u^2)^{1/4}.

After substituting ``u = exp(t)`` the integrand is analytic in the strip
``|Im t| < pi/2`` and decays exponentially at both ends, so the trapezoidal
rule in ``t`` converges geometrically in the step size. The truncation
points are chosen from explicit tail bounds and the step is halved until
two successive estimates agree.
"""
from dataclasses import dataclass

import numpy as np

from . import mc
from .exceptions import DomainError, NotPSDError, NumericalFailure

__all__ = [
    "WEIGHT_TOL",
    "QFormLaw",
    "MonteCarlo",
    "MCEstimate",
    "qform_law",
    "prob_positive",
    "prob_positive_inversion",
    "prob_positive_mc",
    "ratio_exceed_prob",
]

WEIGHT_TOL = 1e-12
PSD_TOL = 1e-8
ABS_TOL = 1e-8
MAX_EVALS = 10_000_000


@dataclass(frozen=True, eq=False)
class QFormLaw:
    """Eigenvalue weights of a central Gaussian quadratic form.

    Attributes
    ----------
    weights : ndarray
        Retained weights, sorted ascending.
    n_dropped : int
        Number of weights below ``WEIGHT_TOL`` relative to the largest one.
    """

    weights: np.ndarray
    n_dropped: int = 0

    @property
    def d_effective(self):
        return self.weights.size

    @property
    def degenerate(self):
        w = self.weights
        return w.size == 0 or np.all(w > 0) or np.all(w < 0)


@dataclass(frozen=True)
class MonteCarlo:
    reps: int
    seed: int
    workers: int = 1


@dataclass(frozen=True)
class MCEstimate:
    value: float
    se: float
    reps: int
    seed: int

    def __float__(self):
        return float(self.value)


def _law_from_eigs(lam):
    lam = np.sort(np.asarray(lam, dtype=float))
    scale = np.max(np.abs(lam)) if lam.size else 0.0
    if scale == 0:
        return QFormLaw(np.empty(0), lam.size)
    keep = np.abs(lam) >= WEIGHT_TOL * scale
    w = lam[keep]
    w.setflags(write=False)
    return QFormLaw(w, int(lam.size - keep.sum()))


def qform_law(A, Omega=None):
    """Weights of ``G' A G`` for ``G ~ N(0, Omega)``.

    Parameters
    ----------
    A : array_like, shape (d, d)
        Symmetric matrix.
    Omega : array_like, shape (d, d), optional
        Positive semidefinite covariance; identity when omitted.

    Raises
    ------
    NotPSDError
        If ``Omega`` has an eigenvalue below ``-1e-8 * ||Omega||``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError("A must be square")
    scale_a = max(np.max(np.abs(A)), 1.0)
    if np.max(np.abs(A - A.T)) > 1e-9 * scale_a:
        raise DomainError("A must be symmetric")
    A = (A + A.T) / 2
    if Omega is None:
        return _law_from_eigs(np.linalg.eigvalsh(A))
    Omega = np.asarray(Omega, dtype=float)
    if Omega.shape != A.shape:
        raise DomainError("A and Omega must have the same shape")
    Omega = (Omega + Omega.T) / 2
    ev, V = np.linalg.eigh(Omega)
    if ev[0] < -PSD_TOL * max(abs(ev[-1]), abs(ev[0])):
        raise NotPSDError(f"Omega has eigenvalue {ev[0]:.3e}")
    L = V * np.sqrt(np.clip(ev, 0.0, None))
    M = L.T @ A @ L
    return _law_from_eigs(np.linalg.eigvalsh((M + M.T) / 2))


def _imhof_integrand(t, w):
    u = np.exp(t)
    wu = np.multiply.outer(u, w)
    theta = 0.5 * np.arctan(wu).sum(axis=-1)
    with np.errstate(over="ignore"):
        # overflow gives log_gamma = inf and an integrand of exactly 0
        log_gamma = 0.25 * np.log1p(wu * wu).sum(axis=-1)
    return np.sin(theta) * np.exp(-log_gamma)


def _upper_cutoff(absw, tol):
    # tail of int_U^inf du / (u gamma(u)) <= 2 / (m P U^{m/2}), with m the
    # number of weights having |w| U >= 1 and P the product of their sqrt
    U = 1.0 / absw.max()
    while True:
        big = absw[absw * U >= 1]
        m = big.size
        bound = 2.0 / (m * np.exp(0.5 * np.log(big).sum() + 0.5 * m * np.log(U)))
        if bound <= tol:
            return U
        U *= 2.0


def prob_positive_inversion(weights, abs_tol=ABS_TOL):
    """``P(sum w_i X_i > 0)``, ``X_i`` iid chi-square(1), by inversion.

    Raises
    ------
    NumericalFailure
        If the step-halving loop exceeds the evaluation budget.
    """
    w = np.asarray(weights, dtype=float)
    w = w[w != 0]
    if w.size == 0 or np.all(w < 0):
        return 0.0
    if np.all(w > 0):
        return 1.0
    w = w / np.max(np.abs(w))
    absw = np.abs(w)
    tol = np.pi * abs_tol / 4
    t_lo = np.log(tol / (0.5 * absw.sum()))
    t_hi = np.log(_upper_cutoff(absw, tol))
    h = 0.5
    nodes = np.arange(t_lo, t_hi + h, h)
    vals = _imhof_integrand(nodes, w)
    total = vals.sum()
    est = h * total
    evals = nodes.size
    while True:
        mids = nodes[:-1] + h / 2 if nodes.size > 1 else nodes + h / 2
        total += _imhof_integrand(mids, w).sum()
        evals += mids.size
        h /= 2
        nodes = np.sort(np.concatenate([nodes, mids]))
        new = h * total
        if abs(new - est) <= tol:
            est = new
            break
        est = new
        if evals > MAX_EVALS:
            raise NumericalFailure(
                "Imhof quadrature did not converge",
                {"step": h, "interval": (t_lo, t_hi), "evals": evals,
                 "last": new, "weights": w.copy()})
    return float(min(max(0.5 + est / np.pi, 0.0), 1.0))


def prob_positive_mc(law, reps, seed, workers=1):
    """Monte Carlo estimate of ``P(sum w_i X_i > 0)`` with standard error."""
    w = law.weights if isinstance(law, QFormLaw) else np.asarray(law, dtype=float)
    d = w.size

    def count(index, start, stop):
        g = mc.normal_block(seed, index, stop - start, d)
        return int(np.count_nonzero(w @ (g * g) > 0))

    hits = sum(mc.map_blocks(count, reps, workers))
    p = hits / reps
    return MCEstimate(p, float(np.sqrt(p * (1 - p) / reps)), int(reps), int(seed))


def prob_positive(law, method="inversion", abs_tol=ABS_TOL):
    """Probability that the quadratic form is positive.

    ``method`` is ``"inversion"`` (returns a float) or a :class:`MonteCarlo`
    instance (returns an :class:`MCEstimate`).
    """
    if isinstance(method, MonteCarlo):
        return prob_positive_mc(law, method.reps, method.seed, method.workers)
    if method != "inversion":
        raise DomainError(f"unknown method {method!r}")
    return prob_positive_inversion(law.weights, abs_tol)


def ratio_exceed_prob(B, c, Omega=None, abs_tol=ABS_TOL):
    """``P(z' B z / z' z > c)`` for ``z ~ N(0, Omega)``."""
    B = np.asarray(B, dtype=float)
    return prob_positive(qform_law(B - c * np.eye(B.shape[0]), Omega), abs_tol=abs_tol)
