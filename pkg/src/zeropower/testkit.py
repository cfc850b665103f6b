"""Invariant ratio tests ``T_B`` with exact critical values and power.

A test rejects for large values of

    T_B(y) = y' C' B C y / ||C y||^2        (y outside span(X)),

where ``C`` is the complement basis of the design. Under the null the
rejection probability is free of ``beta`` and ``sigma`` and equals
``P(z' (B - c I) z > 0)`` with ``z ~ N(0, I)``; under the alternative ``rho``
the same holds with ``z ~ N(0, C Sigma(rho) C')``.
"""
import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ConditioningError,
    DegenerateStatisticError,
    DomainError,
    IntegrityError,
)
from .model import (
    complement_basis,
    complement_covariance,
    design_matrix,
    sigma_at,
    sigma_dot_zero,
    weights_matrix,
)
from .qform import ABS_TOL, prob_positive_inversion, ratio_exceed_prob

__all__ = [
    "SPAN_TOL",
    "SOLVER_TOL",
    "TestSpec",
    "CriticalValue",
    "PowerCurve",
    "make_spec",
    "statistic_value",
    "b_lbi",
    "b_poi",
    "b_cliff_ord",
    "b_ee",
    "build_spec",
    "null_size",
    "critical_value",
    "power",
    "power_curve",
    "power_envelope",
]

SPAN_TOL = 1e-9
SOLVER_TOL = 1e-7
POI_COND_MAX = 1e12


@dataclass(frozen=True, eq=False)
class TestSpec:
    """Matrix ``B`` of a ratio test together with its complement basis."""

    __test__ = False  # keep pytest from collecting this class

    B: np.ndarray
    basis: object
    eigvals: np.ndarray
    label: str = "Custom"
    rho_bar: float = None

    @property
    def eig_min(self):
        return float(self.eigvals[0])

    @property
    def eig_max(self):
        return float(self.eigvals[-1])

    @property
    def dim(self):
        return self.B.shape[0]

    @property
    def degenerate(self):
        spread = self.eig_max - self.eig_min
        return spread <= 1e-12 * max(abs(self.eig_max), abs(self.eig_min), 1e-300)


@dataclass(frozen=True)
class CriticalValue:
    alpha: float
    c: float
    achieved_size: float
    solver_tol: float = SOLVER_TOL

    def __float__(self):
        return float(self.c)


def make_spec(B, basis, label="Custom", rho_bar=None):
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape != (basis.dim, basis.dim):
        raise DomainError(f"B must be {basis.dim}x{basis.dim}")
    if np.max(np.abs(B - B.T)) > 1e-9 * max(np.max(np.abs(B)), 1.0):
        raise DomainError("B must be symmetric")
    B = (B + B.T) / 2
    B.setflags(write=False)
    ev = np.linalg.eigvalsh(B)
    ev.setflags(write=False)
    return TestSpec(B, basis, ev, label, rho_bar)


def _basis_for(X, basis):
    return complement_basis(design_matrix(X)) if basis is None else basis


def b_lbi(model, X, basis=None):
    """Locally best invariant test, ``B = C Sigma'(0) C'``."""
    C = _basis_for(X, basis)
    return make_spec(C.rows @ sigma_dot_zero(model) @ C.rows.T, C, "LBI")


def b_poi(model, X, rho_bar, basis=None):
    """Point-optimal invariant test against ``rho_bar``, ``B = -(C Sigma C')^{-1}``."""
    if not 0 < rho_bar < model.a:
        raise DomainError(f"rho_bar={rho_bar!r} outside (0, {model.a!r})")
    C = _basis_for(X, basis)
    M = complement_covariance(model, C, rho_bar)
    if np.linalg.cond(M) > POI_COND_MAX:
        raise ConditioningError(f"C Sigma(rho_bar) C' is near singular at {rho_bar!r}")
    return make_spec(-np.linalg.inv(M), C, "POI", rho_bar)


def b_cliff_ord(W, X, basis=None):
    """Cliff-Ord test, ``B = C (W + W') C'``."""
    W = weights_matrix(W).entries
    C = _basis_for(X, basis)
    return make_spec(C.rows @ (W + W.T) @ C.rows.T, C, "CliffOrd")


def b_ee(e, X, basis=None):
    """Test based on ``B = C e e' C'``; rejects when ``C y`` aligns with ``C e``."""
    C = _basis_for(X, basis)
    e = np.asarray(e, dtype=float)
    w = C.rows @ e
    if np.linalg.norm(w) <= SPAN_TOL * np.linalg.norm(e):
        raise DegenerateStatisticError("e lies in span(X); the statistic is identically 0")
    return make_spec(np.outer(w, w), C, "EE")


def build_spec(kind, model, X, rho_bar=None, basis=None):
    """Construct a spec by name: ``lbi``, ``poi``, ``cliff-ord`` or ``ee``."""
    kind = kind.lower().replace("_", "-")
    if kind == "lbi":
        return b_lbi(model, X, basis)
    if kind == "poi":
        return b_poi(model, X, model.a / 2 if rho_bar is None else rho_bar, basis)
    if kind in ("cliff-ord", "clifford", "co"):
        if model.weights is None:
            raise DomainError("the Cliff-Ord test needs a weights matrix")
        return b_cliff_ord(model.weights, X, basis)
    if kind == "ee":
        return b_ee(model.e, X, basis)
    raise DomainError(f"unknown test {kind!r}")


def statistic_value(spec, y):
    """``T_B(y)``; ``y`` may be a vector or an ``(n, N)`` array of columns.

    Points with ``||C y|| <= SPAN_TOL ||y||`` (including ``y = 0``) are in
    ``span(X)`` and get ``lambda_1(B)``.
    """
    y = np.asarray(y, dtype=float)
    z = spec.basis.rows @ y
    num = np.einsum("i...,ij,j...->...", z, spec.B, z)
    zz = np.einsum("i...,i...->...", z, z)
    yy = np.einsum("i...,i...->...", y, y)
    in_span = zz <= (SPAN_TOL ** 2) * yy
    in_span = in_span | (yy == 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(in_span, spec.eig_min, num / np.where(in_span, 1.0, zz))
    t = np.clip(t, spec.eig_min, spec.eig_max)
    return float(t) if t.ndim == 0 else t


def null_size(spec, c, abs_tol=ABS_TOL):
    """``P_0(T_B > c)``."""
    return prob_positive_inversion(np.asarray(spec.eigvals) - c, abs_tol)


def critical_value(spec, alpha, abs_tol=ABS_TOL):
    """Exact size-``alpha`` critical value ``kappa(alpha)``.

    Bisection on ``[lambda_1(B), lambda_max(B)]`` down to a bracket of width
    ``1e-10 (lambda_max - lambda_1)``, followed by one secant step inside
    the final bracket.

    Raises
    ------
    DegenerateStatisticError
        If ``lambda_1(B) == lambda_max(B)``.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha={alpha!r} outside (0, 1)")
    if spec.degenerate:
        raise DegenerateStatisticError("B has a single eigenvalue; T_B is constant")
    lo, hi = spec.eig_min, spec.eig_max
    f_lo, f_hi = 1.0 - alpha, -alpha
    width = 1e-10 * (hi - lo)
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        f_mid = null_size(spec, mid, abs_tol) - alpha
        if f_mid > 0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    c = lo - f_lo * (hi - lo) / (f_hi - f_lo) if f_hi != f_lo else 0.5 * (lo + hi)
    c = min(max(c, lo), hi)
    size = null_size(spec, c, abs_tol)
    if abs(size - alpha) > SOLVER_TOL:
        raise IntegrityError(
            f"critical value solver missed alpha={alpha}: size {size!r} at c={c!r}")
    return CriticalValue(float(alpha), float(c), float(size))


def power(spec, c, model, rho, abs_tol=ABS_TOL):
    """Rejection probability of ``{T_B > c}`` at correlation ``rho``."""
    c = float(c)
    if rho == 0:
        return null_size(spec, c, abs_tol)
    Omega = complement_covariance(model, spec.basis, rho)
    Omega = Omega / np.max(np.abs(Omega))
    return ratio_exceed_prob(spec.B, c, Omega, abs_tol)


@dataclass
class PowerCurve:
    """Rejection probabilities on a grid of ``rho`` values."""

    rho: np.ndarray
    power: np.ndarray
    label: str
    alpha: float
    method: str = "inversion"
    seed: int = None
    se: np.ndarray = None
    meta: dict = field(default_factory=dict)

    COLUMNS = ("rho", "power", "method", "label", "alpha", "seed")

    def to_csv(self, path=None, header=None):
        """Write CSV (columns rho, power, method, label, alpha, seed).

        ``header`` is a mapping written as leading ``# key=value`` comment
        lines. Returns the text when ``path`` is None.
        """
        buf = io.StringIO()
        for key, value in (header or {}).items():
            buf.write(f"# {key}={value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        seed = "" if self.seed is None else str(self.seed)
        for r, p in zip(self.rho, self.power):
            writer.writerow([repr(float(r)), repr(float(p)), self.method,
                             self.label, repr(float(self.alpha)), seed])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
        head, body = rows[0], rows[1:]
        cols = {name: [r[i] for r in body] for i, name in enumerate(head)}
        seed = cols["seed"][0] if body and cols["seed"][0] else None
        return cls(np.array(cols["rho"], dtype=float), np.array(cols["power"], dtype=float),
                   cols["label"][0] if body else "", float(cols["alpha"][0]) if body else float("nan"),
                   cols["method"][0] if body else "inversion", None if seed is None else int(seed))


def _check_grid(model, grid, open_left=False):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("grid must be a non-empty vector")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing")
    if grid[0] < 0 or (open_left and grid[0] == 0) or grid[-1] >= model.a:
        raise DomainError("grid must lie inside the parameter range")
    return grid


def _map(func, items, workers):
    if workers is None or workers <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def power_curve(spec, c, model, grid, alpha=None, workers=1):
    grid = _check_grid(model, grid)
    if alpha is None:
        alpha = c.alpha if isinstance(c, CriticalValue) else float("nan")
    values = _map(lambda r: power(spec, c, model, r), grid, workers)
    return PowerCurve(grid, np.array(values), spec.label, float(alpha))


def power_envelope(model, X, alpha, grid, workers=1):
    """Power of the level-``alpha`` point-optimal test at its own alternative."""
    grid = _check_grid(model, grid, open_left=True)
    C = complement_basis(design_matrix(X))

    def point(rho_bar):
        spec = b_poi(model, X, rho_bar, basis=C)
        return power(spec, critical_value(spec, alpha), model, rho_bar)

    return PowerCurve(grid, np.array(_map(point, grid, workers)), "Envelope", float(alpha))
