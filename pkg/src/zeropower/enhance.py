"""Tests that avoid the zero-power trap.

Two constructions are provided on top of :mod:`zeropower.testkit`:

* the artificial-regressor test, which builds the statistic as if ``e`` were
  an additional regressor; its power tends to ``P(T(Lambda G) > kappa)``,
  strictly between 0 and 1, as ``rho -> a``;
* the power-enhanced test, which rejects when the base test at level
  ``alpha - eps`` rejects or when the ``e``-direction statistic exceeds the
  smallest cutoff restoring size ``alpha``. Its power tends to one.

The joint law of the two statistics in the enhanced test has no closed form,
so its size and power are computed by Monte Carlo with common random
numbers: the same standard-normal draws are reused for every candidate
cutoff and every ``rho``.
"""
from dataclasses import dataclass, field

import numpy as np

from . import mc
from .exceptions import (
    DegenerateStatisticError,
    DomainError,
    IntegrityError,
    NothingToAugmentError,
    ResolutionError,
)
from .model import complement_basis, complement_covariance, design_matrix, sigma_at
from .qform import MCEstimate, qform_law, ratio_exceed_prob
from .testkit import SPAN_TOL, build_spec, critical_value, power

__all__ = [
    "ArtRegTest",
    "LambdaMatrix",
    "EnhancedTest",
    "ApproximationProfile",
    "artificial_regressor_test",
    "lambda_matrix",
    "artreg_limiting_power",
    "enhanced_critical",
    "enhanced_reject",
    "enhanced_power",
    "approximation_profile",
]

LIMIT_MARGIN = 1e-4
NEAR_A = 1e-4


@dataclass(frozen=True, eq=False)
class LambdaMatrix:
    """Limit of ``c(rho) Pi_{e-perp} L(rho)`` as ``rho -> a``.

    ``construction`` is ``"SpectralSymmetric"`` (SAR with symmetric W),
    ``"AR1Laplacian"`` or ``"Unavailable"`` (``entries`` is None).
    ``validation`` holds ``(rho, distance)`` pairs of the limit check.
    """

    entries: np.ndarray
    construction: str
    validation: tuple = ()

    @property
    def available(self):
        return self.entries is not None


@dataclass(frozen=True, eq=False)
class ArtRegTest:
    x_bar: object
    spec: object
    kappa_bar: object
    limiting_power: float = None
    limiting_method: str = "unavailable"

    @property
    def b_bar(self):
        return self.spec.B

    def to_dict(self):
        return {
            "kind": "artificial-regressor",
            "label": self.spec.label,
            "alpha": self.kappa_bar.alpha,
            "kappa_bar": self.kappa_bar.c,
            "achieved_size": self.kappa_bar.achieved_size,
            "solver_tol": self.kappa_bar.solver_tol,
            "limiting_power": self.limiting_power,
            "limiting_method": self.limiting_method,
            "n": int(self.x_bar.n),
            "k_augmented": int(self.x_bar.k),
        }


def _perp_distance(model, Lam, rho):
    e = model.e
    P = np.eye(model.n) - np.outer(e, e)
    if model.family == "sar":
        A = np.eye(model.n) - rho * model.weights.entries
        return np.linalg.norm(P @ np.linalg.inv(A) - Lam, 2)
    ev, V = np.linalg.eigh(sigma_at(model, rho))
    root = (V * np.sqrt(np.clip(ev, 0, None))) @ V.T
    return np.linalg.norm(P @ root / np.sqrt(1 - rho * rho) - Lam, 2)


def _injective_on_e_perp(Lam, e):
    Ce = complement_basis(e[:, None]).rows
    s = np.linalg.svd(Lam @ Ce.T, compute_uv=False)
    return s[-1] > 1e-10


def lambda_matrix(model, validate=True):
    """``Lambda`` for the SAR model with symmetric W, or for AR(1).

    SAR: with the square root ``(I - rho W)^{-1}`` and ``c(rho) = 1``,
    ``Lambda = sum_{i: lambda_i < lambda_max} f_i f_i' / (1 - lambda_i / lambda_max)``.

    AR(1): with the symmetric square root and ``c(rho) = (1 - rho^2)^{-1/2}``,
    ``Lambda`` is the square root of the pseudo-inverse of the path-graph
    Laplacian (the limit of the scaled AR(1) precision matrix).

    With ``validate=True`` the distance between ``Lambda`` and its
    pre-limit counterpart is computed along ``rho = a(1 - 10^-j)``,
    ``j = 2..5``, and must decrease.
    """
    n = model.n
    if model.family == "sar":
        if not model.symmetric_w:
            return LambdaMatrix(None, "Unavailable")
        lam, F = np.linalg.eigh(model.weights.entries)
        lmax = lam[-1]
        if lmax - lam[-2] <= 1e-10 * lmax:
            raise IntegrityError("Perron root of W is not simple")
        Lam = (F[:, :-1] / (1 - lam[:-1] / lmax)) @ F[:, :-1].T
        construction = "SpectralSymmetric"
    elif model.family == "ar1":
        Lp = 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
        Lp[0, 0] = Lp[-1, -1] = 1.0
        mu, V = np.linalg.eigh(Lp)
        Lam = (V[:, 1:] / np.sqrt(mu[1:])) @ V[:, 1:].T
        construction = "AR1Laplacian"
    else:
        return LambdaMatrix(None, "Unavailable")
    if not _injective_on_e_perp(Lam, model.e):
        raise IntegrityError("Lambda is not injective on the complement of e")
    checks = ()
    if validate:
        checks = tuple((model.a * (1 - 10.0 ** -j),
                        float(_perp_distance(model, Lam, model.a * (1 - 10.0 ** -j))))
                       for j in range(2, 6))
        dist = [d for _, d in checks]
        if any(b >= a for a, b in zip(dist, dist[1:])):
            raise IntegrityError(f"Lambda limit check is not converging: {dist}")
    Lam.setflags(write=False)
    return LambdaMatrix(Lam, construction, checks)


def _kind_label(kind):
    if isinstance(kind, tuple):
        return "POI-updated", kind[0], kind[1]
    k = kind.lower().replace("_", "-")
    if k in ("lbi", "lbi-updated"):
        return "LBI-updated", "lbi", None
    if k in ("cliff-ord", "clifford", "co", "cliff-ord-updated", "clifford-updated"):
        return "CliffOrd-updated", "cliff-ord", None
    raise DomainError(f"unknown artificial-regressor kind {kind!r}")


def artificial_regressor_test(model, X, alpha, kind="cliff-ord", e=None, limit=True):
    """Test built as if ``(X, e)`` were the design.

    Parameters
    ----------
    model : CovarianceModel
    X : array_like or DesignMatrix
    alpha : float
    kind : str or tuple
        ``"cliff-ord"``, ``"lbi"`` or ``("poi", rho_bar)``.
    e : array_like, optional
        Artificial regressor; defaults to the model's limit vector.
    limit : bool
        Attach the limiting power (via ``Lambda`` when available, else the
        power at ``rho = a(1 - 1e-4)``).
    """
    X = design_matrix(X)
    e = model.e if e is None else np.asarray(e, dtype=float)
    if X.k + 1 >= X.n:
        raise DomainError("need k + 1 < n to add a regressor")
    w = complement_basis(X).rows @ e
    if np.linalg.norm(w) <= SPAN_TOL * np.linalg.norm(e):
        raise NothingToAugmentError("e already lies in span(X)")
    label, kind_name, rho_bar = _kind_label(kind)
    x_bar = X.augment(e)
    spec = build_spec(kind_name, model, x_bar, rho_bar=rho_bar)
    if spec.degenerate:
        raise DegenerateStatisticError("updated matrix has a single eigenvalue")
    spec = type(spec)(spec.B, spec.basis, spec.eigvals, label, spec.rho_bar)
    test = ArtRegTest(x_bar, spec, critical_value(spec, alpha))
    if not limit:
        return test
    lam = lambda_matrix(model)
    if lam.available:
        return ArtRegTest(x_bar, spec, test.kappa_bar,
                          artreg_limiting_power(test, lam), "lambda")
    rho = model.a * (1 - NEAR_A)
    return ArtRegTest(x_bar, spec, test.kappa_bar,
                      power(spec, test.kappa_bar, model, rho),
                      f"power at rho={rho!r}")


def artreg_limiting_power(test, lam):
    """``P(T_bar(Lambda G) > kappa_bar)`` for ``G ~ N(0, I)``."""
    if not lam.available:
        raise DomainError("Lambda is unavailable for this model")
    CL = test.spec.basis.rows @ lam.entries
    Omega = CL @ CL.T
    Omega = Omega / np.max(np.abs(Omega))
    B = test.spec.B
    law = qform_law(B - test.kappa_bar.c * np.eye(B.shape[0]), Omega)
    if law.degenerate:
        raise IntegrityError("limiting law is degenerate; the limit cannot lie in (0, 1)")
    p = ratio_exceed_prob(B, test.kappa_bar.c, Omega)
    if not LIMIT_MARGIN < p < 1 - LIMIT_MARGIN:
        raise IntegrityError(f"limiting power {p!r} not strictly inside (0, 1)")
    return p


def _block_stats(B_base, w, z):
    zz = np.sum(z * z, axis=0)
    tb = np.sum(z * (B_base @ z), axis=0) / zz
    te = (w @ z) ** 2 / zz
    return tb, te


@dataclass(eq=False)
class EnhancedTest:
    """Union of the base test at ``alpha - eps`` and an ``e``-direction test.

    ``ee_cutoff`` is the smallest cutoff (a sample order statistic of the
    ``e``-direction statistic) at which the Monte Carlo size is at most
    ``alpha``, capped at ``ee_kappa_eps``.
    """

    alpha: float
    epsilon: float
    base_spec: object
    base_cutoff: object
    ee_spec: object
    ee_kappa_eps: float
    ee_cutoff: float
    reps: int
    seed: int
    achieved_size: float
    se: float
    n_base: int = 0
    _rest: np.ndarray = field(default=None, repr=False)

    @property
    def ee_weights(self):
        # B_ee = w w'; recover w from its top eigenpair
        ev, V = np.linalg.eigh(self.ee_spec.B)
        return V[:, -1] * np.sqrt(max(ev[-1], 0.0))

    def empirical_size(self, c):
        """Monte Carlo size of the union test with cutoff ``c`` (same draws)."""
        rest = self._rest
        count = rest.size - np.searchsorted(rest, c, side="right")
        return float((self.n_base + count) / self.reps)

    def to_dict(self):
        return {
            "kind": "power-enhanced",
            "base_label": self.base_spec.label,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "base_cutoff": self.base_cutoff.c,
            "base_level": self.base_cutoff.alpha,
            "ee_kappa_eps": self.ee_kappa_eps,
            "ee_cutoff": self.ee_cutoff,
            "achieved_size": self.achieved_size,
            "se": self.se,
            "mc_reps": self.reps,
            "mc_seed": self.seed,
        }


def enhanced_critical(base_spec, ee_spec, alpha, epsilon, reps=1_000_000, seed=0, workers=1):
    """Calibrate the power-enhanced test.

    Parameters
    ----------
    base_spec : TestSpec
        Defines the base family ``{T_B > kappa(level)}``.
    ee_spec : TestSpec
        The ``e``-direction spec (``B = C e e' C'``) on the same basis.
    alpha, epsilon : float
        ``0 < epsilon < alpha``.
    reps, seed : int
        Common-random-numbers sample.

    Raises
    ------
    ResolutionError
        If the Monte Carlo standard error at ``alpha`` exceeds
        ``(alpha - epsilon) / 10``.
    """
    if not 0 < epsilon < alpha < 1:
        raise DomainError("need 0 < epsilon < alpha < 1")
    if ee_spec.dim != base_spec.dim:
        raise DomainError("base and e-direction specs must share the basis")
    se_alpha = np.sqrt(alpha * (1 - alpha) / reps)
    if se_alpha > (alpha - epsilon) / 10:
        raise ResolutionError(
            f"reps={reps} gives SE {se_alpha:.2e} > (alpha - eps)/10; increase reps")
    base_cv = critical_value(base_spec, alpha - epsilon)
    kappa_eps = critical_value(ee_spec, epsilon).c
    tmp = EnhancedTest(alpha, epsilon, base_spec, base_cv, ee_spec, kappa_eps,
                       kappa_eps, reps, seed, float("nan"), float("nan"))
    w = tmp.ee_weights
    B = base_spec.B
    m = B.shape[0]

    def block(index, start, stop):
        z = mc.normal_block(seed, index, stop - start, m)
        tb, te = _block_stats(B, w, z)
        base = tb > base_cv.c
        return int(base.sum()), te[~base]

    parts = mc.map_blocks(block, reps, workers)
    n_base = sum(p[0] for p in parts)
    rest = np.sort(np.concatenate([p[1] for p in parts]))
    allowed = int(np.floor(alpha * reps + 1e-9)) - n_base
    if allowed < 0:
        c = kappa_eps
    elif allowed >= rest.size:
        c = 0.0
    else:
        # rejecting exactly `allowed` extra draws: cutoff at the
        # (allowed + 1)-th largest value
        c = min(float(rest[rest.size - 1 - allowed]), kappa_eps)
    tmp.n_base = n_base
    tmp._rest = rest
    size = tmp.empirical_size(c)
    tmp.ee_cutoff = c
    tmp.achieved_size = size
    tmp.se = float(np.sqrt(size * (1 - size) / reps))
    return tmp


def enhanced_reject(test, y):
    """Decision of the enhanced test at observation(s) ``y`` (0/1 array)."""
    y = np.asarray(y, dtype=float)
    C = test.base_spec.basis.rows
    z = C @ (y if y.ndim == 2 else y[:, None])
    tb, te = _block_stats(test.base_spec.B, test.ee_weights, z)
    base = (tb > test.base_cutoff.c).astype(float)
    ee = (te > test.ee_cutoff).astype(float)
    out = np.minimum(base + ee, 1.0)
    return out if y.ndim == 2 else float(out[0])


def _alt_factor(model, basis, rho):
    if rho == 0:
        return None
    Omega = complement_covariance(model, basis, rho)
    Omega = Omega / np.max(np.abs(Omega))
    try:
        return np.linalg.cholesky(Omega)
    except np.linalg.LinAlgError:
        ev, V = np.linalg.eigh(Omega)
        return V * np.sqrt(np.clip(ev, 0, None))


def enhanced_power(test, model, rho, reps=None, seed=None, workers=1):
    """Monte Carlo power of the enhanced test at ``rho``.

    Draws ``z = F g`` with ``F F' = C Sigma(rho) C'`` and the same ``g`` as
    the calibration when ``reps``/``seed`` are left at their defaults, so the
    value at ``rho = 0`` reproduces the achieved size exactly.
    """
    if not 0 <= rho < model.a:
        raise DomainError(f"rho={rho!r} outside [0, a)")
    reps = test.reps if reps is None else reps
    seed = test.seed if seed is None else seed
    F = _alt_factor(model, test.base_spec.basis, rho)
    B = test.base_spec.B
    w = test.ee_weights
    m = B.shape[0]

    def block(index, start, stop):
        g = mc.normal_block(seed, index, stop - start, m)
        z = g if F is None else F @ g
        tb, te = _block_stats(B, w, z)
        return int(np.count_nonzero((tb > test.base_cutoff.c) | (te > test.ee_cutoff)))

    hits = sum(mc.map_blocks(block, reps, workers))
    p = hits / reps
    return MCEstimate(p, float(np.sqrt(p * (1 - p) / reps)), int(reps), int(seed))


@dataclass
class ApproximationProfile:
    """Sup-distance between enhanced and base power over a ``rho`` grid."""

    grid: np.ndarray
    epsilons: list
    base_power: np.ndarray
    enhanced_power: list
    enhanced_se: list

    @property
    def gaps(self):
        return [float(np.max(np.abs(p - self.base_power))) for p in self.enhanced_power]

    @property
    def shortfalls(self):
        """Largest power loss relative to the base test, per epsilon."""
        return [float(np.max(self.base_power - p)) for p in self.enhanced_power]

    @property
    def slack(self):
        return [3 * float(np.max(s)) for s in self.enhanced_se]

    def ordered(self):
        """Epsilons sorted decreasingly with their gaps and slacks."""
        order = np.argsort(self.epsilons)[::-1]
        return [(self.epsilons[i], self.gaps[i], self.slack[i]) for i in order]

    def non_increasing(self):
        """Whether gaps do not grow as epsilon shrinks, up to 3 SE slack."""
        rows = self.ordered()
        return all(g2 <= g1 + max(s1, s2) for (_, g1, s1), (_, g2, s2) in zip(rows, rows[1:]))


def approximation_profile(base_spec, base_cutoff, tests, model, grid, workers=1):
    """Compare each enhanced test with the base level-``alpha`` test on ``grid``.

    ``grid`` must stay strictly below ``a``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid[-1] >= model.a or grid[0] < 0:
        raise DomainError("profile grid must lie in [0, a)")
    base = np.array([power(base_spec, base_cutoff, model, r) for r in grid])
    powers, ses = [], []
    for t in tests:
        est = [enhanced_power(t, model, r, workers=workers) for r in grid]
        powers.append(np.array([e.value for e in est]))
        ses.append(np.array([e.se for e in est]))
    return ApproximationProfile(grid, [t.epsilon for t in tests], base, powers, ses)
