"""Zero-power trap certification and genericity tools.

A ratio test ``{T_B > kappa(alpha)}`` has power tending to zero as
``rho -> a`` whenever ``e`` (the concentration direction of ``Sigma``) is
outside ``span(X)`` and ``T_B(e) < kappa(alpha)``. Because ``kappa`` is
strictly decreasing, this happens exactly for levels below

    alpha_star = P_0(T_B > T_B(e)).
"""
import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from . import mc
from .exceptions import DomainError, RankError
from .model import RANK_TOL, complement_basis
from .testkit import SPAN_TOL, build_spec, critical_value, null_size, statistic_value

__all__ = [
    "TRAP_CERTIFIED",
    "E_IN_SPAN_X",
    "NOT_APPLICABLE_EE",
    "INCONCLUSIVE",
    "TrapVerdict",
    "ExceptionalForm",
    "ScanReport",
    "diagnose",
    "genericity_poly",
    "eigenvector_oracle",
    "exceptional_form_check",
    "design_scan",
]

TRAP_CERTIFIED = "TrapCertified"
E_IN_SPAN_X = "EInSpanX"
NOT_APPLICABLE_EE = "NotApplicable_EEform"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class TrapVerdict:
    status: str
    t_at_e: float
    kappa_alpha: float
    alpha_star: float
    alpha: float

    @property
    def trapped(self):
        return self.status == TRAP_CERTIFIED


def _is_ee_form(spec, w):
    if spec.label == "EE":
        return True
    ww = np.outer(w, w)
    scale = np.max(np.abs(ww))
    if scale == 0:
        return False
    s = np.sum(spec.B * ww) / np.sum(ww * ww)
    return s > 0 and np.max(np.abs(spec.B - s * ww)) <= 1e-10 * max(np.max(np.abs(spec.B)), 1.0)


def diagnose(spec, alpha, e):
    """Check the sufficient condition for the zero-power trap at level ``alpha``.

    Parameters
    ----------
    spec : TestSpec
    alpha : float
    e : array_like
        Limit vector of the covariance model.

    Returns
    -------
    TrapVerdict
        ``status`` is one of ``TrapCertified``, ``EInSpanX``,
        ``NotApplicable_EEform`` or ``Inconclusive``.
    """
    e = np.asarray(e, dtype=float)
    kappa = critical_value(spec, alpha).c
    w = spec.basis.rows @ e
    if np.linalg.norm(w) <= SPAN_TOL * np.linalg.norm(e):
        return TrapVerdict(E_IN_SPAN_X, float("nan"), kappa, float("nan"), alpha)
    t_e = statistic_value(spec, e)
    alpha_star = null_size(spec, t_e)
    if _is_ee_form(spec, w):
        return TrapVerdict(NOT_APPLICABLE_EE, t_e, kappa, alpha_star, alpha)
    status = TRAP_CERTIFIED if t_e < kappa else INCONCLUSIVE
    return TrapVerdict(status, t_e, kappa, alpha_star, alpha)


def _adjugate(G):
    d = G.shape[0]
    if d == 1:
        return np.ones((1, 1))
    if d <= 4:
        adj = np.empty_like(G)
        for i in range(d):
            for j in range(d):
                minor = np.delete(np.delete(G, i, axis=0), j, axis=1)
                adj[j, i] = (-1) ** (i + j) * _det(minor)
        return adj
    return _det(G) * np.linalg.inv(G)


def _det(G):
    d = G.shape[0]
    if d == 1:
        return G[0, 0]
    if d <= 4:
        # Leibniz expansion keeps the polynomial structure explicit
        total = 0.0
        for perm in permutations(range(d)):
            inv = sum(1 for a in range(d) for b in range(a + 1, d) if perm[a] > perm[b])
            total += (-1) ** inv * np.prod([G[i, perm[i]] for i in range(d)])
        return total
    return np.linalg.det(G)


def genericity_poly(M, v, L):
    """Polynomial whose zeros mark designs where ``Pi v`` is an eigenvector of ``Pi M Pi``.

    ``Pi`` projects onto ``span(L)`` complement. The value is

        det[(det(L'L) Q v, Q M Q v)' (det(L'L) Q v, Q M Q v)],
        Q = det(L'L) I - L adj(L'L) L',

    evaluated after scaling the columns of ``L`` to unit length (the zero set
    is unchanged). Rank-deficient ``L`` gives exactly 0.
    """
    M = np.asarray(M, dtype=float)
    v = np.asarray(v, dtype=float)
    L = np.asarray(L, dtype=float)
    if L.ndim == 1:
        L = L[:, None]
    n, d = L.shape
    if not 1 <= d < n - 1:
        raise DomainError(f"need 1 <= d < n - 1, got n={n}, d={d}")
    norms = np.linalg.norm(L, axis=0)
    if np.any(norms == 0) or np.linalg.matrix_rank(L, tol=RANK_TOL * norms.max()) < d:
        return 0.0
    L = L / norms
    G = L.T @ L
    det = _det(G)
    Q = det * np.eye(n) - L @ _adjugate(G) @ L.T
    a1 = det * (Q @ v)
    a2 = Q @ (M @ (Q @ v))
    K = np.column_stack([a1, a2])
    return float(_det(K.T @ K))


def eigenvector_oracle(M, v, L, tol=1e-8):
    """Direct check whether ``Pi v`` is an eigenvector of ``Pi M Pi``.

    Returns None when ``Pi v = 0`` (the question is void).
    """
    L = np.asarray(L, dtype=float)
    if L.ndim == 1:
        L = L[:, None]
    P = complement_basis(L).projector()
    x = P @ v
    if np.linalg.norm(x) <= tol:
        return None
    y = P @ (M @ x)
    xs = x / np.linalg.norm(x)
    resid = y - (xs @ y) * xs
    return bool(np.linalg.norm(resid) <= tol * max(np.linalg.norm(y), np.linalg.norm(M, 2), 1e-300))


@dataclass(frozen=True)
class ExceptionalForm:
    is_exceptional: bool
    c1: float
    c2: float
    residual: float


def exceptional_form_check(M, v):
    """Least-squares fit of ``M`` by ``c1 I + c2 v v'``."""
    M = np.asarray(M, dtype=float)
    v = np.asarray(v, dtype=float)
    n = M.shape[0]
    basis = np.column_stack([np.eye(n).ravel(), np.outer(v, v).ravel()])
    coef, *_ = np.linalg.lstsq(basis, M.ravel(), rcond=None)
    c1, c2 = (float(x) for x in coef)
    residual = float(np.linalg.norm(M - c1 * np.eye(n) - c2 * np.outer(v, v)))
    ok = residual <= 1e-8 * np.linalg.norm(M) and c2 >= -1e-10
    return ExceptionalForm(bool(ok), c1, c2, residual)


@dataclass
class ScanReport:
    """Outcome of a random-design prevalence scan."""

    alpha: float
    n: int
    k: int
    reps: int
    seed: int
    test: str
    statuses: list
    t_at_e: np.ndarray
    kappa: np.ndarray
    alpha_star: np.ndarray
    resampled: int = 0
    quantile_levels: tuple = (0.1, 0.25, 0.5, 0.75, 0.9)
    meta: dict = field(default_factory=dict)

    @property
    def fraction_trapped(self):
        return self.statuses.count(TRAP_CERTIFIED) / self.reps

    @property
    def fraction_e_in_span(self):
        return self.statuses.count(E_IN_SPAN_X) / self.reps

    @property
    def alpha_star_quantiles(self):
        a = self.alpha_star[np.isfinite(self.alpha_star)]
        if a.size == 0:
            return {q: float("nan") for q in self.quantile_levels}
        return {q: float(np.quantile(a, q)) for q in self.quantile_levels}

    def fraction_trapped_at(self, alpha):
        """Trapped fraction at another level, read off ``alpha_star``."""
        eligible = np.isin(self.statuses, [TRAP_CERTIFIED, INCONCLUSIVE])
        a = np.where(eligible & np.isfinite(self.alpha_star), self.alpha_star, -np.inf)
        return float(np.mean(alpha < a))

    def to_csv(self, path=None, header=None):
        buf = io.StringIO()
        for key, value in (header or {}).items():
            buf.write(f"# {key}={value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rep", "status", "t_at_e", "kappa", "alpha_star", "seed"])
        for i, s in enumerate(self.statuses):
            writer.writerow([i, s, repr(float(self.t_at_e[i])), repr(float(self.kappa[i])),
                             repr(float(self.alpha_star[i])), self.seed])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def summary(self):
        q = ", ".join(f"q{int(100 * k)}={v:.4g}" for k, v in self.alpha_star_quantiles.items())
        return "\n".join([
            f"test={self.test} n={self.n} k={self.k} alpha={self.alpha} reps={self.reps} seed={self.seed}",
            f"fraction_trapped={self.fraction_trapped:.4f}",
            f"fraction_e_in_span={self.fraction_e_in_span:.4f}",
            f"alpha_star quantiles: {q}",
            f"resampled_rank_deficient={self.resampled}",
        ])


def _normalize_builder(b_builder):
    if isinstance(b_builder, str):
        return b_builder, None
    kind, rho_bar = b_builder
    return kind, rho_bar


def design_scan(model_builder, b_builder, alpha, n, k, reps, seed, workers=1):
    """Diagnose ``reps`` random standard-normal designs.

    Parameters
    ----------
    model_builder : callable
        ``n -> CovarianceModel``.
    b_builder : str or tuple
        ``"lbi"``, ``"cliff-ord"`` or ``("poi", rho_bar)``; for POI the
        alternative is given as a fraction of ``a``.
    alpha : float
    n, k : int
    reps, seed : int
        Replicate ``i`` draws its design from the stream keyed by
        ``(seed, i)``.
    """
    if not k < n - 1:
        raise DomainError("design scans need k < n - 1")
    model = model_builder(n)
    e = model.e
    kind, frac = _normalize_builder(b_builder)

    def one(i):
        rng = mc.block_rng(seed, i)
        tries = 0
        while True:
            X = rng.standard_normal((n, k))
            try:
                spec = build_spec(kind, model, X,
                                  rho_bar=None if frac is None else frac * model.a)
                break
            except RankError:
                tries += 1
        v = diagnose(spec, alpha, e)
        return v, tries

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(one, range(reps)))
    else:
        out = [one(i) for i in range(reps)]
    verdicts = [v for v, _ in out]
    label = kind if frac is None else f"{kind}({frac}a)"
    return ScanReport(
        alpha=alpha, n=n, k=k, reps=reps, seed=seed, test=label,
        statuses=[v.status for v in verdicts],
        t_at_e=np.array([v.t_at_e for v in verdicts]),
        kappa=np.array([v.kappa_alpha for v in verdicts]),
        alpha_star=np.array([v.alpha_star for v in verdicts]),
        resampled=sum(t for _, t in out),
    )
