"""Command-line front end.

Usage: ``zeropower <command> [--config FILE] [flags]``.

Commands
--------
lattice         write a contiguity weights matrix
diagnose        zero-power trap check (exit 0 no trap, 2 trapped, 3 e in span(X))
critval         exact critical value
power           power curve of one test (CSV + SVG)
envelope        point-optimal power envelope next to one test (CSV + SVG)
enhance         trap-avoiding tests for a list of epsilon values (CSV + SVG)
scan            prevalence of the trap over random designs
reproduce-fig1  the seven-curve lattice comparison plus a checks file (exit 4 on failures)

Config file
-----------
Plain ``key = value`` lines, ``#`` starts a comment. Keys are the long flag
names with dashes or underscores, e.g.::

    model = sar
    weights = queen:4x4
    normalization = binary
    design = intercept
    alpha = 0.05
    eps = 0.002, 0.006, 0.01
    grid-n = 60
    grid-max = 0.9999
    mc-reps = 1000000
    seed = 0
    out = results

Flags given on the command line override the file.
"""
import argparse
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .diagnostics import E_IN_SPAN_X, NOT_APPLICABLE_EE, TRAP_CERTIFIED, design_scan, diagnose
from .enhance import (
    NEAR_A,
    artificial_regressor_test,
    enhanced_critical,
    enhanced_power,
)
from .exceptions import ZeroPowerError
from .io import read_design_csv, read_weights, write_edge_list, write_matrix_market
from .model import DesignMatrix, ar1_model, build_lattice_weights, sar_model
from .report import model_fingerprint, write_result
from .svg import line_chart
from .testkit import PowerCurve, b_ee, build_spec, critical_value, power, power_envelope

__all__ = ["RunConfig", "load_config", "rho_grid", "main"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_TRAP = 2
EXIT_SPAN = 3
EXIT_CHECKS = 4
EXIT_NUMERIC = 5

FIG1_EPS = (0.002, 0.006, 0.01)


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Resolved settings for one command."""

    model: str = "sar"
    weights: str = "queen:4x4"
    normalization: str = "binary"
    design: str = "intercept"
    n: int = 16
    alpha: float = 0.05
    eps: tuple = ()
    grid_n: int = 60
    grid_max: float = 0.9999
    mc_reps: int = 1_000_000
    seed: int = 0
    out: str = "."
    test: str = "cliff-ord"
    rho_bar: float = 0.5
    workers: int = 1
    scan_reps: int = 200
    scan_k: int = 1
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.model not in ("sar", "ar1"):
            raise ConfigError(f"model must be 'sar' or 'ar1', got {self.model!r}")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if not 0 < self.grid_max < 1:
            raise ConfigError("grid-max must lie in (0, 1)")
        if self.grid_n < 2:
            raise ConfigError("grid-n must be at least 2")
        for e in self.eps:
            if not 0 < e < self.alpha:
                raise ConfigError(f"epsilon {e} outside (0, alpha)")
        if self.mc_reps < 10_000:
            raise ConfigError("mc-reps must be at least 10000")
        if not 0 < self.rho_bar < 1:
            raise ConfigError("rho-bar is a fraction of a and must lie in (0, 1)")
        return self

    def header(self):
        """Settings that determine the numbers, for file headers."""
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        d.pop("extra")
        d["eps"] = ",".join(repr(e) for e in self.eps)
        return d


_TYPES = {
    "n": int, "alpha": float, "grid_n": int, "grid_max": float, "mc_reps": int,
    "seed": int, "rho_bar": float, "workers": int, "scan_reps": int, "scan_k": int,
}


def _parse_eps(text):
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    parts = [p for p in str(text).replace(",", " ").split() if p]
    return tuple(float(p) for p in parts)


def _coerce(key, value):
    if key == "eps":
        return _parse_eps(value)
    if key in _TYPES:
        return _TYPES[key](float(value)) if _TYPES[key] is int else _TYPES[key](value)
    return str(value).strip().lower() if key in ("model", "normalization", "test") else str(value).strip()


def read_config_file(path):
    """Parse a ``key = value`` file into a dict with normalized keys."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def load_config(file_values=None, overrides=None):
    """Merge file values and flag overrides into a validated :class:`RunConfig`."""
    cfg = RunConfig()
    known = set(RunConfig.__dataclass_fields__) - {"extra"}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                setattr(cfg, key, _coerce(key, value))
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return cfg.validate()


def rho_grid(a, count, max_frac):
    """``count`` points from 0 to ``max_frac * a``, uniform in ``log(1 - rho/a)``."""
    s = np.linspace(0.0, np.log1p(-max_frac), count)
    return a * -np.expm1(s)


def _parse_lattice(text):
    crit, dims = text.split(":", 1)
    r, c = dims.lower().split("x")
    return crit.strip().lower(), int(r), int(c)


def build_weights(cfg):
    src = cfg.weights
    if ":" in src and not os.path.exists(src):
        crit, r, c = _parse_lattice(src)
        return build_lattice_weights(r, c, crit, cfg.normalization)
    if not os.path.exists(src):
        raise ConfigError(f"weights file not found: {src}")
    try:
        return read_weights(src)
    except (ValueError, ZeroPowerError) as exc:
        raise ConfigError(f"cannot read weights from {src}: {exc}") from exc


def build_problem(cfg):
    """Model and design described by the config."""
    X = None
    if cfg.design != "intercept":
        if not os.path.exists(cfg.design):
            raise ConfigError(f"design file not found: {cfg.design}")
        try:
            X = read_design_csv(cfg.design)
        except (ValueError, ZeroPowerError) as exc:
            raise ConfigError(f"cannot read design from {cfg.design}: {exc}") from exc
    if cfg.model == "sar":
        model = sar_model(build_weights(cfg))
    else:
        model = ar1_model(X.n if X is not None else cfg.n)
    if X is None:
        X = DesignMatrix.intercept(model.n)
    if X.n != model.n:
        raise ConfigError(f"design has {X.n} rows but the model has n={model.n}")
    return model, X


def _spec(cfg, model, X, kind=None):
    kind = kind or cfg.test
    return build_spec(kind, model, X, rho_bar=cfg.rho_bar * model.a)


class Outputs:
    """Tracks files written by a command so they can be removed on failure."""

    def __init__(self, root):
        self.root = root
        self.paths = []

    def path(self, name):
        os.makedirs(self.root, exist_ok=True)
        p = os.path.join(self.root, name)
        self.paths.append(p)
        return p

    def cleanup(self):
        for p in self.paths:
            if os.path.exists(p):
                os.remove(p)
        self.paths = []


def _header(cfg, model, X, **more):
    h = {"tool": "zeropower", "version": __version__,
         "fingerprint": model_fingerprint(model, X)}
    h.update(cfg.header())
    h.update(more)
    return h


def _slug(label):
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in label).strip("_").lower()


def _write_curves(cfg, model, X, outs, curves, name, title):
    header = _header(cfg, model, X)
    for curve in curves:
        curve.to_csv(outs.path(f"{name}_{_slug(curve.label)}.csv"), header)
    svg = line_chart([(c.label, c.rho, c.power) for c in curves], hline=cfg.alpha,
                     title=title, xlim=(0.0, model.a),
                     comment=f"zeropower {__version__} fingerprint={header['fingerprint']}")
    with open(outs.path(f"{name}.svg"), "w") as fh:
        fh.write(svg)


def _envelope_curve(model, X, alpha, grid, workers):
    # the envelope at rho = 0 is alpha itself
    pos = grid[grid > 0]
    env = power_envelope(model, X, alpha, pos, workers)
    if pos.size < grid.size:
        env = PowerCurve(grid, np.r_[alpha, env.power], env.label, alpha)
    return env


def _analytic_curve(spec, cv, model, grid, label, alpha):
    values = np.array([power(spec, cv, model, r) for r in grid])
    return PowerCurve(grid, values, label, alpha)


def _enhanced_curve(test, model, grid, workers, label):
    est = [enhanced_power(test, model, r, workers=workers) for r in grid]
    return PowerCurve(grid, np.array([e.value for e in est]), label, test.alpha,
                      method="montecarlo", seed=test.seed,
                      se=np.array([e.se for e in est]))


# commands

def cmd_lattice(cfg, outs):
    W = build_weights(cfg)
    model = sar_model(W)
    print(f"n={W.n} spectral_radius={W.spectral_radius!r} a={model.a!r} symmetric={W.symmetric}")
    write_matrix_market(outs.path("weights.mtx"), W)
    write_edge_list(outs.path("weights.edges"), W)
    return EXIT_OK


def cmd_diagnose(cfg, outs):
    model, X = build_problem(cfg)
    try:
        spec = _spec(cfg, model, X)
    except ZeroPowerError as exc:
        if cfg.test == "ee":
            print(f"status={E_IN_SPAN_X} ({exc})")
            return EXIT_SPAN
        raise
    v = diagnose(spec, cfg.alpha, model.e)
    print(f"test={spec.label} alpha={cfg.alpha} status={v.status}")
    print(f"T_B(e)={v.t_at_e!r} kappa(alpha)={v.kappa_alpha!r} alpha_star={v.alpha_star!r}")
    if v.status == NOT_APPLICABLE_EE:
        print("note: the e-direction test has power tending to 1; the trap condition does not apply")
    write_result(outs.path("diagnose.json"), {
        "status": v.status, "t_at_e": v.t_at_e, "kappa_alpha": v.kappa_alpha,
        "alpha_star": v.alpha_star, "alpha": v.alpha, "test": spec.label}, model, X, cfg.header())
    if v.status == TRAP_CERTIFIED:
        return EXIT_TRAP
    if v.status == E_IN_SPAN_X:
        return EXIT_SPAN
    return EXIT_OK


def cmd_critval(cfg, outs):
    model, X = build_problem(cfg)
    spec = _spec(cfg, model, X)
    cv = critical_value(spec, cfg.alpha)
    print(f"test={spec.label} alpha={cfg.alpha} kappa={cv.c!r} achieved_size={cv.achieved_size!r}")
    write_result(outs.path("critval.json"), {
        "test": spec.label, "alpha": cv.alpha, "kappa": cv.c,
        "achieved_size": cv.achieved_size, "solver_tol": cv.solver_tol}, model, X, cfg.header())
    return EXIT_OK


def cmd_power(cfg, outs):
    model, X = build_problem(cfg)
    spec = _spec(cfg, model, X)
    grid = rho_grid(model.a, cfg.grid_n, cfg.grid_max)
    curve = _analytic_curve(spec, critical_value(spec, cfg.alpha), model, grid, spec.label, cfg.alpha)
    _write_curves(cfg, model, X, outs, [curve], "power", f"Power of {spec.label}")
    print(f"test={spec.label} terminal rho={grid[-1]!r} power={curve.power[-1]!r}")
    return EXIT_OK


def cmd_envelope(cfg, outs):
    model, X = build_problem(cfg)
    grid = rho_grid(model.a, cfg.grid_n, cfg.grid_max)
    env = _envelope_curve(model, X, cfg.alpha, grid, cfg.workers)
    spec = _spec(cfg, model, X)
    curve = _analytic_curve(spec, critical_value(spec, cfg.alpha), model, grid, spec.label, cfg.alpha)
    _write_curves(cfg, model, X, outs, [env, curve], "envelope", "Power envelope")
    gap = float(np.min(env.power - curve.power))
    print(f"envelope minus {spec.label}: min={gap:.3g} max={float(np.max(env.power - curve.power)):.3g}")
    return EXIT_OK


def _enhanced_tests(cfg, model, X, base):
    ee = b_ee(model.e, X, basis=base.basis)
    return [enhanced_critical(base, ee, cfg.alpha, eps, cfg.mc_reps, cfg.seed, cfg.workers)
            for eps in sorted(cfg.eps, reverse=True)]


def cmd_enhance(cfg, outs):
    if not cfg.eps:
        print("note: empty epsilon list; enhancement skipped")
        return EXIT_OK
    model, X = build_problem(cfg)
    base = _spec(cfg, model, X)
    grid = rho_grid(model.a, cfg.grid_n, cfg.grid_max)
    curves = [_analytic_curve(base, critical_value(base, cfg.alpha), model, grid, base.label, cfg.alpha)]
    results = []
    for t in _enhanced_tests(cfg, model, X, base):
        label = f"{base.label}-enhanced eps={t.epsilon}"
        curves.append(_enhanced_curve(t, model, grid, cfg.workers, label))
        results.append(t.to_dict())
        print(f"eps={t.epsilon} ee_cutoff={t.ee_cutoff!r} size={t.achieved_size:.5f} "
              f"(se {t.se:.1e}) terminal power={curves[-1].power[-1]:.4f}")
    _write_curves(cfg, model, X, outs, curves, "enhance", "Power-enhanced tests")
    write_result(outs.path("enhance.json"), {"tests": results}, model, X, cfg.header())
    return EXIT_OK


def cmd_scan(cfg, outs):
    model, X = build_problem(cfg)
    n = model.n
    builder = (lambda m: model) if cfg.model == "sar" else ar1_model
    kind = ("poi", cfg.rho_bar) if cfg.test == "poi" else cfg.test
    rep = design_scan(builder, kind, cfg.alpha, n, cfg.scan_k, cfg.scan_reps, cfg.seed, cfg.workers)
    print(rep.summary())
    rep.to_csv(outs.path("scan.csv"), _header(cfg, model, None))
    return EXIT_OK


def _check(rows, name, ok, detail):
    rows.append((name, bool(ok), detail))


def cmd_reproduce_fig1(cfg, outs):
    model, X = build_problem(cfg)
    a = model.a
    alpha = cfg.alpha
    eps_list = cfg.eps or FIG1_EPS
    grid = rho_grid(a, cfg.grid_n, cfg.grid_max)
    co = build_spec("cliff-ord", model, X)
    co_cv = critical_value(co, alpha)
    ee = b_ee(model.e, X, basis=co.basis)
    ee_cv = critical_value(ee, alpha)
    art = artificial_regressor_test(model, X, alpha, "cliff-ord")
    curves = [
        _envelope_curve(model, X, alpha, grid, cfg.workers),
        _analytic_curve(co, co_cv, model, grid, "CO", alpha),
        _analytic_curve(ee, ee_cv, model, grid, "Sol.1 EE", alpha),
        _analytic_curve(art.spec, art.kappa_bar, model, grid, "CO Sol.2", alpha),
    ]
    tests = [enhanced_critical(co, ee, alpha, eps, cfg.mc_reps, cfg.seed, cfg.workers)
             for eps in sorted(eps_list, reverse=True)]
    for t in tests:
        curves.append(_enhanced_curve(t, model, grid, cfg.workers, f"phi* eps={t.epsilon}"))
    _write_curves(cfg, model, X, outs, curves, "fig1", "Power functions, 4x4 Queen lattice")

    rows = []
    v = diagnose(co, alpha, model.e)
    _check(rows, "co_trap_certified", v.status == TRAP_CERTIFIED,
           f"status={v.status} T_B(e)={v.t_at_e:.6f} kappa={v.kappa_alpha:.6f} alpha*={v.alpha_star:.5f}")
    r999 = 0.999 * a
    p_co = power(co, co_cv, model, r999)
    _check(rows, "co_power_at_0.999a_le_0.01", p_co <= 0.01, f"power={p_co:.5f}")
    _check(rows, "co_terminal_le_0.01", curves[1].power[-1] <= 0.01,
           f"rho/a={grid[-1] / a:.6g} power={curves[1].power[-1]:.5f}")
    p_ee = power(ee, ee_cv, model, r999)
    _check(rows, "ee_power_at_0.999a_ge_0.99", p_ee >= 0.99, f"power={p_ee:.5f}")
    lim = art.limiting_power
    _check(rows, "artreg_limit_0.619", abs(lim - 0.619) <= 0.02, f"limit={lim:.5f} ({art.limiting_method})")
    near = power(art.spec, art.kappa_bar, model, a * (1 - NEAR_A))
    _check(rows, "artreg_limit_crosscheck", abs(near - lim) <= 0.01, f"power at a(1-1e-4)={near:.5f}")
    for t, curve in zip(tests, curves[4:]):
        _check(rows, f"phi*_size_eps={t.epsilon}", abs(t.achieved_size - alpha) <= 3 * t.se,
               f"size={t.achieved_size:.5f} se={t.se:.1e}")
        p = enhanced_power(t, model, r999, workers=cfg.workers)
        _check(rows, f"phi*_power_at_0.999a_eps={t.epsilon}", p.value >= 0.99, f"power={p.value:.5f}")
    low = grid <= 0.7 * a
    gaps = [float(np.max(np.abs(c.power[low] - curves[1].power[low]))) for c in curves[4:]]
    slack = [3 * float(np.max(c.se[low])) for c in curves[4:]]
    mono = all(g2 <= g1 + max(s1, s2) for g1, g2, s1, s2 in zip(gaps, gaps[1:], slack, slack[1:]))
    _check(rows, "phi*_supgap_nonincreasing", mono,
           "gaps=" + ",".join(f"{g:.4f}" for g in gaps) + " (eps decreasing)")
    env = curves[0].power
    worst = min(float(np.min(env - c.power + 1e-6 + (0 if c.se is None else 3 * c.se)))
                for c in curves[1:])
    _check(rows, "envelope_dominates", worst >= 0, f"min slack={worst:.3g}")
    small = grid <= 0.2 * a
    gap_co = float(np.max(env[small] - curves[1].power[small]))
    _check(rows, "envelope_co_gap_small_rho", gap_co <= 0.02, f"max gap={gap_co:.5f}")

    header = _header(cfg, model, X)
    with open(outs.path("checks.txt"), "w") as fh:
        for k, val in header.items():
            fh.write(f"# {k}={val}\n")
        for name, ok, detail in rows:
            line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
            fh.write(line + "\n")
            print(line)
    failed = [name for name, ok, _ in rows if not ok]
    if failed:
        print("failed checks: " + ", ".join(failed))
        return EXIT_CHECKS
    return EXIT_OK


COMMANDS = {
    "lattice": cmd_lattice,
    "diagnose": cmd_diagnose,
    "critval": cmd_critval,
    "power": cmd_power,
    "envelope": cmd_envelope,
    "enhance": cmd_enhance,
    "scan": cmd_scan,
    "reproduce-fig1": cmd_reproduce_fig1,
}


def build_parser():
    p = argparse.ArgumentParser(prog="zeropower", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"zeropower {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="key = value settings file")
        s.add_argument("--model", help="sar or ar1")
        s.add_argument("--weights", help="weights file or lattice spec such as queen:4x4")
        s.add_argument("--normalization", help="binary or row")
        s.add_argument("--design", help="csv file or 'intercept'")
        s.add_argument("--n", type=int, help="sample size for ar1 with intercept design")
        s.add_argument("--alpha", type=float)
        s.add_argument("--eps", help="comma separated epsilon list (may be empty)")
        s.add_argument("--grid-n", type=int)
        s.add_argument("--grid-max", type=float, help="largest rho as a fraction of a")
        s.add_argument("--mc-reps", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--out", help="output directory")
        s.add_argument("--test", help="lbi, poi, cliff-ord or ee")
        s.add_argument("--rho-bar", type=float, help="POI alternative as a fraction of a")
        s.add_argument("--workers", type=int)
        s.add_argument("--scan-reps", type=int)
        s.add_argument("--scan-k", type=int)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    outs = None
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = load_config(file_values, flags)
        outs = Outputs(cfg.out)
        return COMMANDS[args.command](cfg, outs)
    except (ConfigError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if outs is not None:
            outs.cleanup()
        return EXIT_CONFIG
    except (ZeroPowerError, ValueError, np.linalg.LinAlgError) as exc:
        if outs is not None:
            outs.cleanup()
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
