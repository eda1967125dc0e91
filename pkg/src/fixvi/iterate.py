"""Synchronal and cyclic iterations, the regularization path and preset variants.

Synchronal step:

    x_{n+1} = a_n gamma f(x_n) + (I - a_n mu G) T^{b_n} x_n,
    T^{b} = b I + (1 - b) sum_i w_i T_i.

Cyclic step (operator index n mod N, so x_1 uses the first operator):

    x_{n+1} = a_n gamma f(x_n) + (I - a_n mu G) A_{n mod N} x_n,
    A_i = b_i I + (1 - b_i) T_i,  b_i = beta schedule term i.

Two backends produce the iterates.  ``python`` evaluates the nested
operators literally; ``numba`` flattens every operator to ``A x + b`` and
runs a compiled loop.  ``auto`` picks numba when it is importable.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernel
from . import space as sp
from .operators import Affine, Claims, ProblemInstance, affine_form, averaged, convex_combination
from .oracle import probe_set, vi_residuals
from .params import Gains, Schedule, validate_gains, validate_schedule, validate_yamada_gains
from .reports import Report

MODES = ("synchronal", "cyclic")
PRESETS = ("tian-di-synchronal", "tian-di-cyclic", "tian", "marino-xu", "yamada", "yamada-cyclic")
COLUMNS = ("n", "alpha_n", "beta_n", "step_norm", "fixpoint_residual", "window_residual",
           "bound_slack", "vi_residual", "dist_to_oracle")
BOUND_TOL = 1e-9


class ConfigError(ValueError):
    """Configuration rejected by validation; ``reports`` holds the failing reports."""

    def __init__(self, message, reports=()):
        super().__init__(message)
        self.reports = list(reports)


@dataclass(frozen=True)
class Stopping:
    max_iter: int = 100_000
    step_tol: float = 1e-10
    residual_tol: float = 1e-6

    def __post_init__(self):
        if self.max_iter < 1 or not (self.step_tol > 0 and self.residual_tol > 0):
            raise ValueError("stopping thresholds must be positive")


@dataclass(frozen=True, eq=False)
class AlgorithmConfig:
    mode: str
    problem: ProblemInstance
    gains: Gains
    alpha: Schedule
    beta: Schedule
    x0: np.ndarray
    stopping: Stopping = field(default_factory=Stopping)
    cadence: int = 1
    override: bool = False
    backend: str = "auto"
    preset: str | None = None
    reference: np.ndarray | None = None  # oracle point for dist_to_oracle
    keep_iterates: bool = False
    name: str = "run"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.preset is not None and self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; expected one of {PRESETS}")
        if self.backend not in ("auto", "python", "numba"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if int(self.cadence) != self.cadence or self.cadence < 1:
            raise ValueError("cadence must be a positive integer")
        object.__setattr__(self, "x0", sp.conform(np.array(self.x0, dtype=float), self.problem.space, "x0"))
        if self.reference is not None:
            object.__setattr__(self, "reference", sp.conform(self.reference, self.problem.space, "reference"))

    def replace(self, **kw):
        return replace(self, **kw)

    @property
    def collapsed(self) -> bool:
        """Reduced variants run a single nonexpansive map with beta = 0."""
        return self.preset in ("tian", "marino-xu", "yamada", "yamada-cyclic")


@dataclass
class Trace:
    """Iteration record.

    Row n describes the state x_n: ``alpha_n`` and ``beta_n`` are the
    parameters used to move from x_n, ``step_norm`` is ``||x_n - x_{n-1}||``.
    """

    mode: str
    status: str
    iterations: int
    x_final: np.ndarray
    columns: dict
    iterates: np.ndarray | None = None
    min_bound_slack: float | None = None
    alpha_clamped: int = 0
    runtime: float = 0.0
    validation: list = field(default_factory=list)
    override_used: bool = False
    name: str = "run"
    preset: str | None = None
    backend: str = "python"

    def __len__(self):
        return len(self.columns["n"])

    @property
    def converged(self):
        return self.status == "converged"

    def final(self, column):
        v = self.columns[column][-1]
        return None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)

    @property
    def residual(self):
        """Stopping residual at the terminal iterate (window residual in cyclic mode)."""
        return self.final("window_residual" if self.mode == "cyclic" else "fixpoint_residual")

    def rows(self):
        for i in range(len(self)):
            yield [self.columns[c][i] for c in COLUMNS]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(",".join(COLUMNS) + "\n")
            for row in self.rows():
                fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if math.isnan(v) else format(v, ".17g")


# --------------------------------------------------------------------------
# validation


def validate_config(cfg: AlgorithmConfig) -> list[Report]:
    """Gain and schedule reports for a configuration."""
    g = cfg.gains
    prob = cfg.problem
    if cfg.preset in ("yamada", "yamada-cyclic"):
        reps = [validate_yamada_gains(g)]
    else:
        reps = [validate_gains(g)]
    if cfg.collapsed:
        rep = Report(f"schedule alpha={cfg.alpha.describe()} (reduced variant, beta = 0)")
        full = validate_schedule(cfg.alpha, Schedule.constant(0.5), "synchronal", [0.5], 2.0, 1.0)
        for c in full.checks:
            if c.name in ("K1", "K2"):
                rep.checks.append(c)
        b = cfg.beta.terms(0, 1)[0]
        rep.add("beta_zero", b == 0.0, message="reduced variants use beta_n = 0")
        nonexp = all(op.claims.nonexpansive for op in prob.operators)
        rep.add("nonexpansive_map", nonexp, message="the single map must be marked nonexpansive")
        reps.append(rep)
    else:
        reps.append(validate_schedule(cfg.alpha, cfg.beta, cfg.mode, prob.strictness, prob.space.q,
                                      prob.space.d_q, horizon=min(cfg.stopping.max_iter, 100_000)))
    return reps


# --------------------------------------------------------------------------
# engine


def _alpha_terms(cfg, count):
    a = cfg.alpha.terms(0, count)
    tau = cfg.gains.tau
    cap = min(1.0, 1.0 / tau) if tau > 0 else 1.0
    over = a >= cap
    if over.any():
        a = np.where(over, np.nextafter(cap, 0.0), a)
    return a, int(over.sum())


def _beta_terms(cfg, count):
    if cfg.mode == "cyclic":
        return cfg.beta.terms(0, cfg.problem.N)
    return cfg.beta.terms(0, count)


def _pick_backend(cfg):
    if cfg.backend == "auto":
        return "numba" if _kernel.HAVE_NUMBA else "python"
    if cfg.backend == "numba" and not _kernel.HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return cfg.backend


def _python_loop(cfg, alphas, betas):
    prob = cfg.problem
    s = prob.space
    g = cfg.gains
    gamma, mu = g.gamma, g.mu
    cyc = cfg.mode == "cyclic"
    T = None if cyc else prob.combined()
    ops = prob.operators
    N = prob.N
    n_max = alphas.size
    X = np.empty((n_max + 1, s.dim))
    X[0] = x = cfg.x0.copy()
    tol_s, tol_r = cfg.stopping.step_tol, cfg.stopping.residual_tol
    with np.errstate(all="ignore"):
        for n in range(n_max):
            if cyc:
                bn = betas[n % N]
                t = ops[n % N](x)
            else:
                bn = betas[n]
                t = T(x)
            an = alphas[n]
            y = bn * x + (1.0 - bn) * t
            nxt = an * gamma * prob.f(x) + y - an * mu * prob.G(y)
            if not np.all(np.isfinite(nxt)):
                return X[: n + 1], n, "diverged"
            X[n + 1] = nxt
            step = sp._lp(nxt - x, s.p)
            x = nxt
            if step <= tol_s:
                res = _window_residual(prob, betas, n + 1, x) if cyc else sp._lp(x - T(x), s.p)
                if res <= tol_r:
                    return X[: n + 2], n + 1, "converged"
    return X, n_max, "max_iter"


def _window_residual(prob, betas_op, m, x):
    """``||x - A_{m+N-1} ... A_{m+1} A_m x||`` with indices mod N; vectorized when m is an array."""
    N = prob.N
    x = np.asarray(x, dtype=float)
    m = np.asarray(m)
    z = x.copy()
    for j in range(N):
        k = (m + j) % N
        if k.ndim == 0:
            bk = betas_op[int(k)]
            z = bk * z + (1.0 - bk) * prob.operators[int(k)](z)
        else:
            nz = np.empty_like(z)
            for i in range(N):
                sel = k == i
                if sel.any():
                    zi = z[sel]
                    nz[sel] = betas_op[i] * zi + (1.0 - betas_op[i]) * prob.operators[i](zi)
            z = nz
    return sp._lp(x - z, prob.space.p)


def _numba_loop(cfg, alphas, betas):
    prob = cfg.problem
    s = prob.space
    g = cfg.gains
    cyc = cfg.mode == "cyclic"
    forms = [affine_form(op) for op in prob.operators]
    RA, rb = affine_form(prob.combined())
    if cyc:
        mats = np.array([A for A, _ in forms])
        offs = np.array([b for _, b in forms])
        betas_op = np.asarray(betas, dtype=float)
        betas_seq = np.zeros(1)
    else:
        mats, offs = RA[None], rb[None]
        betas_op = np.zeros(1)
        betas_seq = np.asarray(betas, dtype=float)
    Af, bf = affine_form(prob.f)
    AG, bG = affine_form(prob.G)
    X = np.empty((alphas.size + 1, s.dim))
    n, status = _kernel.run_affine(
        cfg.x0.copy(), cyc, np.ascontiguousarray(mats), np.ascontiguousarray(offs), alphas, betas_seq,
        betas_op, float(g.gamma), float(g.mu), Af, bf, AG, bG, RA, rb, float(s.p),
        float(cfg.stopping.step_tol), float(cfg.stopping.residual_tol), X)
    label = {_kernel.CONVERGED: "converged", _kernel.MAX_ITER: "max_iter", _kernel.DIVERGED: "diverged"}[status]
    return X[: n + 1], n, label


def warm_up():
    """Compile the numba kernel once so that timed runs exclude compilation."""
    if not _kernel.HAVE_NUMBA:
        return
    from .operators import canonical_problem

    prob = canonical_problem()
    cfg = AlgorithmConfig("synchronal", prob, Gains.for_problem(prob, 1.0, 1.0), Schedule.power(),
                          Schedule.constant(0.5), np.ones(2), Stopping(max_iter=3), backend="numba")
    run(cfg)
    run(cfg.replace(mode="cyclic"))


def boundedness_radius(cfg: AlgorithmConfig, points):
    """``max{||x0 - p||, ||gamma f(p) - mu G p|| / (tau - gamma beta)}`` for each point p."""
    prob, g = cfg.problem, cfg.gains
    s = prob.space
    pts = np.atleast_2d(points)
    a = sp._lp(cfg.x0 - pts, s.p)
    m = g.modulus
    if not m > 0:
        return np.full(len(pts), np.inf)
    b = sp._lp(g.gamma * prob.f(pts) - g.mu * prob.G(pts), s.p) / m
    return np.maximum(a, b)


def _trace(cfg, X, n_final, status, alphas, betas, clamped, t0, reports, backend):
    prob = cfg.problem
    s = prob.space
    c = cfg.cadence
    idx = np.arange(0, n_final + 1, c)
    if idx[-1] != n_final:
        idx = np.append(idx, n_final)
    Xr = X[idx]
    nrows = idx.size
    cols = {"n": idx.tolist()}
    an = np.full(nrows, np.nan)
    bn = np.full(nrows, np.nan)
    live = idx < alphas.size
    an[live] = alphas[idx[live]]
    if cfg.mode == "cyclic":
        bn[:] = np.asarray(betas)[idx % prob.N]
    else:
        bn[live] = np.asarray(betas)[idx[live]]
    cols["alpha_n"] = an.tolist()
    cols["beta_n"] = bn.tolist()
    step = np.full(nrows, np.nan)
    pos = idx > 0
    step[pos] = sp._lp(X[idx[pos]] - X[idx[pos] - 1], s.p)
    cols["step_norm"] = step.tolist()
    T = prob.combined()
    cols["fixpoint_residual"] = sp._lp(Xr - T(Xr), s.p).tolist()
    if cfg.mode == "cyclic":
        cols["window_residual"] = _window_residual(prob, np.asarray(betas), idx, Xr).tolist()
    else:
        cols["window_residual"] = [None] * nrows
    fs = prob.common_fixed_set()
    min_slack = None
    if fs is not None and cfg.gains.modulus > 0:
        pts = fs.points()
        rad = boundedness_radius(cfg, pts)
        # slack over every stored iterate, not only the emitted rows
        slack_all = np.full(n_final + 1, np.inf)
        for p, r in zip(pts, rad):
            slack_all = np.minimum(slack_all, r - sp._lp(X[: n_final + 1] - p, s.p))
        min_slack = float(np.min(slack_all))
        cols["bound_slack"] = slack_all[idx].tolist()
        probes = probe_set(fs, count=0)
        cols["vi_residual"] = vi_residuals(Xr, prob, cfg.gains, probes).tolist()
    else:
        cols["bound_slack"] = [None] * nrows
        cols["vi_residual"] = [None] * nrows
    if cfg.reference is not None:
        cols["dist_to_oracle"] = sp._lp(Xr - cfg.reference, s.p).tolist()
    else:
        cols["dist_to_oracle"] = [None] * nrows
    return Trace(
        mode=cfg.mode, status=status, iterations=int(n_final), x_final=X[n_final].copy(), columns=cols,
        iterates=X[: n_final + 1].copy() if cfg.keep_iterates else None, min_bound_slack=min_slack,
        alpha_clamped=clamped, runtime=time.perf_counter() - t0, validation=reports,
        override_used=cfg.override and not all(r.ok for r in reports), name=cfg.name,
        preset=cfg.preset, backend=backend,
    )


def run(cfg: AlgorithmConfig) -> Trace:
    """Validate, iterate and build the trace.

    Raises ``ConfigError`` when validation fails and ``cfg.override`` is
    unset.  alpha_n is clamped below ``min{1, 1/tau}``; the count of clamped
    terms is recorded on the trace.
    """
    t0 = time.perf_counter()
    reports = validate_config(cfg)
    bad = [r for r in reports if not r.ok]
    if bad and not cfg.override:
        names = ", ".join(f"{r.subject}: {c.name}" for r in bad for c in r.failures())
        raise ConfigError(f"configuration violates {names}", bad)
    n_max = cfg.stopping.max_iter
    alphas, clamped = _alpha_terms(cfg, n_max)
    betas = _beta_terms(cfg, n_max)
    backend = _pick_backend(cfg)
    loop = _numba_loop if backend == "numba" else _python_loop
    X, n_final, status = loop(cfg, alphas, betas)
    with np.errstate(over="ignore", invalid="ignore"):  # diverged runs carry huge iterates
        return _trace(cfg, X, n_final, status, alphas, betas, clamped, t0, reports, backend)


def run_synchronal(cfg: AlgorithmConfig) -> Trace:
    if cfg.mode != "synchronal":
        raise ValueError("run_synchronal needs mode='synchronal'")
    return run(cfg)


def run_cyclic(cfg: AlgorithmConfig) -> Trace:
    if cfg.mode != "cyclic":
        raise ValueError("run_cyclic needs mode='cyclic'")
    return run(cfg)


# --------------------------------------------------------------------------
# regularization path


@dataclass
class PathInfo:
    x: np.ndarray
    iterations: int
    residual: float
    factor: float  # theoretical contraction factor 1 - t (tau - gamma beta)
    observed_rate: float  # largest ratio of successive inner residuals (tail)


def regularization_path(t, cfg: AlgorithmConfig, inner_tol=1e-12, max_inner=2_000_000, return_info=False):
    """Solve ``x = t gamma f(x) + (I - t mu G) T x`` by fixed-point iteration.

    T is the averaged map ``b I + (1 - b) sum_i w_i T_i`` with b the first
    beta term (or the single map of a reduced preset).  The inner map
    contracts with factor ``1 - t (tau - gamma beta)``.
    """
    if not (0 < t < 1):
        raise ValueError(f"t must lie in (0, 1), got {t!r}")
    reports = validate_config(cfg)
    if not reports[0].ok:
        raise ConfigError("gains do not give a contraction", reports[:1])
    g = cfg.gains
    prob = cfg.problem
    s = prob.space
    factor = 1.0 - t * g.modulus
    if not (0 <= factor < 1):
        raise ConfigError(f"inner map factor {factor!r} is not a contraction")
    b = float(cfg.beta.terms(0, 1)[0])
    T = averaged(prob.combined(), b, s) if b > 0 else prob.combined()
    A, c = affine_form(T)
    Af, bf = affine_form(prob.f)
    AG, bG = affine_form(prob.G)
    # Phi(x) = t gamma (Af x + bf) + (I - t mu AG)(A x + c)
    M = t * g.gamma * Af + (np.eye(s.dim) - t * g.mu * AG) @ A
    v = t * g.gamma * bf + (np.eye(s.dim) - t * g.mu * AG) @ c - t * g.mu * bG
    x = cfg.x0.copy()
    prev = None
    rate = 0.0
    for k in range(1, max_inner + 1):
        nxt = M @ x + v
        res = sp._lp(nxt - x, s.p)
        if prev is not None and prev > 1e3 * inner_tol:
            rate = max(rate, res / prev)
        prev = res
        x = nxt
        if res <= inner_tol:
            break
    else:
        raise RuntimeError(f"inner iteration did not reach {inner_tol} in {max_inner} steps")
    if return_info:
        return PathInfo(x, k, float(res), factor, rate)
    return x


# --------------------------------------------------------------------------
# presets


def _need_hilbert(cfg, name):
    if not cfg.problem.space.is_hilbert:
        raise ValueError(f"preset {name!r} needs a Hilbert space (p = q = 2)")


def _collapse(cfg):
    """Replace the family by the single nonexpansive map ``b I + (1 - b) sum_i w_i T_i``."""
    prob = cfg.problem
    b = float(cfg.beta.terms(0, 1)[0])
    T = averaged(prob.combined(), b, prob.space)
    if not T.claims.nonexpansive:
        raise ValueError(f"beta={b:g} does not make the combined map nonexpansive")
    new = ProblemInstance(prob.space, (T,), prob.f, prob.G, (1.0,), prob.common_fixed_set(),
                          prob.name + "-collapsed", dict(prob.meta))
    return new


def _collapse_each(cfg):
    prob = cfg.problem
    ops = []
    for i, op in enumerate(prob.operators):
        b = float(cfg.beta.terms(i, i + 1)[0])
        A = averaged(op, b, prob.space)
        if not A.claims.nonexpansive:
            raise ValueError(f"beta_{i + 1}={b:g} does not make operator {i + 1} nonexpansive")
        ops.append(A)
    return ProblemInstance(prob.space, tuple(ops), prob.f, prob.G, prob.weights, prob.common_fixed_set(),
                           prob.name + "-averaged", dict(prob.meta))


def preset(name):
    """Return a function turning a base configuration into the named variant.

    tian-di-synchronal, tian-di-cyclic: the two main iterations in a
    Hilbert space.  tian: one nonexpansive map (the beta-averaged
    combination), beta_n = 0 and mu = 1.  marino-xu: tian with a linear G.
    yamada: tian without f (gamma = 0), the step mu alpha_n on G.
    yamada-cyclic: gamma = 0, cycling through the individually averaged maps
    with beta = 0.
    """
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESETS}")

    def apply(cfg: AlgorithmConfig) -> AlgorithmConfig:
        _need_hilbert(cfg, name)
        zero = Schedule.constant(0.0)
        if name == "tian-di-synchronal":
            return cfg.replace(mode="synchronal", preset=name)
        if name == "tian-di-cyclic":
            return cfg.replace(mode="cyclic", preset=name)
        if name in ("tian", "marino-xu", "yamada"):
            prob = _collapse(cfg)
            gains = cfg.gains
            if name == "marino-xu":
                Ag, bg = affine_form(prob.G)
                if np.any(bg != 0):
                    raise ValueError("marino-xu needs a linear G (zero offset)")
            if name in ("tian", "marino-xu"):
                gains = replace(gains, mu=1.0)
            if name == "yamada":
                gains = replace(gains, gamma=0.0)
            return cfg.replace(mode="synchronal", problem=prob, gains=gains, beta=zero, preset=name)
        prob = _collapse_each(cfg)
        return cfg.replace(mode="cyclic", problem=prob, gains=replace(cfg.gains, gamma=0.0), beta=zero,
                           preset=name)

    return apply


def yamada_reference(T, G, mu, lambdas, x0):
    """Plain loop ``x_{n+1} = T x_n - mu lambda_n G(T x_n)``; returns all iterates."""
    xs = [np.array(x0, dtype=float)]
    x = xs[0]
    for lam in lambdas:
        y = T(x)
        x = y - mu * lam * G(y)
        xs.append(x)
    return np.array(xs)
