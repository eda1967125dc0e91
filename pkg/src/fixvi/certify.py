"""Sampling certifiers for operator classes and l_p inequalities.

Sampling cannot prove an inequality; a passing report means no violation
was found on the drawn pairs.  Every inequality is written ``lhs <= rhs``
and scored by the normalized margin

    (rhs - lhs) / max(1, |lhs|, |rhs|),

so a report passes iff its worst margin is >= -tol.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import space as sp
from .operators import Operator, averaged
from .params import averaging_threshold, mu_upper_bound

DEFAULT_TOL = 1e-9
_MIN_GAP = 1e-8

CLASSES = ("contraction", "nonexpansive", "lipschitz", "strongly-accretive", "strict-pseudocontraction")

YOUNG_NOTE = (
    "Young's inequality checked in the standard form ab <= a^q/q + b^(q')/q' with q' = q/(q-1); "
    "a printed variant with the same variable in both terms is not what is tested"
)


@dataclass(frozen=True)
class SamplePlan:
    seed: int = 0
    count: int = 1000
    radius: float = 1.0
    distribution: str = "uniform-ball"

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.distribution not in ("uniform-ball", "gaussian"):
            raise ValueError(f"unknown distribution {self.distribution!r}")

    def rng(self):
        return np.random.default_rng(self.seed)


@dataclass
class CertificateReport:
    name: str
    passed: bool
    worst_margin: float
    witness: tuple | None
    samples: int
    tolerance: float = DEFAULT_TOL
    message: str = ""
    parts: dict = field(default_factory=dict)

    def as_dict(self):
        w = None if self.witness is None else [np.asarray(v).tolist() for v in self.witness]
        return {
            "name": self.name,
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "witness": w,
            "samples": self.samples,
            "tolerance": self.tolerance,
            "message": self.message,
            "parts": {k: v.as_dict() for k, v in self.parts.items()},
        }

    def __str__(self):
        tag = "pass" if self.passed else "FAIL"
        return f"{self.name}: {tag} (worst margin {self.worst_margin:.3e} over {self.samples} samples)"


def _draw(rng, plan, count, dim):
    if plan.distribution == "gaussian":
        return plan.radius * rng.standard_normal((count, dim))
    g = rng.standard_normal((count, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = plan.radius * rng.uniform(size=(count, 1)) ** (1.0 / dim)
    return g * r


def sample_pairs(plan: SamplePlan, dim: int, center=None):
    """``plan.count`` pairs (x, y) with ``||x - y||_2 >= 1e-8``; coincident pairs are redrawn."""
    rng = plan.rng()
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    x = _draw(rng, plan, plan.count, dim)
    y = _draw(rng, plan, plan.count, dim)
    for _ in range(100):
        bad = np.linalg.norm(x - y, axis=1) < _MIN_GAP
        if not bad.any():
            break
        y[bad] = _draw(rng, plan, int(bad.sum()), dim)
    return x + c, y + c


def _normalized(lhs, rhs):
    return (rhs - lhs) / np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))


def _report(name, margins, x, y, tol, message=""):
    i = int(np.argmin(margins))
    worst = float(margins[i])
    return CertificateReport(name, worst >= -tol, worst, (x[i].copy(), y[i].copy()), int(margins.size), tol, message)


def class_margins(op: Operator, cls: str, constant, s: sp.SpaceSpec, x, y):
    """Normalized margins of the class inequality on each pair (vectorized)."""
    tx, ty = op(x), op(y)
    d = x - y
    nd = sp.norm(d, s)
    if cls == "nonexpansive":
        return _normalized(sp.norm(tx - ty, s), nd)
    if cls in ("contraction", "lipschitz"):
        return _normalized(sp.norm(tx - ty, s), constant * nd)
    if cls == "strongly-accretive":
        return _normalized(constant * nd**s.q, sp.dual_pair(sp.duality_map(d, s), tx - ty, s))
    if cls == "strict-pseudocontraction":
        u = d - (tx - ty)  # (I-T)x - (I-T)y
        return _normalized(constant * sp.norm(u, s) ** s.q, sp.dual_pair(sp.duality_map(d, s), u, s))
    raise ValueError(f"unknown operator class {cls!r}; expected one of {CLASSES}")


def certify_operator_class(op: Operator, cls: str, constant, s: sp.SpaceSpec, plan: SamplePlan = SamplePlan(),
                           tol: float = DEFAULT_TOL, center=None) -> CertificateReport:
    """Check the defining inequality of ``cls`` with the given constant on sampled pairs."""
    if cls not in CLASSES:
        raise ValueError(f"unknown operator class {cls!r}; expected one of {CLASSES}")
    if op.dim != s.dim:
        raise ValueError(f"operator acts on R^{op.dim}, space is R^{s.dim}")
    if cls != "nonexpansive":
        if constant is None or not constant > 0:
            raise ValueError(f"class {cls} needs a positive constant")
        if cls == "contraction" and not constant < 1:
            raise ValueError("contraction coefficient must be < 1")
    x, y = sample_pairs(plan, s.dim, center)
    m = class_margins(op, cls, constant, s, x, y)
    label = cls if cls == "nonexpansive" else f"{cls}({constant:.6g})"
    return _report(f"{op.kind} {label}", m, x, y, tol)


def certify_space_inequalities(s: sp.SpaceSpec, plan: SamplePlan = SamplePlan(),
                               tol: float = DEFAULT_TOL) -> CertificateReport:
    """Subgradient inequality, the d_q smoothness inequality and Young's inequality.

    ``||x+y||^q <= ||x||^q + q <y, j_q(x+y)>`` and
    ``||x+y||^q <= ||x||^q + q <y, j_q(x)> + d_q ||y||^q`` on sampled pairs
    (a few pairs with y = 0 included), Young's inequality on positive scalars.
    """
    x, y = sample_pairs(plan, s.dim)
    k = min(8, plan.count)
    y[:k] = 0.0
    q = s.q
    nx = sp.norm(x, s) ** q
    nxy = sp.norm(x + y, s) ** q
    sub = _normalized(nxy, nx + q * sp.dual_pair(sp.duality_map(x + y, s), y, s))
    smooth = _normalized(nxy, nx + q * sp.dual_pair(sp.duality_map(x, s), y, s) + s.d_q * sp.norm(y, s) ** q)
    rng = np.random.default_rng(plan.seed + 1)
    a = np.exp(rng.uniform(-3, 3, plan.count))
    b = np.exp(rng.uniform(-3, 3, plan.count))
    a[0] = b[0] = 1.0
    qc = q / (q - 1.0)
    young = _normalized(a * b, a**q / q + b**qc / qc)
    parts = {
        "subgradient": _report("subgradient", sub, x, y, tol),
        "smoothness": _report(f"smoothness(d_q={s.d_q:g})", smooth, x, y, tol),
        "young": _report("young", young, a[:, None], b[:, None], tol, YOUNG_NOTE),
    }
    worst = min(p.worst_margin for p in parts.values())
    rep = CertificateReport(
        f"space inequalities l_{s.p:g} (q={s.q:g})",
        all(p.passed for p in parts.values()),
        worst,
        min(parts.values(), key=lambda p: p.worst_margin).witness,
        3 * plan.count,
        tol,
        YOUNG_NOTE,
        parts,
    )
    return rep


def certify_step_contraction(G: Operator, mu: float, t_grid, tau: float, s: sp.SpaceSpec,
                             plan: SamplePlan = SamplePlan(), tol: float = DEFAULT_TOL) -> CertificateReport:
    """Check that ``I - t mu G`` contracts with factor ``1 - t tau`` for each t in the grid."""
    eta, L = G.claims.accretive, G.claims.lipschitz
    if eta is None or L is None:
        raise ValueError("G must claim accretivity and Lipschitz constants")
    ub = mu_upper_bound(eta, L, s.q, s.d_q)
    if not (0 < mu < ub):
        raise ValueError(f"mu={mu!r} outside (0, {ub!r})")
    if not tau > 0:
        raise ValueError("tau must be positive")
    t_max = min(1.0, 1.0 / tau)
    ts = [float(t) for t in t_grid]
    if not ts or any(not (0 < t <= t_max) for t in ts):
        raise ValueError(f"every t must lie in (0, {t_max:g}], got {ts}")
    x, y = sample_pairs(plan, s.dim)
    gx, gy = G(x), G(y)
    nd = sp.norm(x - y, s)
    parts = {}
    for t in ts:
        lhs = sp.norm((x - t * mu * gx) - (y - t * mu * gy), s)
        parts[f"t={t:g}"] = _report(f"t={t:g}", _normalized(lhs, (1.0 - t * tau) * nd), x, y, tol)
    worst = min(parts.values(), key=lambda p: p.worst_margin)
    return CertificateReport(
        f"step contraction (mu={mu:.6g}, tau={tau:.6g})",
        all(p.passed for p in parts.values()),
        worst.worst_margin,
        worst.witness,
        plan.count * len(ts),
        tol,
        parts=parts,
    )


def certify_averaged(T: Operator, lam: float, alpha: float, s: sp.SpaceSpec, plan: SamplePlan = SamplePlan(),
                     tol: float = DEFAULT_TOL, fixed_points=None) -> CertificateReport:
    """Nonexpansiveness of ``alpha I + (1 - alpha) T`` and preservation of fixed points."""
    thr = averaging_threshold(lam, s.q, s.d_q)
    if alpha < thr:
        raise ValueError(f"alpha={alpha!r} is below the averaging threshold {thr!r}")
    Ta = averaged(T.with_claims(strict=lam), alpha, s)
    x, y = sample_pairs(plan, s.dim)
    ne = _report("nonexpansive", class_margins(Ta, "nonexpansive", None, s, x, y), x, y, tol)
    if fixed_points is None:
        fs = T.fixed_set
        fixed_points = np.zeros((0, s.dim)) if fs is None else fs.points()
    fp = np.atleast_2d(np.asarray(fixed_points, dtype=float))
    parts = {"nonexpansive": ne}
    if fp.size:
        res = sp.norm(fp - Ta(fp), s)
        scale = np.maximum(1.0, sp.norm(fp, s))
        m = -res / scale
        parts["fixed_points"] = _report("fixed_points", m, fp, Ta(fp), 1e-12)
    worst = min(parts.values(), key=lambda p: p.worst_margin)
    return CertificateReport(
        f"averaged(alpha={alpha:g}, lambda={lam:g})",
        all(p.passed for p in parts.values()),
        worst.worst_margin,
        worst.witness,
        plan.count + len(fp),
        tol,
        parts=parts,
    )


def certify_problem(problem, plan: SamplePlan = SamplePlan(), tol: float = DEFAULT_TOL) -> dict:
    """Certify every claimed constant of a problem; returns name -> report."""
    s = problem.space
    out = {}
    for i, (op, k) in enumerate(zip(problem.operators, problem.strictness)):
        out[f"T{i + 1}"] = certify_operator_class(op, "strict-pseudocontraction", k, s, plan, tol)
    out["f"] = certify_operator_class(problem.f, "contraction", problem.beta, s, plan, tol)
    out["G_accretive"] = certify_operator_class(problem.G, "strongly-accretive", problem.eta, s, plan, tol)
    out["G_lipschitz"] = certify_operator_class(problem.G, "lipschitz", problem.L, s, plan, tol)
    return out
