"""Scalar gains (mu, gamma, tau) and the parameter sequences alpha_n, beta_n.

The gain conditions are

    0 < mu < (q eta / (d_q L^q))^(1/(q-1)),
    tau = mu (eta - d_q mu^(q-1) L^q / q) > 0,
    0 < gamma < tau / beta,

and the schedule conditions K1-K4 (synchronal) and K1'-K4' (cyclic) are
reported by ``validate_schedule``.
"""

from __future__ import annotations

import ast
import math
import operator as _op
from dataclasses import dataclass, field

import numpy as np

from .reports import Report

_ONE_MINUS = float(np.nextafter(1.0, 0.0))
_TINY = float(np.finfo(float).tiny)


def _positive(**kw):
    for k, v in kw.items():
        if not (isinstance(v, (int, float, np.floating)) and math.isfinite(v) and v > 0):
            raise ValueError(f"{k} must be a positive finite number, got {v!r}")


def mu_upper_bound(eta, L, q, d_q):
    """``(q eta / (d_q L^q))^(1/(q-1))``, the supremum of admissible mu."""
    _positive(eta=eta, L=L, d_q=d_q)
    if not q > 1:
        raise ValueError(f"q must exceed 1, got {q!r}")
    return (q * eta / (d_q * L**q)) ** (1.0 / (q - 1.0))


def _tau(mu, eta, L, q, d_q):
    return mu * (eta - d_q * mu ** (q - 1.0) * L**q / q)


def derive_tau(mu, eta, L, q, d_q):
    """``tau = mu (eta - d_q mu^(q-1) L^q / q)``; requires mu strictly inside the bound."""
    ub = mu_upper_bound(eta, L, q, d_q)
    if not (0 < mu < ub):
        raise ValueError(f"mu={mu!r} outside (0, {ub!r})")
    return _tau(mu, eta, L, q, d_q)


def averaging_threshold(lam, q, d_q):
    """``max{0, 1 - (lam q / d_q)^(1/(q-1))}``.

    Averaging a lam-strict pseudocontraction T as ``a I + (1 - a) T`` gives a
    nonexpansive map for every weight a in [threshold, 1).
    """
    if not (0 < lam < 1):
        raise ValueError(f"strictness constant must lie in (0, 1), got {lam!r}")
    _positive(d_q=d_q)
    if not q > 1:
        raise ValueError(f"q must exceed 1, got {q!r}")
    return max(0.0, 1.0 - (lam * q / d_q) ** (1.0 / (q - 1.0)))


@dataclass(frozen=True)
class Gains:
    """Gains of the iteration together with the constants they are checked against.

    ``beta`` is the contraction coefficient of f, ``eta`` and ``L`` the
    accretivity and Lipschitz constants of G.  ``tau`` is derived and may be
    nonpositive for invalid mu; ``validate_gains`` reports that.
    """

    mu: float
    gamma: float
    beta: float
    eta: float
    L: float
    q: float = 2.0
    d_q: float = 1.0

    @property
    def tau(self) -> float:
        return _tau(self.mu, self.eta, self.L, self.q, self.d_q)

    @property
    def mu_bound(self) -> float:
        return mu_upper_bound(self.eta, self.L, self.q, self.d_q)

    @property
    def gamma_bound(self) -> float:
        return self.tau / self.beta

    @property
    def modulus(self) -> float:
        """``tau - gamma beta``, the strong-monotonicity margin of ``mu G - gamma f``."""
        return self.tau - self.gamma * self.beta

    @classmethod
    def for_problem(cls, problem, mu, gamma):
        s = problem.space
        if problem.beta is None or problem.eta is None or problem.L is None:
            raise ValueError("problem must claim beta for f and eta, L for G")
        return cls(float(mu), float(gamma), problem.beta, problem.eta, problem.L, s.q, s.d_q)

    @classmethod
    def auto(cls, problem, mu_ratio=0.5, gamma_ratio=0.5):
        """mu at ``mu_ratio`` of its bound and gamma at ``gamma_ratio`` of ``tau/beta``."""
        if not (0 < mu_ratio < 1 and 0 < gamma_ratio < 1):
            raise ValueError("ratios must lie in (0, 1)")
        s = problem.space
        mu = mu_ratio * mu_upper_bound(problem.eta, problem.L, s.q, s.d_q)
        tau = derive_tau(mu, problem.eta, problem.L, s.q, s.d_q)
        return cls.for_problem(problem, mu, gamma_ratio * tau / problem.beta)

    def as_dict(self):
        d = dict(mu=self.mu, gamma=self.gamma, beta=self.beta, eta=self.eta, L=self.L, q=self.q, d_q=self.d_q)
        d.update(tau=self.tau, mu_bound=self.mu_bound, gamma_bound=self.gamma_bound)
        return d


def _margin(lhs, rhs):
    return (rhs - lhs) / max(1.0, abs(lhs), abs(rhs))


def validate_gains(g: Gains) -> Report:
    """Check the three gain conditions; margins are signed, negative means violated."""
    rep = Report("gains")
    try:
        ub = g.mu_bound
    except ValueError as exc:
        rep.add("constants", False, message=str(exc))
        return rep
    ok_mu = 0 < g.mu < ub
    rep.add("mu_range", ok_mu, min(g.mu, ub - g.mu),
            f"mu={g.mu:.6g} must lie in (0, {ub:.6g})" + ("" if ok_mu else "; strict inequality required"))
    tau = g.tau
    rep.add("tau_positive", tau > 0, tau, f"tau={tau:.6g}")
    gb = tau / g.beta if g.beta > 0 else math.inf
    ok_g = 0 < g.gamma < gb
    rep.add("gamma_range", ok_g, min(g.gamma, gb - g.gamma),
            f"gamma={g.gamma:.6g} must lie in (0, tau/beta={gb:.6g})"
            + ("" if ok_g else "; strict inequality required"))
    return rep


def validate_yamada_gains(g: Gains) -> Report:
    """Gain check for the variant without f (gamma = 0)."""
    rep = Report("gains")
    ub = g.mu_bound
    rep.add("mu_range", 0 < g.mu < ub, min(g.mu, ub - g.mu), f"mu={g.mu:.6g} must lie in (0, {ub:.6g})")
    rep.add("tau_positive", g.tau > 0, g.tau, f"tau={g.tau:.6g}")
    rep.add("gamma_zero", g.gamma == 0, None, "f is removed")
    return rep


# --------------------------------------------------------------------------
# schedules

_BINOPS = {ast.Add: _op.add, ast.Sub: _op.sub, ast.Mult: _op.mul, ast.Div: _op.truediv, ast.Pow: _op.pow}
_UNOPS = {ast.USub: _op.neg, ast.UAdd: _op.pos}
_FUNCS = {"sqrt": np.sqrt, "log": np.log, "exp": np.exp, "log1p": np.log1p, "abs": np.abs}


def _compile_formula(text):
    tree = ast.parse(text, mode="eval")

    def check(node):
        if isinstance(node, ast.Expression):
            return check(node.body)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return check(node.left) and check(node.right)
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return check(node.operand)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return True
        if isinstance(node, ast.Name) and node.id == "n":
            return True
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
                and len(node.args) == 1 and not node.keywords):
            return check(node.args[0])
        raise ValueError(f"unsupported element in schedule formula: {ast.dump(node)[:60]}")

    check(tree)

    def ev(node, n):
        if isinstance(node, ast.Expression):
            return ev(node.body, n)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, n), ev(node.right, n))
        if isinstance(node, ast.UnaryOp):
            return _UNOPS[type(node.op)](ev(node.operand, n))
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return n
        return _FUNCS[node.func.id](ev(node.args[0], n))

    return lambda n: ev(tree, n)


@dataclass(frozen=True)
class Schedule:
    """A parameter sequence indexed from n = 0.

    Families: ``power`` (``a / (n+1)^r``), ``constant`` (``b``) and
    ``formula`` (an arithmetic expression in ``n``).  Terms are clipped into
    the open interval (0, 1), except that ``constant(0)`` emits exact zeros;
    the reduced variants without averaging need it.
    """

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        p = dict(self.params)
        if self.family == "power":
            p.setdefault("a", 1.0)
            p.setdefault("r", 1.0)
            _positive(a=p["a"], r=p["r"])
        elif self.family == "constant":
            b = p.get("b")
            if b is None or not (0 <= b < 1):
                raise ValueError(f"constant schedule needs 0 <= b < 1, got {b!r}")
        elif self.family == "formula":
            if not isinstance(p.get("expr"), str):
                raise ValueError("formula schedule needs an 'expr' string")
            _compile_formula(p["expr"])
        else:
            raise ValueError(f"unknown schedule family {self.family!r}")
        object.__setattr__(self, "params", p)

    @classmethod
    def power(cls, a=1.0, r=1.0):
        return cls("power", {"a": float(a), "r": float(r)})

    @classmethod
    def constant(cls, b):
        return cls("constant", {"b": float(b)})

    @classmethod
    def formula(cls, expr):
        return cls("formula", {"expr": str(expr)})

    def raw(self, n):
        n = np.asarray(n, dtype=float)
        if self.family == "power":
            return self.params["a"] / (n + 1.0) ** self.params["r"]
        if self.family == "constant":
            return np.full(n.shape, self.params["b"])
        with np.errstate(all="ignore"):
            return np.asarray(_compile_formula(self.params["expr"])(n), dtype=float) * np.ones(n.shape)

    def terms(self, start, stop):
        """Terms for n in [start, stop) as an array, clipped into (0, 1)."""
        v = self.raw(np.arange(start, stop))
        if self.family == "constant" and self.params["b"] == 0.0:
            return v
        v = np.where(np.isfinite(v), v, _TINY)
        return np.clip(v, _TINY, _ONE_MINUS)

    def term(self, n):
        return float(self.terms(n, n + 1)[0])

    def describe(self):
        if self.family == "power":
            return f"{self.params['a']:g}/(n+1)^{self.params['r']:g}"
        if self.family == "constant":
            return f"{self.params['b']:g}"
        return self.params["expr"]


def _flag(rep, name, status, message="", margin=None):
    # unknown does not block a run; it is surfaced as a warning
    rep.add(name, status != "fails", margin, message, status)
    if status == "unknown":
        rep.warn(f"{name} could not be decided for this schedule family: {message}")


def validate_schedule(sched_alpha: Schedule, sched_beta: Schedule, mode: str, strictness,
                      q: float, d_q: float, horizon: int = 10_000) -> Report:
    """Report conditions K1-K4 (synchronal) or K1'-K4' (cyclic).

    K1 and K2 are decided analytically from the schedule family; formulas
    get ``unknown`` plus partial-sum diagnostics.  K3 requires every beta
    term in ``[max k_i, a)`` with ``a < 1``.  K4 requires beta terms to clear
    the averaging threshold and is not applied to alpha (which tends to 0).
    In cyclic mode beta is per operator: ``beta_i = sched_beta.term(i)``.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if mode not in ("synchronal", "cyclic"):
        raise ValueError(f"mode must be synchronal or cyclic, got {mode!r}")
    ks = [float(k) for k in strictness]
    if not ks or any(not (k > 0) for k in ks):
        raise ValueError("need positive strictness constants")
    tick = "'" if mode == "cyclic" else ""
    N = len(ks)
    rep = Report(f"schedule alpha={sched_alpha.describe()} beta={sched_beta.describe()} ({mode})")

    # K1: alpha_n -> 0 and sum alpha_n = inf
    if sched_alpha.family == "power":
        r = sched_alpha.params["r"]
        st = "holds" if r <= 1 else "fails"
        _flag(rep, "K1" + tick, st, f"power family with r={r:g}" + ("" if r <= 1 else ": sum of alpha_n converges"))
    elif sched_alpha.family == "constant":
        _flag(rep, "K1" + tick, "fails", "constant alpha_n does not tend to 0")
    else:
        _flag(rep, "K1" + tick, "unknown", "user formula")

    # K2: bounded variation (synchronal) or alpha_n / alpha_{n+N} -> 1 (cyclic alternative)
    def bv(s):
        if s.family in ("power", "constant"):
            return "holds"
        return "unknown"

    if mode == "synchronal":
        sa, sb = bv(sched_alpha), bv(sched_beta)
        st = "fails" if "fails" in (sa, sb) else ("unknown" if "unknown" in (sa, sb) else "holds")
        _flag(rep, "K2", st, "sum |alpha_{n+1}-alpha_n| and sum |beta_{n+1}-beta_n| finite for monotone families")
    else:
        sa = "holds" if sched_alpha.family in ("power", "constant") else "unknown"
        _flag(rep, "K2'", sa, f"alpha_n / alpha_(n+{N}) -> 1 (ratio test for the family)")

    # K3: beta in [max k_i, a) with a < 1
    kmax, kmin = max(ks), min(ks)
    if mode == "synchronal":
        b = sched_beta.terms(0, horizon)
    else:
        b = sched_beta.terms(0, N)
    bmin, bmax = float(b.min()), float(b.max())
    ok3 = bmin >= kmax and bmax < 1.0
    rep.add("K3" + tick, ok3, bmin - kmax,
            f"beta terms in [{bmin:.6g}, {bmax:.6g}] must lie in [max k_i={kmax:.6g}, a) with a < 1",
            "holds" if ok3 else "fails")
    if not ok3 and bmin >= kmin:
        rep.warn(f"beta clears min k_i={kmin:.6g} but not max k_i={kmax:.6g}; only the weaker form holds")
    if sched_beta.family == "formula":
        rep.warn("beta checked on the first terms only; the supremum over all n is not decided")

    # K4: beta above the averaging threshold
    if mode == "synchronal":
        thr = [averaging_threshold(min(kmin, _ONE_MINUS), q, d_q)] * len(b)
        kstr = f"{thr[0]:.6g}"
    else:
        thr = [averaging_threshold(min(k, _ONE_MINUS), q, d_q) for k in ks]
        kstr = ", ".join(f"{t:.6g}" for t in thr)
    gap = float(np.min(b - np.asarray(thr)))
    rep.add("K4" + tick, gap >= 0, gap, f"beta must clear the averaging threshold ({kstr})",
            "holds" if gap >= 0 else "fails")
    rep.warn("K4 is applied to beta only; alpha_n is governed by K1 and K2")

    a = sched_alpha.terms(0, horizon)
    rep.data.update(
        horizon=horizon,
        alpha_partial_sum=float(np.sum(a)),
        alpha_total_variation=float(np.sum(np.abs(np.diff(a)))),
        beta_total_variation=float(np.sum(np.abs(np.diff(sched_beta.terms(0, horizon))))),
        alpha_last=float(a[-1]),
    )
    return rep
