"""Run orchestration: certify, validate, solve the oracle, iterate, write artifacts."""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .. import certify as cert
from .. import space as sp
from ..iterate import AlgorithmConfig, Trace, run, validate_config
from ..oracle import OracleResult, probe_set, solve_vi_affine, solve_vi_projected, vi_residual
from ..params import averaging_threshold
from .scenario import RunSpec, build_config

SCHEMA_VERSION = 1
PLOT_COLUMNS = ("n", "fixpoint_residual", "window_residual", "step_norm", "vi_residual", "dist_to_oracle", "status")


@dataclass
class RunSummary:
    name: str
    status: str
    iterations: int
    final: dict
    dist_to_oracle: float | None
    oracle: dict | None
    gains: dict
    schedule_flags: dict
    violations: list
    validation: list
    certificates: dict
    override_used: bool
    exit_code: int
    wall_clock: float
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        d = {"schema_version": SCHEMA_VERSION}
        d.update({k: v for k, v in self.__dict__.items() if k != "extra"})
        d.update(self.extra)
        return d


def _plan(run_spec: RunSpec | None, seed=None):
    if run_spec is None:
        return cert.SamplePlan(seed=seed or 0)
    c = run_spec.blocks["certify"]
    return cert.SamplePlan(c["seed"] if seed is None else seed, c["count"], c["radius"], c["distribution"])


def default_t_grid(tau):
    t_max = min(1.0, 1.0 / tau)
    return [t_max * f for f in (0.001, 0.01, 0.1, 0.5, 1.0)]


def certify_config(cfg: AlgorithmConfig, plan: cert.SamplePlan, t_grid=None) -> dict:
    """Certificate reports for the space, the problem constants and the derived maps."""
    prob = cfg.problem
    s = prob.space
    out = {}
    if sp.validate_space(s).ok:
        out["space"] = cert.certify_space_inequalities(s, plan)
    for k, v in cert.certify_problem(prob, plan).items():
        out[k] = v
    g = cfg.gains
    if 0 < g.mu < g.mu_bound and g.tau > 0:
        grid = default_t_grid(g.tau) if t_grid is None else t_grid
        out["step_contraction"] = cert.certify_step_contraction(prob.G, g.mu, grid, g.tau, s, plan)
    if not cfg.collapsed:
        if cfg.mode == "cyclic":
            betas = cfg.beta.terms(0, prob.N)
        else:
            betas = [float(cfg.beta.terms(0, 1)[0])] * prob.N
        for i, (op, b) in enumerate(zip(prob.operators, betas)):
            k = min(op.claims.strict, float(np.nextafter(1.0, 0.0)))
            if b >= averaging_threshold(k, s.q, s.d_q):
                out[f"A{i + 1}_averaged"] = cert.certify_averaged(op, k, float(b), s, plan)
    return out


def solve_oracle(cfg: AlgorithmConfig) -> OracleResult | None:
    """Affine-direct oracle (cross-checked by projected iteration) when the space is Hilbert."""
    prob = cfg.problem
    if not prob.space.is_hilbert or prob.common_fixed_set() is None or not cfg.gains.modulus > 0:
        return None
    res = solve_vi_affine(prob, cfg.gains)
    try:
        proj = solve_vi_projected(prob, cfg.gains, tol=1e-13, x0=res.x)
        res.tolerance = max(res.tolerance, float(np.linalg.norm(proj.x - res.x)))
    except RuntimeError:
        pass
    return res


def _schedule_flags(reports):
    flags = {}
    for r in reports[1:]:
        for c in r.checks:
            flags[c.name] = c.status or ("holds" if c.ok else "fails")
    return flags


def summarize(cfg: AlgorithmConfig, trace: Trace, certificates: dict, oracle: OracleResult | None,
              wall: float) -> RunSummary:
    reports = trace.validation
    violations = [f"{r.subject}: {c.name} ({c.message})" for r in reports for c in r.failures()]
    probes = None
    vi = trace.final("vi_residual")
    fs = cfg.problem.common_fixed_set()
    if fs is not None and trace.status != "diverged":
        probes = probe_set(fs, count=1000, seed=0)
        vi = vi_residual(trace.x_final, cfg.problem, cfg.gains, probes)
    certs_ok = all(c.passed for c in certificates.values())
    override_used = bool(violations) and cfg.override
    code = 0 if (trace.converged and certs_ok and not override_used) else 1
    final = {
        "step": trace.final("step_norm"),
        "fixpoint_residual": trace.final("fixpoint_residual"),
        "window_residual": trace.final("window_residual"),
        "vi_residual": vi,
        "x": trace.x_final.tolist(),
    }
    g = cfg.gains
    gains = {"mu": g.mu, "gamma": g.gamma, "tau": g.tau, "beta": g.beta, "eta": g.eta, "L": g.L,
             "mu_bound": g.mu_bound, "gamma_bound": g.gamma_bound if g.beta else None, "q": g.q, "d_q": g.d_q}
    return RunSummary(
        name=cfg.name, status=trace.status, iterations=trace.iterations, final=final,
        dist_to_oracle=trace.final("dist_to_oracle"), oracle=None if oracle is None else oracle.as_dict(),
        gains=gains, schedule_flags=_schedule_flags(reports), violations=violations,
        validation=[r.as_dict() for r in reports], certificates={k: v.as_dict() for k, v in certificates.items()},
        override_used=override_used, exit_code=code, wall_clock=wall,
        extra={"mode": cfg.mode, "preset": cfg.preset, "backend": trace.backend, "alpha_clamped": trace.alpha_clamped,
               "min_bound_slack": trace.min_bound_slack, "residual_tol": cfg.stopping.residual_tol,
               "max_iter": cfg.stopping.max_iter, "problem": cfg.problem.name},
    )


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def _clean(o):
    # JSON has no inf/nan; write them as strings
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    return o


def write_summary(summary: RunSummary, path):
    with open(path, "w") as fh:
        json.dump(_clean(json.loads(json.dumps(summary.as_dict(), default=_json_default))), fh, indent=2,
                  sort_keys=True)
        fh.write("\n")


def emit_plotdata(trace: Trace, path):
    """Residual series, one row per trace record; every row carries the terminal status.

    The series stops before the first record holding a non-finite value, so
    a diverged run ends at its last finite record.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    from ..iterate import _fmt

    with open(path, "w", newline="") as fh:
        fh.write(",".join(PLOT_COLUMNS) + "\n")
        for i in range(len(trace)):
            raw = [trace.columns[c][i] for c in PLOT_COLUMNS[:-1]]
            if any(v is not None and not math.isfinite(v) and not math.isnan(v) for v in raw):
                break
            fh.write(",".join([_fmt(v) for v in raw] + [trace.status]) + "\n")


def run_config(cfg: AlgorithmConfig, out_dir=None, plan=None, t_grid=None, files=None):
    """Certify, solve the oracle, iterate and (optionally) write the artifacts."""
    t0 = time.perf_counter()
    plan = plan or cert.SamplePlan()
    certificates = certify_config(cfg, plan, t_grid)
    oracle = solve_oracle(cfg)
    if oracle is not None and cfg.reference is None:
        cfg = cfg.replace(reference=oracle.x)
    trace = run(cfg)
    summary = summarize(cfg, trace, certificates, oracle, time.perf_counter() - t0)
    if out_dir is not None:
        files = files or {"trace": "trace.csv", "summary": "summary.json", "plotdata": "plotdata.csv"}
        os.makedirs(out_dir, exist_ok=True)
        trace.to_csv(os.path.join(out_dir, files["trace"]))
        emit_plotdata(trace, os.path.join(out_dir, files["plotdata"]))
        write_summary(summary, os.path.join(out_dir, files["summary"]))
    return summary, trace


def run_scenario(run_spec: RunSpec, out_dir=None, *, max_iter=None, seed=None, override=None, cadence=None):
    """Run one parsed scenario entry; returns ``(summary, trace)``."""
    cfg = build_config(run_spec, max_iter=max_iter, seed=seed, override=override, cadence=cadence)
    out = run_spec.blocks["output"]
    if out_dir is None and out["dir"] is not None:
        out_dir = out["dir"]
    elif out_dir is not None:
        out_dir = os.path.join(out_dir, run_spec.name)
    files = {k: out[k] for k in ("trace", "summary", "plotdata")}
    return run_config(cfg, out_dir, _plan(run_spec, seed), run_spec.blocks["certify"]["t_grid"], files)


def certify_scenario(run_spec: RunSpec, seed=None):
    cfg = build_config(run_spec, seed=seed, override=True)
    certificates = certify_config(cfg, _plan(run_spec, seed), run_spec.blocks["certify"]["t_grid"])
    return cfg, certificates, validate_config(cfg)


# -- comparison ---------------------------------------------------------------


def _signature(prob):
    fs = prob.common_fixed_set()
    s = prob.space
    key = (s.dim, s.p, s.q)
    if fs is None:
        return key
    return key + (tuple(np.round(fs.anchor, 9)), tuple(np.round((fs.basis @ fs.basis.T).ravel(), 9)))


def iterations_to(trace: Trace, tol):
    col = "window_residual" if trace.mode == "cyclic" else "fixpoint_residual"
    for n, r in zip(trace.columns["n"], trace.columns[col]):
        if r is not None and not (isinstance(r, float) and math.isnan(r)) and r <= tol:
            return n
    return None


def compare(items: dict, tol=None):
    """Table of iterations-to-tolerance, final residuals and pairwise limit distances.

    ``items`` maps a label to an ``AlgorithmConfig`` (run here), a finished
    ``Trace`` or an array of iterates from an external loop.  All configurations must share one problem.
    """
    if not items:
        raise ValueError("nothing to compare")
    traces, sigs, space = {}, set(), None
    for name, it in items.items():
        if isinstance(it, AlgorithmConfig):
            sigs.add(_signature(it.problem))
            space = it.problem.space
            tol = it.stopping.residual_tol if tol is None else tol
            traces[name] = run(it)
        elif isinstance(it, Trace):
            traces[name] = it
        elif isinstance(it, np.ndarray) and it.ndim == 2:
            # external baseline given as its iterates
            traces[name] = Trace("external", "external", len(it) - 1, it[-1].copy(),
                                 {"n": [len(it) - 1], "fixpoint_residual": [None], "window_residual": [None],
                                  "step_norm": [float(sp._lp(it[-1] - it[-2], 2.0)) if len(it) > 1 else None]})
        else:
            raise TypeError(f"{name}: expected AlgorithmConfig, Trace or an array of iterates")
    if len(sigs) > 1:
        raise ValueError("configurations do not share one problem")
    tol = 1e-6 if tol is None else tol
    p = 2.0 if space is None else space.p
    rows = []
    for name, tr in traces.items():
        rows.append({"name": name, "status": tr.status, "iterations": tr.iterations,
                     "iterations_to_tol": iterations_to(tr, tol), "residual": tr.residual,
                     "step": tr.final("step_norm")})
    names = list(traces)
    dist = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            dist[(a, b)] = float(sp._lp(traces[a].x_final - traces[b].x_final, p))
    return {"rows": rows, "distances": dist, "tolerance": tol}


def format_table(table) -> str:
    lines = [f"{'name':<24} {'status':<10} {'iter':>8} {'to_tol':>8} {'residual':>12} {'step':>12}"]
    for r in table["rows"]:
        tt = "-" if r["iterations_to_tol"] is None else str(r["iterations_to_tol"])
        res = "-" if r["residual"] is None else f"{r['residual']:.3e}"
        st = "-" if r["step"] is None else f"{r['step']:.3e}"
        lines.append(f"{r['name']:<24} {r['status']:<10} {r['iterations']:>8} {tt:>8} {res:>12} {st:>12}")
    for (a, b), d in table["distances"].items():
        lines.append(f"|{a} - {b}| = {d:.3e}")
    return "\n".join(lines)
