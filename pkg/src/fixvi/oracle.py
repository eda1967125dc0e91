"""Reference solutions of the variational inequality over the common fixed set.

Find x* in F with ``<(gamma f - mu G) x*, j_q(z - x*)> <= 0`` for all z in F.
Two direct solvers exist for Hilbert problems with an affine fixed set;
in l_p the only available check is ``vi_residual`` on a candidate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import space as sp
from .operators import FixedSet, ProblemInstance, affine_form
from .params import Gains

DECLARED_TOL = 1e-8


@dataclass
class OracleResult:
    x: np.ndarray
    method: str  # affine-direct, projected-iteration or long-run-reference
    vi_residual: float
    tolerance: float
    iterations: int = 0

    def as_dict(self):
        return {"x": self.x.tolist(), "method": self.method, "vi_residual": self.vi_residual,
                "tolerance": self.tolerance, "iterations": self.iterations}


def probe_set(fs: FixedSet, count=1000, seed=0, magnitudes=(1.0, 10.0), center=None, radius=10.0):
    """Probe points in F: anchor +/- m * basis_j for each magnitude, plus random samples."""
    c = fs.anchor if center is None else fs.project(center)
    pts = [c]
    for m in magnitudes:
        for j in range(fs.rank):
            pts.append(c + m * fs.basis[:, j])
            pts.append(c - m * fs.basis[:, j])
    pts = np.array(pts)
    if count and fs.rank:
        rng = np.random.default_rng(seed)
        pts = np.vstack([pts, fs.sample(rng, count, radius, center=c)])
    return pts


def vi_operator(problem: ProblemInstance, gains: Gains, x):
    """``(gamma f - mu G) x``, vectorized over leading axes."""
    x = np.asarray(x, dtype=float)
    return gains.gamma * problem.f(x) - gains.mu * problem.G(x)


def vi_residual(xhat, problem: ProblemInstance, gains: Gains, probes) -> float:
    """``max_z <(gamma f - mu G) xhat, j_q(z - xhat)>`` over the probe points."""
    s = problem.space
    z = np.atleast_2d(np.asarray(probes, dtype=float))
    if z.shape[0] == 0:
        raise ValueError("empty probe set")
    xhat = sp.conform(xhat, s, "candidate")
    r = vi_operator(problem, gains, xhat)
    return float(np.max(sp.dual_pair(sp.duality_map(z - xhat, s), np.broadcast_to(r, z.shape), s)))


def vi_residuals(X, problem: ProblemInstance, gains: Gains, probes, chunk=2048):
    """``vi_residual`` for each row of ``X``."""
    s = problem.space
    X = np.atleast_2d(X)
    z = np.atleast_2d(probes)
    out = np.empty(X.shape[0])
    for lo in range(0, X.shape[0], chunk):
        xb = X[lo:lo + chunk]
        r = vi_operator(problem, gains, xb)
        d = z[None, :, :] - xb[:, None, :]
        jd = sp.duality_map(d, s)
        out[lo:lo + chunk] = np.max(np.sum(jd * r[:, None, :], axis=-1), axis=1)
    return out


def _hilbert_fixed_set(problem):
    if not problem.space.is_hilbert:
        raise ValueError("direct solvers need a Hilbert space (p = q = 2)")
    fs = problem.common_fixed_set()
    if fs is None:
        raise ValueError("the problem has no common fixed set")
    return fs


def solve_vi_affine(problem: ProblemInstance, gains: Gains, probes=None) -> OracleResult:
    """Solve ``V^T (mu G - gamma f)(anchor + V c) = 0`` by a dense linear solve."""
    fs = _hilbert_fixed_set(problem)
    Ag, bg = affine_form(problem.G)
    Af, bf = affine_form(problem.f)
    M = gains.mu * Ag - gains.gamma * Af
    r0 = gains.mu * bg - gains.gamma * bf
    V, a = fs.basis, fs.anchor
    if fs.rank == 0:
        x = a.copy()
    else:
        K = V.T @ M @ V
        rhs = -V.T @ (M @ a + r0)
        if np.linalg.cond(K) > 1e12:
            raise np.linalg.LinAlgError("reduced stationarity system is singular")
        x = a + V @ np.linalg.solve(K, rhs)
    z = probe_set(fs) if probes is None else probes
    return OracleResult(x, "affine-direct", vi_residual(x, problem, gains, z), DECLARED_TOL)


def solve_vi_projected(problem: ProblemInstance, gains: Gains, tol=1e-12, step=None, x0=None,
                       max_iter=1_000_000, probes=None) -> OracleResult:
    """Projected iteration ``x <- P_F(x - s (mu G - gamma f) x)``.

    The map contracts for ``s < 2 (tau - gamma beta) / (mu L + gamma beta)^2``;
    the default step is half of that bound.
    """
    fs = _hilbert_fixed_set(problem)
    m = gains.modulus
    if not m > 0:
        raise ValueError("tau - gamma beta must be positive")
    s_max = 2.0 * m / (gains.mu * gains.L + gains.gamma * gains.beta) ** 2
    s = 0.5 * s_max if step is None else float(step)
    if not (0 < s < s_max):
        raise ValueError(f"step {s!r} outside (0, {s_max!r})")
    x = fs.project(fs.anchor if x0 is None else np.asarray(x0, dtype=float))
    for k in range(max_iter):
        nxt = fs.project(x + s * vi_operator(problem, gains, x))
        dx = np.linalg.norm(nxt - x)
        x = nxt
        if dx <= tol * s:
            break
    else:
        raise RuntimeError(f"projected iteration did not reach tol={tol} in {max_iter} steps")
    z = probe_set(fs) if probes is None else probes
    return OracleResult(x, "projected-iteration", vi_residual(x, problem, gains, z), DECLARED_TOL, k)
