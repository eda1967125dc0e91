"""Operator algebra on R^dim.

Every operator here is affine, but compositions, averages and convex
combinations stay nested and are evaluated lazily; ``affine_form`` flattens
one on demand by probing it at the origin and the unit vectors.

All operators accept a single vector or a stack ``(..., dim)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import space as sp
from .params import averaging_threshold

_WEIGHT_TOL = 1e-12
_RANK_TOL = 1e-10
_ONE_MINUS = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class Claims:
    """Class constants asserted for an operator (``None`` = not claimed).

    contraction: coefficient beta < 1.  lipschitz: L.  accretive: eta
    (strong accretivity).  strict: lambda in the strict-pseudocontraction
    inequality <(I-T)x - (I-T)y, j_q(x-y)> >= lambda ||(I-T)x - (I-T)y||^q.
    """

    contraction: float | None = None
    lipschitz: float | None = None
    accretive: float | None = None
    strict: float | None = None
    nonexpansive: bool = False

    def __post_init__(self):
        for name in ("contraction", "lipschitz", "accretive", "strict"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise ValueError(f"claimed {name} constant must be positive, got {v!r}")
        if self.contraction is not None and self.contraction >= 1:
            raise ValueError(f"contraction coefficient must be < 1, got {self.contraction}")

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items() if v is not None and v is not False}


# --------------------------------------------------------------------------
# fixed sets


@dataclass(frozen=True, eq=False)
class FixedSet:
    """Affine subspace ``anchor + span(basis)``; basis columns are orthonormal in l_2."""

    anchor: np.ndarray
    basis: np.ndarray  # shape (dim, r), r may be 0

    def __post_init__(self):
        a = np.asarray(self.anchor, dtype=float).reshape(-1)
        b = np.asarray(self.basis, dtype=float).reshape(a.size, -1)
        if b.shape[1]:
            q, r = np.linalg.qr(b)
            keep = np.abs(np.diag(r)) > _RANK_TOL
            b = q[:, keep]
        # anchor is stored as the point of the set closest to the origin
        a = a - b @ (b.T @ a)
        object.__setattr__(self, "anchor", a)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self):
        return self.anchor.size

    @property
    def rank(self):
        return self.basis.shape[1]

    def project(self, x):
        """Euclidean projection onto the set (the metric projection when p = 2)."""
        x = np.asarray(x, dtype=float)
        d = x - self.anchor
        return self.anchor + (d @ self.basis) @ self.basis.T

    def distance(self, x):
        """Euclidean distance to the set."""
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - self.project(x), axis=-1)

    def contains(self, x, tol=1e-10):
        x = np.asarray(x, dtype=float)
        scale = max(1.0, float(np.max(np.abs(x))))
        return bool(np.all(self.distance(x) <= tol * scale))

    def points(self):
        """Declared reference points: the anchor and anchor +/- each basis vector."""
        pts = [self.anchor]
        for j in range(self.rank):
            pts.append(self.anchor + self.basis[:, j])
            pts.append(self.anchor - self.basis[:, j])
        return np.array(pts)

    def sample(self, rng, count, radius=1.0, center=None):
        """Random points of the set within ``radius`` (coordinates) of ``center``."""
        c = self.anchor if center is None else self.project(center)
        coef = rng.uniform(-radius, radius, size=(count, self.rank))
        return c + coef @ self.basis.T

    def intersect(self, other: "FixedSet") -> "FixedSet | None":
        """Intersection of two affine subspaces, or ``None`` when empty."""
        if self.dim != other.dim:
            raise ValueError("fixed sets live in different dimensions")
        v1, v2 = self.basis, other.basis
        m = np.hstack([v1, -v2])
        rhs = other.anchor - self.anchor
        if m.shape[1] == 0:
            return self if np.linalg.norm(rhs) <= _RANK_TOL * max(1.0, np.linalg.norm(self.anchor)) else None
        c, *_ = np.linalg.lstsq(m, rhs, rcond=None)
        if np.linalg.norm(m @ c - rhs) > 1e-9 * max(1.0, np.linalg.norm(rhs)):
            return None
        point = self.anchor + v1 @ c[: v1.shape[1]]
        null = _null_space(m)
        direction = v1 @ null[: v1.shape[1]]
        return FixedSet(point, direction)

    def same_as(self, other: "FixedSet", tol=1e-9) -> bool:
        if self.rank != other.rank:
            return False
        if np.linalg.norm(self.anchor - other.anchor) > tol * max(1.0, np.linalg.norm(self.anchor)):
            return False
        proj = self.basis @ self.basis.T - other.basis @ other.basis.T
        return bool(np.linalg.norm(proj) <= tol)

    @classmethod
    def of_affine(cls, A, b):
        """Solve ``(I - A) x = b`` for the fixed set of ``x -> A x + b``."""
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        M = np.eye(A.shape[0]) - A
        x, *_ = np.linalg.lstsq(M, b, rcond=None)
        if np.linalg.norm(M @ x - b) > 1e-9 * max(1.0, np.linalg.norm(b)):
            return None
        return cls(x, _null_space(M))

    def as_dict(self):
        return {"anchor": self.anchor.tolist(), "basis": self.basis.T.tolist()}


def _null_space(M):
    if M.shape[1] == 0:
        return np.zeros((0, 0))
    _, s, vt = np.linalg.svd(M)
    tol = _RANK_TOL * max(M.shape) * (s[0] if s.size else 1.0)
    rank = int(np.sum(s > tol))
    return vt[rank:].T


def intersect_all(sets):
    sets = list(sets)
    if any(s is None for s in sets):
        return None
    out = sets[0]
    for s in sets[1:]:
        out = out.intersect(s)
        if out is None:
            return None
    return out


# --------------------------------------------------------------------------
# operator kinds


class Operator:
    """Base class; subclasses implement ``__call__`` on ``(..., dim)`` arrays."""

    kind = "operator"
    claims: Claims
    declared_fixed: FixedSet | None

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def __call__(self, x):
        raise NotImplementedError

    @property
    def fixed_set(self) -> FixedSet | None:
        if self.declared_fixed is not None:
            return self.declared_fixed
        return FixedSet.of_affine(*affine_form(self))

    def with_claims(self, **kw):
        return replace(self, claims=replace(self.claims, **kw))


@dataclass(frozen=True, eq=False)
class Affine(Operator):
    """``x -> A x + b``."""

    matrix: np.ndarray
    offset: np.ndarray
    claims: Claims = field(default_factory=Claims)
    declared_fixed: FixedSet | None = None
    kind = "affine"

    def __post_init__(self):
        A = np.array(self.matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"affine matrix must be square, got shape {A.shape}")
        b = np.zeros(A.shape[0]) if self.offset is None else np.array(self.offset, dtype=float).reshape(-1)
        if b.size != A.shape[0]:
            raise ValueError("affine offset does not match matrix size")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("affine operator has non-finite data")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "offset", b)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.matrix.T + self.offset

    @classmethod
    def diagonal(cls, diag, offset=None, **kw):
        diag = np.asarray(diag, dtype=float)
        return cls(np.diag(diag), np.zeros(diag.size) if offset is None else offset, **kw)

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim), np.zeros(dim), Claims(lipschitz=1.0, accretive=1.0, nonexpansive=True))

    @classmethod
    def zero(cls, dim):
        return cls(np.zeros((dim, dim)), np.zeros(dim), Claims(nonexpansive=True))


@dataclass(frozen=True, eq=False)
class ScaledIdentity(Operator):
    """``x -> c x``."""

    c: float
    size: int
    claims: Claims = None
    declared_fixed: FixedSet | None = None
    kind = "scaled-identity"

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise ValueError("scale must be finite")
        if self.claims is None:
            c = abs(self.c)
            object.__setattr__(
                self,
                "claims",
                Claims(
                    contraction=c if 0 < c < 1 else None,
                    lipschitz=c if c > 0 else None,
                    accretive=self.c if self.c > 0 else None,
                    nonexpansive=c <= 1,
                ),
            )

    @property
    def dim(self):
        return self.size

    def __call__(self, x):
        return self.c * np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class Composition(Operator):
    """``ops[0] o ops[1] o ... o ops[-1]`` (the last one is applied first)."""

    ops: tuple
    claims: Claims = field(default_factory=Claims)
    declared_fixed: FixedSet | None = None
    kind = "composition"

    @property
    def dim(self):
        return self.ops[0].dim

    def __call__(self, x):
        y = np.asarray(x, dtype=float)
        for op in reversed(self.ops):
            y = op(y)
        return y


@dataclass(frozen=True, eq=False)
class Averaged(Operator):
    """``x -> alpha x + (1 - alpha) base(x)``."""

    base: Operator
    alpha: float
    claims: Claims = field(default_factory=Claims)
    declared_fixed: FixedSet | None = None
    kind = "averaged"

    @property
    def dim(self):
        return self.base.dim

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.alpha * x + (1.0 - self.alpha) * self.base(x)


@dataclass(frozen=True, eq=False)
class ConvexCombination(Operator):
    """``x -> sum_i w_i ops[i](x)``."""

    ops: tuple
    weights: tuple
    claims: Claims = field(default_factory=Claims)
    declared_fixed: FixedSet | None = None
    kind = "convex-combination"

    @property
    def dim(self):
        return self.ops[0].dim

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.weights[0] * self.ops[0](x)
        for w, op in zip(self.weights[1:], self.ops[1:]):
            out = out + w * op(x)
        return out


# --------------------------------------------------------------------------
# public operations


def apply(op: Operator, x, s: sp.SpaceSpec) -> np.ndarray:
    """Evaluate ``op`` at ``x`` after conformity checks; rejects non-finite output."""
    x = sp.conform(x, s)
    if op.dim != s.dim:
        raise ValueError(f"operator acts on R^{op.dim}, space is R^{s.dim}")
    y = op(x)
    if not np.all(np.isfinite(y)):
        raise FloatingPointError("operator produced a non-finite value")
    return y


def fixed_point_residual(op: Operator, x, s: sp.SpaceSpec):
    """``||x - op(x)||_p``."""
    return sp.norm(sp.conform(x, s) - apply(op, x, s), s)


def affine_form(op: Operator):
    """Return ``(A, b)`` with ``op(x) == A x + b``.

    Built kinds are flattened recursively; anything else is probed at the
    origin and the unit vectors.
    """
    if isinstance(op, Affine):
        return np.array(op.matrix), np.array(op.offset)
    if isinstance(op, ScaledIdentity):
        return op.c * np.eye(op.dim), np.zeros(op.dim)
    if isinstance(op, Averaged):
        A, b = affine_form(op.base)
        return op.alpha * np.eye(op.dim) + (1.0 - op.alpha) * A, (1.0 - op.alpha) * b
    if isinstance(op, ConvexCombination):
        forms = [affine_form(o) for o in op.ops]
        A = op.weights[0] * forms[0][0]
        b = op.weights[0] * forms[0][1]
        for w, (Ai, bi) in zip(op.weights[1:], forms[1:]):
            A = A + w * Ai
            b = b + w * bi
        return A, b
    if isinstance(op, Composition):
        A, b = np.eye(op.dim), np.zeros(op.dim)
        for o in reversed(op.ops):
            Ai, bi = affine_form(o)
            A, b = Ai @ A, Ai @ b + bi
        return A, b
    d = op.dim
    b = op(np.zeros(d))
    A = (op(np.eye(d)) - b).T
    return A, b


def convex_combination(ops, weights) -> ConvexCombination:
    """Weighted sum of strict pseudocontractions.

    The result claims strictness ``min_i k_i`` and fixed set equal to the
    intersection of the inputs' fixed sets.
    """
    ops = tuple(ops)
    w = tuple(float(v) for v in weights)
    if not ops or len(ops) != len(w):
        raise ValueError("need one positive weight per operator")
    if any(not (v > 0) for v in w):
        raise ValueError(f"weights must be positive, got {w}")
    if abs(math.fsum(w) - 1.0) > _WEIGHT_TOL:
        raise ValueError(f"weights must sum to 1, got sum {math.fsum(w)!r}")
    _same_dim(ops)
    ks = [op.claims.strict for op in ops]
    if any(k is None for k in ks):
        raise ValueError("every operator in a convex combination needs a strictness constant")
    if len(ops) == 1:
        return ConvexCombination(ops, w, ops[0].claims, ops[0].declared_fixed)
    lips = [op.claims.lipschitz for op in ops]
    claims = Claims(
        strict=min(ks),
        lipschitz=math.fsum(a * b for a, b in zip(w, lips)) if None not in lips else None,
        nonexpansive=all(op.claims.nonexpansive for op in ops),
    )
    return ConvexCombination(ops, w, claims, intersect_all(op.fixed_set for op in ops))


def averaged(op: Operator, alpha: float, s: sp.SpaceSpec) -> Averaged:
    """``alpha I + (1 - alpha) op``; nonexpansive once alpha reaches the threshold."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"averaging parameter must lie in (0, 1), got {alpha!r}")
    lam = op.claims.strict
    if lam is None:
        if not op.claims.nonexpansive:
            raise ValueError("averaging needs a strictness constant or a nonexpansive base")
        claims = Claims(nonexpansive=True)
    else:
        ok = alpha >= averaging_threshold(min(lam, _ONE_MINUS), s.q, s.d_q)
        claims = Claims(strict=lam / (1.0 - alpha) ** (s.q - 1.0), nonexpansive=ok or op.claims.nonexpansive)
    return Averaged(op, float(alpha), claims, op.declared_fixed)


def compose(ops) -> Composition:
    """Compose nonexpansive (averaged) maps; fixed set claim is the intersection."""
    ops = tuple(ops)
    if not ops:
        raise ValueError("nothing to compose")
    _same_dim(ops)
    for i, op in enumerate(ops):
        if not op.claims.nonexpansive:
            raise ValueError(
                f"operator {i} ({op.kind}) is not marked nonexpansive; "
                "average it with a valid parameter before composing"
            )
    return Composition(ops, Claims(nonexpansive=True), intersect_all(op.fixed_set for op in ops))


def _same_dim(ops):
    dims = {op.dim for op in ops}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch among operators: {sorted(dims)}")


# --------------------------------------------------------------------------
# problem instances


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    space: sp.SpaceSpec
    operators: tuple  # the T_i
    f: Operator
    G: Operator
    weights: tuple = None
    fixed_set: FixedSet | None = None
    name: str = "problem"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ops = tuple(self.operators)
        if not ops:
            raise ValueError("a problem needs at least one operator")
        object.__setattr__(self, "operators", ops)
        if self.weights is None:
            object.__setattr__(self, "weights", tuple([1.0 / len(ops)] * len(ops)))
        for op in ops + (self.f, self.G):
            if op.dim != self.space.dim:
                raise ValueError("operator dimension does not match the space")

    @property
    def N(self):
        return len(self.operators)

    @property
    def strictness(self):
        return [op.claims.strict for op in self.operators]

    @property
    def beta(self):
        return self.f.claims.contraction

    @property
    def eta(self):
        return self.G.claims.accretive

    @property
    def L(self):
        return self.G.claims.lipschitz

    def combined(self) -> ConvexCombination:
        return convex_combination(self.operators, self.weights)

    def averaged_combined(self, beta) -> Averaged:
        return averaged(self.combined(), beta, self.space)

    def common_fixed_set(self):
        if self.fixed_set is not None:
            return self.fixed_set
        return intersect_all(op.fixed_set for op in self.operators)


def canonical_problem() -> ProblemInstance:
    """Two diagonal maps on the plane sharing the x-axis as fixed set.

    T1 = diag(1, 0), T2 = diag(1, -0.5), equal weights, G = I and
    f(x) = 0.1 x + (1, 1).  Both T_i are declared 0.5-strict.
    """
    s = sp.SpaceSpec.hilbert(2)
    axis = FixedSet(np.zeros(2), np.array([[1.0], [0.0]]))
    t1 = Affine.diagonal([1.0, 0.0], claims=Claims(strict=0.5, lipschitz=1.0), declared_fixed=axis)
    t2 = Affine.diagonal([1.0, -0.5], claims=Claims(strict=0.5, lipschitz=1.0), declared_fixed=axis)
    f = Affine(0.1 * np.eye(2), np.ones(2), Claims(contraction=0.1, lipschitz=0.1))
    G = Affine(np.eye(2), np.zeros(2), Claims(accretive=1.0, lipschitz=1.0, nonexpansive=True))
    return ProblemInstance(s, (t1, t2), f, G, (0.5, 0.5), axis, "canonical")


def hilbert_strictness(eigs) -> float:
    """Largest lambda with ``a <= 1 - lambda (1 - a)^2`` for every eigenvalue ``a != 1``."""
    c = 1.0 - np.asarray(eigs, dtype=float)
    c = c[np.abs(c) > 1e-14]
    if np.any(c < 0):
        raise ValueError("eigenvalues above 1 never give a strict pseudocontraction")
    return float(np.min(1.0 / c)) if c.size else math.inf


def lp_diagonal_strictness(eigs, p) -> float:
    """Largest lambda for a diagonal map in l_p with q = p: ``min (1-a)^(1-p)``."""
    c = 1.0 - np.asarray(eigs, dtype=float)
    c = c[np.abs(c) > 1e-14]
    if np.any(c < 0):
        raise ValueError("eigenvalues above 1 never give a strict pseudocontraction")
    return float(np.min(c ** (1.0 - p))) if c.size else math.inf


@lru_cache(maxsize=None)
def consensus_accretivity(dim, p, q, samples=20000, seed=12345) -> float:
    """Sampled estimate of ``inf <(I-P)d, j_q(d)> / ||(I-P)d||^q`` for the mean projection P.

    Sampling plus a local refinement from the worst samples; this is an
    estimate from above, so callers shrink it before claiming it.
    """
    from scipy.optimize import minimize

    s = sp.SpaceSpec(dim, p, q, 1.0)
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((samples, dim))
    half = samples // 2
    d[:half] = rng.standard_normal((half, 1)) + 10.0 ** rng.uniform(-4, 0, (half, 1)) * d[:half]

    def ratio(v):
        v = np.atleast_2d(v)
        e = v - v.mean(axis=-1, keepdims=True)
        num = np.sum(e * sp.duality_map(v, s), axis=-1)
        den = sp._lp(e, p) ** q
        return np.where(den > 1e-300, num / np.where(den > 1e-300, den, 1.0), np.inf)

    r = ratio(d)
    best = float(np.min(r))
    for i in np.argsort(r)[:5]:
        res = minimize(lambda v: float(ratio(v)[0]), d[i], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        best = min(best, float(res.fun))
    return best


def generate_problem(seed, dim, N, s: sp.SpaceSpec, *, fixed_dim=None, eig_range=(-0.9, 0.9),
                     strictness_cap=0.5, contraction_range=(0.05, 0.5), g_spectrum=(0.5, 2.0),
                     offset_scale=1.0, safety=0.8) -> ProblemInstance:
    """Random problem with a known common fixed affine subspace.

    When q = p (Hilbert included) the T_i are diagonal-affine with eigenvalue 1
    on a shared coordinate subspace and eigenvalues drawn from ``eig_range``
    elsewhere; strictness follows in closed form.  For p > 2, q = 2 a
    diagonal map with a nontrivial fixed coordinate is never strictly
    pseudocontractive, so the T_i instead shrink towards a common line of
    constant-magnitude vectors, with strictness from a shrunk sampled bound.

    f is an affine contraction; G is symmetric positive definite in the
    Hilbert case and ``c I`` otherwise.  Deterministic in ``seed``.
    """
    if dim < 2 or N < 1:
        raise ValueError("need dim >= 2 and N >= 1")
    if s.dim != dim:
        raise ValueError(f"space dimension {s.dim} does not match dim={dim}")
    lo, hi = eig_range
    if not (lo < hi < 1.0):
        raise ValueError(f"eig_range must satisfy lo < hi < 1, got {eig_range}")
    if not (0.0 < contraction_range[0] <= contraction_range[1] < 1.0):
        raise ValueError(f"contraction_range must lie in (0, 1), got {contraction_range}")
    if not (0.0 < g_spectrum[0] <= g_spectrum[1]):
        raise ValueError(f"g_spectrum must be positive, got {g_spectrum}")
    if not (0.0 < strictness_cap):
        raise ValueError("strictness_cap must be positive")
    rng = np.random.default_rng(seed)
    diagonal_mode = sp._close(s.p, s.q)
    if not diagonal_mode and not (s.p > 2.0 and sp._close(s.q, 2.0)):
        raise ValueError(f"no generator for (p={s.p:g}, q={s.q:g})")

    if diagonal_mode:
        r = int(rng.integers(1, dim)) if fixed_dim is None else int(fixed_dim)
        if not (0 <= r < dim):
            raise ValueError(f"fixed_dim must lie in [0, dim), got {r}")
        coords = np.sort(rng.choice(dim, size=r, replace=False))
        basis = np.eye(dim)[:, coords]
    else:
        if fixed_dim not in (None, 1):
            raise ValueError("for p > 2 the generated common fixed set is a line; fixed_dim must be 1")
        signs = rng.choice([-1.0, 1.0], size=dim)
        basis = (signs / math.sqrt(dim))[:, None]
    anchor = offset_scale * rng.standard_normal(dim)
    fixed = FixedSet(anchor, basis)
    free = np.ones(dim, bool)
    if diagonal_mode:
        free[coords] = False

    ops = []
    for _ in range(N):
        if diagonal_mode:
            eigs = np.ones(dim)
            eigs[free] = rng.uniform(lo, hi, size=int(free.sum()))
            lam_max = hilbert_strictness(eigs) if s.is_hilbert else lp_diagonal_strictness(eigs, s.p)
            A = np.diag(eigs)
            k = min(lam_max, strictness_cap)
        else:
            a = float(rng.uniform(lo, hi))
            P = basis @ basis.T
            A = P + a * (np.eye(dim) - P)
            kappa = consensus_accretivity(dim, s.p, s.q)
            k = min(safety * kappa / (1.0 - a), strictness_cap)
        b = (np.eye(dim) - A) @ fixed.anchor
        ops.append(Affine(A, b, Claims(strict=k), declared_fixed=fixed))
    raw = rng.uniform(0.5, 1.5, size=N)
    weights = tuple(float(w) for w in raw / raw.sum())
    weights = weights[:-1] + (1.0 - math.fsum(weights[:-1]),)

    beta = float(rng.uniform(*contraction_range))
    h = offset_scale * rng.standard_normal(dim)
    if s.is_hilbert:
        Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        F = beta * Q
        f = Affine(F, h, Claims(contraction=beta, lipschitz=beta))
        spec_ = np.sort(rng.uniform(*g_spectrum, size=dim))
        Q2, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        S = (Q2 * spec_) @ Q2.T
        S = 0.5 * (S + S.T)
        ev = np.linalg.eigvalsh(S)
        g = offset_scale * rng.standard_normal(dim)
        G = Affine(S, g, Claims(accretive=float(ev[0]), lipschitz=float(ev[-1])))
    else:
        f = Affine(beta * np.eye(dim), h, Claims(contraction=beta, lipschitz=beta))
        c = float(rng.uniform(*g_spectrum))
        G = ScaledIdentity(c, dim)
    meta = dict(seed=seed, dim=dim, N=N, fixed_dim=fixed.rank, eig_range=tuple(eig_range),
                strictness_cap=strictness_cap, mode="diagonal" if diagonal_mode else "consensus-line")
    return ProblemInstance(s, tuple(ops), f, G, weights, fixed, f"generated-{seed}", meta)
