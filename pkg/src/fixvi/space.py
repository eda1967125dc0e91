"""Finite-dimensional l_p spaces: norms, dual pairing and the duality map j_q.

Vectors are plain float64 numpy arrays.  Every function here also accepts a
stack of vectors with shape ``(..., dim)`` and reduces over the last axis,
which the trace post-processing relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .reports import Report

_EXP_TOL = 1e-12


def default_dq(p: float, q: float) -> float | None:
    """Smoothness constant used when the caller does not supply one.

    ``1`` for the Hilbert pair, ``p - 1`` for ``p >= 2, q = 2``; ``None`` for
    ``1 < p < 2, q = p`` where the value must come from the user.
    """
    if _close(p, 2.0) and _close(q, 2.0):
        return 1.0
    if p >= 2.0 and _close(q, 2.0):
        return p - 1.0
    return None


def _close(a, b):
    return abs(a - b) <= _EXP_TOL


@dataclass(frozen=True)
class SpaceSpec:
    """The space R^dim with the l_p norm, smoothness order q and constant d_q."""

    dim: int
    p: float = 2.0
    q: float = 2.0
    d_q: float | None = None

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        if not (math.isfinite(self.p) and self.p > 1):
            raise ValueError(f"p must satisfy 1 < p < inf, got {self.p!r}")
        if not (math.isfinite(self.q) and self.q > 1):
            raise ValueError(f"q must be > 1, got {self.q!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", float(self.q))
        if self.d_q is None:
            dq = default_dq(self.p, self.q)
            if dq is None:
                raise ValueError(
                    f"no default smoothness constant for (p={self.p}, q={self.q}); "
                    "supply d_q explicitly"
                )
            object.__setattr__(self, "d_q", dq)
        if not (math.isfinite(self.d_q) and self.d_q > 0):
            raise ValueError(f"d_q must be positive, got {self.d_q!r}")
        object.__setattr__(self, "d_q", float(self.d_q))

    @property
    def is_hilbert(self) -> bool:
        return _close(self.p, 2.0) and _close(self.q, 2.0)

    @property
    def p_dual(self) -> float:
        return self.p / (self.p - 1.0)

    @classmethod
    def hilbert(cls, dim):
        return cls(dim, 2.0, 2.0, 1.0)


def conform(v, s: SpaceSpec, name="vector") -> np.ndarray:
    """Return ``v`` as a float array after checking dimension and finiteness."""
    a = np.asarray(v, dtype=float)
    if a.ndim == 0 or a.shape[-1] != s.dim:
        raise ValueError(f"{name} has shape {a.shape}, expected last axis {s.dim}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def _lp(a, p):
    if p == 2.0:
        return np.sqrt(np.sum(a * a, axis=-1))
    m = np.max(np.abs(a), axis=-1, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    return np.squeeze(safe, -1) * np.sum(np.abs(a / safe) ** p, axis=-1) ** (1.0 / p)


def norm(v, s: SpaceSpec):
    """l_p norm ``(sum |v_i|^p)^(1/p)``."""
    return _lp(conform(v, s), s.p)


def dual_norm(xs, s: SpaceSpec):
    """Norm of a dual vector, i.e. the l_{p'} norm with ``p' = p/(p-1)``."""
    return _lp(conform(xs, s, "dual vector"), s.p_dual)


def dual_pair(xs, y, s: SpaceSpec):
    """Pairing ``<y, xs> = sum xs_i y_i`` of a dual vector with a vector."""
    xs = conform(xs, s, "dual vector")
    y = conform(y, s)
    return np.sum(xs * y, axis=-1)


def duality_map(x, s: SpaceSpec) -> np.ndarray:
    """Single-valued generalized duality map j_q on l_p.

    For ``x != 0`` the components are ``||x||^(q-p) |x_i|^(p-1) sign(x_i)``,
    so that ``<x, j_q(x)> = ||x||^q`` and ``||j_q(x)||_{p'} = ||x||^(q-1)``.
    ``j_q(0)`` is the zero functional.
    """
    x = conform(x, s)
    if s.is_hilbert:
        return x.copy()
    p, q = s.p, s.q
    # j_q(x) = ||x||^(q-1) |u|^(p-1) sign(u) with u = x/||x||; avoids overflow of ||x||^(q-p)
    nx = np.expand_dims(_lp(x, p), -1)
    safe = np.where(nx > 0, nx, 1.0)
    u = x / safe
    return np.where(nx > 0, safe ** (q - 1.0) * (np.abs(u) ** (p - 1.0) * np.sign(u)), 0.0)


def validate_space(s: SpaceSpec) -> Report:
    """Check (p, q) against the smoothness table for l_p.

    l_p is 2-uniformly smooth for p >= 2 and p-uniformly smooth for
    1 < p <= 2; any other pair is reported as unsupported.  A warning is
    issued when ``d_q`` differs from the module default for the pair.
    """
    rep = Report(f"space l_{s.p:g}^{s.dim} (q={s.q:g}, d_q={s.d_q:g})")
    supported = (s.p >= 2.0 and _close(s.q, 2.0)) or (1.0 < s.p <= 2.0 and _close(s.q, s.p))
    rep.add(
        "smoothness_pair",
        supported,
        message="" if supported else f"unsupported pair (p={s.p:g}, q={s.q:g})",
    )
    dq = default_dq(s.p, s.q)
    if dq is None and supported:
        rep.warn(f"d_q={s.d_q:g} is user supplied for (p={s.p:g}, q={s.q:g}); certify it before use")
    elif dq is not None and not _close(dq, s.d_q):
        rep.warn(f"d_q={s.d_q:g} differs from the default {dq:g} for (p={s.p:g}, q={s.q:g})")
    return rep
