"""Zonotopes, matrix zonotopes and the set operations used by the reachability code.

A zonotope ``<c, G>`` is the set ``{c + G @ beta : |beta|_inf <= 1}``. A matrix
zonotope ``<C, {G_i}>`` is the analogous set of matrices. All objects are
immutable; every operation returns a new object.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

__all__ = [
    "Zonotope",
    "MatrixZonotope",
    "Box",
    "linear_map",
    "minkowski_sum",
    "cartesian_product",
    "matzono_zono_product",
    "interval_hull",
    "reduce_order",
    "contains",
    "sample_member",
    "sample_points",
    "matzono_right_multiply",
    "matzono_interval_hull",
    "matzono_contains",
]

MEMBERSHIP_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Zonotope:
    center: np.ndarray
    generators: np.ndarray

    def __init__(self, center, generators=None):
        c = np.atleast_1d(np.asarray(center, dtype=float)).reshape(-1)
        if generators is None:
            g = np.zeros((c.size, 0))
        else:
            g = np.asarray(generators, dtype=float)
            if g.ndim == 1:
                g = g.reshape(c.size, -1)
        if g.ndim != 2 or g.shape[0] != c.size:
            raise ValueError(
                f"generator matrix shape {g.shape} incompatible with center of dimension {c.size}"
            )
        object.__setattr__(self, "center", _frozen(c))
        object.__setattr__(self, "generators", _frozen(g))

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def order(self) -> int:
        """Number of generators."""
        return self.generators.shape[1]

    @classmethod
    def point(cls, x) -> "Zonotope":
        return cls(x)

    @classmethod
    def from_box(cls, lower, upper) -> "Zonotope":
        lower = np.asarray(lower, dtype=float).reshape(-1)
        upper = np.asarray(upper, dtype=float).reshape(-1)
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        return cls((lower + upper) / 2, np.diag((upper - lower) / 2))

    def __repr__(self) -> str:
        return f"Zonotope(dim={self.dim}, order={self.order})"


@dataclass(frozen=True, eq=False)
class MatrixZonotope:
    """Matrix zonotope with generators stored as an array of shape (gamma, n, m)."""

    center: np.ndarray
    generators: np.ndarray

    def __init__(self, center, generators=None):
        c = np.atleast_2d(np.asarray(center, dtype=float))
        if generators is None:
            g = np.zeros((0,) + c.shape)
        else:
            g = np.asarray(generators, dtype=float)
            if g.size == 0:
                g = np.zeros((0,) + c.shape)
            if g.ndim == 2:
                g = g[None]
        if g.ndim != 3 or g.shape[1:] != c.shape:
            raise ValueError(
                f"generator stack shape {g.shape} incompatible with center shape {c.shape}"
            )
        object.__setattr__(self, "center", _frozen(c))
        object.__setattr__(self, "generators", _frozen(g))

    @property
    def shape(self) -> tuple[int, int]:
        return self.center.shape

    @property
    def order(self) -> int:
        return self.generators.shape[0]

    def __repr__(self) -> str:
        return f"MatrixZonotope(shape={self.shape}, order={self.order})"


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __init__(self, lower, upper):
        lo = np.atleast_1d(np.asarray(lower, dtype=float))
        hi = np.atleast_1d(np.asarray(upper, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("bound shapes differ")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", _frozen(lo))
        object.__setattr__(self, "upper", _frozen(hi))

    @property
    def radius(self) -> np.ndarray:
        return (self.upper - self.lower) / 2

    @property
    def center(self) -> np.ndarray:
        return (self.upper + self.lower) / 2

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def issubset(self, other: "Box", tol: float = 0.0) -> bool:
        return bool(
            np.all(self.lower >= other.lower - tol) and np.all(self.upper <= other.upper + tol)
        )


def linear_map(L, Z: Zonotope) -> Zonotope:
    L = np.atleast_2d(np.asarray(L, dtype=float))
    if L.shape[1] != Z.dim:
        raise ValueError(f"cannot map a {Z.dim}-dimensional zonotope with a {L.shape} matrix")
    return Zonotope(L @ Z.center, L @ Z.generators)


def minkowski_sum(Z1: Zonotope, Z2: Zonotope) -> Zonotope:
    if Z1.dim != Z2.dim:
        raise ValueError(f"dimension mismatch: {Z1.dim} vs {Z2.dim}")
    return Zonotope(Z1.center + Z2.center, np.hstack([Z1.generators, Z2.generators]))


def cartesian_product(Z1: Zonotope, Z2: Zonotope) -> Zonotope:
    G = np.zeros((Z1.dim + Z2.dim, Z1.order + Z2.order))
    G[: Z1.dim, : Z1.order] = Z1.generators
    G[Z1.dim :, Z1.order :] = Z2.generators
    return Zonotope(np.concatenate([Z1.center, Z2.center]), G)


def matzono_zono_product(M: MatrixZonotope, Z: Zonotope) -> Zonotope:
    """Sound over-approximation of ``{X @ z : X in M, z in Z}``.

    Generators are ``[C G_Z, G_i c_Z, G_i G_Z]``; the bilinear terms
    ``beta_i * beta_Z_j`` range over [-1, 1] and are treated as independent.
    """
    n, m = M.shape
    if m != Z.dim:
        raise ValueError(f"matrix zonotope with {m} columns cannot act on dimension {Z.dim}")
    parts = [M.center @ Z.generators]
    if M.order:
        parts.append(np.einsum("gnm,m->ng", M.generators, Z.center))
        if Z.order:
            parts.append(np.einsum("gnm,mk->ngk", M.generators, Z.generators).reshape(n, -1))
    return Zonotope(M.center @ Z.center, np.hstack(parts))


def interval_hull(Z: Zonotope) -> Box:
    r = np.abs(Z.generators).sum(axis=1)
    return Box(Z.center - r, Z.center + r)


def reduce_order(Z: Zonotope, max_generators: int) -> Zonotope:
    """Box-merge the smallest generators so at most ``max_generators`` remain.

    The ``max_generators - dim`` largest generators (1-norm) are kept; the rest are
    replaced by the axis-aligned box that bounds them.
    """
    d = Z.dim
    if max_generators < d:
        raise ValueError(f"budget {max_generators} below zonotope dimension {d}")
    if Z.order <= max_generators:
        return Z
    G = Z.generators
    keep = max_generators - d
    order = np.argsort(np.abs(G).sum(axis=0))[::-1]
    kept = G[:, order[:keep]]
    merged = np.abs(G[:, order[keep:]]).sum(axis=1)
    box = np.diag(merged)[:, merged > 0]
    return Zonotope(Z.center, np.hstack([kept, box]))


def _feasible_coefficients(G: np.ndarray, r: np.ndarray) -> np.ndarray | None:
    """Some ``beta`` in the unit cube with ``G beta = r``, or None when the LP is infeasible."""
    res = linprog(
        np.zeros(G.shape[1]),
        A_eq=G,
        b_eq=r,
        bounds=(-1.0, 1.0),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        return None
    return res.x


def contains(Z: Zonotope, x, tol: float = MEMBERSHIP_TOL) -> bool:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != Z.dim:
        raise ValueError(f"point of dimension {x.size} tested against zonotope of dimension {Z.dim}")
    r = x - Z.center
    scale = 1.0 + np.abs(Z.generators).sum(axis=1).max(initial=0.0) + np.abs(x).max(initial=0.0)
    if Z.order == 0:
        return bool(np.abs(r).max(initial=0.0) <= tol * scale)
    if not interval_hull(Z).contains(x, tol=tol * scale):
        return False
    beta = _feasible_coefficients(Z.generators, r)
    if beta is None:
        return False
    residual = np.abs(Z.generators @ np.clip(beta, -1.0, 1.0) - r).max(initial=0.0)
    return bool(residual <= tol * scale)


def sample_points(Z: Zonotope, count: int, rng: np.random.Generator) -> np.ndarray:
    """Points ``c + G beta`` with ``beta`` uniform on the unit cube; shape (count, dim)."""
    beta = rng.uniform(-1.0, 1.0, size=(count, Z.order))
    return Z.center + beta @ Z.generators.T


def sample_member(M: MatrixZonotope, rng: np.random.Generator) -> np.ndarray:
    if M.order == 0:
        return M.center.copy()
    beta = rng.uniform(-1.0, 1.0, size=M.order)
    return M.center + np.tensordot(beta, M.generators, axes=1)


def matzono_right_multiply(M: MatrixZonotope, R) -> MatrixZonotope:
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if R.shape[0] != M.shape[1]:
        raise ValueError(f"cannot right-multiply {M.shape} by {R.shape}")
    return MatrixZonotope(M.center @ R, M.generators @ R)


def matzono_interval_hull(M: MatrixZonotope) -> tuple[np.ndarray, np.ndarray]:
    """Entrywise lower and upper bounds of a matrix zonotope."""
    r = np.abs(M.generators).sum(axis=0)
    return M.center - r, M.center + r


def matzono_contains(M: MatrixZonotope, X, tol: float = MEMBERSHIP_TOL) -> bool:
    X = np.asarray(X, dtype=float)
    if X.shape != M.shape:
        raise ValueError(f"matrix of shape {X.shape} tested against {M.shape}")
    flat = Zonotope(M.center.ravel(), M.generators.reshape(M.order, -1).T)
    return contains(flat, X.ravel(), tol=tol)
