"""Data-driven model sets and error-system reachable tubes."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datagen import DataArchive, rank_tolerance
from .zonoset import (
    MatrixZonotope,
    Zonotope,
    cartesian_product,
    interval_hull,
    linear_map,
    matzono_right_multiply,
    matzono_zono_product,
    minkowski_sum,
    reduce_order,
)

__all__ = [
    "NoiseSpec",
    "SystemSet",
    "ReachTube",
    "RankDeficiencyError",
    "default_noise",
    "build_noise_matrix_zonotope",
    "estimate_system_set",
    "error_reach_tube",
    "export_tube_csv",
]


class RankDeficiencyError(ValueError):
    """The regressor [X-; U-; E-] does not have full row rank."""

    def __init__(self, message: str, dependent_rows: list[int]):
        super().__init__(message)
        self.dependent_rows = dependent_rows


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    z_w: Zonotope
    z_eps: Zonotope

    def __post_init__(self):
        for name, z in (("z_w", self.z_w), ("z_eps", self.z_eps)):
            if not interval_hull(z).contains(np.zeros(z.dim)):
                raise ValueError(f"{name} must contain the origin")
        if self.z_eps.dim != 1:
            raise ValueError("z_eps must be one-dimensional")


def default_noise(n: int, w_bound: float = 0.05, eps_bound: float = 0.5) -> NoiseSpec:
    """Axis-aligned boxes |w_j| <= w_bound and |eps| <= eps_bound."""
    return NoiseSpec(
        Zonotope.from_box(-w_bound * np.ones(2 * n), w_bound * np.ones(2 * n)),
        Zonotope.from_box([-eps_bound], [eps_bound]),
    )


@dataclass(frozen=True, eq=False)
class SystemSet:
    m_abh: MatrixZonotope
    m_ab: MatrixZonotope
    rank: int
    rank_tol: float

    @property
    def n(self) -> int:
        return self.m_abh.shape[0] // 2


@dataclass(frozen=True, eq=False)
class ReachTube:
    """Error reachable sets for steps 1..N and their images under K."""

    sets: tuple[Zonotope, ...]
    input_sets: tuple[Zonotope, ...]

    def __len__(self) -> int:
        return len(self.sets)

    @classmethod
    def zero(cls, state_dim: int, N: int) -> "ReachTube":
        return cls(tuple(Zonotope(np.zeros(state_dim)) for _ in range(N)),
                   tuple(Zonotope(np.zeros(1)) for _ in range(N)))

    def state_radii(self) -> np.ndarray:
        """Interval-hull radii, shape (N, state_dim), including the center offset."""
        return np.array([np.abs(interval_hull(z).center) + interval_hull(z).radius for z in self.sets])

    def input_radii(self) -> np.ndarray:
        return np.array([
            float(np.abs(interval_hull(z).center[0]) + interval_hull(z).radius[0]) for z in self.input_sets
        ])


def build_noise_matrix_zonotope(z_w: Zonotope, T: int) -> MatrixZonotope:
    """Matrix zonotope holding every noise sequence [w(1) .. w(T)] with w(k) in z_w."""
    d, g = z_w.dim, z_w.order
    gens = np.zeros((g * T, d, T))
    for k in range(g):
        for j in range(T):
            gens[k * T + j, :, j] = z_w.generators[:, k]
    return MatrixZonotope(np.tile(z_w.center[:, None], (1, T)), gens)


def _noise_times_pinv(z_w: Zonotope, pinv: np.ndarray) -> np.ndarray:
    """Generators of M_w @ pinv without forming M_w: each is g_k outer pinv[j, :]."""
    # (g, d) x (T, m) -> (g*T, d, m)
    G = z_w.generators.T
    return np.einsum("ka,jb->kjab", G, pinv).reshape(-1, z_w.dim, pinv.shape[1])


def estimate_system_set(archive: DataArchive, noise: NoiseSpec) -> SystemSet:
    """Matrix zonotope of all [A B H] consistent with the data and the noise bound."""
    D = archive.regressor
    rows, T = D.shape
    if T < rows:
        raise RankDeficiencyError(f"only {T} samples for a rank-{rows} regressor", list(range(T, rows)))
    U_, sv, Vt = np.linalg.svd(D, full_matrices=False)
    tol = rank_tolerance(D, sv)
    rank = int(np.sum(sv > tol))
    if rank < rows:
        # rows involved in the null space of D^T
        null = U_[:, rank:]
        dependent = sorted(int(i) for i in np.flatnonzero(np.abs(null).max(axis=1) > 1e-8))
        raise RankDeficiencyError(
            f"regressor [X-; U-; E-] has rank {rank} < {rows}; dependent rows {dependent}", dependent
        )
    pinv = (Vt.T / sv) @ U_.T
    if noise.z_w.dim != archive.X.shape[0]:
        raise ValueError("noise zonotope dimension does not match the state")
    center = (archive.X_plus - noise.z_w.center[:, None]) @ pinv
    gens = -_noise_times_pinv(noise.z_w, pinv)
    m_abh = MatrixZonotope(center, gens)
    n2 = archive.X.shape[0]
    selector = np.vstack([np.eye(n2 + 1), np.zeros((1, n2 + 1))])
    return SystemSet(m_abh, matzono_right_multiply(m_abh, selector), rank, tol)


def error_reach_tube(
    sys: SystemSet,
    K,
    noise: NoiseSpec,
    R0: Zonotope | None,
    N: int,
    reduction_budget: int | None = None,
) -> ReachTube:
    """N-step recursion R_{i+1} = M_ABH (R_i x K R_i x Z_eps) + Z_w with order reduction."""
    n2 = sys.m_abh.shape[0]
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape != (1, n2):
        raise ValueError(f"gain must be 1 x {n2}")
    if reduction_budget is None:
        reduction_budget = 5 * n2
    R = Zonotope(np.zeros(n2)) if R0 is None else R0
    sets, inputs = [], []
    for _ in range(N):
        KR = linear_map(K, R)
        stacked = cartesian_product(cartesian_product(R, KR), noise.z_eps)
        R = minkowski_sum(matzono_zono_product(sys.m_abh, stacked), noise.z_w)
        R = reduce_order(R, reduction_budget)
        sets.append(R)
        inputs.append(linear_map(K, R))
    return ReachTube(tuple(sets), tuple(inputs))


def export_tube_csv(tube: ReachTube, path) -> Path:
    path = Path(path)
    d = tube.sets[0].dim
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["step"] + [f"lo_{j}" for j in range(d)] + [f"hi_{j}" for j in range(d)]
                    + ["u_lo", "u_hi"])
        for i, (z, kz) in enumerate(zip(tube.sets, tube.input_sets), start=1):
            h, hk = interval_hull(z), interval_hull(kz)
            wr.writerow([i, *h.lower, *h.upper, hk.lower[0], hk.upper[0]])
    return path
