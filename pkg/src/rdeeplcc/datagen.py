"""Offline data collection, Hankel matrices and excitation checks."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .platoon import (
    PlatoonModel,
    deviation_state,
    desired_velocity_slope,
    equilibrium_state,
    ovm_acceleration,
    step_linear,
    step_nonlinear,
)

__all__ = [
    "DataArchive",
    "HankelBlocks",
    "generate_excitation",
    "build_hankel",
    "rank_tolerance",
    "check_persistent_excitation",
    "check_data_length",
    "minimum_data_length",
    "collect_archive",
    "partition_hankels",
    "save_archive",
    "load_archive",
    "export_archive_csv",
]

ARCHIVE_FORMAT = "rdeeplcc-archive/1"
RANK_GUARD = 10.0


class PersistentExcitationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DataArchive:
    """Raw sequences U, E (length T+1) and X (2n x (T+1)) with collection metadata."""

    U: np.ndarray
    E: np.ndarray
    X: np.ndarray
    dt: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float).reshape(-1)
        E = np.asarray(self.E, dtype=float).reshape(-1)
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        if not (U.size == E.size == X.shape[1]):
            raise ValueError("U, E and X must share the sample count T+1")
        if X.shape[0] % 2:
            raise ValueError("state dimension must be even (spacing, velocity per vehicle)")
        for name, a in (("U", U), ("E", E), ("X", X)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def T(self) -> int:
        return self.U.size - 1

    @property
    def n(self) -> int:
        return self.X.shape[0] // 2

    @property
    def U_minus(self) -> np.ndarray:
        return self.U[None, :-1]

    @property
    def E_minus(self) -> np.ndarray:
        return self.E[None, :-1]

    @property
    def X_minus(self) -> np.ndarray:
        return self.X[:, :-1]

    @property
    def X_plus(self) -> np.ndarray:
        return self.X[:, 1:]

    @property
    def regressor(self) -> np.ndarray:
        """Stacked [X-; U-; E-] of shape (2n+2, T)."""
        return np.vstack([self.X_minus, self.U_minus, self.E_minus])


@dataclass(frozen=True, eq=False)
class HankelBlocks:
    Up: np.ndarray
    Uf: np.ndarray
    Ep: np.ndarray
    Ef: np.ndarray
    Xp: np.ndarray
    Xf: np.ndarray
    T_ini: int
    N: int

    @property
    def columns(self) -> int:
        return self.Up.shape[1]

    @property
    def state_dim(self) -> int:
        return self.Xp.shape[0] // self.T_ini

    def stacked(self) -> np.ndarray:
        return np.vstack([self.Xp, self.Up, self.Ep, self.Xf, self.Uf, self.Ef])


def generate_excitation(T: int, u_bound: float, e_bound: float, rng: np.random.Generator):
    """I.i.d. uniform input and head-disturbance sequences of length T+1."""
    if T < 1:
        raise ValueError("T must be at least 1")
    U = rng.uniform(-u_bound, u_bound, size=T + 1) if u_bound > 0 else np.zeros(T + 1)
    E = rng.uniform(-e_bound, e_bound, size=T + 1) if e_bound > 0 else np.zeros(T + 1)
    return U, E


def build_hankel(seq, L: int) -> np.ndarray:
    """Block Hankel matrix with L block rows.

    ``seq`` is either a 1-D signal or a (d, T) array whose columns are samples.
    """
    w = np.asarray(seq, dtype=float)
    if w.ndim == 1:
        w = w[None, :]
    d, T = w.shape
    if L < 1 or L > T:
        raise ValueError(f"Hankel order {L} not in [1, {T}]")
    cols = T - L + 1
    H = np.empty((L * d, cols))
    for i in range(L):
        H[i * d : (i + 1) * d] = w[:, i : i + cols]
    return H


def rank_tolerance(M: np.ndarray, sv: np.ndarray | None = None) -> float:
    if sv is None:
        sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0:
        return 0.0
    return float(sv[0] * max(M.shape) * np.finfo(float).eps * RANK_GUARD)


def check_persistent_excitation(seq, L: int) -> bool:
    H = build_hankel(seq, L)
    if H.shape[0] > H.shape[1]:
        return False
    sv = np.linalg.svd(H, compute_uv=False)
    if sv[0] == 0:
        return False
    return bool(np.sum(sv > rank_tolerance(H, sv)) == H.shape[0])


def minimum_data_length(T_ini: int, N: int, n: int) -> int:
    return 2 * (T_ini + N + 2 * n) - 1


def check_data_length(T: int, T_ini: int, N: int, n: int) -> bool:
    return T >= minimum_data_length(T_ini, N, n)


def _cav_prior_linear(model: PlatoonModel, x: np.ndarray, eps: float) -> float:
    """Linearized car-following law of the CAV (same form as an HDV row)."""
    p = model.params[0]
    gamma1 = p.alpha * float(desired_velocity_slope(p, model.s_star[0]))
    return gamma1 * x[0] - (p.alpha + p.beta) * x[1] + p.beta * eps


def collect_archive(
    model: PlatoonModel,
    excitation: tuple[np.ndarray, np.ndarray],
    noise_bound: float,
    rng: np.random.Generator,
    plant: str = "nonlinear",
    cav_prior: bool = False,
    pe_order: int | None = None,
    meta: dict | None = None,
) -> DataArchive:
    """Run the excitation through the platoon and record deviation states.

    By default the CAV acceleration is the excitation itself. With ``cav_prior``
    the CAV adds the excitation on top of its own car-following law, which keeps
    its spacing from drifting but makes the recorded input mostly state feedback.
    The archive always stores the input that was actually applied.
    """
    U_exc, E = (np.asarray(a, dtype=float) for a in excitation)
    if U_exc.shape != E.shape:
        raise ValueError("excitation sequences differ in length")
    if pe_order is not None:
        for name, seq in (("input", U_exc), ("disturbance", E)):
            if not check_persistent_excitation(seq[:-1], pe_order):
                raise PersistentExcitationError(f"{name} excitation is not PE of order {pe_order}")
    T1 = U_exc.size
    n, dt = model.n, model.dt
    X = np.zeros((2 * n, T1))
    U = np.zeros(T1)
    if plant == "nonlinear":
        state = equilibrium_state(model)
        state = type(state)(state.positions, np.concatenate([[model.v_star + E[0]], state.velocities[1:]]))
        for k in range(T1):
            X[:, k], _ = deviation_state(state, model.s_star, model.v_star)
            u = U_exc[k]
            if cav_prior:
                s, v = state.spacings[0], state.velocities
                u += float(ovm_acceleration(model.params[0], s, v[0] - v[1], v[1]))
            U[k] = u
            if k + 1 < T1:
                w = rng.uniform(-noise_bound, noise_bound, 2 * n) if noise_bound > 0 else None
                state = step_nonlinear(state, u, model.v_star + E[k + 1], w, dt, model.params)
    elif plant == "linear":
        x = np.zeros(2 * n)
        for k in range(T1):
            X[:, k] = x
            u = U_exc[k] + (_cav_prior_linear(model, x, E[k]) if cav_prior else 0.0)
            U[k] = u
            w = rng.uniform(-noise_bound, noise_bound, 2 * n) if noise_bound > 0 else None
            x = step_linear(model, x, u, E[k], w)
    else:
        raise ValueError(f"unknown plant {plant!r}")
    info = {"n": n, "T": T1 - 1, "dt": dt, "v_star": model.v_star, "noise_bound": noise_bound,
            "plant": plant, "cav_prior": cav_prior}
    info.update(meta or {})
    return DataArchive(U, E, X, dt, info)


def partition_hankels(archive: DataArchive, T_ini: int, N: int) -> HankelBlocks:
    n = archive.n
    if not check_data_length(archive.T, T_ini, N, n):
        raise ValueError(
            f"T={archive.T} below minimum {minimum_data_length(T_ini, N, n)} for T_ini={T_ini}, N={N}"
        )
    L = T_ini + N
    HU = build_hankel(archive.U_minus, L)
    HE = build_hankel(archive.E_minus, L)
    HX = build_hankel(archive.X_minus, L)
    s = 2 * n * T_ini
    return HankelBlocks(HU[:T_ini], HU[T_ini:], HE[:T_ini], HE[T_ini:], HX[:s], HX[s:], T_ini, N)


def save_archive(archive: DataArchive, path) -> Path:
    """Write an ``.npz`` container with a JSON header and the raw sequences."""
    path = Path(path)
    header = {"format": ARCHIVE_FORMAT, "dt": archive.dt, **archive.meta}
    with open(path, "wb") as fh:
        np.savez(fh, header=np.array(json.dumps(header)), U=archive.U, E=archive.E, X=archive.X)
    return path


def load_archive(path) -> DataArchive:
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format") != ARCHIVE_FORMAT:
            raise ValueError(f"{path}: not an archive file ({header.get('format')!r})")
        dt = header.pop("dt")
        header.pop("format")
        return DataArchive(data["U"], data["E"], data["X"], dt, header)


def export_archive_csv(archive: DataArchive, path) -> Path:
    """Columns k, u, eps, s_1..s_n, v_1..v_n (deviation coordinates)."""
    path = Path(path)
    n = archive.n
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["k", "u", "eps"] + [f"s_{i}" for i in range(1, n + 1)] + [f"v_{i}" for i in range(1, n + 1)])
        for k in range(archive.T + 1):
            x = archive.X[:, k]
            wr.writerow([k, repr(archive.U[k]), repr(archive.E[k])] + [repr(a) for a in x[0::2]] + [repr(a) for a in x[1::2]])
    return path
