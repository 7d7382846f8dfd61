"""Predictive controllers: tube-tightened data-driven QP, plain DeeP-LCC and model-based MPC.

Timing convention: at step k the window holds the measured (x, u, eps) of steps
k-T_ini .. k-1. The data-driven QP then predicts the nominal trajectory
x_z(k .. k+N-1), u_z(k .. k+N-1) with eps_z = 0, and the applied input is
``u_z(k) + K (x(k) - x_z(k))``. This is the usual DeePC indexing shifted by one
sample; ``x_z(k)`` is the one-step prediction that the measured ``x(k)`` is
compared against.
"""
from __future__ import annotations

import csv
import time
import weakref
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datagen import HankelBlocks
from .platoon import PlatoonModel
from .qp import BoxQP, QPInfeasibleError, QPResult
from .sysid import ReachTube
from .zonoset import Box, interval_hull, linear_map

__all__ = [
    "ControllerSpec",
    "RecentWindow",
    "Solution",
    "MpcSolution",
    "StepRecord",
    "TubeExceedsConstraints",
    "tighten_constraints",
    "solve_rdeep",
    "solve_deepc",
    "solve_mpc",
    "compose_input",
    "write_step_log",
]

METHODS = ("rdeep", "deepc", "mpc")


class TubeExceedsConstraints(ValueError):
    def __init__(self, step: int, kind: str, coords):
        coords = [int(c) for c in coords]
        super().__init__(f"tube exceeds constraints at step {step} ({kind} coordinates {coords})")
        self.step = step
        self.kind = kind


@dataclass(frozen=True, eq=False)
class ControllerSpec:
    method: str = "rdeep"
    n: int = 3
    T_ini: int = 20
    N: int = 5
    rho_s: float = 0.5
    rho_v: float = 1.0
    R: float = 0.1
    lambda_g: float = 10.0
    lambda_sigma: float = 10.0
    s_max: float = 7.0
    v_max: float = 7.0
    u_max: float = 5.0
    hankels: HankelBlocks | None = field(default=None, repr=False)
    tube: ReachTube | None = field(default=None, repr=False)
    K: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.N < 1:
            raise ValueError("prediction horizon must be positive")
        if min(self.rho_s, self.rho_v, self.R, self.lambda_g, self.lambda_sigma) < 0:
            raise ValueError("weights and regularizers must be nonnegative")
        if self.R <= 0 or self.lambda_g <= 0 or self.lambda_sigma <= 0:
            raise ValueError("R, lambda_g and lambda_sigma must be positive (strictly convex QP)")
        if min(self.s_max, self.v_max, self.u_max) <= 0:
            raise ValueError("constraint limits must be positive")
        if self.method != "mpc":
            if self.T_ini < 2 * self.n:
                raise ValueError(f"T_ini={self.T_ini} below 2n={2 * self.n}")
            h = self.hankels
            if h is None:
                raise ValueError("data-driven controllers need Hankel blocks")
            if h.T_ini != self.T_ini or h.N != self.N or h.state_dim != 2 * self.n:
                raise ValueError("Hankel blocks do not match T_ini, N or the platoon size")
        if self.K is not None:
            object.__setattr__(self, "K", np.atleast_2d(np.asarray(self.K, dtype=float)))
            if self.K.shape != (1, 2 * self.n):
                raise ValueError(f"gain must be 1 x {2 * self.n}")
        if self.method == "rdeep" and (self.tube is None or self.K is None):
            raise ValueError("the tube controller needs a reach tube and a gain")
        if self.tube is not None and len(self.tube) < self.N:
            raise ValueError(f"tube has {len(self.tube)} steps, horizon needs {self.N}")

    @property
    def state_weights(self) -> np.ndarray:
        return np.tile([self.rho_s, self.rho_v], self.n)

    @property
    def x_box(self) -> Box:
        lim = np.tile([self.s_max, self.v_max], self.n)
        return Box(-lim, lim)

    @property
    def u_box(self) -> Box:
        return Box([-self.u_max], [self.u_max])

    @property
    def gain(self) -> np.ndarray:
        return np.zeros((1, 2 * self.n)) if self.K is None else self.K


class RecentWindow:
    """Sliding window of the last T_ini measured (x, u, eps)."""

    def __init__(self, T_ini: int, n: int):
        self.T_ini, self.n = T_ini, n
        self._x: deque = deque(maxlen=T_ini)
        self._u: deque = deque(maxlen=T_ini)
        self._e: deque = deque(maxlen=T_ini)

    @classmethod
    def from_arrays(cls, x_ini, u_ini, eps_ini) -> "RecentWindow":
        u = np.asarray(u_ini, dtype=float).reshape(-1)
        x = np.asarray(x_ini, dtype=float).reshape(u.size, -1)
        w = cls(u.size, x.shape[1] // 2)
        for xi, ui, ei in zip(x, u, np.asarray(eps_ini, dtype=float).reshape(-1)):
            w.push(xi, ui, ei)
        return w

    def push(self, x, u: float, eps: float) -> None:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != 2 * self.n:
            raise ValueError(f"state of length {x.size}, expected {2 * self.n}")
        self._x.append(x.copy())
        self._u.append(float(u))
        self._e.append(float(eps))

    @property
    def full(self) -> bool:
        return len(self._u) == self.T_ini

    def _check(self):
        if not self.full:
            raise ValueError(f"window holds {len(self._u)} of {self.T_ini} samples")

    @property
    def x_ini(self) -> np.ndarray:
        self._check()
        return np.concatenate(self._x)

    @property
    def u_ini(self) -> np.ndarray:
        self._check()
        return np.array(self._u)

    @property
    def eps_ini(self) -> np.ndarray:
        self._check()
        return np.array(self._e)


@dataclass(frozen=True)
class Solution:
    g: np.ndarray
    u_z: np.ndarray
    x_z: np.ndarray
    sigma: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int = 0

    @property
    def x_z_first(self) -> np.ndarray:
        return self.x_z[: self.x_z.size // self.u_z.size]


@dataclass(frozen=True)
class MpcSolution:
    u: np.ndarray
    x_pred: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int = 0
    softened: bool = False


def tighten_constraints(x_box: Box, u_box: Box, tube: ReachTube, K) -> tuple[list[Box], list[Box]]:
    """Per-step boxes X - hull(R_i) and U - hull(K R_i) (Minkowski difference of boxes)."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    xs, us = [], []
    for i, R in enumerate(tube.sets, start=1):
        for kind, box, hull, out in (("state", x_box, interval_hull(R), xs),
                                     ("input", u_box, interval_hull(linear_map(K, R)), us)):
            lo = box.lower - hull.lower
            hi = box.upper - hull.upper
            bad = np.flatnonzero(lo > hi)
            if bad.size:
                raise TubeExceedsConstraints(i, kind, bad)
            out.append(Box(lo, hi))
    return xs, us


class _DataDrivenQP:
    """Stacked QP over z = (g, u_z, x_z, sigma); nothing is eliminated."""

    def __init__(self, spec: ControllerSpec, tightened: bool):
        h = spec.hankels
        n2, T_ini, N, c = 2 * spec.n, spec.T_ini, spec.N, h.columns
        self.dims = (c, N, n2 * N, n2 * T_ini)
        nz = sum(self.dims)
        og, ou, ox, os = np.cumsum((0,) + self.dims[:-1])
        self.offsets = (og, ou, ox, os)
        p = np.concatenate([
            np.full(c, spec.lambda_g),
            np.full(N, spec.R),
            np.tile(spec.state_weights, N),
            np.full(n2 * T_ini, spec.lambda_sigma),
        ])
        P = np.diag(2 * p)
        rows = [n2 * T_ini, T_ini, T_ini, n2 * N, N, N]
        C = np.zeros((sum(rows), nz))
        r = np.cumsum([0] + rows)
        C[r[0]:r[1], og:og + c] = h.Xp
        C[r[0]:r[1], os:os + n2 * T_ini] = -np.eye(n2 * T_ini)
        C[r[1]:r[2], og:og + c] = h.Up
        C[r[2]:r[3], og:og + c] = h.Ep
        C[r[3]:r[4], og:og + c] = h.Xf
        C[r[3]:r[4], ox:ox + n2 * N] = -np.eye(n2 * N)
        C[r[4]:r[5], og:og + c] = h.Uf
        C[r[4]:r[5], ou:ou + N] = -np.eye(N)
        C[r[5]:r[6], og:og + c] = h.Ef
        F = np.zeros((n2 * N + N, nz))
        F[: n2 * N, ox:ox + n2 * N] = np.eye(n2 * N)
        F[n2 * N :, ou:ou + N] = np.eye(N)
        self.qp = BoxQP(P, C, F)
        self.n_eq = C.shape[0]
        self.ini_rows = r[3]
        if tightened:
            xs, us = tighten_constraints(spec.x_box, spec.u_box, spec.tube, spec.K)
            xs, us = xs[:N], us[:N]
        else:
            xs, us = [spec.x_box] * N, [spec.u_box] * N
        self.lo = np.concatenate([b.lower for b in xs] + [b.lower for b in us])
        self.hi = np.concatenate([b.upper for b in xs] + [b.upper for b in us])

    def solve(self, window: RecentWindow) -> Solution:
        d = np.zeros(self.n_eq)
        d[: self.ini_rows] = np.concatenate([window.x_ini, window.u_ini, window.eps_ini])
        res: QPResult = self.qp.solve(None, d, self.lo, self.hi)
        c, N, nx, ns = self.dims
        og, ou, ox, os = self.offsets
        z = res.z
        return Solution(z[og:og + c], z[ou:ou + N], z[ox:ox + nx], z[os:os + ns],
                        res.objective, res.kkt_residual, res.iterations)


_QP_CACHE: "weakref.WeakKeyDictionary[ControllerSpec, dict]" = weakref.WeakKeyDictionary()


def _cached_qp(spec: ControllerSpec, tightened: bool) -> _DataDrivenQP:
    slot = _QP_CACHE.setdefault(spec, {})
    if tightened not in slot:
        slot[tightened] = _DataDrivenQP(spec, tightened)
    return slot[tightened]


def solve_rdeep(spec: ControllerSpec, window: RecentWindow) -> Solution:
    """Data-driven QP with tube-tightened boxes (applied input via ``compose_input``)."""
    if spec.tube is None or spec.K is None:
        raise ValueError("spec carries no tube or gain")
    return _cached_qp(spec, True).solve(window)


def solve_deepc(spec: ControllerSpec, window: RecentWindow) -> Solution:
    """Same QP with the original boxes; the first u_z is applied directly."""
    return _cached_qp(spec, False).solve(window)


def compose_input(u_z_first: float, K, x_measured, x_z_first, u_max: float | None = None) -> float:
    K = np.atleast_2d(np.asarray(K, dtype=float))
    u = float(u_z_first) + float((K @ (np.asarray(x_measured, dtype=float) - np.asarray(x_z_first, dtype=float)))[0])
    if u_max is not None:
        u = float(np.clip(u, -u_max, u_max))
    return u


SOFT_L1 = 1e3  # exact-penalty weight on state-box violations (fallback only)
SOFT_L2 = 1.0


def _mpc_qp(model: PlatoonModel, spec: ControllerSpec, soft: bool = False):
    """z = (u_0..u_{N-1}, x_1..x_N[, e]); ``soft`` adds violations e >= 0 of the state box."""
    n2, N = model.state_dim, spec.N
    nx = n2 * N
    ne = nx if soft else 0
    nz = N + nx + ne
    w = [np.full(N, spec.R), np.tile(spec.state_weights, N)]
    if soft:
        w.append(np.full(ne, SOFT_L2 / 2))
    P = np.diag(2 * np.concatenate(w))
    C = np.zeros((nx, nz))
    for i in range(N):
        rows = slice(i * n2, (i + 1) * n2)
        C[rows, N + i * n2 : N + (i + 1) * n2] = np.eye(n2)
        C[rows, i] = -model.B[:, 0]
        if i:
            C[rows, N + (i - 1) * n2 : N + i * n2] = -model.A
    xlo = np.tile(spec.x_box.lower, N)
    ulo = np.full(N, -spec.u_max)
    q = np.zeros(nz)
    if not soft:
        lo = np.concatenate([xlo, ulo])
        F = np.zeros((nx + N, nz))
        F[:nx, N:] = np.eye(nx)
        F[nx:, :N] = np.eye(N)
        return BoxQP(P, C, F), q, lo, -lo
    # rows: x + e >= lo, x - e <= hi, u in box, e >= 0
    F = np.zeros((3 * nx + N, nz))
    I = np.eye(nx)
    F[:nx, N:N + nx], F[:nx, N + nx:] = I, I
    F[nx:2 * nx, N:N + nx], F[nx:2 * nx, N + nx:] = I, -I
    F[2 * nx:2 * nx + N, :N] = np.eye(N)
    F[2 * nx + N:, N + nx:] = I
    inf = np.full(nx, np.inf)
    lo = np.concatenate([xlo, -inf, ulo, np.zeros(nx)])
    hi = np.concatenate([inf, -xlo, -ulo, inf])
    q[N + nx:] = SOFT_L1
    return BoxQP(P, C, F), q, lo, hi


_MPC_CACHE: "weakref.WeakKeyDictionary[PlatoonModel, dict]" = weakref.WeakKeyDictionary()


def solve_mpc(model: PlatoonModel, spec: ControllerSpec, x_measured, eps_now: float = 0.0,
              soft_fallback: bool = True) -> MpcSolution:
    """Receding-horizon QP on the known (A, B, H); future disturbance taken as zero.

    x_1 is fixed by the measurement up to the input's effect on velocities, so a
    persistent head disturbance can make the hard state box unreachable. With
    ``soft_fallback`` the state box is then re-imposed through an exact L1 penalty
    (the input box stays hard) and the solution is flagged ``softened``.
    """
    slot = _MPC_CACHE.setdefault(model, {})
    n2, N = model.state_dim, spec.N
    x0 = np.asarray(x_measured, dtype=float)
    d = np.zeros(n2 * N)
    d[:n2] = model.A @ x0 + model.H[:, 0] * eps_now
    for soft in (False, True):
        key = (id(spec), spec.N, soft)
        if key not in slot:
            slot[key] = _mpc_qp(model, spec, soft)
        qp, q, lo, hi = slot[key]
        try:
            res = qp.solve(q, d, lo, hi)
        except QPInfeasibleError:
            if soft or not soft_fallback:
                raise
            continue
        return MpcSolution(res.z[:N], res.z[N:N + n2 * N], res.objective, res.kkt_residual,
                           res.iterations, soft)
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class StepRecord:
    k: int
    method: str
    u_z_first: float
    u: float
    objective: float
    kkt_residual: float
    sigma_norm: float
    solve_time: float
    saturated: bool


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def write_step_log(records, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["k", "method", "u_z_first", "u", "objective", "kkt_residual", "sigma_norm",
                     "solve_time", "saturated"])
        for r in records:
            wr.writerow([r.k, r.method, repr(r.u_z_first), repr(r.u), repr(r.objective),
                         repr(r.kkt_residual), repr(r.sigma_norm), repr(r.solve_time), int(r.saturated)])
    return path
