"""Mixed platoon model: OVM car-following, equilibrium, linearization and simulation.

Vehicle 0 is the head vehicle, vehicle 1 the controlled CAV and vehicles
2..n the human-driven followers. The deviation state is ordered
``(s~_1, v~_1, s~_2, v~_2, ..., s~_n, v~_n)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "OvmParams",
    "PlatoonModel",
    "PlatoonState",
    "CollisionError",
    "desired_velocity",
    "desired_velocity_slope",
    "ovm_acceleration",
    "equilibrium_spacing",
    "linearize",
    "discretize",
    "build_model",
    "equilibrium_state",
    "deviation_state",
    "step_nonlinear",
    "step_linear",
]


class CollisionError(RuntimeError):
    """Raised when a spacing drops to zero or below."""

    def __init__(self, vehicle: int, spacing: float):
        super().__init__(f"vehicle {vehicle} collided (spacing {spacing:.3f} m)")
        self.vehicle = vehicle
        self.spacing = spacing


@dataclass(frozen=True)
class OvmParams:
    alpha: float = 0.6
    beta: float = 0.9
    s_min: float = 5.0
    s_max: float = 35.0
    v_max: float = 30.0

    def __post_init__(self):
        if not self.s_min < self.s_max:
            raise ValueError("s_min must be below s_max")
        if self.v_max <= 0 or self.alpha <= 0 or self.beta < 0:
            raise ValueError("OVM requires v_max > 0, alpha > 0, beta >= 0")


def desired_velocity(p: OvmParams, s):
    """Saturated cosine-ramp desired velocity V(s)."""
    s = np.asarray(s, dtype=float)
    ramp = p.v_max / 2 * (1 - np.cos(np.pi * (s - p.s_min) / (p.s_max - p.s_min)))
    return np.where(s <= p.s_min, 0.0, np.where(s >= p.s_max, p.v_max, ramp))


def desired_velocity_slope(p: OvmParams, s):
    s = np.asarray(s, dtype=float)
    width = p.s_max - p.s_min
    slope = p.v_max * np.pi / (2 * width) * np.sin(np.pi * (s - p.s_min) / width)
    return np.where((s <= p.s_min) | (s >= p.s_max), 0.0, slope)


def ovm_acceleration(p: OvmParams, s, s_dot, v):
    return p.alpha * (desired_velocity(p, s) - v) + p.beta * s_dot


def equilibrium_spacing(p: OvmParams, v_star: float) -> float:
    """Spacing s* with V(s*) = v*, by inverting the cosine ramp."""
    if not 0.0 < v_star < p.v_max:
        raise ValueError(f"no interior equilibrium for v*={v_star} (v_max={p.v_max})")
    return float(p.s_min + (p.s_max - p.s_min) / np.pi * np.arccos(1 - 2 * v_star / p.v_max))


def _as_params(params, n: int | None = None) -> tuple[OvmParams, ...]:
    if isinstance(params, OvmParams):
        if n is None:
            raise ValueError("vehicle count needed when a single parameter set is given")
        return (params,) * n
    params = tuple(params)
    if n is not None and len(params) != n:
        raise ValueError(f"expected {n} parameter sets, got {len(params)}")
    return params


def linearize(params: Sequence[OvmParams], v_star: float):
    """Continuous-time (A_con, B_con, H_con) around the equilibrium at ``v_star``.

    ``params[0]`` belongs to the CAV and is only used to check the operating point;
    the CAV rows are input driven.
    """
    params = _as_params(params)
    n = len(params)
    A = np.zeros((2 * n, 2 * n))
    B = np.zeros((2 * n, 1))
    H = np.zeros((2 * n, 1))
    for i, p in enumerate(params):
        s_star = equilibrium_spacing(p, v_star)
        r = 2 * i
        A[r, r + 1] = -1.0
        if i == 0:
            H[r, 0] = 1.0
            B[r + 1, 0] = 1.0
            continue
        A[r, r - 1] = 1.0
        A[r + 1, r] = p.alpha * desired_velocity_slope(p, s_star)
        A[r + 1, r + 1] = -(p.alpha + p.beta)
        A[r + 1, r - 1] = p.beta
    return A, B, H


def discretize(A_con, B_con, H_con, dt: float):
    """Forward-Euler discretization."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    A_con = np.asarray(A_con, dtype=float)
    return np.eye(A_con.shape[0]) + dt * A_con, dt * np.asarray(B_con), dt * np.asarray(H_con)


@dataclass(frozen=True, eq=False)
class PlatoonModel:
    n: int
    params: tuple[OvmParams, ...]
    v_star: float
    s_star: np.ndarray
    dt: float
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)
    A_con: np.ndarray = field(repr=False)
    B_con: np.ndarray = field(repr=False)
    H_con: np.ndarray = field(repr=False)

    @property
    def state_dim(self) -> int:
        return 2 * self.n

    def at(self, v_star: float) -> "PlatoonModel":
        """Same platoon re-linearized around another equilibrium velocity."""
        return build_model(self.n, v_star, self.dt, self.params)


def build_model(n: int = 3, v_star: float = 15.0, dt: float = 0.1, params=None) -> PlatoonModel:
    params = _as_params(OvmParams() if params is None else params, n)
    s_star = np.array([equilibrium_spacing(p, v_star) for p in params])
    A_con, B_con, H_con = linearize(params, v_star)
    A, B, H = discretize(A_con, B_con, H_con, dt)
    return PlatoonModel(n, params, float(v_star), s_star, float(dt), A, B, H, A_con, B_con, H_con)


@dataclass(frozen=True, eq=False)
class PlatoonState:
    """Positions and velocities of vehicles 0..n (head first)."""

    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=float)
        v = np.asarray(self.velocities, dtype=float)
        if p.shape != v.shape or p.ndim != 1:
            raise ValueError("positions and velocities must be equal-length vectors")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v))):
            raise ValueError("non-finite platoon state")
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "velocities", v)

    @property
    def spacings(self) -> np.ndarray:
        """Spacings s_1..s_n."""
        return -np.diff(self.positions)


def equilibrium_state(model: PlatoonModel, head_position: float = 0.0) -> PlatoonState:
    positions = head_position - np.concatenate([[0.0], np.cumsum(model.s_star)])
    return PlatoonState(positions, np.full(model.n + 1, model.v_star))


def deviation_state(state: PlatoonState, s_star, v_star: float) -> tuple[np.ndarray, float]:
    """Deviation vector x and head disturbance eps = v_0 - v*."""
    s = state.spacings
    v = state.velocities[1:]
    x = np.empty(2 * s.size)
    x[0::2] = s - np.broadcast_to(s_star, s.shape)
    x[1::2] = v - v_star
    return x, float(state.velocities[0] - v_star)


def step_nonlinear(
    state: PlatoonState,
    u_cav: float | None,
    v_head_next: float,
    noise,
    dt: float,
    params: Sequence[OvmParams],
) -> PlatoonState:
    """One forward-Euler step of the nonlinear platoon.

    ``u_cav=None`` lets the CAV drive with its own OVM law (all-HDV platoon).
    ``noise`` is ordered like the deviation state and is added to the
    integrated spacings and velocities of vehicles 1..n.
    """
    p, v = state.positions, state.velocities
    n = p.size - 1
    params = _as_params(params, n)
    s = -np.diff(p)
    s_dot = v[:-1] - v[1:]
    acc = np.array([ovm_acceleration(params[i], s[i], s_dot[i], v[i + 1]) for i in range(n)])
    if u_cav is not None:
        acc[0] = u_cav
    p_next = p + dt * v
    v_next = v.copy()
    v_next[1:] += dt * acc
    v_next[0] = v_head_next
    if noise is not None:
        w = np.asarray(noise, dtype=float)
        p_next[1:] -= np.cumsum(w[0::2])
        v_next[1:] += w[1::2]
    new = PlatoonState(p_next, v_next)
    spacing = new.spacings
    if np.any(spacing <= 0):
        i = int(np.argmax(spacing <= 0))
        raise CollisionError(i + 1, float(spacing[i]))
    return new


def step_linear(model: PlatoonModel, x, u: float, eps: float, w=None) -> np.ndarray:
    """x(k+1) = A x + B u + H eps + w."""
    x_next = model.A @ x + model.B[:, 0] * u + model.H[:, 0] * eps
    if w is not None:
        x_next = x_next + w
    return x_next
