"""Dense convex QP with equality constraints and box bounds on linear outputs.

Solves

    min  1/2 z'Pz + q'z   s.t.  C z = d,   lo <= F z <= hi

with P positive definite. The equality constraints are removed through the
projected inverse Kp = W - W C' (C W C')^-1 C W (W = P^-1), and the box
constraints are handled by a Goldfarb-Idnani dual active-set method acting on
the outputs y = F z, so each iteration costs O(|active|^3) after a one-off
factorization. The solution is exact up to rounding; every call reports the
full KKT residual.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

__all__ = ["BoxQP", "QPResult", "QPInfeasibleError", "QPNotConvergedError", "kkt_residual"]

MAX_ITER = 20_000


class QPInfeasibleError(RuntimeError):
    def __init__(self, message: str, violated: list[int]):
        super().__init__(message)
        self.violated = violated


class QPNotConvergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class QPResult:
    z: np.ndarray
    objective: float
    nu: np.ndarray  # equality multipliers
    mu: np.ndarray  # signed box multipliers (>0 upper bound active, <0 lower)
    kkt_residual: float
    iterations: int
    active: tuple[int, ...]


def kkt_residual(P, q, C, d, F, lo, hi, z, nu, mu) -> float:
    """Max of stationarity, primal feasibility, dual sign and complementarity errors."""
    y = F @ z
    scale = 1.0 + max(np.abs(q).max(initial=0.0), np.abs(d).max(initial=0.0))
    stat = np.abs(P @ z + q + C.T @ nu + F.T @ mu).max(initial=0.0)
    eq = np.abs(C @ z - d).max(initial=0.0)
    feas = max(np.max(y - hi, initial=0.0), np.max(lo - y, initial=0.0))
    mu_hi, mu_lo = np.maximum(mu, 0.0), np.maximum(-mu, 0.0)
    gap_hi = np.where(mu_hi > 0, hi - y, 0.0)  # an infinite bound never carries a multiplier
    gap_lo = np.where(mu_lo > 0, y - lo, 0.0)
    comp = max(np.abs(mu_hi * gap_hi).max(initial=0.0), np.abs(mu_lo * gap_lo).max(initial=0.0))
    return float(max(stat, eq, feas, comp) / scale)


class BoxQP:
    """Factorize once, solve for many (q, d, lo, hi)."""

    def __init__(self, P, C, F):
        P = np.asarray(P, dtype=float)
        self.P = P
        self.C = np.atleast_2d(np.asarray(C, dtype=float))
        self.F = np.atleast_2d(np.asarray(F, dtype=float))
        n = P.shape[0]
        if P.shape != (n, n) or self.C.shape[1] != n or self.F.shape[1] != n:
            raise ValueError("inconsistent QP dimensions")
        diag = np.allclose(P, np.diag(np.diag(P)))
        if diag:
            if np.any(np.diag(P) <= 0):
                raise ValueError("P must be positive definite")
            W = np.diag(1.0 / np.diag(P))
        else:
            W = sla.cho_solve(sla.cho_factor(P), np.eye(n))
        WCt = W @ self.C.T
        S = self.C @ WCt
        try:
            S_fac = sla.cho_factor(S)
        except np.linalg.LinAlgError as exc:
            raise ValueError("equality constraints are rank deficient") from exc
        piv = np.abs(np.diag(S_fac[0]))
        if piv.size and piv.min() <= 1e-7 * piv.max():  # pivots scale like sqrt(eigenvalues)
            raise ValueError("equality constraints are rank deficient")
        self._W = W
        self._S_fac = S_fac
        self._WCtSi = sla.cho_solve(S_fac, WCt.T).T  # W C' S^-1
        Kp = W - self._WCtSi @ WCt.T
        self._KpFt = Kp @ self.F.T
        self._KpFt.setflags(write=False)
        self._M = self.F @ self._KpFt
        self._M = (self._M + self._M.T) / 2
        self._Kp = Kp

    @property
    def output_dim(self) -> int:
        return self.F.shape[0]

    def _equality_solution(self, q, d):
        return -self._Kp @ q + self._WCtSi @ d

    def solve(self, q, d, lo, hi, max_iter: int = MAX_ITER, tol: float = 1e-10) -> QPResult:
        q = np.zeros(self.P.shape[0]) if q is None else np.asarray(q, dtype=float)
        d = np.asarray(d, dtype=float)
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if np.any(lo > hi):
            raise QPInfeasibleError("empty box", list(np.flatnonzero(lo > hi)))
        z0 = self._equality_solution(q, d)
        y0 = self.F @ z0
        mu, act, it = self._dual_active_set(y0, lo, hi, max_iter, tol)
        z = z0 - self._KpFt @ mu
        nu = -sla.cho_solve(self._S_fac, d + self.C @ (self._W @ (q + self.F.T @ mu)))
        obj = float(0.5 * z @ self.P @ z + q @ z)
        res = kkt_residual(self.P, q, self.C, d, self.F, lo, hi, z, nu, mu)
        return QPResult(z, obj, nu, mu, res, it, tuple(act))

    def _dual_active_set(self, y0, lo, hi, max_iter, tol):
        """Goldfarb-Idnani on the outputs; constraint j is 'y_j <= hi_j' (sign +1)
        or '-y_j <= -lo_j' (sign -1)."""
        M = self._M
        m = y0.size
        y = y0.copy()
        act: list[int] = []
        sgn: list[float] = []
        lam: list[float] = []
        scale = 1.0 + np.abs(M).max(initial=0.0)
        it = 0
        while True:
            v_hi = y - hi
            v_lo = lo - y
            viol = np.maximum(v_hi, v_lo)
            if act:
                viol[act] = -np.inf
            j = int(np.argmax(viol)) if m else 0
            if m == 0 or viol[j] <= tol * (1.0 + abs(hi[j] if v_hi[j] >= v_lo[j] else lo[j])):
                break
            s = 1.0 if v_hi[j] >= v_lo[j] else -1.0
            bound = hi[j] if s > 0 else -lo[j]
            u_p = 0.0
            while True:
                it += 1
                if it > max_iter:
                    raise QPNotConvergedError(f"no convergence within {max_iter} active-set iterations")
                if act:
                    sa = np.array(sgn)
                    Ga = M[np.ix_(act, act)] * np.outer(sa, sa)
                    g = M[act, j] * sa * s
                    r = np.linalg.solve(Ga, g)
                    col = M[:, j] * s - M[:, act] @ (sa * r)
                else:
                    r = np.zeros(0)
                    col = M[:, j] * s
                curv = s * col[j]
                slack = s * y[j] - bound
                t1 = slack / curv if curv > 1e-12 * scale else np.inf
                t2, k_drop = np.inf, -1
                for k, rk in enumerate(r):
                    if rk > 1e-12 and lam[k] / rk < t2:
                        t2, k_drop = lam[k] / rk, k
                if not np.isfinite(t1) and not np.isfinite(t2):
                    raise QPInfeasibleError("box constraints cannot be met", [j])
                t = min(t1, t2)
                y -= t * col
                lam = [lk - t * rk for lk, rk in zip(lam, r)]
                u_p += t
                if t1 <= t2:
                    act.append(j)
                    sgn.append(s)
                    lam.append(u_p)
                    break
                del act[k_drop], sgn[k_drop], lam[k_drop]
        mu = np.zeros(m)
        for j, s, l in zip(act, sgn, lam):
            mu[j] = s * max(l, 0.0)
        return mu, act, it
