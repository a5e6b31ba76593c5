"""Damped Gauss-Newton (Levenberg-Marquardt) least squares.

Fixed contract for reproducibility: damping is multiplied by 10 on a
rejected step and divided by 10 on an accepted one; convergence when the
relative cost change of an accepted step falls below 1e-10, capped at 200
iterations.  Box bounds are enforced by projecting trial steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParameterError


@dataclass
class LMResult:
    params: np.ndarray
    cost: float                       # sum of squared residuals
    converged: bool
    n_iter: int
    cost_history: list[float] = field(default_factory=list)
    covariance: np.ndarray | None = None

    def sigma(self) -> np.ndarray:
        if self.covariance is None:
            return np.full(self.params.shape, np.nan)
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def levenberg_marquardt(residual: Callable[[np.ndarray], np.ndarray],
                        jacobian: Callable[[np.ndarray], np.ndarray],
                        p0: np.ndarray,
                        lower: np.ndarray | None = None,
                        upper: np.ndarray | None = None,
                        max_iter: int = 200,
                        rel_tol: float = 1e-10,
                        damping0: float = 1e-3,
                        max_rejects: int = 60) -> LMResult:
    """Minimize sum(residual(p)^2) with analytic Jacobian.

    residual returns shape (m,), jacobian shape (m, n).  lower/upper are
    optional per-parameter box bounds (p0 must satisfy them).
    """
    p = np.asarray(p0, dtype=float).copy()
    n = p.size
    lo = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    if np.any(lo > hi):
        raise ParameterError("lower bound exceeds upper bound")
    p = np.clip(p, lo, hi)

    r = residual(p)
    cost = float(r @ r)
    lam = damping0
    history = [cost]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jac = jacobian(p)
        jtj = jac.T @ jac
        jtr = jac.T @ r
        diag = np.diag(jtj).copy()
        diag[diag <= 0.0] = 1.0   # guard dead parameters
        accepted = False
        for _ in range(max_rejects):
            a = jtj + lam * np.diag(diag)
            try:
                step = np.linalg.solve(a, -jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_try = np.clip(p + step, lo, hi)
            r_try = residual(p_try)
            cost_try = float(r_try @ r_try)
            if cost_try < cost:
                rel_change = (cost - cost_try) / cost if cost > 0 else 0.0
                p, r, cost = p_try, r_try, cost_try
                lam /= 10.0
                history.append(cost)
                accepted = True
                if rel_change < rel_tol:
                    converged = True
                break
            if cost_try == cost == 0.0:
                converged = True
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # damping exhausted: no descent direction within float precision,
            # i.e. stationary -- convergence, not failure (converged=False is
            # reserved for running out of iterations)
            converged = True
            break
        if converged:
            break

    cov = _covariance(jacobian(p), cost, p.size, r.size)
    return LMResult(params=p, cost=cost, converged=converged, n_iter=it,
                    cost_history=history, covariance=cov)


def _covariance(jac: np.ndarray, cost: float, n_params: int, n_data: int) -> np.ndarray:
    dof = max(n_data - n_params, 1)
    sigma_sq = cost / dof
    jtj = jac.T @ jac
    try:
        cov = np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(jtj)
    cov = 0.5 * (cov + cov.T) * sigma_sq
    # clip tiny negative eigenvalues so the result is PSD
    vals, vecs = np.linalg.eigh(cov)
    vals = np.clip(vals, 0.0, None)
    return (vecs * vals) @ vecs.T
