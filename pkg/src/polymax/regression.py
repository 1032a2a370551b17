"""Response models for regression problems and a damped Gauss-Newton solver.

Shared by the polynomial-maximization regression estimator and the
second-order least-squares estimator. Built-in responses:

* ``linear``       R(theta, X) = X @ theta          (X is an N x K design)
* ``exponential``  R(theta, x) = theta1 * exp(theta2 * x)
* ``growth``       R(theta, x) = theta1 / (1 + exp(theta2 + theta3 * x))
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NoConvergence, NonFiniteObjective


@dataclass(frozen=True)
class ResponseModel:
    name: str
    param_dim: int
    predict: Callable  # (theta, x) -> (N,)
    jacobian: Callable  # (theta, x) -> (N, K)
    init: Callable  # (x, y) -> theta0


@dataclass(frozen=True)
class OptimResult:
    x: np.ndarray
    iterations: int
    converged: bool
    objective: float


def linear_response(param_dim: int) -> ResponseModel:
    return ResponseModel(
        name="linear",
        param_dim=param_dim,
        predict=lambda th, X: X @ th,
        jacobian=lambda th, X: np.asarray(X, dtype=np.float64),
        init=lambda X, y: np.linalg.lstsq(X, y, rcond=None)[0],
    )


def _exp_init(x, y):
    # split-sample log ratio of means; robust to moderate additive noise
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    med = np.median(x)
    lo, hi = x <= med, x > med
    mlo, mhi = np.mean(y[lo]), np.mean(y[hi])
    if mlo > 0 and mhi > 0 and not np.isclose(np.mean(x[hi]), np.mean(x[lo])):
        t2 = np.log(mhi / mlo) / (np.mean(x[hi]) - np.mean(x[lo]))
    else:
        t2 = 0.0
    denom = np.mean(np.exp(t2 * x))
    t1 = np.mean(y) / denom if denom > 0 else np.mean(y)
    return np.array([t1, t2])


def exponential_response() -> ResponseModel:
    def predict(th, x):
        return th[0] * np.exp(th[1] * np.asarray(x, float))

    def jacobian(th, x):
        ex = np.exp(th[1] * np.asarray(x, float))
        return np.column_stack([ex, th[0] * np.asarray(x, float) * ex])

    return ResponseModel("exponential", 2, predict, jacobian, _exp_init)


def _growth_init(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    t1 = max(float(np.max(y)) * 1.05, 1e-6)
    z = np.clip(y / t1, 1e-3, 1 - 1e-3)
    logits = np.log(1.0 / z - 1.0)
    A = np.column_stack([np.ones_like(x), x])
    t23 = np.linalg.lstsq(A, logits, rcond=None)[0]
    return np.array([t1, t23[0], t23[1]])


def growth_response() -> ResponseModel:
    def predict(th, x):
        return th[0] / (1.0 + np.exp(th[1] + th[2] * np.asarray(x, float)))

    def jacobian(th, x):
        x = np.asarray(x, float)
        ex = np.exp(th[1] + th[2] * x)
        den = (1.0 + ex) ** 2
        return np.column_stack([1.0 / (1.0 + ex), -th[0] * ex / den, -th[0] * x * ex / den])

    return ResponseModel("growth", 3, predict, jacobian, _growth_init)


BUILTIN_RESPONSES = {
    "exponential": exponential_response,
    "growth": growth_response,
}


def gauss_newton(residual, jacobian, x0, *, tol=1e-12, max_iter=100, max_halvings=25):
    """Minimize ||residual(x)||^2 by damped Gauss-Newton.

    ``residual`` maps x to the residual vector r; ``jacobian`` to dr/dx.
    Steps that do not decrease the sum of squares are halved.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=np.float64)).copy()
    r = residual(x)
    sse = float(r @ r)
    if not np.isfinite(sse):
        raise NonFiniteObjective("objective is not finite at the starting point")
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        J = jacobian(x)
        grad = J.T @ r
        if np.linalg.norm(grad) <= tol * (1.0 + sse):
            converged = True
            break
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        accepted = False
        for _ in range(max_halvings):
            cand = x + lam * step
            rc = residual(cand)
            sc = float(rc @ rc)
            if np.isfinite(sc) and sc <= sse:
                x, r, sse = cand, rc, sc
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            # flat to machine precision around x: treat gradient test as final word
            converged = np.linalg.norm(grad) <= 1e-6 * (1.0 + sse)
            break
        if np.linalg.norm(lam * step) <= 1e-14 * (1.0 + np.linalg.norm(x)):
            converged = True
            break
    else:
        converged = False
    if not converged:
        J = jacobian(x)
        converged = np.linalg.norm(J.T @ r) <= tol * (1.0 + sse)
    return OptimResult(x=x, iterations=it, converged=converged, objective=sse)


def fit_least_squares(response: ResponseModel, x, y, init=None) -> OptimResult:
    """Ordinary/nonlinear least squares for a response model."""
    y = np.asarray(y, dtype=np.float64)
    if response.name == "linear":
        theta = np.linalg.lstsq(np.asarray(x, float), y, rcond=None)[0]
        r = y - response.predict(theta, x)
        return OptimResult(x=theta, iterations=1, converged=True, objective=float(r @ r))
    theta0 = response.init(x, y) if init is None else np.asarray(init, float)
    res = gauss_newton(
        lambda th: y - response.predict(th, x),
        lambda th: -response.jacobian(th, x),
        theta0,
    )
    if not res.converged:
        raise NoConvergence(f"least-squares fit of {response.name!r} did not converge")
    return res
