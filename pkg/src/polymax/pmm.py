"""Polynomial maximization estimators.

The estimator of degree S solves the stationarity system

    sum_i h*_{i,j}(theta) * (m_hat_i - Psi_i(theta)) = 0,   j = 1..K,

where m_hat_i are empirical basis averages, Psi_i(theta) the model means,
and the columns of h* solve F(theta) h = dPsi/dtheta_j -- the coefficient
choice that minimizes the polynomial estimator's variance. For degree 2
and a location parameter the predicted variance ratio against the sample
mean is g2 = 1 - gamma3^2 / (2 + gamma4): equal to one for Gaussian data
(no gain) and below one for skewed data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    AsymmetryDetected,
    DegenerateCorrelantMatrix,
    InsufficientData,
    InvalidShape,
    NoConvergence,
)
from .moments import CumulantSet, raw_moments_from_cumulants, sample_cumulants
from .regression import ResponseModel, fit_least_squares
from .stochpoly import BasisFamily, build_correlant_matrix

#: dispatch defaults: required predicted variance gain, symmetry and
#: platykurtosis thresholds (guards against switching on sampling noise)
DISPATCH_MIN_GAIN = 0.02
DISPATCH_SYMMETRY = 0.1
DISPATCH_PLATYKURTIC = 0.1


@dataclass(frozen=True)
class MomentModel:
    """Parametric map theta -> basis means, their Jacobian, and correlants."""

    param_dim: int
    degree: int
    psi: Callable  # theta -> (S,)
    dpsi: Callable  # theta -> (S, K)
    correlants: Callable  # theta -> CorrelantMatrix


@dataclass(frozen=True)
class PmmEstimate:
    theta_hat: np.ndarray
    iterations: int
    converged: bool
    g_coefficient: Optional[float]
    coefficients: np.ndarray  # optimal h* at theta_hat, one column per parameter


def check_gradient(model: MomentModel, theta, rtol=1e-5) -> bool:
    """Self-check: dpsi against central finite differences of psi."""
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    analytic = np.atleast_2d(model.dpsi(theta))
    h = 1e-6
    for j in range(model.param_dim):
        tp, tm = theta.copy(), theta.copy()
        tp[j] += h
        tm[j] -= h
        fd = (np.asarray(model.psi(tp)) - np.asarray(model.psi(tm))) / (2 * h)
        scale = np.maximum(np.abs(analytic[:, j]), 1.0)
        if np.any(np.abs(fd - analytic[:, j]) > rtol * scale):
            return False
    return True


def location_model(noise: CumulantSet, degree: int) -> MomentModel:
    """Model for x = theta + eps with eps zero-mean and the given cumulants."""

    def psi(theta):
        th = float(np.atleast_1d(theta)[0])
        return np.asarray(raw_moments_from_cumulants(noise, th, degree).alpha)

    def dpsi(theta):
        th = float(np.atleast_1d(theta)[0])
        alpha = [1.0] + list(raw_moments_from_cumulants(noise, th, degree).alpha)
        # d/dtheta E[(theta+eps)^i] = i * alpha_{i-1}
        return np.array([[i * alpha[i - 1]] for i in range(1, degree + 1)])

    def correlants(theta):
        th = float(np.atleast_1d(theta)[0])
        mom = raw_moments_from_cumulants(noise, th, 2 * degree)
        return build_correlant_matrix(BasisFamily("power", degree), mom)

    return MomentModel(param_dim=1, degree=degree, psi=psi, dpsi=dpsi,
                       correlants=correlants)


def sample_basis_means(sample, degree: int) -> np.ndarray:
    """Empirical power-basis averages (mean of x^i for i = 1..degree)."""
    x = np.asarray(sample, dtype=np.float64)
    return np.array([np.mean(x**i) for i in range(1, degree + 1)])


def optimal_coefficients(model: MomentModel, theta) -> np.ndarray:
    """Columns solve F(theta) h = dPsi/dtheta_j (variance-minimizing weights)."""
    corr = model.correlants(theta)
    dpsi = np.atleast_2d(model.dpsi(theta)).reshape(model.degree, model.param_dim)
    return corr.solve(dpsi)


def variance_reduction_g2(gamma3: float, gamma4: float) -> float:
    """g2 = 1 - gamma3^2 / (2 + gamma4)."""
    if 2.0 + gamma4 <= 0.0:
        raise InvalidShape(f"2 + gamma4 must be positive, got {2.0 + gamma4}")
    if gamma4 < gamma3**2 - 2.0 - 1e-9 * (1.0 + gamma3**2 + abs(gamma4)):
        raise InvalidShape("shape pair violates gamma4 >= gamma3^2 - 2")
    return 1.0 - gamma3**2 / (2.0 + gamma4)


def predicted_g_location(noise: CumulantSet, degree: int) -> float:
    """Predicted var(PMM_S location) / var(sample mean) from the F/b system.

    Equals variance_reduction_g2 for degree 2; for degree 3 with a symmetric
    shape it reduces to 1 - gamma4^2 / (6 + 9*gamma4 + gamma6).
    """
    model = location_model(noise, degree)
    corr = model.correlants(0.0)
    b = np.atleast_2d(model.dpsi(0.0)).reshape(degree, 1)
    quad = float(b[:, 0] @ corr.solve(b[:, 0]))
    if quad <= 0:
        raise DegenerateCorrelantMatrix("nonpositive information quadratic form")
    return 1.0 / (noise.c2 * quad)


def pmm_estimate(model: MomentModel, sample_means, init, *, tol=1e-10,
                 max_iter=100, max_halvings=20) -> PmmEstimate:
    """Damped Newton solve of the degree-S stationarity system."""
    m_hat = np.asarray(sample_means, dtype=np.float64)
    theta = np.atleast_1d(np.asarray(init, dtype=np.float64)).copy()
    scale = 1.0 + float(np.max(np.abs(m_hat)))

    def system(th):
        corr = model.correlants(th)
        dpsi = np.atleast_2d(model.dpsi(th)).reshape(model.degree, model.param_dim)
        coef = corr.solve(dpsi)  # (S, K)
        score = coef.T @ (m_hat - np.asarray(model.psi(th)))
        info = dpsi.T @ coef  # positive definite Gauss-Newton approximation
        return score, info, coef

    score, info, coef = system(theta)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if np.linalg.norm(score) <= tol * scale:
            break
        step = np.linalg.solve(info, score)
        lam, accepted = 1.0, False
        for _ in range(max_halvings):
            cand = theta + lam * step
            try:
                s2, i2, c2_ = system(cand)
            except DegenerateCorrelantMatrix:
                lam *= 0.5
                continue
            if np.linalg.norm(s2) < np.linalg.norm(score):
                theta, score, info, coef = cand, s2, i2, c2_
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            break

    converged = bool(np.linalg.norm(score) <= tol * scale)
    if not converged and iterations >= max_iter:
        raise NoConvergence(f"stationarity system not solved after {max_iter} iterations")

    g = None
    if model.param_dim == 1:
        corr = model.correlants(theta)
        b = np.atleast_2d(model.dpsi(theta)).reshape(model.degree, 1)[:, 0]
        quad = float(b @ corr.solve(b))
        if quad > 0 and corr.F[0, 0] > 0:
            g = 1.0 / (corr.F[0, 0] * quad)
    return PmmEstimate(theta_hat=theta, iterations=iterations, converged=converged,
                       g_coefficient=g, coefficients=coef)


def pmm2_estimate_location(sample, cumulants: Optional[CumulantSet] = None) -> PmmEstimate:
    """Degree-2 location estimate with plug-in (or supplied) noise cumulants."""
    x = np.asarray(sample, dtype=np.float64)
    noise = cumulants if cumulants is not None else sample_cumulants(x, 4)
    model = location_model(noise, 2)
    return pmm_estimate(model, sample_basis_means(x, 2), float(np.mean(x)))


def pmm3_estimate_location(sample, cumulants: Optional[CumulantSet] = None, *,
                           symmetry_threshold: float = DISPATCH_SYMMETRY) -> PmmEstimate:
    """Degree-3 location estimate for symmetric platykurtic noise.

    Applies the symmetric perforation (third and fifth cumulants zeroed)
    before building the degree-3 system; very skewed samples are rejected.
    """
    x = np.asarray(sample, dtype=np.float64)
    est = cumulants if cumulants is not None else sample_cumulants(x, 6)
    if abs(est.gamma3) > symmetry_threshold:
        raise AsymmetryDetected(
            f"|gamma3| = {abs(est.gamma3):.3f} exceeds {symmetry_threshold}")
    noise = CumulantSet.from_cumulants(est.c2, 0.0, est.c4, 0.0, est.c6)
    model = location_model(noise, 3)
    return pmm_estimate(model, sample_basis_means(x, 3), float(np.mean(x)))


def _pmm2_ab(noise: CumulantSet):
    """Solve the residual location system F2 h = (1, 0) for the weights (a, b)."""
    F = np.array([
        [noise.c2, noise.c3],
        [noise.c3, noise.c4 + 2.0 * noise.c2**2],
    ])
    det = F[0, 0] * F[1, 1] - F[0, 1] ** 2
    if det <= 1e-12 * max(F[0, 0] * F[1, 1], 1e-300):
        raise DegenerateCorrelantMatrix("residual correlant system is singular")
    return np.linalg.solve(F, np.array([1.0, 0.0]))


def pmm2_regression(x, y, response: ResponseModel, *,
                    residual_cumulants: Optional[CumulantSet] = None,
                    tol=1e-10, max_iter=100, max_halvings=20) -> PmmEstimate:
    """Degree-2 polynomial regression estimator.

    Two-stage: least squares gives the start and the residual cumulants;
    the weights (a, b) then stay fixed while damped Newton solves

        sum_v J_vj(theta) * [a e_v(theta) + b (e_v(theta)^2 - c2)] = 0.

    Symmetric residuals give b = 0, which collapses the system to the
    least-squares normal equations; that case returns the least-squares
    fit as converged with g2 = 1 rather than raising.
    """
    y = np.asarray(y, dtype=np.float64)
    ls = fit_least_squares(response, x, y)
    theta0 = np.atleast_1d(ls.x)
    resid0 = y - response.predict(theta0, x)
    noise = residual_cumulants if residual_cumulants is not None else sample_cumulants(resid0, 4)
    g2 = variance_reduction_g2(noise.gamma3, noise.gamma4)
    a, b = _pmm2_ab(noise)

    # b ~ 0: quadratic term uninformative, least squares already optimal
    if abs(b) * np.sqrt(noise.c2) <= 1e-12 * abs(a):
        return PmmEstimate(theta_hat=theta0, iterations=ls.iterations, converged=True,
                           g_coefficient=g2, coefficients=np.array([a, b]))

    c2 = noise.c2
    n = y.size

    def system(th):
        e = y - response.predict(th, x)
        J = response.jacobian(th, x)
        psi = a * e + b * (e**2 - c2)
        score = J.T @ psi / n
        info = J.T @ (J * (a + 2.0 * b * e)[:, None]) / n
        return score, info, e

    scale = tol * (1.0 + abs(a) * np.sqrt(c2) + abs(b) * c2) * float(
        np.mean(np.abs(response.jacobian(theta0, x))) + 1.0)
    theta = theta0.copy()
    score, info, e = system(theta)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if np.linalg.norm(score) <= scale:
            break
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(info, score, rcond=None)[0]
        lam, accepted = 1.0, False
        for _ in range(max_halvings):
            cand = theta + lam * step
            s2, i2, e2 = system(cand)
            if np.isfinite(s2).all() and np.linalg.norm(s2) < np.linalg.norm(score):
                theta, score, info, e = cand, s2, i2, e2
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            break
    converged = bool(np.linalg.norm(score) <= scale)
    if not converged and iterations >= max_iter:
        raise NoConvergence(f"regression stationarity system stalled after {max_iter} iterations")
    return PmmEstimate(theta_hat=theta, iterations=iterations, converged=converged,
                       g_coefficient=g2, coefficients=np.array([a, b]))


def pmm_dispatch(sample_or_residuals, *, min_gain=DISPATCH_MIN_GAIN,
                 symmetry_threshold=DISPATCH_SYMMETRY,
                 platykurtic_threshold=DISPATCH_PLATYKURTIC) -> str:
    """Choose OLS / PMM2 / PMM3 from estimated shape coefficients.

    PMM2 when the predicted degree-2 gain beats ``min_gain``; PMM3 when the
    sample looks symmetric and platykurtic and the degree-3 system predicts
    a gain; plain least squares otherwise.
    """
    x = np.asarray(sample_or_residuals, dtype=np.float64)
    if x.size < 30:
        raise InsufficientData("shape-based dispatch needs at least 30 observations")
    est = sample_cumulants(x, 6)
    try:
        g2 = variance_reduction_g2(est.gamma3, est.gamma4)
    except InvalidShape:
        return "OLS"
    if g2 < 1.0 - min_gain:
        return "PMM2"
    if abs(est.gamma3) < symmetry_threshold and est.gamma4 < -platykurtic_threshold:
        sym = CumulantSet.from_cumulants(est.c2, 0.0, est.c4, 0.0, est.c6)
        try:
            g3 = predicted_g_location(sym, 3)
        except DegenerateCorrelantMatrix:
            return "OLS"
        if g3 < 1.0 - min_gain:
            return "PMM3"
    return "OLS"
