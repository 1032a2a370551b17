"""Stochastic-polynomial apparatus: basis families, centered correlant matrices,
their Gram volume, and the polynomial variance quadratic form.

For a basis {phi_i} the centered correlant matrix has entries
F[i,j] = E[phi_i phi_j] - E[phi_i] E[phi_j]; its determinant (the Gram
"volume") must stay positive for any estimator built on the basis to be
well defined. For the power basis phi_i(x) = x^i everything reduces to raw
moments: Psi_i = alpha_i and Psi_{i,j} = alpha_{i+j}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import lag_design_matrix
from .errors import DegenerateCorrelantMatrix, DimensionMismatch, IndexOutOfWindow
from .moments import InitialMomentVector

#: det(F) below DEGENERACY_RTOL * prod(diag F) is treated as a degenerate basis
DEGENERACY_RTOL = 1e-10


@dataclass(frozen=True)
class BasisFamily:
    """Basis descriptor: plain powers of a scalar, or monomial lag products."""

    kind: str  # "power" | "lag-products"
    degree: int
    memory: int = 1

    def __post_init__(self):
        if self.kind not in ("power", "lag-products"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.degree < 1 or self.memory < 1:
            raise ValueError("degree and memory must be >= 1")

    @property
    def size(self) -> int:
        if self.kind == "power":
            return self.degree
        return basis_size(self.degree, self.memory)


@dataclass(frozen=True)
class CorrelantMatrix:
    """Centered correlant (Gram) matrix F, basis means psi, and det(F)."""

    F: np.ndarray
    psi: np.ndarray
    det: float
    size: int

    def solve(self, b):
        return np.linalg.solve(self.F, b)


@dataclass(frozen=True)
class StochasticPolynomial:
    """eta = h0 + sum_i h_i phi_i with finite nonrandom coefficients."""

    coefficients: tuple  # (h0, h1, ..., hS)
    basis: BasisFamily

    def __post_init__(self):
        if not np.isfinite(self.coefficients).all():
            raise ValueError("polynomial coefficients must be finite")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1


def _as_correlant_matrix(F: np.ndarray, psi: np.ndarray) -> CorrelantMatrix:
    F = np.asarray(F, dtype=np.float64)
    F = 0.5 * (F + F.T)  # kill rounding asymmetry; construction is symmetric
    det = float(np.linalg.det(F))
    diag = np.diag(F)
    scale = float(np.prod(diag)) if np.all(diag > 0) else 0.0
    if scale <= 0.0 or det <= DEGENERACY_RTOL * scale:
        raise DegenerateCorrelantMatrix(
            f"Gram volume {det:.3e} below tolerance (diag scale {scale:.3e})"
        )
    return CorrelantMatrix(F=F, psi=np.asarray(psi, dtype=np.float64),
                           det=det, size=F.shape[0])


def build_correlant_matrix(basis: BasisFamily, moments: InitialMomentVector) -> CorrelantMatrix:
    """F for the power basis, from raw moments up to order 2*degree.

    Lag-product bases have no closed moment description for arbitrary
    signals; build their F with :func:`empirical_correlants` over a design
    matrix instead (time averages, which assumes ergodicity over the
    observation window).
    """
    if basis.kind != "power":
        raise ValueError("moment-based construction is defined for the power basis; "
                         "use empirical_correlants for lag-product bases")
    s = basis.degree
    if moments.order < 2 * s:
        raise DimensionMismatch(f"need raw moments up to order {2 * s}, got {moments.order}")
    psi = np.array([moments[i] for i in range(1, s + 1)])
    F = np.empty((s, s))
    for i in range(1, s + 1):
        for j in range(1, s + 1):
            F[i - 1, j - 1] = moments[i + j] - moments[i] * moments[j]
    return _as_correlant_matrix(F, psi)


def empirical_correlants(design: np.ndarray) -> CorrelantMatrix:
    """F from empirical basis averages: rows are observations, columns basis values."""
    z = np.asarray(design, dtype=np.float64)
    psi = z.mean(axis=0)
    F = z.T @ z / z.shape[0] - np.outer(psi, psi)
    return _as_correlant_matrix(F, psi)


def polynomial_variance(poly: StochasticPolynomial, corr: CorrelantMatrix) -> float:
    """Var(eta) = h' F h over h1..hS (the constant h0 carries no variance)."""
    h = np.asarray(poly.coefficients[1:], dtype=np.float64)
    if h.size != corr.size:
        raise DimensionMismatch(f"polynomial degree {h.size} vs matrix size {corr.size}")
    v = float(h @ corr.F @ h)
    return max(v, 0.0)


def basis_size(N: int, M: int) -> int:
    """Number of monomial lag-product basis functions of degree <= N, memory M.

    Exactly sum_{p=1..N} C(M+p-1, p); for N = 2 this is M + M(M+1)/2 once
    the symmetry of the quadratic kernel is folded in.
    """
    from math import comb

    if N < 1 or M < 1:
        raise ValueError("N and M must be >= 1")
    return sum(comb(M + p - 1, p) for p in range(1, N + 1))


def expand_lag_basis(signal, N: int, M: int, n: int) -> np.ndarray:
    """Basis vector (phi_1..phi_S) at sample index n of the signal.

    Ordering: products of p lags for p = 1..N, index tuples
    0 <= i1 <= ... <= ip <= M-1 lexicographic within each p, so for
    N = 2, M = 2 the order is x[n], x[n-1], x[n]^2, x[n]x[n-1], x[n-1]^2.
    """
    x = np.asarray(signal, dtype=np.float64)
    if n < M - 1 or n >= x.size:
        raise IndexOutOfWindow(f"index {n} lacks a full {M}-lag window")
    window = x[n - M + 1 : n + 1]
    return lag_design_matrix(window, M, degree=N)[0]
