"""Discrete second-order Volterra model and batch kernel adaptation.

The model

    y[n] = h0 + sum_i h1[i] x[n-i] + sum_{i,j} h2[i,j] x[n-i] x[n-j]

is linear in its coefficients once rewritten over the monomial lag-product
basis, so adaptation is a (possibly ridge-stabilized) linear solve rather
than a stochastic-gradient recursion: deterministic, testable, and exact
at the optimum. Two adaptation routes are provided: the plain normal
equations over the raw basis Gram matrix ("mmse"), and the same-basis
solve over centered correlants with the offset recovered from means
("moment"). Both enforce quadratic-kernel symmetry by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Optional

import numpy as np

from ._kernels import lag_design_matrix
from .errors import (
    DegenerateCorrelantMatrix,
    LengthMismatch,
    SignalTooShort,
    SingularSystem,
)
from .moments import CumulantSet
from .stochpoly import basis_size

_SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class VolterraKernels:
    h0: float
    h1: np.ndarray  # (m1,)
    h2: np.ndarray  # (m2, m2), symmetric

    def __post_init__(self):
        h1 = np.atleast_1d(np.asarray(self.h1, dtype=np.float64))
        h2 = np.atleast_2d(np.asarray(self.h2, dtype=np.float64))
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)
        if not (np.isfinite(self.h0) and np.isfinite(h1).all() and np.isfinite(h2).all()):
            raise ValueError("kernel entries must be finite")
        if h2.shape[0] != h2.shape[1]:
            raise ValueError("quadratic kernel must be square")
        scale = np.max(np.abs(h2)) if h2.size else 0.0
        if scale > 0 and np.max(np.abs(h2 - h2.T)) > _SYMMETRY_RTOL * scale:
            raise ValueError("quadratic kernel must be symmetric")

    @property
    def m1(self) -> int:
        return self.h1.shape[0]

    @property
    def m2(self) -> int:
        return self.h2.shape[0]

    @property
    def memory(self) -> int:
        return max(self.m1, self.m2)


@dataclass(frozen=True)
class AdaptationReport:
    kernels: VolterraKernels
    residual_mse: float
    condition: float
    method: str
    shape: Optional[CumulantSet] = None


def _lag_matrix(x: np.ndarray, m: int) -> np.ndarray:
    """lags[t, i] = x[m-1+t-i]: the length-m lag window ending at sample m-1+t."""
    rows = x.shape[0] - m + 1
    return np.column_stack([x[m - 1 - i : m - 1 - i + rows] for i in range(m)])


def volterra_predict(kernels: VolterraKernels, x) -> np.ndarray:
    """Model output for n >= memory-1 (no zero padding of early samples)."""
    x = np.asarray(x, dtype=np.float64)
    m = kernels.memory
    if x.shape[0] < m:
        raise SignalTooShort(f"need at least {m} samples, got {x.shape[0]}")
    lags = _lag_matrix(x, m)
    y = np.full(lags.shape[0], kernels.h0)
    y += lags[:, : kernels.m1] @ kernels.h1
    q = lags[:, : kernels.m2]
    y += np.einsum("ti,ij,tj->t", q, kernels.h2, q)
    return y


def _column_selector(m: int, m1: int, m2: int):
    """Indices of the full memory-m degree-2 basis kept by an (m1, m2) model."""
    keep = [i for i in range(m) if i < m1]
    pairs = list(combinations_with_replacement(range(m), 2))
    keep += [m + k for k, (i, j) in enumerate(pairs) if j < m2]
    kept_pairs = [(i, j) for (i, j) in pairs if j < m2]
    return np.array(keep, dtype=np.intp), kept_pairs


def kernels_to_coefficients(kernels: VolterraKernels) -> np.ndarray:
    """Flatten to (1 + basis_size(2, memory)) coefficients.

    Order: offset, linear lags, then upper-triangle quadratic pairs with
    off-diagonal entries folded to 2*h2[i,j] (the symmetric pair collapses
    onto a single basis function x[n-i]x[n-j]).
    """
    m = kernels.memory
    flat = np.zeros(1 + basis_size(2, m))
    flat[0] = kernels.h0
    flat[1 : 1 + kernels.m1] = kernels.h1
    for k, (i, j) in enumerate(combinations_with_replacement(range(m), 2)):
        if i < kernels.m2 and j < kernels.m2:
            flat[1 + m + k] = kernels.h2[i, j] if i == j else 2.0 * kernels.h2[i, j]
    return flat


def coefficients_to_kernels(flat, m: int) -> VolterraKernels:
    """Inverse of :func:`kernels_to_coefficients` with m1 = m2 = m."""
    flat = np.asarray(flat, dtype=np.float64)
    expected = 1 + basis_size(2, m)
    if flat.shape[0] != expected:
        raise LengthMismatch(f"expected {expected} coefficients for memory {m}, "
                             f"got {flat.shape[0]}")
    h1 = flat[1 : 1 + m].copy()
    h2 = np.zeros((m, m))
    for k, (i, j) in enumerate(combinations_with_replacement(range(m), 2)):
        v = flat[1 + m + k]
        if i == j:
            h2[i, i] = v
        else:
            h2[i, j] = h2[j, i] = v / 2.0
    return VolterraKernels(h0=float(flat[0]), h1=h1, h2=h2)


def predict_from_coefficients(flat, m: int, x) -> np.ndarray:
    """Prediction through the flattened-basis route (no kernel rebuild)."""
    flat = np.asarray(flat, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < m:
        raise SignalTooShort(f"need at least {m} samples, got {x.shape[0]}")
    design = lag_design_matrix(x, m, degree=2)
    return flat[0] + design @ flat[1:]


def _design_and_target(x, y, m1: int, m2: int):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != x.shape:
        raise LengthMismatch("input and desired sequences must have equal length")
    m = max(m1, m2)
    keep, kept_pairs = _column_selector(m, m1, m2)
    ncoef = 1 + keep.shape[0]
    if x.shape[0] - m + 1 <= ncoef:
        raise SignalTooShort(
            f"{x.shape[0]} samples leave {x.shape[0] - m + 1} usable rows, "
            f"need more than {ncoef}")
    design = lag_design_matrix(x, m, degree=2)[:, keep]
    return design, y[m - 1 :], m, kept_pairs


def _to_kernels(h0: float, coef: np.ndarray, m1: int, m2: int, kept_pairs) -> VolterraKernels:
    h1 = coef[:m1].copy()
    h2 = np.zeros((m2, m2))
    for k, (i, j) in enumerate(kept_pairs):
        v = coef[m1 + k]
        if i == j:
            h2[i, i] = v
        else:
            h2[i, j] = h2[j, i] = v / 2.0
    return VolterraKernels(h0=h0, h1=h1, h2=h2)


def mmse_adapt(x, y, m1: int, m2: int, ridge: float = 0.0) -> AdaptationReport:
    """Least-squares kernel fit through the basis normal equations.

    Solves (C + ridge*I) h = r with C the raw basis Gram matrix (constant
    included) and r the basis/target cross vector.
    """
    design, target, m, kept_pairs = _design_and_target(x, y, m1, m2)
    n = design.shape[0]
    z = np.column_stack([np.ones(n), design])
    C = z.T @ z / n
    r = z.T @ target / n
    if ridge > 0:
        C = C + ridge * np.eye(C.shape[0])
    else:
        eig = np.linalg.eigvalsh(C)
        if eig[0] <= 1e-12 * max(eig[-1], 1e-300):
            raise SingularSystem("basis Gram matrix is rank deficient; supply a ridge")
    h = np.linalg.solve(C, r)
    kernels = _to_kernels(float(h[0]), h[1:], m1, m2, kept_pairs)
    resid = target - (h[0] + design @ h[1:])
    return AdaptationReport(kernels=kernels, residual_mse=float(np.mean(resid**2)),
                            condition=float(np.linalg.cond(C)), method="mmse")


def moment_adapt(x, y, m1: int, m2: int, shape: Optional[CumulantSet] = None,
                 ridge: float = 0.0) -> AdaptationReport:
    """Kernel fit through centered correlants of the lag-product basis.

    Solves F h = b with F the centered basis correlant matrix and b the
    centered basis/target cross vector; the offset is recovered from the
    means afterward. ``shape`` records the declared input class in the
    report (this minimal construction estimates all correlants from the
    observed signal itself). For a white zero-mean input this coincides
    with :func:`mmse_adapt` up to offset handling.
    """
    design, target, m, kept_pairs = _design_and_target(x, y, m1, m2)
    psi = design.mean(axis=0)
    F = design.T @ design / design.shape[0] - np.outer(psi, psi)
    if ridge > 0:
        F = F + ridge * np.eye(F.shape[0])
    else:
        det = float(np.linalg.det(F))
        diag = np.diag(F)
        dscale = float(np.prod(diag)) if np.all(diag > 0) else 0.0
        if dscale <= 0.0 or det <= 1e-10 * dscale:
            raise DegenerateCorrelantMatrix(
                f"centered correlant matrix degenerate (volume {det:.3e})")
    b = design.T @ target / design.shape[0] - psi * target.mean()
    h = np.linalg.solve(F, b)
    h0 = float(target.mean() - h @ psi)
    kernels = _to_kernels(h0, h, m1, m2, kept_pairs)
    resid = target - (h0 + design @ h)
    return AdaptationReport(kernels=kernels, residual_mse=float(np.mean(resid**2)),
                            condition=float(np.linalg.cond(F)), method="moment",
                            shape=shape)
