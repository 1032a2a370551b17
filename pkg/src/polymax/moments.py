"""Sample and analytic moments, cumulants, and shape coefficients up to order 6.

Cumulant estimation uses unbiased k-statistics for orders 2..4 (they matter
at N ~ 30) and plug-in central-moment identities for orders 5 and 6. The
dimensionless shape pair is gamma3 = c3/c2^(3/2) and gamma4 = c4/c2^2; a
moment-realizable distribution always satisfies gamma4 >= gamma3^2 - 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateSample,
    InsufficientData,
    InvalidShape,
    OrderUnavailable,
    UnsupportedDistribution,
)

_REALIZABILITY_TOL = 1e-9


@dataclass(frozen=True)
class CumulantSet:
    """Cumulants c2..c6 of a distribution plus its shape coefficients."""

    c2: float
    c3: float = 0.0
    c4: float = 0.0
    c5: float = 0.0
    c6: float = 0.0
    gamma3: float = field(default=0.0)
    gamma4: float = field(default=0.0)

    def __post_init__(self):
        if not np.isfinite([self.c2, self.c3, self.c4, self.c5, self.c6]).all():
            raise InvalidShape("cumulants must be finite")
        if self.c2 < 0:
            raise InvalidShape(f"variance must be nonnegative, got {self.c2}")
        scale = 1.0 + abs(self.gamma3) ** 2 + abs(self.gamma4)
        if self.gamma4 < self.gamma3**2 - 2.0 - _REALIZABILITY_TOL * scale:
            raise InvalidShape(
                "unrealizable shape: gamma4 = "
                f"{self.gamma4} < gamma3^2 - 2 = {self.gamma3 ** 2 - 2.0}"
            )
        if self.c2 > 0:
            g3 = self.c3 / self.c2**1.5
            g4 = self.c4 / self.c2**2
            ref = 1.0 + abs(g3) + abs(g4)
            if abs(g3 - self.gamma3) > 1e-8 * ref or abs(g4 - self.gamma4) > 1e-8 * ref:
                raise InvalidShape("gamma3/gamma4 inconsistent with c2..c4")

    @classmethod
    def from_cumulants(cls, c2, c3=0.0, c4=0.0, c5=0.0, c6=0.0) -> "CumulantSet":
        """Build a set from raw cumulant values, deriving gamma3/gamma4."""
        if c2 > 0:
            g3 = c3 / c2**1.5
            g4 = c4 / c2**2
        else:
            g3 = g4 = 0.0
        return cls(c2=float(c2), c3=float(c3), c4=float(c4), c5=float(c5),
                   c6=float(c6), gamma3=g3, gamma4=g4)

    def cumulant(self, order: int) -> float:
        if order == 1:
            return 0.0
        if 2 <= order <= 6:
            return (self.c2, self.c3, self.c4, self.c5, self.c6)[order - 2]
        raise OrderUnavailable(f"cumulant order {order} not stored")

    @property
    def gamma6(self) -> float:
        """Sixth shape coefficient c6/c2^3 (used by degree-3 dispatch)."""
        if self.c2 <= 0:
            return 0.0
        return self.c6 / self.c2**3


@dataclass(frozen=True)
class InitialMomentVector:
    """Raw moments alpha_1..alpha_order about the origin."""

    alpha: tuple
    order: int

    def __post_init__(self):
        if len(self.alpha) != self.order:
            raise InvalidShape("moment vector length must equal declared order")
        if self.order >= 2 and self.alpha[1] < self.alpha[0] ** 2 - 1e-9 * (
            1.0 + self.alpha[0] ** 2
        ):
            raise InvalidShape("alpha2 < alpha1^2 violates Cauchy-Schwarz")

    def __getitem__(self, i: int) -> float:
        """1-based access: self[i] = alpha_i; self[0] = 1."""
        if i == 0:
            return 1.0
        return self.alpha[i - 1]


@dataclass(frozen=True)
class Distribution:
    """Descriptor of a built-in distribution family."""

    family: str
    params: tuple

    @classmethod
    def normal(cls, mu=0.0, sigma=1.0):
        return cls("normal", (float(mu), float(sigma)))

    @classmethod
    def chi_square(cls, k):
        return cls("chi_square", (float(k),))

    @classmethod
    def gamma(cls, shape, scale=1.0):
        return cls("gamma", (float(shape), float(scale)))

    @classmethod
    def lognormal(cls, mu=0.0, sigma=1.0):
        return cls("lognormal", (float(mu), float(sigma)))

    @classmethod
    def uniform(cls, a=0.0, b=1.0):
        return cls("uniform", (float(a), float(b)))

    @classmethod
    def exponential_power(cls, beta, mu=0.0, alpha=1.0):
        return cls("exponential_power", (float(beta), float(mu), float(alpha)))

    def mean(self) -> float:
        f, p = self.family, self.params
        if f == "normal":
            return p[0]
        if f == "chi_square":
            return p[0]
        if f == "gamma":
            return p[0] * p[1]
        if f == "lognormal":
            return math.exp(p[0] + p[1] ** 2 / 2.0)
        if f == "uniform":
            return (p[0] + p[1]) / 2.0
        if f == "exponential_power":
            return p[1]
        raise UnsupportedDistribution(f)


def _central_moments(x: np.ndarray, max_order: int) -> list:
    xc = x - x.mean()
    return [float(np.mean(xc**r)) for r in range(2, max_order + 1)]


def sample_cumulants(sample, max_order: int = 4) -> CumulantSet:
    """Bias-corrected cumulant estimates from a sample.

    Orders 2..4 use k-statistics; orders 5..6 use plug-in central-moment
    identities. When the k-statistic correction pushes the estimated shape
    below the realizability boundary gamma4 = gamma3^2 - 2 (possible in
    small samples, never for plug-in estimates), c4 is clamped up to the
    boundary so the set stays constructible.
    """
    x = np.asarray(sample, dtype=np.float64).ravel()
    n = x.size
    if not 2 <= max_order <= 6:
        raise ValueError("max_order must be in 2..6")
    if n < max_order + 1:
        raise InsufficientData(f"need at least {max_order + 1} observations, got {n}")
    m = _central_moments(x, max(max_order, 2))
    m2 = m[0]
    if m2 <= 0 or not np.isfinite(m2):
        raise DegenerateSample("sample variance is zero")

    c2 = n / (n - 1.0) * m2
    c3 = c4 = c5 = c6 = 0.0
    if max_order >= 3:
        c3 = n**2 / ((n - 1.0) * (n - 2.0)) * m[1]
    if max_order >= 4:
        c4 = (
            n**2
            * ((n + 1.0) * m[2] - 3.0 * (n - 1.0) * m2**2)
            / ((n - 1.0) * (n - 2.0) * (n - 3.0))
        )
    if max_order >= 5:
        c5 = m[3] - 10.0 * m[1] * m2
    if max_order >= 6:
        c6 = m[4] - 15.0 * m[2] * m2 - 10.0 * m[1] ** 2 + 30.0 * m2**3

    if max_order >= 4:
        floor_c4 = (c3**2 / c2**3 - 2.0) * c2**2
        if c4 < floor_c4:
            c4 = floor_c4
    return CumulantSet.from_cumulants(c2, c3, c4, c5, c6)


def analytic_cumulants(dist: Distribution) -> CumulantSet:
    """Exact population cumulants c2..c6 for a built-in family."""
    f, p = dist.family, dist.params
    if f == "normal":
        return CumulantSet.from_cumulants(p[1] ** 2)
    if f == "chi_square":
        k = p[0]
        return CumulantSet.from_cumulants(
            *[2.0 ** (r - 1) * math.factorial(r - 1) * k for r in range(2, 7)]
        )
    if f == "gamma":
        a, s = p
        return CumulantSet.from_cumulants(
            *[a * math.factorial(r - 1) * s**r for r in range(2, 7)]
        )
    if f == "uniform":
        w = p[1] - p[0]
        # kappa_r of uniform over width w: B_r / r * w^r (Bernoulli numbers)
        return CumulantSet.from_cumulants(
            w**2 / 12.0, 0.0, -(w**4) / 120.0, 0.0, w**6 / 252.0
        )
    if f == "lognormal":
        mu, sig = p
        alpha = [math.exp(r * mu + r**2 * sig**2 / 2.0) for r in range(1, 7)]
        kappa = cumulants_from_raw_moments(alpha)
        return CumulantSet.from_cumulants(*kappa[1:6])
    if f == "exponential_power":
        beta, _, al = p
        g = math.gamma
        mu_r = [
            al**r * g((r + 1.0) / beta) / g(1.0 / beta) if r % 2 == 0 else 0.0
            for r in range(2, 7)
        ]
        m2, _, m4, _, m6 = mu_r
        return CumulantSet.from_cumulants(
            m2, 0.0, m4 - 3.0 * m2**2, 0.0, m6 - 15.0 * m4 * m2 + 30.0 * m2**3
        )
    raise UnsupportedDistribution(f)


def raw_moments_from_cumulants(c: CumulantSet, mean: float, order: int) -> InitialMomentVector:
    """Raw moments alpha_1..alpha_order of the variable mean + (c-shaped noise).

    Standard recursion alpha_n = kappa_n + sum_m C(n-1, m-1) kappa_m alpha_{n-m};
    exact for polynomial identities.
    """
    if order > 6:
        raise OrderUnavailable(f"order {order} exceeds stored cumulants (6)")
    kappa = [float(mean)] + [c.cumulant(r) for r in range(2, order + 1)]
    alpha = _raw_from_kappa(kappa)
    return InitialMomentVector(alpha=tuple(alpha), order=order)


def _raw_from_kappa(kappa: list) -> list:
    alpha = []
    for n in range(1, len(kappa) + 1):
        a = kappa[n - 1]
        for m in range(1, n):
            a += math.comb(n - 1, m - 1) * kappa[m - 1] * alpha[n - m - 1]
        alpha.append(a)
    return alpha


def cumulants_from_raw_moments(alpha) -> list:
    """Inverse recursion: kappa_1..kappa_n from raw moments alpha_1..alpha_n."""
    alpha = list(alpha)
    kappa = []
    for n in range(1, len(alpha) + 1):
        k = alpha[n - 1]
        for m in range(1, n):
            k -= math.comb(n - 1, m - 1) * kappa[m - 1] * alpha[n - m - 1]
        kappa.append(k)
    return kappa
