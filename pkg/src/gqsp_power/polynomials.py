"""Method polynomials, Chebyshev conversion and unit-circle rescaling.

All method polynomials are expressed in the dimensionless argument
``x = H / lambda`` (lambda the l1 norm). A Chebyshev series ``sum a_k T_k(x)``
maps index-by-index onto the unit-circle polynomial ``sum a_k z^k`` that GQSP
implements on the block encoding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import optimize, special

EXACT_BINOMIAL_LIMIT = 60
DEFAULT_MARGIN = 1e-6


def _trim(c: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(c)
    return c[: nz[-1] + 1] if len(nz) else c[:1] * 0


@dataclass(frozen=True)
class MonomialPoly:
    """Coefficients in ascending powers of the scaled operator argument."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        if not np.all(np.isfinite(c)):
            raise ValueError("polynomial coefficients must be finite")
        object.__setattr__(self, "coefficients", _trim(c))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coefficients)

    def __mul__(self, other: "MonomialPoly") -> "MonomialPoly":
        return MonomialPoly(np.convolve(self.coefficients, other.coefficients))

    def power(self, t: int) -> "MonomialPoly":
        out = MonomialPoly([1.0])
        for _ in range(t):
            out = out * self
        return out


@dataclass(frozen=True)
class UnitCirclePoly:
    """P(z) = sum_k c_k z^k. Coefficients are stored as given (zero padding is
    kept so a requested GQSP degree survives); ``degree`` reports the highest
    nonzero index."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("polynomial coefficients must be a finite 1-D array")
        object.__setattr__(self, "coefficients", c)

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coefficients)
        return int(nz[-1]) if len(nz) else 0

    @property
    def length(self) -> int:
        return len(self.coefficients)

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.coefficients)

    def scaled(self, factor: complex) -> "UnitCirclePoly":
        return UnitCirclePoly(self.coefficients * factor)

    def padded(self, length: int) -> np.ndarray:
        out = np.zeros(max(length, self.length), dtype=complex)
        out[: self.length] = self.coefficients
        return out

    def to_json(self) -> str:
        return json.dumps([[float(c.real), float(c.imag)] for c in self.coefficients])

    @classmethod
    def from_json(cls, text: str) -> "UnitCirclePoly":
        data = json.loads(text)
        if not isinstance(data, list) or not data:
            raise ValueError("polynomial JSON must be a non-empty array of [re, im] pairs")
        coeffs = []
        for entry in data:
            if isinstance(entry, (int, float)):
                coeffs.append(complex(entry))
            else:
                re, im = entry
                coeffs.append(complex(float(re), float(im)))
        return cls(np.array(coeffs))


@dataclass(frozen=True)
class RescaleInfo:
    alpha: float
    grid_max: float
    margin: float


def binomial(n: int, k: int) -> float:
    """Binomial coefficient; exact below the overflow-safe limit, log-gamma above."""
    if k < 0 or k > n:
        return 0.0
    if n <= EXACT_BINOMIAL_LIMIT:
        return float(math.comb(n, k))
    return float(np.exp(special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)))


def power_to_chebyshev(n: int) -> np.ndarray:
    """Chebyshev coefficients of x^n, i.e. 2^(1-n) sum' binom(n, (n-k)/2) T_k."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = np.zeros(n + 1)
    for k in range(n % 2, n + 1, 2):
        if n <= EXACT_BINOMIAL_LIMIT:
            val = float(math.comb(n, (n - k) // 2) * Fraction(2) ** (1 - n))
        else:
            val = binomial(n, (n - k) // 2) * 2.0 ** (1 - n)
        out[k] = val / 2 if k == 0 else val
    return out


def monomial_to_chebyshev(p: MonomialPoly) -> np.ndarray:
    out = np.zeros(p.degree + 1, dtype=complex)
    for j, cj in enumerate(p.coefficients):
        if cj != 0:
            out[: j + 1] += cj * power_to_chebyshev(j)
    return out


def chebyshev_to_circle(cheb) -> UnitCirclePoly:
    return UnitCirclePoly(np.asarray(cheb, dtype=complex))


def qpi_poly(n: int) -> MonomialPoly:
    if n < 1:
        raise ValueError("power iteration needs n >= 1")
    c = np.zeros(n + 1)
    c[n] = 1.0
    return MonomialPoly(c)


def qpl_poly(n: int, c) -> MonomialPoly:
    """x^n (1 + C_1 x + ... + C_k x^k); the C_i may be complex."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    out = np.zeros(n + len(c) + 1, dtype=complex)
    out[n] = 1.0
    out[n + 1 :] = c
    return MonomialPoly(out)


def qii_poly(n: int, eps_scaled: complex, truncation: int) -> MonomialPoly:
    """Truncated Taylor series of (x - eps)^(-n) about x = 0, kept through x^K."""
    if n < 1:
        raise ValueError("inverse power n must be >= 1")
    if truncation < 0:
        raise ValueError("truncation must be nonnegative")
    if eps_scaled == 0:
        raise ValueError("zero shift: the resolvent series is undefined")
    eps = complex(eps_scaled)
    sign = (-1) ** n
    coeffs = [
        sign * binomial(n + k - 1, k) * eps ** (-(n + k)) for k in range(truncation + 1)
    ]
    return MonomialPoly(np.array(coeffs, dtype=complex))


def qfsm_poly(n: int, c_scaled: float) -> MonomialPoly:
    """(1 - C x^2)^n expanded as sum_k binom(n, k) (-C)^k x^(2k)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if c_scaled <= 0:
        raise ValueError("fold constant must be positive")
    out = np.zeros(2 * n + 1)
    for k in range(n + 1):
        out[2 * k] = binomial(n, k) * (-c_scaled) ** k
    return MonomialPoly(out)


def eval_on_circle(p: UnitCirclePoly, grid_size: int) -> np.ndarray:
    """p(exp(2 pi i j / M)) for j = 0..M-1 by a zero-padded inverse FFT."""
    d = p.length - 1
    if grid_size < 2 * (d + 1):
        raise ValueError(f"grid of {grid_size} points undersamples a degree-{d} polynomial")
    return np.fft.ifft(p.coefficients, n=grid_size) * grid_size


def default_grid(length: int) -> int:
    return max(8192, 16 * length)


def circle_max(p: UnitCirclePoly, grid_size: int | None = None) -> float:
    """Max |p| on the unit circle: grid search polished by bounded 1-D maximization."""
    m = grid_size or default_grid(p.length)
    vals = np.abs(eval_on_circle(p, m))
    best = float(vals.max())
    if p.length <= 1:
        return best
    step = 2 * np.pi / m
    for j in np.argsort(vals)[-4:]:
        t0 = 2 * np.pi * j / m
        res = optimize.minimize_scalar(
            lambda t: -abs(p(np.exp(1j * t))),
            bounds=(t0 - step, t0 + step),
            method="bounded",
            options={"xatol": 1e-12},
        )
        best = max(best, float(-res.fun))
    return best


def partition_rescale(p: UnitCirclePoly, margin: float = DEFAULT_MARGIN) -> tuple[UnitCirclePoly, RescaleInfo]:
    if not np.any(p.coefficients):
        raise ValueError("cannot rescale the zero polynomial")
    grid_max = circle_max(p)
    alpha = grid_max * (1 + margin)
    return p.scaled(1 / alpha), RescaleInfo(alpha=alpha, grid_max=grid_max, margin=margin)
