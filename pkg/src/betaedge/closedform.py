"""Exact analytic ground truth: kernel expectation at the origin for beta = 2,
the conditional Gaussian law of the reflected-bridge functional, the moment
generating function and moments of A, and the bridge densities.

The error functions are computed in-repo with Cody-style rational minimax
approximations (the classic SPECFUN coefficient sets; absolute error below
1e-15, comfortably inside the 1e-12 budget), including a scaled ``erfcx``
path so that products of huge exponentials with tiny complementary error
functions never go through a cancelling intermediate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

SQRT_PI = math.sqrt(math.pi)
_RSQRT_PI = 1.0 / SQRT_PI

# Cody (1969) rational coefficients, regions |x| <= 0.46875, <= 4.0, > 4.0.
_ERF_A = (3.16112374387056560e00, 1.13864154151050156e02,
          3.77485237685302021e02, 3.20937758913846947e03,
          1.85777706184603153e-1)
_ERF_B = (2.36012909523441209e01, 2.44024637934444173e02,
          1.28261652607737228e03, 2.84423683343917062e03)
_ERF_C = (5.64188496988670089e-1, 8.88314979438837594e00,
          6.61191906371416295e01, 2.98635138197400131e02,
          8.81952221241769090e02, 1.71204761263407058e03,
          2.05107837782607147e03, 1.23033935479799725e03,
          2.15311535474403846e-8)
_ERF_D = (1.57449261107098347e01, 1.17693950891312499e02,
          5.37181101862009858e02, 1.62138957456669019e03,
          3.29079923573345963e03, 4.36261909014324716e03,
          3.43936767414372164e03, 1.23033935480374942e03)
_ERF_P = (3.05326634961232344e-1, 3.60344899949804439e-1,
          1.25781726111229246e-1, 1.60837851487422766e-2,
          6.58749161529837803e-4, 1.63153871373020978e-2)
_ERF_Q = (2.56852019228982242e00, 1.87295284992346047e00,
          5.27905102951428412e-1, 6.05183413124413191e-2,
          2.33520497626869185e-3)


def _erfcx_positive(y: float) -> float:
    """exp(y^2) * erfc(y) for y >= 0.46875."""
    if y <= 4.0:
        xnum = _ERF_C[8] * y
        xden = y
        for i in range(7):
            xnum = (xnum + _ERF_C[i]) * y
            xden = (xden + _ERF_D[i]) * y
        return (xnum + _ERF_C[7]) / (xden + _ERF_D[7])
    z = 1.0 / (y * y)
    xnum = _ERF_P[5] * z
    xden = z
    for i in range(4):
        xnum = (xnum + _ERF_P[i]) * z
        xden = (xden + _ERF_Q[i]) * z
    res = z * (xnum + _ERF_P[4]) / (xden + _ERF_Q[4])
    return (_RSQRT_PI - res) / y


def _erf_small(x: float) -> float:
    """erf on |x| <= 0.46875."""
    z = x * x
    xnum = _ERF_A[4] * z
    xden = z
    for i in range(3):
        xnum = (xnum + _ERF_A[i]) * z
        xden = (xden + _ERF_B[i]) * z
    return x * (xnum + _ERF_A[3]) / (xden + _ERF_B[3])


def erf(x: float) -> float:
    y = abs(x)
    if y <= 0.46875:
        return _erf_small(x)
    val = 1.0 - math.exp(-y * y) * _erfcx_positive(y)
    return val if x > 0.0 else -val


def erfc(x: float) -> float:
    y = abs(x)
    if y <= 0.46875:
        return 1.0 - _erf_small(x)
    val = math.exp(-y * y) * _erfcx_positive(y)
    return val if x > 0.0 else 2.0 - val


def erfcx(x: float) -> float:
    """Scaled complementary error function exp(x^2) erfc(x)."""
    if x >= 0.46875:
        return _erfcx_positive(x)
    if x >= -26.6:
        return math.exp(x * x) * erfc(x)
    # erfc(x) -> 2 and exp(x^2) overflows
    return math.inf


# -- kernel expectation at the origin, beta = 2 ------------------------------

def spike_shift(w: float, big_t: float) -> float:
    """The constant C_{w;T} = sqrt(T) (T - 4w) / (4 sqrt(2))."""
    return math.sqrt(big_t) * (big_t - 4.0 * w) / (4.0 * math.sqrt(2.0))


def expected_kernel_00_beta2(w: float, big_t: float) -> float:
    """E[K(0,0)] at beta = 2: sqrt(2/(pi T)) e^{T^3/96} (1 + sqrt(pi) C e^{C^2} (erf(C)+1)).

    Evaluated through erfcx when C < 0, where e^{C^2} (erf(C)+1) = erfcx(-C)
    exactly, so the supercritically damped regime never cancels.
    """
    if big_t <= 0.0:
        raise ValueError("T must be positive")
    c = spike_shift(w, big_t)
    if c < 0.0:
        term = SQRT_PI * c * erfcx(-c)
    else:
        term = SQRT_PI * c * (2.0 * math.exp(c * c) - erfcx(c))
    return math.sqrt(2.0 / (math.pi * big_t)) * math.exp(big_t**3 / 96.0) * (1.0 + term)


# -- conditional law of the bridge functional --------------------------------

@dataclass(frozen=True)
class ConditionalLaw:
    """Gaussian law of int r - int L^2/2 given the zero local time."""

    mean: float
    variance: float


def conditional_law(alpha: float) -> ConditionalLaw:
    """Given local time alpha at zero: Gaussian(-alpha/4, 1/12)."""
    if alpha < 0.0:
        raise ValueError("alpha must be nonnegative")
    return ConditionalLaw(mean=-alpha / 4.0, variance=1.0 / 12.0)


# -- the random variable A ----------------------------------------------------

_SQRT32 = math.sqrt(1.5)


def mgf_A(kappa: float) -> float:
    """E[exp(kappa A)] = e^{k^2/2} - sqrt(3 pi / 2) k e^{2k^2} erfc(sqrt(3/2) k).

    Follows from A = Z - (sqrt(3)/2) L0 with E[e^{t L0}] = 1 + 2 sqrt(2 pi) t
    e^{2t^2} Phi(2t); the erfc prefactor sqrt(3 pi / 2) is forced by
    consistency with the moment table (the derivative at 0 must equal
    -sqrt(6 pi)/2).  Written through erfcx, which is cancellation-free for
    kappa of either sign.
    """
    z = _SQRT32 * kappa
    return math.exp(0.5 * kappa * kappa) * (1.0 - SQRT_PI * z * erfcx(z))


def _l0_moment(k: int) -> tuple[Fraction, bool]:
    """E[(L0)^k] as (rational, carries_sqrt_2pi).

    Even k: 2^{3k/2} (k/2)!  (a rational).  Odd k: rational * sqrt(2 pi).
    Derived from L0^2/8 ~ Exp(1); checked against quadrature in the tests.
    """
    if k % 2 == 0:
        j = k // 2
        return Fraction(8**j * math.factorial(j)), False
    # 2^{3k/2} Gamma(1 + k/2) with Gamma(j + 1/2) = (2j)! sqrt(pi) / (4^j j!)
    j = (k + 1) // 2
    rational = Fraction(2 ** (3 * j - 2) * math.factorial(2 * j),
                        4**j * math.factorial(j))
    return rational, True


def _gauss_moment(m: int) -> int:
    """E[Z^m] for standard normal Z (double factorial for even m, else 0)."""
    if m % 2 == 1:
        return 0
    out = 1
    for i in range(m - 1, 0, -2):
        out *= i
    return out


def moment_A_exact(n: int) -> tuple[int, Fraction]:
    """E[A^n] decomposed: even n -> (gaussian part, integer excess);
    odd n -> (0, rational coefficient of sqrt(6 pi)).

    Uses A = Z - (sqrt(3)/2) L0 with Z standard normal independent of L0 and
    binomial expansion; all arithmetic exact.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if n > 30:
        raise ValueError("moment order capped at 30 (factorial overflow guard)")
    c2 = Fraction(3, 4)  # c^2 for c = sqrt(3)/2
    if n % 2 == 0:
        total = Fraction(0)
        for k in range(0, n + 1, 2):
            lm, _ = _l0_moment(k)
            total += math.comb(n, k) * _gauss_moment(n - k) * c2 ** (k // 2) * lm
        gauss = _gauss_moment(n)
        return gauss, total - gauss
    # odd n: only odd k survive; each term carries -c^k E[L0^k] with
    # c^k = (3/4)^{(k-1)/2} * sqrt(3)/2 and E[L0^k] = rational * sqrt(2 pi),
    # so every term is rational * sqrt(6 pi).
    coeff = Fraction(0)
    for k in range(1, n + 1, 2):
        lm, _ = _l0_moment(k)
        coeff -= math.comb(n, k) * _gauss_moment(n - k) * c2 ** ((k - 1) // 2) * Fraction(1, 2) * lm
    return 0, coeff


def moment_A(n: int) -> float:
    """E[A^n] as a float (exact rational arithmetic underneath)."""
    gauss, rest = moment_A_exact(n)
    if n % 2 == 0:
        return float(gauss + rest)
    return float(rest) * math.sqrt(6.0 * math.pi)


def odd_moment_coefficient(n: int) -> Fraction:
    """Coefficient q(n) in E[A^{2n-1}] = -q(n) sqrt(6 pi): 2^n (2n-1)! / (4 (n-1)!)."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    return Fraction(2**n * math.factorial(2 * n - 1), 4 * math.factorial(n - 1))


# Printed moment table, stored in the decomposed form: even n -> (gauss, excess),
# odd n -> coefficient of sqrt(6 pi).
MOMENT_TABLE: dict[int, tuple[int, int] | Fraction] = {
    1: Fraction(-1, 2),
    2: (1, 6),
    3: Fraction(-6),
    4: (3, 108),
    5: Fraction(-120),
    6: (15, 2646),
    7: Fraction(-3360),
    8: (105, 85032),
    9: Fraction(-120960),
    10: (945, 3404430),
    11: Fraction(-5322240),
    12: (10395, 163446660),
    13: Fraction(-276756480),
    14: (135135, 9153449550),
}


def moment_table_value(n: int) -> float:
    """Float value of the tabulated moment for n = 1..14."""
    entry = MOMENT_TABLE[n]
    if isinstance(entry, tuple):
        return float(entry[0] + entry[1])
    return float(entry) * math.sqrt(6.0 * math.pi)


# -- bridge densities ---------------------------------------------------------

def bridge_hit_zero_prob(x: float, y: float, big_t: float) -> float:
    """P(min of a Brownian bridge from x to y over [0, T] reaches 0) = e^{-2xy/T}."""
    if big_t <= 0.0:
        raise ValueError("T must be positive")
    return math.exp(-2.0 * x * y / big_t)


def bridge_local_time_density(z, x1: float, y1: float):
    """Density on z > 0 of the zero local time of a unit-horizon bridge x1 -> y1:
    (z + x1 + y1) exp(((x1-y1)^2 - (z+x1+y1)^2)/2), with an atom of mass
    1 - e^{-2 x1 y1} at z = 0 (see ``bridge_local_time_atom``)."""
    z = np.asarray(z, dtype=np.float64)
    s = z + x1 + y1
    out = s * np.exp(0.5 * ((x1 - y1) ** 2 - s**2))
    return out if out.ndim else float(out)


def bridge_local_time_atom(x1: float, y1: float) -> float:
    """Mass at zero local time, i.e. probability the bridge misses level 0."""
    return 1.0 - math.exp(-2.0 * x1 * y1)


def density_L0_reflected_bridge(alpha):
    """Density (alpha/4) exp(-alpha^2/8) of the reflected-bridge zero local time."""
    alpha = np.asarray(alpha, dtype=np.float64)
    out = alpha / 4.0 * np.exp(-(alpha**2) / 8.0)
    return out if out.ndim else float(out)


# -- quadrature helper (adaptive Simpson, shared with the projection code) ----

def adaptive_simpson(f, a: float, b: float, rtol: float = 1e-10,
                     atol: float = 1e-300, max_depth: int = 40) -> float:
    """Adaptive Simpson quadrature of a scalar function on [a, b]."""
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_rec(f, a, b, fa, fm, fb, whole, rtol, atol, max_depth)


def _simpson_rec(f, a, b, fa, fm, fb, whole, rtol, atol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    err = left + right - whole
    if depth <= 0 or abs(err) <= 15.0 * max(rtol * abs(left + right), atol):
        return left + right + err / 15.0
    return (_simpson_rec(f, a, m, fa, flm, fm, left, rtol, atol, depth - 1)
            + _simpson_rec(f, m, b, fm, frm, fb, right, rtol, atol, depth - 1))


def expected_kernel_00_by_mixture(w: float, big_t: float, beta: float = 2.0) -> float:
    """E[K(0,0)] reconstructed by integrating the conditional law against the
    zero-local-time density; for beta = 2 it must reproduce
    ``expected_kernel_00_beta2`` (this is the role it plays in the tests)."""
    if beta != 2.0:
        raise ValueError("closed conditional law is only available at beta = 2")
    theta = big_t ** 1.5 / 2.0

    def integrand(alpha: float) -> float:
        law = conditional_law(alpha)
        cond = math.exp(-theta * law.mean + 0.5 * theta**2 * law.variance)
        return float(density_L0_reflected_bridge(alpha)) * math.exp(
            -math.sqrt(big_t) * w * alpha / 2.0) * cond

    hi = 40.0 + 8.0 * abs(big_t ** 1.5 / 8.0 - math.sqrt(big_t) * w / 2.0)
    val = adaptive_simpson(integrand, 0.0, hi, rtol=1e-12)
    return math.sqrt(2.0 / (math.pi * big_t)) * val
