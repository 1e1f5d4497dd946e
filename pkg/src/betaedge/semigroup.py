"""Matrix-side semigroup approximants: cell-average projections, high powers
of the tridiagonal models applied as repeated matvecs, bilinear forms, edge
eigenvalue fluctuations by Sturm bisection, and the exact path-sum oracle for
small instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .closedform import adaptive_simpson
from .rng import RngStream
from .tridiag import ModelForm, ModelSpec, SymTridiagonal, build_model, lattice_unit, time_steps

OVERFLOW_LIMIT = 1e300


class PathSumGuardError(ValueError):
    """Raised when an exact enumeration request exceeds the size guard."""


@dataclass
class TestFunction:
    """A scalar function with a sub-exponential growth certificate
    |f(x)| <= c1 exp(c2 x^(1-delta)), delta in (0, 1)."""

    fn: Callable[[float], float]
    c1: float = 1.0
    c2: float = 0.0
    delta: float = 0.5
    name: str = ""
    # optional inverse-CDF sampler of the normalized |f|, for importance use
    sampler: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, x):
        return self.fn(x)

    def check_growth(self, x_max: float = 1e6, points: int = 60) -> None:
        """Spot-check the growth certificate on a log grid."""
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        xs = np.geomspace(1e-6, x_max, points)
        bound = self.c1 * np.exp(self.c2 * xs ** (1.0 - self.delta))
        vals = np.abs(np.asarray([self.fn(float(x)) for x in xs]))
        if np.any(vals > bound * (1.0 + 1e-9)):
            raise ValueError("function violates its growth certificate")


def _exp_decay(x):
    return np.exp(-np.asarray(x, dtype=np.float64))


def _exp_decay_sampler(u):
    return -np.log1p(-u)


def _gauss(x):
    return np.exp(-np.asarray(x, dtype=np.float64) ** 2)


def _const_one(x):
    return np.ones_like(np.asarray(x, dtype=np.float64))


def _bump01(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where((x >= 0.0) & (x < 1.0), 1.0, 0.0)


NAMED_FUNCTIONS = {
    "expneg": lambda: TestFunction(fn=_exp_decay, c1=1.0, c2=0.0, delta=0.5,
                                   name="expneg", sampler=_exp_decay_sampler),
    "gauss": lambda: TestFunction(fn=_gauss, c1=1.0, c2=0.0, delta=0.5, name="gauss"),
    "one": lambda: TestFunction(fn=_const_one, c1=1.0, c2=0.0, delta=0.5, name="one"),
    "bump01": lambda: TestFunction(fn=_bump01, c1=1.0, c2=0.0, delta=0.5, name="bump01"),
}


def named_function(name: str) -> TestFunction:
    """Look up one of the registry functions (picklable, numpy-vectorized)."""
    try:
        return NAMED_FUNCTIONS[name]()
    except KeyError:
        raise ValueError(f"unknown test function {name!r}; "
                         f"choose from {sorted(NAMED_FUNCTIONS)}") from None


@dataclass(frozen=True)
class ProjectedVector:
    """Cell averages against the lattice of width N^(-1/3):
    entry l is N^(1/6) * integral of f over [N^(-1/3) l, N^(-1/3)(l+1))."""

    n_param: int
    entries: np.ndarray


def project_pi_n(f, n: int, rtol: float = 1e-10) -> ProjectedVector:
    """Project a function onto the step-function lattice by per-cell adaptive
    Simpson quadrature."""
    fn = f.fn if isinstance(f, TestFunction) else f
    width = lattice_unit(n)
    scale = float(n) ** (1.0 / 6.0)
    entries = np.empty(n + 1)
    for l in range(n + 1):
        a = width * l
        val = adaptive_simpson(fn, a, a + width, rtol=rtol, atol=1e-300)
        entries[l] = scale * val
    if not np.all(np.isfinite(entries)):
        raise ValueError("projection produced a non-finite cell integral")
    return ProjectedVector(n_param=n, entries=entries)


def power_apply(m: SymTridiagonal, v: np.ndarray, k: int,
                scale: float = 1.0) -> np.ndarray:
    """(M / scale)^k v by k tridiagonal matvecs, O(k n)."""
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (m.n,):
        raise ValueError("vector length must match the matrix dimension")
    inv = 1.0 / scale
    d = m.diag
    e = m.offdiag
    for _ in range(k):
        w = d * v
        if m.n > 1:
            w[:-1] += e * v[1:]
            w[1:] += e * v[:-1]
        v = w * inv
        peak = np.max(np.abs(v))
        if not np.isfinite(peak) or peak > OVERFLOW_LIMIT:
            raise OverflowError("intermediate vector exceeded the overflow guard")
    return v


def bilinear_form(f, g, spec: ModelSpec, big_t: float, s: RngStream,
                  pf: ProjectedVector | None = None,
                  pg: ProjectedVector | None = None) -> float:
    """One sample of (pi_N f)^T (M / 2 sqrt(N))^{floor(T N^(2/3))} (pi_N g)
    for the modified model.  Projections may be passed in to amortize the
    quadrature over many seeds."""
    if spec.form != ModelForm.MODIFIED:
        raise ValueError("bilinear forms are defined for the modified model")
    n = spec.n
    pf = pf or project_pi_n(f, n)
    pg = pg or project_pi_n(g, n)
    mat = build_model(spec, s)
    k = time_steps(big_t, n)
    w = power_apply(mat, pg.entries, k, scale=2.0 * np.sqrt(n))
    return float(pf.entries @ w)


# -- edge eigenvalues by Sturm bisection ----------------------------------------

def sturm_count(m: SymTridiagonal, x: float) -> int:
    """Number of eigenvalues strictly below x (LDL^T sign count)."""
    count = 0
    d = m.diag[0] - x
    if d < 0.0:
        count += 1
    for i in range(1, m.n):
        den = d if d != 0.0 else -1e-300
        d = m.diag[i] - x - m.offdiag[i - 1] ** 2 / den
        if d < 0.0:
            count += 1
    return count


def _eigenvalue_by_rank(m: SymTridiagonal, rank: int, lo: float, hi: float,
                        tol: float) -> float:
    """Bisection for the eigenvalue with ``rank`` eigenvalues strictly below it."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if sturm_count(m, mid) <= rank:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def top_eigenvalues(m: SymTridiagonal, q: int, tol: float | None = None) -> np.ndarray:
    """The q largest eigenvalues, descending, by Sturm-sequence bisection."""
    if not 1 <= q <= m.n:
        raise ValueError("q must lie between 1 and the matrix dimension")
    radius = m.inf_norm()
    lo, hi = -radius - 1.0, radius + 1.0
    tol = tol if tol is not None else 1e-12 * max(radius, 1.0)
    out = np.empty(q)
    for j in range(q):
        rank = m.n - 1 - j
        out[j] = _eigenvalue_by_rank(m, rank, lo, hi, tol)
    return out


def edge_fluctuations(m: SymTridiagonal, q: int, n: int) -> np.ndarray:
    """Lambda_{q,N} = N^(1/6) (2 sqrt(N) - lambda_q) for the q largest
    eigenvalues; returned ascending."""
    lam = top_eigenvalues(m, q)
    return float(n) ** (1.0 / 6.0) * (2.0 * np.sqrt(n) - lam)


def heuristic_power_check(lam: float, big_t: float, n: int) -> tuple[float, float]:
    """The matched pair ((lambda / 2 sqrt(N))^floor(T N^(2/3)), e^(-T Lambda / 2))
    whose gap is O(N^(-1/3))."""
    two_sqrt_n = 2.0 * np.sqrt(n)
    if lam > two_sqrt_n:
        raise ValueError("lambda must not exceed 2 sqrt(N)")
    k = time_steps(big_t, n)
    big_lambda = float(n) ** (1.0 / 6.0) * (two_sqrt_n - lam)
    return float((lam / two_sqrt_n) ** k), float(np.exp(-big_t * big_lambda / 2.0))


# -- exact path-sum oracle --------------------------------------------------------

def path_sum_entry(m: SymTridiagonal, k: int, l: int, l2: int,
                   scale: float = 1.0) -> float:
    """Entry (l, l2) of (M / scale)^k by explicit enumeration of all lattice
    paths l -> l2 with steps in {-1, 0, +1}; exact, guarded to k <= 24 and
    dimension <= 12."""
    if k > 24 or m.n > 12:
        raise PathSumGuardError("path enumeration is guarded to k <= 24, dim <= 12")
    if not (0 <= l < m.n and 0 <= l2 < m.n):
        raise ValueError("indices out of range")
    n = m.n
    diag = m.diag
    off = m.offdiag

    def rec(pos: int, remaining: int, prod: float) -> float:
        if abs(pos - l2) > remaining:
            return 0.0
        if remaining == 0:
            return prod
        total = rec(pos, remaining - 1, prod * diag[pos])
        if pos > 0:
            total += rec(pos - 1, remaining - 1, prod * off[pos - 1])
        if pos < n - 1:
            total += rec(pos + 1, remaining - 1, prod * off[pos])
        return total

    return rec(l, k, 1.0) / scale**k
