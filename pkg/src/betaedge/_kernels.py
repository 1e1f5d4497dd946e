"""Hot numerical kernels, jitted when numba is available.

Every kernel has a numpy fallback with identical draw-consumption order and
identical floating arithmetic, so results do not depend on which path runs;
the jitted path only makes them fast.  The generator inlined here is the same
counter-based splitmix64 as in ``rng`` (one output per counter value), and
the normal quantile is the same AS241 rational approximation.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0

# AS241 coefficient tables (shared with rng; kept flat for the jitted code)
_COEF_A = np.array([3.3871328727963666080e0, 1.3314166789178437745e2,
                    1.9715909503065514427e3, 1.3731693765509461125e4,
                    4.5921953931549871457e4, 6.7265770927008700853e4,
                    3.3430575583588128105e4, 2.5090809287301226727e3])
_COEF_B = np.array([1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
                    5.3941960214247511077e3, 2.1213794301586595867e4,
                    3.9307895800092710610e4, 2.8729085735721942674e4,
                    5.2264952788528545610e3])
_COEF_C = np.array([1.42343711074968357734e0, 4.63033784615654529590e0,
                    5.76949722146069140550e0, 3.64784832476320460504e0,
                    1.27045825245236838258e0, 2.41780725177450611770e-1,
                    2.27238449892691845833e-2, 7.74545014278341407640e-4])
_COEF_D = np.array([1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
                    6.89767334985100004550e-1, 1.48103976427480074590e-1,
                    1.51986665636164571966e-2, 5.47593808499534494600e-4,
                    1.05075007164441684324e-9])
_COEF_E = np.array([6.65790464350110377720e0, 5.46378491116411436990e0,
                    1.78482653991729133580e0, 2.96560571828504891230e-1,
                    2.65321895265761230930e-2, 1.24266094738807843860e-3,
                    2.71155556874348757815e-5, 2.01033439929228813265e-7])
_COEF_F = np.array([1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
                    1.48753612908506148525e-2, 7.86869131145613259100e-4,
                    1.84631831751005468180e-5, 1.42151175831644588870e-7,
                    2.04426310338993978564e-15])


@njit(cache=True)
def _word(base, counter):
    z = base + counter * _GOLDEN
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


@njit(cache=True)
def _uniform(base, counter):
    return (np.float64(_word(base, counter) >> np.uint64(11)) + 0.5) * _INV53


@njit(cache=True)
def _horner(coefs, x):
    acc = coefs[7]
    for i in range(6, -1, -1):
        acc = acc * x + coefs[i]
    return acc


@njit(cache=True)
def _quantile(p):
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _horner(_COEF_A, r) / _horner(_COEF_B, r)
    if q < 0.0:
        r = np.sqrt(-np.log(p))
    else:
        r = np.sqrt(-np.log(1.0 - p))
    if r <= 5.0:
        r -= 1.6
        val = _horner(_COEF_C, r) / _horner(_COEF_D, r)
    else:
        r -= 5.0
        val = _horner(_COEF_E, r) / _horner(_COEF_F, r)
    return -val if q < 0.0 else val


@njit(cache=True)
def uniforms_fill(base, start, n):
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = _uniform(base, start + np.uint64(i) + np.uint64(1))
    return out


@njit(cache=True)
def normals_fill(base, start, n):
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = _quantile(_uniform(base, start + np.uint64(i) + np.uint64(1)))
    return out


@njit(cache=True)
def _spread(row, lo, hi, w, delta_a, n_bins):
    """Add w * overlap with each level bin over [lo, hi)."""
    j0 = int(lo / delta_a)
    j1 = int(hi / delta_a)
    if j1 >= n_bins:
        j1 = n_bins - 1
    for j in range(j0, j1 + 1):
        edge_lo = j * delta_a
        edge_hi = edge_lo + delta_a
        ov = min(hi, edge_hi) - max(lo, edge_lo)
        if ov > 0.0:
            row[j] += w * ov


@njit(cache=True)
def path_functionals(values, dt, delta_a, n_bins, base, start):
    """Folded occupation masses, |path| area, and exact-in-law zero local
    time for rows of signed piecewise-linear paths.

    Per segment from a to b: when the signs agree the dt spreads uniformly
    over [|a| ^ |b|, |a| v |b|]; a crossing segment folds into the two legs
    [0, |a|] and [0, |b|], each at density dt/|b - a|, and the |path| area
    picks up the crossing kink dt (a^2 + b^2) / (2(|a| + |b|)).  The zero
    local time accrues per segment by inverting its closed conditional law
    with one uniform (consumed path-major, segment-minor from ``start``).
    """
    m, cols = values.shape
    n = cols - 1
    masses = np.zeros((m, n_bins))
    area = np.zeros(m)
    lz = np.zeros(m)
    counter = start
    for p in range(m):
        row = masses[p]
        acc_area = 0.0
        acc_lz = 0.0
        for i in range(n):
            a = values[p, i]
            b = values[p, i + 1]
            counter += np.uint64(1)
            u = _uniform(base, counter)
            aa = abs(a)
            ab = abs(b)
            arg = (a - b) * (a - b) - 2.0 * dt * np.log(u)
            z = np.sqrt(arg) - (aa + ab)
            if z > 0.0:
                acc_lz += z
            if a == b:
                j = int(aa / delta_a)
                if j >= n_bins:
                    j = n_bins - 1
                row[j] += dt
                acc_area += dt * aa
            elif (a >= 0.0) == (b >= 0.0):
                lo = aa if aa < ab else ab
                hi = ab if aa < ab else aa
                _spread(row, lo, hi, dt / (hi - lo), delta_a, n_bins)
                acc_area += 0.5 * dt * (aa + ab)
            else:
                w = dt / (aa + ab)
                _spread(row, 0.0, aa, w, delta_a, n_bins)
                _spread(row, 0.0, ab, w, delta_a, n_bins)
                acc_area += 0.5 * dt * (a * a + b * b) / (aa + ab)
        area[p] = acc_area
        lz[p] = acc_lz
    inv = 1.0 / delta_a
    for p in range(m):
        for j in range(n_bins):
            masses[p, j] *= inv
    return masses, area, lz


@njit(cache=True)
def lazy_walk_fill(base, start, k, count):
    """Batch lazy walks from 0: endpoints and horizontal-step counts after k
    steps (uniforms consumed step-major, walk-minor)."""
    z = np.zeros(count, dtype=np.int64)
    h = np.zeros(count, dtype=np.int64)
    counter = start
    for _ in range(k):
        for j in range(count):
            counter += np.uint64(1)
            u = _uniform(base, counter)
            if u < 0.5:
                z[j] += 1
            elif z[j] > 0:
                z[j] -= 1
            else:
                h[j] += 1
    return z, h


# -- numpy fallbacks ---------------------------------------------------------------

def _np_words(base, start, n):
    counters = np.arange(1, n + 1, dtype=np.uint64) + np.uint64(start)
    counters *= _GOLDEN
    counters += np.uint64(base)
    z = counters
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def np_uniforms_fill(base, start, n):
    z = _np_words(base, start, n)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _INV53


def np_path_functionals(values, dt, delta_a, n_bins, uniforms):
    """Reference implementation of ``path_functionals`` (uniforms passed in
    with the same path-major layout)."""
    m, cols = values.shape
    n = cols - 1
    masses = np.zeros((m, n_bins))
    area = np.zeros(m)
    lz = np.zeros(m)
    u = uniforms.reshape(m, n)
    for p in range(m):
        for i in range(n):
            a, b = values[p, i], values[p, i + 1]
            aa, ab = abs(a), abs(b)
            z = np.sqrt((a - b) ** 2 - 2.0 * dt * np.log(u[p, i])) - (aa + ab)
            if z > 0.0:
                lz[p] += z
            if a == b:
                j = min(int(aa / delta_a), n_bins - 1)
                masses[p, j] += dt
                area[p] += dt * aa
            elif (a >= 0.0) == (b >= 0.0):
                lo, hi = min(aa, ab), max(aa, ab)
                _np_spread(masses[p], lo, hi, dt / (hi - lo), delta_a, n_bins)
                area[p] += 0.5 * dt * (aa + ab)
            else:
                w = dt / (aa + ab)
                _np_spread(masses[p], 0.0, aa, w, delta_a, n_bins)
                _np_spread(masses[p], 0.0, ab, w, delta_a, n_bins)
                area[p] += 0.5 * dt * (a * a + b * b) / (aa + ab)
    return masses / delta_a, area, lz


def _np_spread(row, lo, hi, w, delta_a, n_bins):
    j0 = int(lo / delta_a)
    j1 = min(int(hi / delta_a), n_bins - 1)
    for j in range(j0, j1 + 1):
        ov = min(hi, (j + 1) * delta_a) - max(lo, j * delta_a)
        if ov > 0.0:
            row[j] += w * ov
