"""Experiment drivers tying the matrix side, the path side and the closed
forms together, plus the small statistics (Kolmogorov-Smirnov distances,
moment z-scores) the validation commands report.

Sampling here follows the same fixed chunk plan as the estimators: chunk c of
a driver draws from (master_seed, stream_id + 1 + c), so every reported
statistic is a pure function of the seed and the parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import continuum, lattice
from .closedform import erf
from .fk import CHUNK_SIZE, _chunk_plan
from .rng import RngStream, make_stream
from .semigroup import ProjectedVector, bilinear_form, project_pi_n
from .tridiag import ModelSpec


def _chunk_streams(s: RngStream, n_total: int):
    for c, size in _chunk_plan(n_total):
        yield make_stream(s.master_seed, s.stream_id + 1 + c), size


# -- statistics -----------------------------------------------------------------

def ks_one_sample(samples: np.ndarray, cdf) -> float:
    xs = np.sort(np.asarray(samples, dtype=np.float64))
    n = xs.size
    f = np.asarray(cdf(xs), dtype=np.float64)
    upper = np.max(np.arange(1, n + 1) / n - f)
    lower = np.max(f - np.arange(0, n) / n)
    return float(max(upper, lower))


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> float:
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def folded_normal_cdf(x, sigma: float = 1.0):
    x = np.asarray(x, dtype=np.float64)
    vec_erf = np.vectorize(erf, otypes=[np.float64])
    return np.where(x <= 0.0, 0.0, vec_erf(x / (sigma * math.sqrt(2.0))))


@dataclass(frozen=True)
class MomentCheck:
    """Sample mean/variance/skewness with z-scores against target values."""

    n: int
    mean: float
    variance: float
    skewness: float
    z_mean: float
    z_variance: float
    z_skewness: float

    def max_z(self) -> float:
        return max(abs(self.z_mean), abs(self.z_variance), abs(self.z_skewness))


def moment_check(samples: np.ndarray, target_mean: float,
                 target_variance: float) -> MomentCheck:
    x = np.asarray(samples, dtype=np.float64)
    n = x.size
    mean = float(x.mean())
    centered = x - mean
    var = float(np.sum(centered**2) / (n - 1))
    m3 = float(np.mean(centered**3))
    skew = m3 / var**1.5
    se_mean = math.sqrt(var / n)
    se_var = var * math.sqrt(2.0 / (n - 1))
    se_skew = math.sqrt(6.0 / n)
    return MomentCheck(n=n, mean=mean, variance=var, skewness=skew,
                       z_mean=(mean - target_mean) / se_mean,
                       z_variance=(var - target_variance) / se_var,
                       z_skewness=skew / se_skew)


# -- conditioned bridge functional (both routes) ----------------------------------

def bessel_functional_samples(alpha: float, n_samples: int, n_steps: int,
                              s: RngStream) -> np.ndarray:
    """Samples of (1/2) int (1-t)/b dt - int b dt along exact-law Bessel(3)
    bridges started from alpha/2."""
    dt = 1.0 / n_steps
    out = []
    for stream, size in _chunk_streams(s, n_samples):
        rows = continuum.bessel_modulus_rows(alpha / 2.0, n_steps, size, stream)
        out.append(continuum.bessel_area_functional_rows(rows, dt))
    return np.concatenate(out)


def bridge_functional_samples(n_samples: int, n_steps: int, s: RngStream,
                              delta_a: float = 2.0**-6
                              ) -> tuple[np.ndarray, np.ndarray]:
    """Per-path (int r - int L^2/2, L0) for unit reflected bridges: folded
    binned occupation for the squared-local-time integral and the exact-in-law
    zero local time."""
    dt = 1.0 / n_steps
    fs, l0s = [], []
    for stream, size in _chunk_streams(s, n_samples):
        rows = continuum.bridge_rows(0.0, 0.0, 1.0, n_steps, size, stream)
        f = continuum.signed_path_functionals(rows, dt, delta_a, stream)
        fs.append(f.area - 0.5 * f.sq_integral())
        l0s.append(2.0 * f.zero_time)
    return np.concatenate(fs), np.concatenate(l0s)


def functional_A_samples(n_samples: int, n_steps: int, delta_a: float,
                         s: RngStream) -> np.ndarray:
    """Path-route samples of A through the public profile-based functional."""
    out = np.empty(n_samples)
    i = 0
    for stream, size in _chunk_streams(s, n_samples):
        for _ in range(size):
            r = continuum.sample_reflected_bridge(1.0, n_steps, stream)
            prof = continuum.local_time_profile(r, delta_a)
            out[i] = continuum.functional_A(r, prof)
            i += 1
    return out


# -- weak-convergence drivers -------------------------------------------------------

def lazy_walk_samples(k: int, n_samples: int, s: RngStream,
                      scale_n: float) -> tuple[np.ndarray, np.ndarray]:
    """Scaled endpoints and horizontal counts of lazy walks from 0:
    (N^(-1/3) X_k, N^(-1/3) H)."""
    unit = scale_n ** (-1.0 / 3.0)
    ends, hs = [], []
    for stream, size in _chunk_streams(s, n_samples):
        z, h = lattice.lazy_walk_batch(k, size, stream)
        ends.append(z * unit)
        hs.append(h * unit)
    return np.concatenate(ends), np.concatenate(hs)


def half_local_time_samples(n_samples: int, n_steps: int, big_t: float,
                            s: RngStream) -> np.ndarray:
    """L0/2 of grid reflected Brownian motions from 0 (the running-minimum
    defect of the driving path)."""
    out = []
    for stream, size in _chunk_streams(s, n_samples):
        _, l0 = continuum.reflected_bm_rows(0.0, big_t, n_steps, size, stream)
        out.append(0.5 * l0)
    return np.concatenate(out)


# -- matrix-side sweep ---------------------------------------------------------------

def bilinear_sweep(spec: ModelSpec, big_t: float, f, g, n_seeds: int,
                   s: RngStream,
                   pf: ProjectedVector | None = None,
                   pg: ProjectedVector | None = None):
    """Mean and standard error of the bilinear form over ``n_seeds``
    independent matrix draws (projections computed once)."""
    pf = pf or project_pi_n(f, spec.n)
    pg = pg if pg is not None else (pf if g is f else project_pi_n(g, spec.n))
    vals = np.empty(n_seeds)
    for i in range(n_seeds):
        vals[i] = bilinear_form(f, g, spec, big_t,
                                make_stream(s.master_seed, s.stream_id + 1 + i),
                                pf=pf, pg=pg)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(n_seeds)) if n_seeds > 1 else 0.0
    return mean, stderr, vals


# -- exhaustive discrete bijection check ----------------------------------------------

@dataclass(frozen=True)
class SkorokhodReport:
    k: int
    start: int
    n_paths: int
    n_roundtrip_exact: int
    n_distinct_images: int
    n_h_identity: int

    @property
    def passed(self) -> bool:
        return (self.n_roundtrip_exact == self.n_paths
                and self.n_distinct_images == self.n_paths
                and self.n_h_identity == self.n_paths)


def skorokhod_exhaustive(k: int, start: int) -> SkorokhodReport:
    """Map every one of the 2^k simple-walk paths from ``start`` through the
    reflection, invert, and check exact round trips, injectivity, and the
    horizontal-count identity H = max(0, -min)."""
    import itertools

    images = set()
    exact = 0
    h_ok = 0
    total = 0
    for steps in itertools.product((-1, 1), repeat=k):
        total += 1
        path = lattice.LatticePath(start=start, steps=steps)
        lazy = lattice.skorokhod_map(path)
        images.add((lazy.start, lazy.steps))
        if lattice.skorokhod_inverse(lazy).steps == steps:
            exact += 1
        v = path.values()
        if lattice.horizontal_count(lazy) == max(0, -int(v.min())):
            h_ok += 1
    return SkorokhodReport(k=k, start=start, n_paths=total,
                           n_roundtrip_exact=exact,
                           n_distinct_images=len(images), n_h_identity=h_ok)
