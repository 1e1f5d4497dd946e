"""Grid-sampled continuum processes: Brownian motion and bridges, the
Skorokhod reflection with its exact boundary local time, reflected bridges,
occupation-density profiles, the three-dimensional Bessel bridge, and the
centered area-minus-squared-local-time functional A.

Local time at zero is never estimated by narrow-band binning.  Paths built
through the reflection map carry the exact defect 2 sup(-B)_+; for bridges the
zero local time is sampled exactly in law given the grid skeleton, interval by
interval, from the closed-form law of a sub-bridge's local time at zero (the
same law whose density drives the closed-form kernel expectation, so the two
routes share one analytic source).  Occupation profiles and the squared
local-time integral are computed exactly for the piecewise-linear
interpolant: each non-flat segment spreads its dt uniformly over the levels
it crosses, and a breakpoint sweep turns that into an exact piecewise-constant
density in the level variable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .rng import RngStream

SQRT3_HALF = np.sqrt(3.0) / 2.0


class PathKind(enum.Enum):
    BM = "bm"
    BRIDGE = "bridge"


class BesselMethod(enum.Enum):
    MODULUS = "modulus"
    SDE = "sde"


@dataclass(frozen=True)
class GridPath:
    """Real path sampled on a uniform grid of ``n_steps`` intervals."""

    horizon: float
    n_steps: int
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.n_steps < 0:
            raise ValueError("n_steps must be nonnegative")
        if len(self.values) != self.n_steps + 1:
            raise ValueError("values must have n_steps + 1 entries")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("path values must be finite")

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps if self.n_steps else 0.0

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    def dump_csv(self, fp) -> None:
        fp.write("t,value\n")
        for t, v in zip(self.times(), self.values):
            fp.write(f"{t!r},{v!r}\n")


@dataclass(frozen=True)
class LocalTimeProfile:
    """Occupation density binned at bandwidth ``delta_a``; bin j covers
    [j delta_a, (j+1) delta_a) and masses[j] approximates L at that level."""

    delta_a: float
    masses: np.ndarray
    horizon: float
    l0: float | None = None

    def occupation_total(self) -> float:
        return float(np.sum(self.masses) * self.delta_a)

    def sq_integral(self) -> float:
        """Binned int L^2 da (the exact sweep lives in sq_local_time_integral)."""
        return float(np.sum(self.masses**2) * self.delta_a)


# -- basic samplers ------------------------------------------------------------

def _bm_rows(start, horizon: float, n_steps: int, count: int,
             s: RngStream) -> np.ndarray:
    dt = horizon / n_steps
    inc = s.normals(count * n_steps).reshape(count, n_steps) * np.sqrt(dt)
    out = np.empty((count, n_steps + 1))
    out[:, 0] = start
    np.cumsum(inc, axis=1, out=out[:, 1:])
    out[:, 1:] += np.asarray(start).reshape(-1, 1) if np.ndim(start) else start
    return out


def _bridge_rows(start, end, horizon: float, n_steps: int, count: int,
                 s: RngStream) -> np.ndarray:
    w = _bm_rows(0.0, horizon, n_steps, count, s)
    t_frac = np.linspace(0.0, 1.0, n_steps + 1)
    start_a = np.broadcast_to(np.asarray(start, dtype=np.float64), (count,))
    end_a = np.broadcast_to(np.asarray(end, dtype=np.float64), (count,))
    out = (start_a[:, None] + w
           + t_frac[None, :] * (end_a - start_a - w[:, -1])[:, None])
    out[:, 0] = start_a
    out[:, -1] = end_a
    return out


def sample_path(kind: PathKind, start: float, end: float | None,
                big_t: float, n_steps: int, s: RngStream) -> GridPath:
    """A Brownian motion from ``start`` or a bridge pinned at ``end``."""
    kind = PathKind(kind)
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    if kind == PathKind.BRIDGE:
        if end is None:
            raise ValueError("bridge requires an endpoint")
        vals = _bridge_rows(start, end, big_t, n_steps, 1, s)[0]
    else:
        vals = _bm_rows(start, big_t, n_steps, 1, s)[0]
    return GridPath(horizon=big_t, n_steps=n_steps, values=vals)


# -- reflection ----------------------------------------------------------------

def reflect_with_local_time(p: GridPath) -> tuple[GridPath, float]:
    """Skorokhod map of the path and the exact boundary local time
    2 sup (-p)_+ of the interpolant."""
    defect = np.maximum.accumulate(np.maximum(-p.values, 0.0))
    reflected = GridPath(horizon=p.horizon, n_steps=p.n_steps,
                         values=p.values + defect)
    return reflected, 2.0 * float(defect[-1])


# -- exact bridge local time at zero -------------------------------------------

def _interval_zero_local_times(values: np.ndarray, dt: float,
                               u: np.ndarray) -> np.ndarray:
    """Exact-in-law local time at 0 accrued over each grid interval of a
    Brownian path with the given skeleton ``values`` (rows are paths).

    Over one interval from a to b the conditional law has survival function
    P(z > c) = exp((d^2 - (c+s)^2) / (2 dt)) with d = a - b, s = |a| + |b|,
    inverted here with one uniform per interval.
    """
    a = values[:, :-1]
    b = values[:, 1:]
    d2 = (a - b) ** 2
    ssum = np.abs(a) + np.abs(b)
    z = np.sqrt(d2 - 2.0 * dt * np.log(u)) - ssum
    return np.maximum(z, 0.0)


def bridge_zero_local_time(p: GridPath, s: RngStream) -> float:
    """Local time at zero of a signed Brownian path given its skeleton,
    sampled exactly in law (one uniform per interval)."""
    u = s.uniforms(p.n_steps).reshape(1, -1)
    z = _interval_zero_local_times(p.values[None, :], p.dt, u)
    return float(z.sum())


def sample_reflected_bridge(big_t: float, n_steps: int, s: RngStream,
                            with_local_time: bool = False):
    """|Brownian bridge 0 -> 0| on [0, T]; optionally also its zero local
    time (twice the signed bridge's, sampled exactly given the skeleton)."""
    b = _bridge_rows(0.0, 0.0, big_t, n_steps, 1, s)
    r = GridPath(horizon=big_t, n_steps=n_steps, values=np.abs(b[0]))
    if not with_local_time:
        return r
    u = s.uniforms(n_steps).reshape(1, -1)
    l0 = 2.0 * float(_interval_zero_local_times(b, big_t / n_steps, u).sum())
    return r, l0


# -- occupation machinery --------------------------------------------------------

@dataclass(frozen=True)
class PathFunctionals:
    """Per-path functionals of signed skeleton rows: folded occupation-density
    masses on the level bins, the exact |interpolant| area, and the exact-in-law
    zero local time of the signed path (half the reflected path's)."""

    masses: np.ndarray
    area: np.ndarray
    zero_time: np.ndarray
    delta_a: float

    def sq_integral(self) -> np.ndarray:
        """Binned int (L^a)^2 da per path."""
        return np.sum(self.masses**2, axis=1) * self.delta_a


def signed_path_functionals(values: np.ndarray, dt: float, delta_a: float,
                            s: RngStream) -> PathFunctionals:
    """Folded functionals of signed skeleton rows.

    The occupation of |path| is computed by folding each linear segment:
    same-sign segments spread their dt over [|a| ^ |b|, |a| v |b|]; crossing
    segments fold into the two legs [0, |a|] and [0, |b|] at the signed
    density, with the matching kinked |path| area.  Zero local time is
    sampled exactly in law from each segment's closed conditional law, one
    uniform per segment.
    """
    m, cols = values.shape
    n = cols - 1
    n_bins = int(np.floor(np.abs(values).max() / delta_a)) + 1
    if _kernels.HAVE_NUMBA:
        base, start = s.consume(m * n)
        masses, area, lz = _kernels.path_functionals(
            values, dt, delta_a, n_bins, np.uint64(base), np.uint64(start))
    else:
        u = s.uniforms(m * n)
        masses, area, lz = _kernels.np_path_functionals(
            values, dt, delta_a, n_bins, u)
    return PathFunctionals(masses=masses, area=area, zero_time=lz,
                           delta_a=delta_a)


def local_time_profile(p: GridPath, delta_a: float) -> LocalTimeProfile:
    """Occupation-density profile of a nonnegative path, exact for the
    interpolant; flat segments contribute their full dt to their own bin."""
    if delta_a <= 0.0:
        raise ValueError("delta_a must be positive")
    v = p.values
    if np.any(v < 0.0):
        raise ValueError("profiles are defined for nonnegative paths")
    dt = p.dt
    flat = v[:-1] == v[1:]
    n_bins = int(np.floor(v.max() / delta_a)) + 1
    masses = np.zeros(n_bins)
    if np.any(~flat):
        moving = np.concatenate([v[:-1][~flat, None], v[1:][~flat, None]], axis=1)
        # reuse the sweep on the subpath made of the moving segments only
        lo = moving.min(axis=1)
        hi = moving.max(axis=1)
        w = dt / (hi - lo)
        edges = np.arange(n_bins + 1) * delta_a
        cut_lo = np.clip((edges[None, :] - lo[:, None]) * w[:, None], 0.0, dt)
        masses += np.diff(cut_lo.sum(axis=0)) / delta_a
    for level in v[:-1][flat]:
        masses[int(level // delta_a)] += dt / delta_a
    return LocalTimeProfile(delta_a=delta_a, masses=masses, horizon=p.horizon)


# -- Bessel(3) bridge ------------------------------------------------------------

def sample_bessel3_bridge(alpha_half: float, n_steps: int, s: RngStream,
                          method: BesselMethod = BesselMethod.MODULUS,
                          floor: float = 1e-6):
    """Three-dimensional Bessel bridge from ``alpha_half`` to 0 on [0, 1].

    The modulus method is exact in law: the norm of a 3-d Brownian bridge
    from (alpha_half, 0, 0) to the origin.  The SDE method runs the drifted
    Euler scheme with a positivity floor, stops the recursion at t = 1 - dt
    (where the (1-t)^-1 drift blows up) and pins the endpoint; it returns the
    driving noise path alongside the bridge so joint functionals of (b, W)
    can be formed.
    """
    if alpha_half < 0.0:
        raise ValueError("alpha_half must be nonnegative")
    method = BesselMethod(method)
    if method == BesselMethod.MODULUS:
        c1 = _bridge_rows(alpha_half, 0.0, 1.0, n_steps, 1, s)[0]
        c2 = _bridge_rows(0.0, 0.0, 1.0, n_steps, 1, s)[0]
        c3 = _bridge_rows(0.0, 0.0, 1.0, n_steps, 1, s)[0]
        vals = np.sqrt(c1**2 + c2**2 + c3**2)
        vals[0] = alpha_half
        vals[-1] = 0.0
        return GridPath(horizon=1.0, n_steps=n_steps, values=vals)

    dt = 1.0 / n_steps
    dw = s.normals(n_steps) * np.sqrt(dt)
    b = np.empty(n_steps + 1)
    b[0] = alpha_half
    cur = max(alpha_half, floor)
    for i in range(n_steps - 1):
        t = i * dt
        cur = cur + (1.0 / cur - cur / (1.0 - t)) * dt + dw[i]
        cur = max(cur, floor)
        b[i + 1] = cur
    b[-1] = 0.0
    noise = np.concatenate([[0.0], np.cumsum(dw)])
    return (GridPath(horizon=1.0, n_steps=n_steps, values=b),
            GridPath(horizon=1.0, n_steps=n_steps, values=noise))


def bessel_area_functional(b: GridPath) -> float:
    """(1/2) int (1-t)/b dt - int b dt by the trapezoid rule; the integrand's
    removable endpoint singularity is closed with its limit 0."""
    t = b.times()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (1.0 - t) / b.values
    ratio[~np.isfinite(ratio)] = 0.0
    ratio[-1] = 0.0
    return 0.5 * float(np.trapz(ratio, dx=b.dt)) - float(np.trapz(b.values, dx=b.dt))


def jeulin_residual(b: GridPath, noise: GridPath, alpha_half: float) -> float:
    """Pathwise identity residual int (1-t)/b dt + alpha/2 - 2 int b dt
    + int W dt; exactly zero in the continuum."""
    t = b.times()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (1.0 - t) / b.values
    ratio[~np.isfinite(ratio)] = 0.0
    ratio[-1] = 0.0
    return (float(np.trapz(ratio, dx=b.dt)) + alpha_half
            - 2.0 * float(np.trapz(b.values, dx=b.dt))
            + float(np.trapz(noise.values, dx=noise.dt)))


# -- the functional A -------------------------------------------------------------

def functional_A(r: GridPath, profile: LocalTimeProfile) -> float:
    """sqrt(12) (int_0^1 r dt - int (L^a)^2 / 2 da) from a reflected bridge
    and its binned profile."""
    if abs(r.horizon - 1.0) > 1e-12:
        raise ValueError("A is defined for unit-horizon bridges")
    if profile.masses.size and profile.masses[0] * profile.delta_a >= profile.horizon:
        raise ValueError("degenerate path: all occupation in the lowest bin")
    area = float(np.trapz(r.values, dx=r.dt))
    return np.sqrt(12.0) * (area - 0.5 * profile.sq_integral())


def sample_A_mixture(s: RngStream, size: int | None = None):
    """Exact-law sampler A = Z - (sqrt(3)/2) L0 with Z standard normal
    independent of the reflected-bridge zero local time L0."""
    z = s.normals(size)
    l0 = s.local_time_zero(size)
    return z - SQRT3_HALF * l0


# -- batch engines (rows are independent paths) -----------------------------------

def bridge_rows(x: float, y: float, big_t: float, n_steps: int, count: int,
                s: RngStream) -> np.ndarray:
    """Signed Brownian bridge skeletons x -> y, one per row."""
    return _bridge_rows(x, y, big_t, n_steps, count, s)


def bm_rows(x, big_t: float, n_steps: int, count: int,
            s: RngStream) -> np.ndarray:
    """Signed Brownian motion skeletons from ``x`` (scalar or per-row array);
    |rows| are reflected Brownian motions."""
    return _bm_rows(x, big_t, n_steps, count, s)


def reflected_bm_rows(x, big_t: float, n_steps: int, count: int,
                      s: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """Reflection-map route: Gamma(B) rows with the exact boundary local
    times 2 sup(-B)_+ of the interpolants."""
    b = _bm_rows(x, big_t, n_steps, count, s)
    defect = np.maximum.accumulate(np.maximum(-b, 0.0), axis=1)
    return b + defect, 2.0 * defect[:, -1]


def bessel_modulus_rows(alpha_half: float, n_steps: int, count: int,
                        s: RngStream) -> np.ndarray:
    """Rows of exact-law Bessel(3) bridges from alpha_half to 0 on [0, 1]."""
    c1 = _bridge_rows(alpha_half, 0.0, 1.0, n_steps, count, s)
    c2 = _bridge_rows(0.0, 0.0, 1.0, n_steps, count, s)
    c3 = _bridge_rows(0.0, 0.0, 1.0, n_steps, count, s)
    out = np.sqrt(c1**2 + c2**2 + c3**2)
    out[:, 0] = alpha_half
    out[:, -1] = 0.0
    return out


def bessel_area_functional_rows(values: np.ndarray, dt: float) -> np.ndarray:
    """(1/2) int (1-t)/b dt - int b dt per row, endpoint limit closed at 0."""
    n = values.shape[1] - 1
    t = np.linspace(0.0, 1.0, n + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (1.0 - t)[None, :] / values
    ratio[~np.isfinite(ratio)] = 0.0
    ratio[:, -1] = 0.0
    return 0.5 * np.trapz(ratio, dx=dt, axis=1) - np.trapz(values, dx=dt, axis=1)
