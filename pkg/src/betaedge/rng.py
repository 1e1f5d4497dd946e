"""Seedable pseudorandom streams and the scalar samplers used everywhere else.

The generator is a counter-based splitmix64: output ``i`` of a stream is
``mix64(base + (i+1) * GOLDEN)`` where ``mix64`` is the standard splitmix64
finalizer (Steele, Lea, Flood 2014; passes BigCrush) and ``base`` is derived
from ``(master_seed, stream_id)`` by two finalizer applications.  Because
outputs are a pure function of the counter, draws vectorize over numpy uint64
arrays, streams can be replayed from any point, and distinct stream ids give
sequences that are independent for every statistical purpose of this package
(the finalizer is a bijection of Z/2^64, so distinct bases never produce
overlapping counter orbits aligned in phase).

Normals are produced by inversion (one uniform per normal, so chunk plans
stay deterministic) using the Wichura AS241 rational approximation of the
normal quantile, whose absolute error is below 1e-9 over the full open unit
interval.  Chi variates go through Marsaglia-Tsang gamma rejection, valid for
shapes >= 1/2, with the Gamma(a) = Gamma(a+1) * U^(1/a) boost below that.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 2^-53; uniforms are (z + 0.5) * 2^-53 with z the top 53 bits, hence in (0, 1).
_INV53 = 1.0 / 9007199254740992.0


def _mix64_int(z: int) -> int:
    z &= _MASK64
    z ^= z >> 30
    z = (z * _MIX1) & _MASK64
    z ^= z >> 27
    z = (z * _MIX2) & _MASK64
    z ^= z >> 31
    return z


@dataclass
class RngStream:
    """Single-owner deterministic stream; share across workers by id, not by object."""

    master_seed: int
    stream_id: int
    _base: int = field(init=False, repr=False)
    _count: int = field(default=0, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.stream_id < 0:
            raise ValueError("stream_id must be nonnegative")
        k = _mix64_int(self.master_seed & _MASK64)
        self._base = _mix64_int(k ^ ((self.stream_id * _GOLDEN) & _MASK64))

    # -- raw output ---------------------------------------------------------

    def consume(self, n: int) -> tuple[int, int]:
        """Reserve ``n`` counter positions; returns (base, start) so a kernel
        can generate the same draws out-of-line."""
        start = self._count
        self._count += n
        return self._base, start

    def uniforms(self, size: int | None = None):
        """Uniform draws on the open interval (0, 1)."""
        if size is None:
            self._count += 1
            z = _mix64_int((self._base + self._count * _GOLDEN) & _MASK64)
            return ((z >> 11) + 0.5) * _INV53
        base, start = self.consume(int(size))
        if _kernels.HAVE_NUMBA:
            return _kernels.uniforms_fill(np.uint64(base), np.uint64(start), int(size))
        return _kernels.np_uniforms_fill(base, start, int(size))

    # -- samplers -----------------------------------------------------------

    def normals(self, size: int | None = None):
        """Standard normals by quantile inversion (one uniform per normal)."""
        if size is None:
            return float(_ppnd16(np.array([self.uniforms()]))[0])
        if _kernels.HAVE_NUMBA:
            base, start = self.consume(int(size))
            return _kernels.normals_fill(np.uint64(base), np.uint64(start), int(size))
        return _ppnd16(self.uniforms(size))

    def chi(self, dof, size: int | None = None):
        """Chi variates with parameter ``dof`` (so E[X^2] = dof).

        ``dof`` may be a scalar (with ``size``) or an array of per-draw
        parameters.  Draws sqrt(2 * Gamma(dof/2)).
        """
        dof_arr = np.asarray(dof, dtype=np.float64)
        if np.any(dof_arr <= 0.0):
            raise ValueError("chi parameter must be positive")
        if size is not None:
            dof_arr = np.broadcast_to(dof_arr, (int(size),))
        scalar = dof_arr.ndim == 0
        shapes = np.atleast_1d(dof_arr) / 2.0
        out = np.sqrt(2.0 * self.gammas(shapes))
        return float(out[0]) if scalar and size is None else out

    def gammas(self, shapes: np.ndarray) -> np.ndarray:
        """Gamma(shape, scale 1) draws, one per entry of ``shapes``.

        Marsaglia-Tsang rejection for shapes >= 1/2 (d = a - 1/3 stays
        positive there); smaller shapes use the U^(1/a) boost.
        """
        shapes = np.asarray(shapes, dtype=np.float64)
        boost = shapes < 0.5
        a = np.where(boost, shapes + 1.0, shapes)
        out = self._gammas_mt(a)
        if np.any(boost):
            u = self.uniforms(int(boost.sum()))
            out = out.copy()
            out[boost] *= u ** (1.0 / shapes[boost])
        return out

    def _gammas_mt(self, a: np.ndarray) -> np.ndarray:
        d = a - 1.0 / 3.0
        c = 1.0 / np.sqrt(9.0 * d)
        out = np.empty_like(a)
        pending = np.arange(a.size)
        for _ in range(256):
            if pending.size == 0:
                return out
            x = self.normals(pending.size)
            u = self.uniforms(pending.size)
            v = (1.0 + c[pending] * x) ** 3
            ok = v > 0.0
            accept = ok & (u < 1.0 - 0.0331 * x**4)
            slow = ok & ~accept
            if np.any(slow):
                with np.errstate(divide="ignore", invalid="ignore"):
                    accept = accept | (
                        slow
                        & (np.log(u) < 0.5 * x**2 + d[pending] * (1.0 - v + np.log(np.where(ok, v, 1.0))))
                    )
            idx = pending[accept]
            out[idx] = d[idx] * v[accept]
            pending = pending[~accept]
        raise RuntimeError("gamma rejection failed to terminate")

    def local_time_zero(self, size: int | None = None):
        """Local time at zero of a unit reflected Brownian bridge.

        Density (a/4) exp(-a^2/8) on (0, inf); sampled by inversion
        a = sqrt(-8 log(1 - U)).
        """
        u = self.uniforms(size)
        return np.sqrt(-8.0 * np.log1p(-u))


def make_stream(master_seed: int, stream_id: int = 0) -> RngStream:
    """Create the deterministic stream for (master_seed, stream_id)."""
    return RngStream(master_seed=int(master_seed), stream_id=int(stream_id))


# -- AS241 normal quantile ---------------------------------------------------

_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coefs, x):
    acc = np.full_like(x, coefs[-1])
    for c in coefs[-2::-1]:
        acc = acc * x + c
    return acc


def _ppnd16(p: np.ndarray) -> np.ndarray:
    """Normal quantile, Wichura's algorithm AS241 (PPND16)."""
    q = p - 0.5
    out = np.empty_like(p)

    central = np.abs(q) <= 0.425
    if np.any(central):
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * _poly(_A, r) / _poly(_B, r)

    tail = ~central
    if np.any(tail):
        pt = p[tail]
        qt = q[tail]
        r = np.sqrt(-np.log(np.where(qt < 0.0, pt, 1.0 - pt)))
        near = r <= 5.0
        val = np.empty_like(r)
        if np.any(near):
            rn = r[near] - 1.6
            val[near] = _poly(_C, rn) / _poly(_D, rn)
        if np.any(~near):
            rf = r[~near] - 5.0
            val[~near] = _poly(_E, rf) / _poly(_F, rf)
        out[tail] = np.where(qt < 0.0, -val, val)
    return out
