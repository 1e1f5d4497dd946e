"""Monte Carlo estimators of the limiting random semigroup: the operator
applied to a test function, the kernel through its crossing/non-crossing
bridge decomposition, the expected kernel at the origin, the trace, and the
semigroup (Chapman-Kolmogorov) residual.

Annealed mode integrates the level noise out exactly (the Gaussian moment
identity turns the stochastic level integral into int L^2 / (2 beta) da,
computed exactly for the interpolant); quenched mode fixes one realization of
the level noise and forms the binned sum over occupation masses.

Every estimator consumes paths in fixed-size chunks; chunk c draws from the
stream (master_seed, stream_id + 1 + c), partial sums are reduced in chunk
order with compensated summation, so results are bit-reproducible for a given
seed and invariant under the worker count.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import continuum
from .rng import RngStream, make_stream

CHUNK_SIZE = 4096
STREAM_STRIDE = 1_000_003  # id spacing between nested estimators


class FkMode(enum.Enum):
    ANNEALED = "annealed"
    QUENCHED = "quenched"


@dataclass(frozen=True)
class FkParams:
    beta: float
    w: float
    big_t: float
    n_steps: int = 4096
    n_paths: int = 100_000
    delta_a: float | None = None
    mode: FkMode = FkMode.ANNEALED

    def __post_init__(self) -> None:
        if self.beta <= 0.0 or self.big_t <= 0.0:
            raise ValueError("beta and T must be positive")
        if self.n_paths < 1 or self.n_steps < 1:
            raise ValueError("n_paths and n_steps must be positive")

    @property
    def bandwidth(self) -> float:
        return self.delta_a if self.delta_a is not None else 2.0**-6 * math.sqrt(self.big_t)


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo output with its provenance."""

    mean: float
    stderr: float
    n: int
    master_seed: int
    stream_id: int
    extra: dict = field(default_factory=dict)

    @staticmethod
    def from_moments(total: float, total_sq: float, n: int,
                     s: RngStream, extra: dict | None = None) -> "MCEstimate":
        mean = total / n
        var = max(total_sq - n * mean * mean, 0.0) / (n - 1) if n > 1 else 0.0
        return MCEstimate(mean=mean, stderr=math.sqrt(var / n), n=n,
                          master_seed=s.master_seed, stream_id=s.stream_id,
                          extra=extra or {})

    def to_record(self) -> dict:
        rec = {"mean": self.mean, "stderr": self.stderr, "n": self.n,
               "seed": self.master_seed, "stream_id": self.stream_id}
        rec.update(self.extra)
        return rec


class NoiseField:
    """One realization of the level noise: independent N(0, delta_a)
    increments on the level bins [j delta_a, (j+1) delta_a).

    Coverage extends lazily; because draws are a pure function of the
    dedicated stream and the bin index, extension commutes with copying, so
    parallel workers see identical realizations.
    """

    def __init__(self, delta_a: float, master_seed: int, stream_id: int,
                 n_levels: int = 1024, zero: bool = False):
        if delta_a <= 0.0:
            raise ValueError("delta_a must be positive")
        self.delta_a = delta_a
        self.zero = zero
        self._stream = make_stream(master_seed, stream_id)
        self._increments = np.empty(0)
        self.ensure(n_levels)

    @classmethod
    def sampled(cls, delta_a: float, s: RngStream, n_levels: int = 1024) -> "NoiseField":
        return cls(delta_a, s.master_seed, s.stream_id, n_levels=n_levels)

    @classmethod
    def zero_field(cls, delta_a: float) -> "NoiseField":
        return cls(delta_a, 0, 0, zero=True)

    def ensure(self, n_levels: int) -> None:
        have = self._increments.size
        if n_levels <= have:
            return
        extra = n_levels - have
        if self.zero:
            draws = np.zeros(extra)
        else:
            draws = self._stream.normals(extra) * math.sqrt(self.delta_a)
        self._increments = np.concatenate([self._increments, draws])

    def increments(self, n_levels: int) -> np.ndarray:
        self.ensure(n_levels)
        return self._increments[:n_levels]


# -- chunked deterministic reduction ----------------------------------------------

def _chunk_plan(n_total: int) -> list[tuple[int, int]]:
    plan = []
    done = 0
    c = 0
    while done < n_total:
        size = min(CHUNK_SIZE, n_total - done)
        plan.append((c, size))
        done += size
        c += 1
    return plan


def _run_chunks(task, n_total: int, s: RngStream, workers: int = 1,
                n_components: int = 2):
    """Evaluate ``task(stream, count) -> tuple of partial sums`` over the fixed
    chunk plan and reduce in chunk order with compensated summation."""
    plan = _chunk_plan(n_total)
    if len(plan) >= STREAM_STRIDE:
        raise ValueError("chunk plan exceeds the stream id stride")
    streams = [make_stream(s.master_seed, s.stream_id + 1 + c) for c, _ in plan]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(task, streams, [size for _, size in plan],
                                     chunksize=4))
    else:
        partials = [task(st, size) for st, (_, size) in zip(streams, plan)]
    sums = tuple(math.fsum(p[i] for p in partials) for i in range(n_components))
    return sums


def _substream(s: RngStream, slot: int) -> RngStream:
    """Stream for the ``slot``-th nested estimator, spaced by the id stride."""
    return make_stream(s.master_seed, s.stream_id + slot * STREAM_STRIDE)


# -- path weight pipelines ---------------------------------------------------------

def _apply_fn(fn, arr: np.ndarray) -> np.ndarray:
    vals = fn(arr)
    out = np.asarray(vals, dtype=np.float64)
    if out.shape != arr.shape:
        out = np.asarray([float(fn(float(v))) for v in arr])
    return out


def _noise_term(f: continuum.PathFunctionals, p: FkParams,
                noise: NoiseField | None) -> np.ndarray:
    """The level-noise contribution of each path: int L^2/(2 beta) da in
    annealed mode, sum masses * dW / sqrt(beta) against the field otherwise."""
    if p.mode == FkMode.ANNEALED:
        return f.sq_integral() / (2.0 * p.beta)
    if abs(noise.delta_a - f.delta_a) > 1e-12:
        raise ValueError("noise field bandwidth does not match the estimator's")
    dw = noise.increments(f.masses.shape[1])
    return f.masses @ dw / math.sqrt(p.beta)


def _fk_chunk(stream: RngStream, count: int, fn, x: float, p: FkParams,
              noise: NoiseField | None):
    dt = p.big_t / p.n_steps
    rows = continuum.bm_rows(x, p.big_t, p.n_steps, count, stream)
    f = continuum.signed_path_functionals(rows, dt, p.bandwidth, stream)
    # the reflected path is |B|; its boundary local time is twice the signed one
    logw = -0.5 * f.area + _noise_term(f, p, noise) - p.w * f.zero_time
    vals = np.exp(logw) * _apply_fn(fn, np.abs(rows[:, -1]))
    return float(vals.sum()), float((vals * vals).sum())


def fk_apply(f, x: float, p: FkParams, noise: NoiseField | None,
             s: RngStream, workers: int = 1) -> MCEstimate:
    """Estimate of the semigroup applied to f at x: the expectation over
    reflected Brownian motion of exp(-int R/2 dt + noise term - w L0/2) f(R_T)."""
    if x < 0.0:
        raise ValueError("x must be nonnegative")
    if p.mode == FkMode.QUENCHED and noise is None:
        raise ValueError("quenched mode requires a noise field")
    fn = getattr(f, "fn", f)
    task = _FkTask(fn=fn, x=x, p=p, noise=noise)
    total, total_sq = _run_chunks(task, p.n_paths, s, workers=workers)
    return MCEstimate.from_moments(total, total_sq, p.n_paths, s)


@dataclass
class _FkTask:
    fn: object
    x: float
    p: FkParams
    noise: NoiseField | None

    def __call__(self, stream: RngStream, count: int):
        return _fk_chunk(stream, count, self.fn, self.x, self.p, self.noise)


def _kernel_chunk(stream: RngStream, count: int, x: float, y: float,
                  p: FkParams, noise: NoiseField | None):
    dt = p.big_t / p.n_steps
    rows = continuum.bridge_rows(x, y, p.big_t, p.n_steps, count, stream)
    f = continuum.signed_path_functionals(rows, dt, p.bandwidth, stream)
    # crossing happens exactly when the sampled zero local time is positive
    logw = -0.5 * f.area + _noise_term(f, p, noise) - p.w * f.zero_time
    hit = f.zero_time > 0.0
    w = np.where(hit, 2.0, 1.0) * np.exp(logw)
    return float(w.sum()), float((w * w).sum()), float(hit.sum())


@dataclass
class _KernelTask:
    x: float
    y: float
    p: FkParams
    noise: NoiseField | None

    def __call__(self, stream: RngStream, count: int):
        return _kernel_chunk(stream, count, self.x, self.y, self.p, self.noise)


def kernel_estimate(x: float, y: float, p: FkParams, s: RngStream,
                    noise: NoiseField | None = None,
                    workers: int = 1) -> MCEstimate:
    """Kernel at (x, y) through the bridge decomposition: non-crossing bridges
    carry weight 1 and no boundary term, crossing bridges carry weight 2, the
    reflected functionals and the spike factor; the Gaussian prefactor
    multiplies the lot.  The empirical crossing frequency is reported next to
    its exact value e^(-2xy/T) as a control variate."""
    if x < 0.0 or y < 0.0:
        raise ValueError("x and y must be nonnegative")
    if p.mode == FkMode.QUENCHED and noise is None:
        raise ValueError("quenched mode requires a noise field")
    task = _KernelTask(x=x, y=y, p=p, noise=noise)
    total, total_sq, hits = _run_chunks(task, p.n_paths, s, workers=workers,
                                        n_components=3)
    pref = math.exp(-((x - y) ** 2) / (2.0 * p.big_t)) / math.sqrt(2.0 * math.pi * p.big_t)
    est = MCEstimate.from_moments(total, total_sq, p.n_paths, s)
    extra = {"crossing_frequency": hits / p.n_paths,
             "crossing_probability": math.exp(-2.0 * x * y / p.big_t)}
    return MCEstimate(mean=pref * est.mean, stderr=pref * est.stderr,
                      n=est.n, master_seed=est.master_seed,
                      stream_id=est.stream_id, extra=extra)


def _kernel00_chunk(stream: RngStream, count: int, p: FkParams):
    # unit-horizon bridges; the bandwidth rescales with the sqrt(T) space unit
    dt = 1.0 / p.n_steps
    delta_unit = p.bandwidth / math.sqrt(p.big_t)
    rows = continuum.bridge_rows(0.0, 0.0, 1.0, p.n_steps, count, stream)
    f = continuum.signed_path_functionals(rows, dt, delta_unit, stream)
    logw = (-0.5 * p.big_t**1.5 * (f.area - f.sq_integral() / p.beta)
            - math.sqrt(p.big_t) * p.w * f.zero_time)
    w = np.exp(logw)
    return float(w.sum()), float((w * w).sum())


@dataclass
class _Kernel00Task:
    p: FkParams

    def __call__(self, stream: RngStream, count: int):
        return _kernel00_chunk(stream, count, self.p)


def expected_kernel_00(p: FkParams, s: RngStream, workers: int = 1) -> MCEstimate:
    """E[K(0,0)] over unit reflected bridges: sqrt(2/(pi T)) times the mean of
    exp(-(T^(3/2)/2)(int r - int L^2/beta) - sqrt(T) w L0 / 2); the scaling to
    horizon T is exact, so the grid resolution is horizon-independent."""
    total, total_sq = _run_chunks(_Kernel00Task(p=p), p.n_paths, s, workers=workers)
    pref = math.sqrt(2.0 / (math.pi * p.big_t))
    est = MCEstimate.from_moments(total, total_sq, p.n_paths, s)
    return MCEstimate(mean=pref * est.mean, stderr=pref * est.stderr, n=est.n,
                      master_seed=est.master_seed, stream_id=est.stream_id)


def trace_estimate(p: FkParams, x_max: float, n_x: int, s: RngStream,
                   workers: int = 1) -> MCEstimate:
    """Trapezoid quadrature of the expected diagonal kernel on [0, x_max];
    the reported tail bound integrates the observed edge value against the
    dominant e^(-xT/2) decay beyond the cutoff."""
    if x_max <= 0.0 or n_x < 2:
        raise ValueError("need a positive x_max and at least two nodes")
    xs = np.linspace(0.0, x_max, n_x)
    per_node = max(p.n_paths // n_x, 2)
    node_p = replace(p, n_paths=per_node)
    h = xs[1] - xs[0]
    weights = np.full(n_x, h)
    weights[0] = weights[-1] = 0.5 * h
    total = 0.0
    var = 0.0
    edge_mean = 0.0
    for i, xi in enumerate(xs):
        est = kernel_estimate(float(xi), float(xi), node_p,
                              _substream(s, i + 1), workers=workers)
        total += weights[i] * est.mean
        var += (weights[i] * est.stderr) ** 2
        if i == n_x - 1:
            edge_mean = est.mean
    tail = edge_mean * 2.0 / p.big_t
    return MCEstimate(mean=total, stderr=math.sqrt(var), n=per_node * n_x,
                      master_seed=s.master_seed, stream_id=s.stream_id,
                      extra={"tail_bound": tail, "x_max": x_max, "n_x": n_x})


def chapman_kolmogorov_residual(x: float, y: float, t1: float, t2: float,
                                p: FkParams, noise: NoiseField, s: RngStream,
                                n_z: int = 49, z_max: float | None = None,
                                workers: int = 1) -> MCEstimate:
    """Quenched semigroup residual int K_{T1}(x, z) K_{T2}(z, y) dz -
    K_{T1+T2}(x, y) for one noise realization; zero in expectation.

    Sub-kernels run at a uniform time resolution (n_steps scaled by duration)
    and every kernel evaluation draws from its own stream slot, so the
    quadrature errors are independent and the combined standard error is the
    root sum of squares."""
    if noise is None:
        raise ValueError("the semigroup check is a quenched statement; pass a noise field")
    if t1 <= 0.0 or t2 <= 0.0:
        raise ValueError("T1 and T2 must be positive")
    total_t = t1 + t2
    if z_max is None:
        z_max = max(x, y) + 6.0 * math.sqrt(total_t)
    zs = np.linspace(0.0, z_max, n_z)
    h = zs[1] - zs[0]
    weights = np.full(n_z, h)
    weights[0] = weights[-1] = 0.5 * h

    def sub_params(duration: float) -> FkParams:
        # uniform time resolution and one level bandwidth across all horizons
        steps = max(64, int(round(p.n_steps * duration / total_t)))
        return replace(p, big_t=duration, n_steps=steps, mode=FkMode.QUENCHED,
                       delta_a=noise.delta_a)

    p1, p2, p12 = sub_params(t1), sub_params(t2), sub_params(total_t)
    lhs = 0.0
    var = 0.0
    for i, z in enumerate(zs):
        k1 = kernel_estimate(x, float(z), p1, _substream(s, 2 * i + 1),
                             noise=noise, workers=workers)
        k2 = kernel_estimate(float(z), y, p2, _substream(s, 2 * i + 2),
                             noise=noise, workers=workers)
        lhs += weights[i] * k1.mean * k2.mean
        var += weights[i] ** 2 * (
            (k2.mean * k1.stderr) ** 2 + (k1.mean * k2.stderr) ** 2
            + (k1.stderr * k2.stderr) ** 2)
    k12 = kernel_estimate(x, y, p12, _substream(s, 2 * n_z + 1),
                          noise=noise, workers=workers)
    return MCEstimate(mean=lhs - k12.mean,
                      stderr=math.sqrt(var + k12.stderr**2),
                      n=p.n_paths, master_seed=s.master_seed,
                      stream_id=s.stream_id,
                      extra={"lhs": lhs, "rhs": k12.mean, "n_z": n_z,
                             "z_max": z_max})


# -- bilinear target (annealed), for the matrix-side cross-validation ---------------

def _bilinear_chunk(stream: RngStream, count: int, f, g, p: FkParams):
    dt = p.big_t / p.n_steps
    u = stream.uniforms(count)
    xs = f.sampler(u)
    rows = continuum.bm_rows(xs, p.big_t, p.n_steps, count, stream)
    fx = continuum.signed_path_functionals(rows, dt, p.bandwidth, stream)
    logw = -0.5 * fx.area + _noise_term(fx, p, None) - p.w * fx.zero_time
    vals = np.exp(logw) * _apply_fn(getattr(g, "fn", g), np.abs(rows[:, -1]))
    return float(vals.sum()), float((vals * vals).sum())


@dataclass
class _BilinearTask:
    f: object
    g: object
    p: FkParams

    def __call__(self, stream: RngStream, count: int):
        return _bilinear_chunk(stream, count, self.f, self.g, self.p)


def bilinear_target(f, g, p: FkParams, s: RngStream, mass: float = 1.0,
                    workers: int = 1) -> MCEstimate:
    """Annealed estimate of int f(x) (U g)(x) dx with the start point drawn
    from the normalized |f| through its inverse-CDF sampler; ``mass`` is
    int f dx."""
    if getattr(f, "sampler", None) is None:
        raise ValueError("f needs an inverse-CDF sampler for the start point")
    if p.mode != FkMode.ANNEALED:
        raise ValueError("the bilinear target is an annealed quantity")
    task = _BilinearTask(f=f, g=g, p=p)
    total, total_sq = _run_chunks(task, p.n_paths, s, workers=workers)
    est = MCEstimate.from_moments(total, total_sq, p.n_paths, s)
    return MCEstimate(mean=mass * est.mean, stderr=mass * est.stderr, n=est.n,
                      master_seed=est.master_seed, stream_id=est.stream_id)
