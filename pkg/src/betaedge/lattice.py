"""Discrete path machinery: the lazy-at-zero walk, the simple symmetric walk,
the two-sided walk that is lazy only at zero, occupation and horizontal-step
counts, and the exact discrete Skorokhod bijection between simple-walk paths
and lazy-walk paths.

Paths store integer steps, never values; values are reconstructed on demand,
so every transform here is exact integer arithmetic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .rng import RngStream


class WalkKind(enum.Enum):
    LAZY = "lazy"
    SSRW = "ssrw"
    TWOSIDED = "twosided"


class Lattice(enum.Enum):
    INTEGER = "integer-levels"
    HALF_INTEGER = "half-integer-levels"


@dataclass(frozen=True)
class LatticePath:
    """Integer path from ``start`` with steps in {-1, 0, +1}.

    ``scale_n`` carries the lattice normalization context: one space unit is
    scale_n^(-1/3) and one time unit is scale_n^(-2/3).
    """

    start: int
    steps: tuple[int, ...]
    scale_n: int = 1

    def __post_init__(self) -> None:
        if any(s not in (-1, 0, 1) for s in self.steps):
            raise ValueError("steps must lie in {-1, 0, +1}")

    @property
    def k(self) -> int:
        return len(self.steps)

    def values(self) -> np.ndarray:
        out = np.empty(self.k + 1, dtype=np.int64)
        out[0] = self.start
        np.cumsum(np.asarray(self.steps, dtype=np.int64), out=out[1:])
        out[1:] += self.start
        return out

    def is_ssrw_type(self) -> bool:
        return all(s != 0 for s in self.steps)

    def is_lazy_type(self) -> bool:
        v = self.values()
        if v.min() < 0:
            return False
        flats_at_zero = all(v[i] == 0 for i, s in enumerate(self.steps) if s == 0)
        return bool(flats_at_zero)

    def dump(self) -> str:
        """Serialize as ``start;s1,s2,...,sk``."""
        return f"{self.start};{','.join(str(s) for s in self.steps)}"


def parse_path(text: str, scale_n: int = 1) -> LatticePath:
    """Parse the ``start;s1,s2,...`` dump format."""
    head, _, tail = text.strip().partition(";")
    steps = tuple(int(t) for t in tail.split(",")) if tail else ()
    return LatticePath(start=int(head), steps=steps, scale_n=scale_n)


def path_from_values(values, scale_n: int = 1) -> LatticePath:
    values = np.asarray(values, dtype=np.int64)
    steps = tuple(int(d) for d in np.diff(values))
    return LatticePath(start=int(values[0]), steps=steps, scale_n=scale_n)


# -- sampling -----------------------------------------------------------------

def sample_walk(kind: WalkKind, k: int, start: int, s: RngStream,
                scale_n: int = 1) -> LatticePath:
    """One path of length ``k`` with the stated transition probabilities.

    lazy: away from 0 a simple symmetric walk; at 0 it stays or moves to 1
    with probability 1/2 each.  twosided: symmetric walk off 0; at 0 it moves
    up or down with probability 1/4 each and stays with probability 1/2.
    """
    kind = WalkKind(kind)
    if kind == WalkKind.LAZY and start < 0:
        raise ValueError("lazy walk requires a nonnegative start")
    u = s.uniforms(k) if k else np.empty(0)
    steps = []
    z = start
    for i in range(k):
        if kind == WalkKind.SSRW or z != 0:
            step = 1 if u[i] < 0.5 else -1
        elif kind == WalkKind.LAZY:
            step = 1 if u[i] < 0.5 else 0
        else:  # twosided at zero
            step = 1 if u[i] < 0.25 else (-1 if u[i] < 0.5 else 0)
        steps.append(step)
        z += step
    return LatticePath(start=start, steps=tuple(steps), scale_n=scale_n)


# -- the discrete Skorokhod bijection ------------------------------------------

def skorokhod_map(path: LatticePath) -> LatticePath:
    """Gamma(Z)_t = Z_t + max_{s<=t} (-Z_s)_+ on the grid.

    Maps a simple-walk path to a lazy-walk path; each first hit of a new
    negative level becomes a horizontal step at zero.
    """
    if not path.is_ssrw_type():
        raise ValueError("skorokhod_map expects a path without horizontal steps")
    v = path.values()
    defect = np.maximum.accumulate(np.maximum(-v, 0))
    return path_from_values(v + defect, scale_n=path.scale_n)


def skorokhod_inverse(path: LatticePath) -> LatticePath:
    """Reconstruct the unique simple-walk preimage of a lazy-walk path.

    The j-th horizontal step at zero becomes the first descent to level -j;
    the stretch after it is shifted down by the running horizontal count.
    """
    if not path.is_lazy_type():
        raise ValueError("skorokhod_inverse expects a lazy-walk path")
    steps = tuple(-1 if s == 0 else s for s in path.steps)
    return LatticePath(start=path.start, steps=steps, scale_n=path.scale_n)


def horizontal_count(path: LatticePath) -> int:
    """Number of steps with value 0 both before and after."""
    v = path.values()
    return int(np.sum((v[:-1] == 0) & (v[1:] == 0)))


def strip_zero_horizontals(path: LatticePath) -> LatticePath:
    """Remove every flat step at value zero (the v(.) transform)."""
    v = path.values()
    keep = tuple(s for i, s in enumerate(path.steps)
                 if not (s == 0 and v[i] == 0))
    return LatticePath(start=path.start, steps=keep, scale_n=path.scale_n)


def coupled_reflection(path: LatticePath) -> LatticePath:
    """Pointwise absolute value, coupling the two-sided walk to the lazy walk."""
    if path.start < 0:
        raise ValueError("coupling requires a nonnegative start")
    return path_from_values(np.abs(path.values()), scale_n=path.scale_n)


# -- occupation ----------------------------------------------------------------

@dataclass(frozen=True)
class OccupationProfile:
    """Level-indexed visit counts; one count per time step, so they sum to k.

    For the half-integer lattice, key ``m`` stands for level m + 1/2 (the edge
    between m and m+1); for the integer lattice key m is level m itself.
    """

    lattice: Lattice
    counts: dict[int, int]
    scale_n: int = 1
    total: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "total", sum(self.counts.values()))

    def level(self, key: int) -> float:
        return key + 0.5 if self.lattice == Lattice.HALF_INTEGER else float(key)

    def count_at(self, key: int) -> int:
        return self.counts.get(key, 0)

    def normalized(self, key: int) -> float:
        """Occupation time in lattice units, count * scale_n^(-1/3)."""
        return self.count_at(key) * self.scale_n ** (-1.0 / 3.0)


def occupation_profile(path: LatticePath, lattice: Lattice) -> OccupationProfile:
    """Integer lattice: visits at time indices 1..k.  Half-integer lattice:
    per step, the lower endpoint of the traversed edge (flat steps count the
    edge above their own level)."""
    lattice = Lattice(lattice)
    v = path.values()
    counts: dict[int, int] = {}
    if lattice == Lattice.INTEGER:
        for z in v[1:]:
            counts[int(z)] = counts.get(int(z), 0) + 1
    else:
        for a, b in zip(v[:-1], v[1:]):
            key = int(min(a, b))
            counts[key] = counts.get(key, 0) + 1
    return OccupationProfile(lattice=lattice, counts=counts, scale_n=path.scale_n)


# Worked 28-step reflection example, used as a golden fixture: a simple-walk
# path from 3 and its image under the reflection map (the three descents to
# new negative levels become the three horizontal steps at zero).
EXAMPLE_SSRW_VALUES = (3, 2, 3, 4, 5, 4, 5, 4, 3, 2, 1, 2, 1, 0, -1, 0, 1, 0,
                       -1, 0, -1, -2, -1, -2, -3, -2, -1, 0, -1)
EXAMPLE_LAZY_VALUES = (3, 2, 3, 4, 5, 4, 5, 4, 3, 2, 1, 2, 1, 0, 0, 1, 2, 1,
                       0, 1, 0, 0, 1, 0, 0, 1, 2, 3, 2)
# The same lazy path with its horizontal steps removed (25 steps from 28).
EXAMPLE_STRIPPED_VALUES = (3, 2, 3, 4, 5, 4, 5, 4, 3, 2, 1, 2, 1, 0, 1, 2, 1,
                           0, 1, 0, 1, 0, 1, 2, 3, 2)


# -- batch law sampling (vectorized across many walks) --------------------------

def lazy_walk_batch(k: int, n_walks: int, s: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints and horizontal-step counts of ``n_walks`` independent lazy
    walks of length ``k`` from 0 (uniforms consumed step-major)."""
    from . import _kernels

    if _kernels.HAVE_NUMBA:
        base, start = s.consume(k * n_walks)
        return _kernels.lazy_walk_fill(np.uint64(base), np.uint64(start), k, n_walks)
    z = np.zeros(n_walks, dtype=np.int64)
    h = np.zeros(n_walks, dtype=np.int64)
    for _ in range(k):
        u = s.uniforms(n_walks)
        at_zero = z == 0
        up = u < 0.5
        step = np.where(up, 1, np.where(at_zero, 0, -1))
        h += (at_zero & ~up).astype(np.int64)
        z += step
    return z, h
