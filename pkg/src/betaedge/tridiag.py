"""Random tridiagonal matrix models at the spectral edge.

Three forms: the classical Gaussian/chi tridiagonal ensemble, its spiked
variant with sqrt(N) l_N added to the top corner, and the modified
(N+1)-dimensional model whose rows are indexed 0..N and whose off-diagonal is
sqrt(N - m) + xi_m.  Entry distributions follow the built-in Gaussian/chi
scheme; alternative entry laws can be injected through the sampler hooks.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass

import numpy as np

from .rng import RngStream


def lattice_unit(n: int) -> float:
    """The spatial lattice width N^(-1/3), via cbrt so cube numbers stay exact."""
    return 1.0 / np.cbrt(float(n))


def time_steps(big_t: float, n: int) -> int:
    """floor(T N^(2/3)) with a representation guard so e.g. N = 1000, T = 1
    yields exactly 100 and not floor(99.999...)."""
    return int(np.floor(big_t * np.cbrt(float(n)) ** 2 + 1e-9))


class ModelForm(enum.Enum):
    DUMITRIU_EDELMAN = "dumitriu-edelman"
    SPIKED = "spiked"
    MODIFIED = "modified"


@dataclass(frozen=True)
class SymTridiagonal:
    """Symmetric tridiagonal matrix stored as its diagonal and off-diagonal."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self) -> None:
        if len(self.offdiag) != len(self.diag) - 1:
            raise ValueError("offdiag must be one entry shorter than diag")
        if not (np.all(np.isfinite(self.diag)) and np.all(np.isfinite(self.offdiag))):
            raise ValueError("matrix entries must be finite")

    @property
    def n(self) -> int:
        return len(self.diag)

    def entry(self, i: int, j: int) -> float:
        if i == j:
            return float(self.diag[i])
        if abs(i - j) == 1:
            return float(self.offdiag[min(i, j)])
        return 0.0

    def dense(self) -> np.ndarray:
        m = np.diag(self.diag)
        idx = np.arange(self.n - 1)
        m[idx, idx + 1] = self.offdiag
        m[idx + 1, idx] = self.offdiag
        return m

    def inf_norm(self) -> float:
        pad = np.concatenate([[0.0], np.abs(self.offdiag), [0.0]])
        return float(np.max(np.abs(self.diag) + pad[:-1] + pad[1:]))

    def dump_csv(self, fp) -> None:
        """Write ``index,diag,offdiag`` rows; offdiag blank on the last row."""
        fp.write("index,diag,offdiag\n")
        for i in range(self.n):
            off = repr(float(self.offdiag[i])) if i < self.n - 1 else ""
            fp.write(f"{i},{float(self.diag[i])!r},{off}\n")

    def dumps_csv(self) -> str:
        buf = io.StringIO()
        self.dump_csv(buf)
        return buf.getvalue()


@dataclass(frozen=True)
class ModelSpec:
    beta: float
    w: float
    n: int
    form: ModelForm = ModelForm.MODIFIED

    def __post_init__(self) -> None:
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if self.n < 1:
            raise ValueError("N must be at least 1")


@dataclass(frozen=True)
class RawEntries:
    """The centered entry noise behind a modified-model draw: a[0] == 0 by
    convention, a[1..N] the diagonal entries, xi[m] = offdiag[m] - sqrt(N-m)."""

    a: np.ndarray
    xi: np.ndarray


def spike_value(n: int, w: float) -> float:
    """The spike sequence l_N = 1 - w N^(-1/3) (exact scaling, zero error term)."""
    if n < 1:
        raise ValueError("N must be at least 1")
    return 1.0 - w * lattice_unit(n)


def build_model(spec: ModelSpec, s: RngStream, return_raw: bool = False,
                a_sampler=None, xi_sampler=None):
    """Draw one matrix realization.

    Modified form: dimension N+1; diag[0] = sqrt(N) l_N, diag[m] ~ N(0, 2/beta)
    for m = 1..N, offdiag[m] = chi_{beta (N-m)} / sqrt(beta) for m = 0..N-1.
    The classical form has dimension N with the same entry scheme shifted by
    one index; the spiked form adds sqrt(N) l_N to its top corner.

    ``a_sampler(stream, count)`` and ``xi_sampler(stream, dofs)`` replace the
    built-in entry laws when provided (their moment conditions are the
    caller's responsibility).  With ``return_raw`` the centered noise arrays
    are returned alongside the matrix.
    """
    n, beta = spec.n, spec.beta
    sqrt_beta = np.sqrt(beta)
    if spec.form == ModelForm.MODIFIED:
        a = a_sampler(s, n) if a_sampler else s.normals(n) * np.sqrt(2.0 / beta)
        dofs = beta * np.arange(n, 0, -1, dtype=np.float64)
        if xi_sampler:
            xi = xi_sampler(s, dofs)
        else:
            xi = s.chi(dofs) / sqrt_beta - np.sqrt(dofs / beta)
        diag = np.concatenate([[np.sqrt(n) * spike_value(n, spec.w)], a])
        offdiag = np.sqrt(np.arange(n, 0, -1, dtype=np.float64)) + xi
        mat = SymTridiagonal(diag=diag, offdiag=offdiag)
        if return_raw:
            return mat, RawEntries(a=np.concatenate([[0.0], a]), xi=xi)
        return mat

    # classical ensemble (dimension N), optionally spiked at the corner
    g = a_sampler(s, n) if a_sampler else s.normals(n) * np.sqrt(2.0 / beta)
    diag = g.copy()
    if spec.form == ModelForm.SPIKED:
        diag[0] += np.sqrt(n) * spike_value(n, spec.w)
    if n > 1:
        dofs = beta * np.arange(n - 1, 0, -1, dtype=np.float64)
        if xi_sampler:
            offdiag = np.sqrt(dofs / beta) + xi_sampler(s, dofs)
        else:
            offdiag = s.chi(dofs) / sqrt_beta
    else:
        offdiag = np.empty(0)
    mat = SymTridiagonal(diag=diag, offdiag=offdiag)
    if return_raw:
        xi = offdiag - np.sqrt(np.arange(n - 1, 0, -1, dtype=np.float64))
        return mat, RawEntries(a=g, xi=xi)
    return mat


def noise_partial_sums(raw: RawEntries, spec: ModelSpec, x_max: float):
    """The prelimit noise path: at lattice points x = j N^(-1/3),
    sqrt(beta) N^(-1/6) sum_{m<=j} (a_m / 2 + xi_m).

    Requires the raw entries of a modified-model build.
    """
    from .continuum import GridPath

    n = spec.n
    j_max = int(np.floor(x_max * np.cbrt(float(n)) + 1e-9))
    if j_max >= len(raw.xi):
        raise ValueError("x_max N^(1/3) exceeds the entry range of the matrix")
    drift = raw.a[: j_max + 1] / 2.0 + raw.xi[: j_max + 1]
    values = np.sqrt(spec.beta) * float(n) ** (-1.0 / 6.0) * np.cumsum(drift)
    return GridPath(horizon=j_max * lattice_unit(n), n_steps=j_max, values=values)
