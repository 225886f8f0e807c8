"""Structured-matrix kernels.

Symmetric Toeplitz operators applied through a circulant embedding, the
orthonormal type-I discrete sine transform, and tau-algebra approximants of
symmetric Toeplitz matrices (Toeplitz minus Hankel correction), which the
sine transform diagonalizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from .errors import SingularOperatorError, SizeError
from .grunwald import GrunwaldSequence


def _as_vector(v, n: int, what: str = "vector") -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != n:
        raise SizeError(f"{what} has leading length {v.shape[0]}, expected {n}")
    return v


# Rows of working data per FFT batch; keeps a batch of complex spectra near L2 size.
_BLOCK_BYTES = 1 << 18


def _along_last(v: np.ndarray, axis: int, kernel, out_len: int) -> np.ndarray:
    """Apply ``kernel`` to 2-D row batches of ``v`` with ``axis`` moved last.

    Batches are sized so their FFT work arrays stay cache resident; large
    grids otherwise fall off a cache cliff and lose the n log n scaling.
    """
    moved = np.moveaxis(v, axis, -1)
    lead = moved.shape[:-1]
    n = moved.shape[-1]
    rows = np.ascontiguousarray(moved).reshape(-1, n)
    out = np.empty((rows.shape[0], out_len))
    block = max(1, _BLOCK_BYTES // (32 * max(n, 1)))
    for s in range(0, rows.shape[0], block):
        out[s : s + block] = kernel(rows[s : s + block])
    return np.moveaxis(out.reshape(lead + (out_len,)), -1, axis)


@dataclass(frozen=True, eq=False)
class SymmetricToeplitz:
    """Symmetric Toeplitz matrix ``[t_{|i-j|}]`` stored by its first column.

    The real FFT of the length-``2n`` circulant embedding
    ``[t_0, ..., t_{n-1}, 0, t_{n-1}, ..., t_1]`` is cached at construction,
    so a product costs one forward and one inverse real FFT.
    """

    first_col: np.ndarray
    embedded_spectrum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        col = np.array(self.first_col, dtype=np.float64).ravel()
        if col.size == 0:
            raise SizeError("Toeplitz first column must be non-empty")
        col.setflags(write=False)
        emb = np.concatenate([col, [0.0], col[:0:-1]])
        spec = sfft.rfft(emb)
        spec.setflags(write=False)
        object.__setattr__(self, "first_col", col)
        object.__setattr__(self, "embedded_spectrum", spec)

    @property
    def n(self) -> int:
        return self.first_col.shape[0]

    def scaled(self, c: float) -> "SymmetricToeplitz":
        return SymmetricToeplitz(c * self.first_col)

    def matvec(self, v, axis: int = 0) -> np.ndarray:
        """Apply the matrix along ``axis`` of ``v`` (every other axis is batched)."""
        return toeplitz_matvec(self, v, axis=axis)

    def to_dense(self) -> np.ndarray:
        idx = np.arange(self.n)
        return self.first_col[np.abs(idx[:, None] - idx[None, :])]


def toeplitz_from_grunwald(g: GrunwaldSequence, n: int) -> SymmetricToeplitz:
    """The ``n x n`` matrix with first column ``[2g_1, g_0 + g_2, g_3, ..., g_n]``."""
    n = int(n)
    if n < 1:
        raise SizeError(f"matrix dimension must be positive, got {n}")
    if len(g) < n + 1:
        raise SizeError(f"need {n + 1} Grunwald weights for n={n}, have {len(g)}")
    col = np.empty(n)
    col[0] = 2.0 * g[1]
    if n > 1:
        col[1] = g[0] + g[2]
    col[2:] = g[3 : n + 1]
    return SymmetricToeplitz(col)


def toeplitz_matvec(T: SymmetricToeplitz, v, axis: int = 0) -> np.ndarray:
    """Product of ``T`` with ``v`` via the cached circulant spectrum, O(n log n)."""
    v = np.asarray(v, dtype=np.float64)
    n = T.n
    if v.ndim == 0 or v.shape[axis] != n:
        raise SizeError(f"Toeplitz operator of size {n} applied to shape {v.shape}")
    spec = T.embedded_spectrum

    def kernel(rows):
        return sfft.irfft(sfft.rfft(rows, n=2 * n, axis=-1) * spec, n=2 * n, axis=-1)[:, :n]

    return _along_last(v, axis, kernel, n)


# Above this prime factor of n + 1 the direct real FFT of length 2(n + 1) hits
# slow generic-radix passes and the chirp-z route is faster.
_MAX_DIRECT_PRIME = 64


def _largest_prime_factor(m: int) -> int:
    p, largest = 2, 1
    while p * p <= m:
        while m % p == 0:
            largest, m = p, m // p
        p += 1
    return max(largest, m)


@lru_cache(maxsize=32)
def _chirp_plan(n: int):
    """Chirps and kernel spectrum for the Bluestein form of the sine sum."""
    mod = 4 * (n + 1)
    j = np.arange(n, dtype=np.int64)
    # reduce j^2 modulo the period in integers so the phases stay exact
    pre = np.exp(1j * np.pi * (((j + 1) ** 2) % mod) / (2 * (n + 1)))
    length = sfft.next_fast_len(2 * n - 1)
    chirp = np.exp(-1j * np.pi * ((j * j) % mod) / (2 * (n + 1)))
    kernel = np.zeros(length, dtype=complex)
    kernel[:n] = chirp
    kernel[length - n + 1 :] = chirp[1:][::-1]
    pre.setflags(write=False)
    return pre, sfft.fft(kernel), length


def _dst1_last_direct(v: np.ndarray) -> np.ndarray:
    n = v.shape[-1]
    ext = np.zeros(v.shape[:-1] + (2 * (n + 1),))
    ext[..., 1 : n + 1] = v
    ext[..., n + 2 :] = -v[..., ::-1]
    out = sfft.rfft(ext, axis=-1)[..., 1 : n + 1].imag
    out *= -np.sqrt(0.5 / (n + 1))
    return out


def _dst1_last_chirp(v: np.ndarray) -> np.ndarray:
    # sum_j v_j e^{i pi jk/(n+1)} with jk = (j^2 + k^2 - (k-j)^2)/2 as a convolution
    n = v.shape[-1]
    pre, kernel, length = _chirp_plan(n)
    conv = sfft.ifft(sfft.fft(v * pre, n=length, axis=-1) * kernel, axis=-1)[..., :n]
    out = (pre * conv).imag
    out *= np.sqrt(2.0 / (n + 1))
    return out


def dst1(v, axis: int = 0) -> np.ndarray:
    """Orthonormal DST-I along ``axis``: ``sqrt(2/(n+1)) sum_j sin(pi i j/(n+1)) v_j``.

    Computed from the real FFT of the odd extension ``[0, v, 0, -reversed(v)]``
    of length ``2(n+1)``, whose imaginary part is ``-2`` times the sine sum.
    When ``n + 1`` has a large prime factor the same sum is evaluated as a
    Bluestein convolution padded to a fast FFT length instead.
    """
    v = np.asarray(v, dtype=np.float64)
    n = v.shape[axis]
    if _largest_prime_factor(n + 1) <= _MAX_DIRECT_PRIME:
        kernel = _dst1_last_direct
    else:
        kernel = _dst1_last_chirp
    return _along_last(v, axis, kernel, n)


def dst1_2d(U) -> np.ndarray:
    """DST-I along both axes of a 2-D array, i.e. ``(S_{n2} (x) S_{n1}) vec(U)``."""
    return dst1(dst1(U, axis=0), axis=1)


@dataclass(frozen=True)
class SineTransform:
    """The symmetric orthogonal matrix ``S_n``; applying it twice is the identity.

    Stateless apart from ``n``, so concurrent use from several threads is safe.
    """

    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise SizeError(f"transform length must be positive, got {self.n}")

    def apply(self, v, axis: int = 0) -> np.ndarray:
        return dst1_apply(self, v, axis=axis)

    __call__ = apply

    def to_dense(self) -> np.ndarray:
        idx = np.arange(1, self.n + 1)
        return np.sqrt(2.0 / (self.n + 1)) * np.sin(np.pi * np.outer(idx, idx) / (self.n + 1))


def dst1_apply(S: SineTransform, v, axis: int = 0) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 0 or v.shape[axis] != S.n:
        raise SizeError(f"sine transform of length {S.n} applied to shape {v.shape}")
    return dst1(v, axis=axis)


@dataclass(frozen=True, eq=False)
class TauSpectrum:
    """Eigenvalues of a tau matrix ``S_n diag(eigenvalues) S_n``."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        ev = np.array(self.eigenvalues, dtype=np.float64).ravel()
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def to_dense(self) -> np.ndarray:
        S = SineTransform(self.n).to_dense()
        return S @ (self.eigenvalues[:, None] * S)

    def solve_shifted(self, shift: float, v, axis: int = 0) -> np.ndarray:
        return tau_solve_shifted(self, shift, v, axis=axis)


def tau_first_column(T: SymmetricToeplitz) -> np.ndarray:
    """First column ``c_i = t_{i-1} - t_{i+1}`` of ``tau(T) = T - H`` (``t_n = t_{n+1} = 0``)."""
    t = np.concatenate([T.first_col, [0.0, 0.0]])
    c = t[: T.n].copy()
    c[: T.n] -= t[2 : T.n + 2]
    return c


def tau_from_toeplitz(T: SymmetricToeplitz) -> TauSpectrum:
    """Eigenvalues of the tau approximant of ``T`` as ``(S c) / (S e_1)``."""
    n = T.n
    e1 = np.zeros(n)
    e1[0] = 1.0
    # S e_1 = sqrt(2/(n+1)) sin(pi k/(n+1)) has no zero entries for k = 1..n
    return TauSpectrum(dst1(tau_first_column(T)) / dst1(e1))


def tau_solve_shifted(tau: TauSpectrum, shift: float, v, axis: int = 0) -> np.ndarray:
    """Apply ``(shift I - tau)^{-1}`` along ``axis`` of ``v``."""
    v = _as_vector(np.moveaxis(np.asarray(v, dtype=np.float64), axis, 0), tau.n)
    denom = float(shift) - tau.eigenvalues
    scale = max(float(np.max(np.abs(tau.eigenvalues))), 1.0) if tau.n else 1.0
    if np.any(np.abs(denom) < 1e-14 * scale):
        raise SingularOperatorError(f"shift {shift!r} hits the tau spectrum")
    shape = (-1,) + (1,) * (v.ndim - 1)
    w = dst1(dst1(v, axis=0) / denom.reshape(shape), axis=0)
    return np.moveaxis(w, 0, axis)
