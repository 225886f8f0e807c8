"""Penalized finite-difference system on the enclosing rectangle.

Unknowns live on the interior nodes of the rectangle and are ordered
x-fastest: ``vec(U)`` of an ``(n1, n2)`` array ``U[i, j] = u(x_i, y_j)`` in
column-major order. With this ordering ``I (x) Ax`` acts on the columns of
``U`` (axis 0) and ``Ay (x) I`` on its rows (axis 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParameterError, SizeCapError, SizeError
from .grunwald import check_order, grunwald_coeffs
from .structured import SymmetricToeplitz, toeplitz_from_grunwald

DENSE_CAP = 4096

RegionPredicate = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid on ``(a, b) x (c, d) x (0, T]``."""

    a: float
    b: float
    c: float
    d: float
    n1: int
    n2: int
    m: int
    T: float

    def __post_init__(self):
        if not (self.b > self.a and self.d > self.c):
            raise ParameterError("rectangle bounds must satisfy a < b and c < d")
        if self.n1 < 1 or self.n2 < 1 or self.m < 1:
            raise ParameterError("n1, n2 and m must be positive")
        if not self.T > 0:
            raise ParameterError("final time must be positive")

    @property
    def hx(self) -> float:
        return (self.b - self.a) / (self.n1 + 1)

    @property
    def hy(self) -> float:
        return (self.d - self.c) / (self.n2 + 1)

    @property
    def dt(self) -> float:
        return self.T / self.m

    @property
    def N(self) -> int:
        return self.n1 * self.n2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    def x(self) -> np.ndarray:
        """Interior x nodes ``x_1, ..., x_{n1}``."""
        return self.a + self.hx * np.arange(1, self.n1 + 1)

    def y(self) -> np.ndarray:
        return self.c + self.hy * np.arange(1, self.n2 + 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(X, Y)`` arrays of shape ``(n1, n2)`` with ``X[i, j] = x_i``."""
        return np.meshgrid(self.x(), self.y(), indexing="ij")

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.m + 1)


def riesz_constant(alpha: float) -> float:
    """``-1 / (2 cos(alpha pi / 2))``, positive for alpha in (1, 2)."""
    return -1.0 / (2.0 * math.cos(check_order(alpha) * math.pi / 2.0))


@dataclass(frozen=True)
class FractionalParams:
    """Fractional orders and diffusivities, with the derived step constants.

    ``cx`` and ``cy`` depend on the grid and are set by :meth:`for_grid`.
    """

    alpha1: float
    alpha2: float
    kx: float
    ky: float
    cx: float = float("nan")
    cy: float = float("nan")

    def __post_init__(self):
        check_order(self.alpha1)
        check_order(self.alpha2)
        if not (self.kx > 0 and self.ky > 0):
            raise ParameterError("diffusivities must be positive")

    @property
    def c_alpha1(self) -> float:
        return riesz_constant(self.alpha1)

    @property
    def c_alpha2(self) -> float:
        return riesz_constant(self.alpha2)

    def for_grid(self, grid: GridSpec) -> "FractionalParams":
        cx = grid.dt * self.kx * self.c_alpha1 / grid.hx**self.alpha1
        cy = grid.dt * self.ky * self.c_alpha2 / grid.hy**self.alpha2
        return FractionalParams(self.alpha1, self.alpha2, self.kx, self.ky, cx, cy)


@dataclass(frozen=True, eq=False)
class DomainMask:
    """Membership of interior nodes in the physical domain, and the penalty.

    ``inside`` has shape ``(n1, n2)``. The penalty diagonal is
    ``D = (dt / eta) * Phi`` with ``Phi = vec(~inside)``.
    """

    inside: np.ndarray
    eta: float
    dt: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ParameterError(f"penalization parameter must be positive, got {self.eta!r}")
        if not self.dt > 0:
            raise ParameterError("time step must be positive")
        inside = np.array(self.inside, dtype=bool)
        if inside.ndim != 2:
            raise SizeError("mask must be a 2-D array")
        inside.setflags(write=False)
        object.__setattr__(self, "inside", inside)

    @property
    def penalty(self) -> float:
        return self.dt / self.eta

    @property
    def phi(self) -> np.ndarray:
        """0/1 indicator of the extension region, shape ``(n1, n2)``."""
        return (~self.inside).astype(np.float64)

    def diagonal(self) -> np.ndarray:
        """Diagonal of ``D`` as a flat x-fastest vector."""
        return self.penalty * self.phi.ravel(order="F")


def build_mask(grid: GridSpec, region: RegionPredicate, eta: float) -> DomainMask:
    """Evaluate ``region`` at the interior nodes of ``grid``.

    ``region(X, Y)`` must return a boolean array; nodes on the boundary of the
    physical domain count as inside when the predicate says so.
    """
    if not eta > 0:
        raise ParameterError(f"penalization parameter must be positive, got {eta!r}")
    X, Y = grid.mesh()
    inside = np.broadcast_to(np.asarray(region(X, Y), dtype=bool), grid.shape)
    return DomainMask(inside=inside, eta=float(eta), dt=grid.dt)


def vec(U: np.ndarray) -> np.ndarray:
    return np.asarray(U).ravel(order="F")


def unvec(v: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    return np.asarray(v).reshape(shape, order="F")


@dataclass(frozen=True, eq=False)
class PenalizedOperator:
    """Matrix-free ``M = I - (I (x) Ax + Ay (x) I) + D``."""

    Ax: SymmetricToeplitz
    Ay: SymmetricToeplitz
    mask: DomainMask
    _d: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.mask.inside.shape != (self.Ax.n, self.Ay.n):
            raise SizeError(
                f"mask shape {self.mask.inside.shape} does not match ({self.Ax.n}, {self.Ay.n})"
            )
        object.__setattr__(self, "_d", self.mask.penalty * self.mask.phi)

    @classmethod
    def build(cls, grid: GridSpec, fp: FractionalParams, mask: DomainMask) -> "PenalizedOperator":
        if not math.isfinite(fp.cx):
            fp = fp.for_grid(grid)
        gx = grunwald_coeffs(fp.alpha1, grid.n1 + 1)
        gy = grunwald_coeffs(fp.alpha2, grid.n2 + 1)
        Ax = toeplitz_from_grunwald(gx, grid.n1).scaled(fp.cx)
        Ay = toeplitz_from_grunwald(gy, grid.n2).scaled(fp.cy)
        return cls(Ax, Ay, mask)

    @property
    def shape2d(self) -> tuple[int, int]:
        return (self.Ax.n, self.Ay.n)

    @property
    def N(self) -> int:
        return self.Ax.n * self.Ay.n

    def apply_A(self, v) -> np.ndarray:
        U = self._grid_view(v)
        return vec(self.Ax.matvec(U, axis=0) + self.Ay.matvec(U, axis=1))

    def apply(self, v) -> np.ndarray:
        return apply_M(self, v)

    __call__ = apply

    def _grid_view(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.N,):
            raise SizeError(f"operator of size {self.N} applied to shape {v.shape}")
        return unvec(v, self.shape2d)

    def dense_A(self, cap: int = DENSE_CAP) -> np.ndarray:
        _check_cap(self.N, cap)
        n1, n2 = self.shape2d
        return np.kron(np.eye(n2), self.Ax.to_dense()) + np.kron(self.Ay.to_dense(), np.eye(n1))

    def dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        return dense_M(self, cap)


def apply_M(op: PenalizedOperator, v) -> np.ndarray:
    """``(I - A + D) v`` with Toeplitz products along columns and rows of ``unvec(v)``."""
    U = op._grid_view(v)
    AU = op.Ax.matvec(U, axis=0)
    AU += op.Ay.matvec(U, axis=1)
    return vec(U - AU + op._d * U)


def dense_M(op: PenalizedOperator, cap: int = DENSE_CAP) -> np.ndarray:
    """Explicit ``I - A + D``; for oracles and spectral studies only."""
    M = -op.dense_A(cap)
    M[np.diag_indices_from(M)] += 1.0 + op.mask.diagonal()
    return M


def _check_cap(N: int, cap: int) -> None:
    if N > cap:
        raise SizeCapError(f"dense materialization of {N} unknowns exceeds cap {cap}")
