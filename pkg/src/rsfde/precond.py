"""Sine-transform preconditioners for the penalized system.

``P = I - tau1(A) + D`` is the spectrally sharp but non-diagonalizable
preconditioner; it is only materialized densely for validation. The operator
handed to GMRES is

    Phat^{-1} = (I - Phi) (I - tau1(A))^{-1} + Phi ((1 + dt/eta) I - tau1(A))^{-1}

where ``tau1(A) = I (x) tau(Ax) + tau(Ay) (x) I``. Both resolvents share the
2-D sine basis, so one application costs three 2-D DST-I passes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discretization import DENSE_CAP, DomainMask, PenalizedOperator, _check_cap, unvec, vec
from .errors import SingularOperatorError, SizeError
from .structured import SineTransform, TauSpectrum, dst1_2d, tau_from_toeplitz


@dataclass(frozen=True, eq=False)
class TauPreconditioner:
    taux: TauSpectrum
    tauy: TauSpectrum
    mask: DomainMask
    lambda2d: np.ndarray = field(init=False, repr=False)
    _inv_inside: np.ndarray = field(init=False, repr=False)
    _inv_outside: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        shape = (self.taux.n, self.tauy.n)
        if self.mask.inside.shape != shape:
            raise SizeError(f"mask shape {self.mask.inside.shape} does not match {shape}")
        lam = self.taux.eigenvalues[:, None] + self.tauy.eigenvalues[None, :]
        lam.setflags(write=False)
        d1 = 1.0 - lam
        d2 = (1.0 + self.mask.penalty) - lam
        if np.any(d1 <= 0) or np.any(d2 <= 0):
            raise SingularOperatorError("tau1(A) has eigenvalues >= 1; resolvents are not well posed")
        object.__setattr__(self, "lambda2d", lam)
        object.__setattr__(self, "_inv_inside", 1.0 / d1)
        object.__setattr__(self, "_inv_outside", 1.0 / d2)

    @classmethod
    def from_operator(cls, op: PenalizedOperator) -> "TauPreconditioner":
        return cls(tau_from_toeplitz(op.Ax), tau_from_toeplitz(op.Ay), op.mask)

    @property
    def shape2d(self) -> tuple[int, int]:
        return (self.taux.n, self.tauy.n)

    @property
    def N(self) -> int:
        return self.taux.n * self.tauy.n

    def apply(self, v) -> np.ndarray:
        return apply_Phat_inv(self, v)

    __call__ = apply

    def dense_tau1(self, cap: int = DENSE_CAP) -> np.ndarray:
        """Dense ``tau1(A)``."""
        _check_cap(self.N, cap)
        n1, n2 = self.shape2d
        return np.kron(np.eye(n2), self.taux.to_dense()) + np.kron(self.tauy.to_dense(), np.eye(n1))

    def dense_Phat_inv(self, cap: int = DENSE_CAP) -> np.ndarray:
        """Dense ``Phat^{-1}`` assembled from the two resolvents in the sine basis."""
        _check_cap(self.N, cap)
        n1, n2 = self.shape2d
        S = np.kron(SineTransform(n2).to_dense(), SineTransform(n1).to_dense())
        r1 = S @ (vec(self._inv_inside)[:, None] * S)
        r2 = S @ (vec(self._inv_outside)[:, None] * S)
        phi = vec(self.mask.phi)[:, None]
        return (1.0 - phi) * r1 + phi * r2

    def dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        return dense_P(self, cap)


def apply_Phat_inv(P: TauPreconditioner, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (P.N,):
        raise SizeError(f"preconditioner of size {P.N} applied to shape {v.shape}")
    W = dst1_2d(unvec(v, P.shape2d))
    phi = P.mask.phi
    if not phi.any():
        return vec(dst1_2d(W * P._inv_inside))
    if phi.all():
        return vec(dst1_2d(W * P._inv_outside))
    w1 = dst1_2d(W * P._inv_inside)
    w2 = dst1_2d(W * P._inv_outside)
    return vec(w1 + phi * (w2 - w1))


def dense_P(P: TauPreconditioner, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense ``I - tau1(A) + D``."""
    out = -P.dense_tau1(cap)
    out[np.diag_indices_from(out)] += 1.0 + P.mask.diagonal()
    return out
