"""Shifted Grünwald-Letnikov weights for fractional orders in (1, 2)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class GrunwaldSequence:
    """Weights ``g_0, ..., g_L`` of the shifted Grünwald-Letnikov formula.

    ``coeffs`` is a read-only float64 array.
    """

    alpha: float
    coeffs: np.ndarray

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def __getitem__(self, idx):
        return self.coeffs[idx]


def check_order(alpha: float) -> float:
    alpha = float(alpha)
    if not 1.0 < alpha < 2.0:
        raise ParameterError(f"fractional order must lie in (1, 2), got {alpha!r}")
    return alpha


def grunwald_coeffs(alpha: float, count: int) -> GrunwaldSequence:
    """Return the first ``count`` weights for order ``alpha``.

    Uses the multiplicative recurrence ``g_l = (1 - (alpha + 1) / l) g_{l-1}``
    with ``g_0 = 1``; no Gamma-function ratios are formed.

    Parameters
    ----------
    alpha : float
        Fractional order, strictly between 1 and 2.
    count : int
        Number of weights to produce, at least 2.
    """
    alpha = check_order(alpha)
    if int(count) != count or count < 2:
        raise ParameterError(f"count must be an integer >= 2, got {count!r}")
    count = int(count)

    g = np.empty(count, dtype=np.float64)
    g[0] = 1.0
    # cumprod of the recurrence factors is the same product, vectorized
    ell = np.arange(1, count, dtype=np.float64)
    g[1:] = np.cumprod(1.0 - (alpha + 1.0) / ell)
    g.setflags(write=False)
    return GrunwaldSequence(alpha=alpha, coeffs=g)
