"""Independent dense reference implementations used by the test suite.

Nothing here imports the package's fast paths; each oracle is built from the
defining formulas (sums, literal matrix displays, binomial coefficients).
"""

import math

import numpy as np
from scipy.special import binom


def gl_weights_binomial(alpha, count):
    """``g_l = (-1)^l binom(alpha, l)``, the closed form of the recurrence."""
    ell = np.arange(count)
    return (-1.0) ** ell * binom(alpha, ell)


def grunwald_matrix_literal(alpha, n):
    """The matrix display: 2g_1 on the diagonal, g_0+g_2 next to it, then g_3, g_4, ..."""
    g = gl_weights_binomial(alpha, n + 2)
    G = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            k = abs(i - j)
            if k == 0:
                G[i, j] = 2 * g[1]
            elif k == 1:
                G[i, j] = g[0] + g[2]
            else:
                G[i, j] = g[k + 1]
    return G


def naive_sine_matrix(n):
    S = np.empty((n, n))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            S[i - 1, j - 1] = math.sqrt(2.0 / (n + 1)) * math.sin(math.pi * i * j / (n + 1))
    return S


def naive_dst(v):
    n = len(v)
    return np.array(
        [
            math.sqrt(2.0 / (n + 1)) * sum(v[j - 1] * math.sin(math.pi * i * j / (n + 1)) for j in range(1, n + 1))
            for i in range(1, n + 1)
        ]
    )


def toeplitz_dense(col):
    n = len(col)
    return np.array([[col[abs(i - j)] for j in range(n)] for i in range(n)])


def hankel_correction_literal(col):
    """Hankel matrix whose antidiagonals are ``[t_2..t_{n-1}, 0, 0, 0, t_{n-1}..t_2]``."""
    n = len(col)
    t = list(col)
    anti = [t[k] for k in range(2, n)] + [0.0, 0.0, 0.0] + [t[k] for k in range(n - 1, 1, -1)]
    anti = anti[: 2 * n - 1] if n >= 2 else [0.0]
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            H[i, j] = anti[i + j]
    return H


def scheme_matrix_literal(alpha1, alpha2, cx, cy, d):
    """Coefficient matrix read row by row off the difference scheme.

    Row (i, j) of ``u_ij - cx(sum_l g_l u_{i-l+1,j} + sum_l g_l u_{i+l-1,j})
    - cy(...) + d_ij u_ij``, boundary values dropped, x-fastest ordering.
    ``d`` is the ``(n1, n2)`` penalty array.
    """
    n1, n2 = d.shape
    gx = gl_weights_binomial(alpha1, n1 + 3)
    gy = gl_weights_binomial(alpha2, n2 + 3)
    N = n1 * n2

    def idx(i, j):  # 1-based grid index to 0-based unknown
        return (i - 1) + (j - 1) * n1

    M = np.zeros((N, N))
    for j in range(1, n2 + 1):
        for i in range(1, n1 + 1):
            r = idx(i, j)
            M[r, r] += 1.0 + d[i - 1, j - 1]
            for ell in range(0, i + 2):
                ii = i - ell + 1
                if 1 <= ii <= n1:
                    M[r, idx(ii, j)] -= cx * gx[ell]
            for ell in range(0, n1 - i + 3):
                ii = i + ell - 1
                if 1 <= ii <= n1:
                    M[r, idx(ii, j)] -= cx * gx[ell]
            for ell in range(0, j + 2):
                jj = j - ell + 1
                if 1 <= jj <= n2:
                    M[r, idx(i, jj)] -= cy * gy[ell]
            for ell in range(0, n2 - j + 3):
                jj = j + ell - 1
                if 1 <= jj <= n2:
                    M[r, idx(i, jj)] -= cy * gy[ell]
    return M


def ellipse_mask_loop(n1, n2, a, b):
    """Pointwise membership of interior nodes of (0, 2a) x (0, 2b) in the closed ellipse."""
    hx = 2 * a / (n1 + 1)
    hy = 2 * b / (n2 + 1)
    out = np.zeros((n1, n2), dtype=bool)
    for i in range(1, n1 + 1):
        for j in range(1, n2 + 1):
            x, y = i * hx, j * hy
            out[i - 1, j - 1] = (x - a) ** 2 / a**2 + (y - b) ** 2 / b**2 <= 1.0
    return out
