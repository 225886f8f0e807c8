"""Restarted GMRES with optional left or right preconditioning."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NumericBreakdownError, ParameterError

LinearOp = Callable[[np.ndarray], np.ndarray]

# Reorthogonalize when a Gram-Schmidt sweep removes more than this share of the norm.
_REORTH_RATIO = 0.7

SIDES = ("left", "right")
REFERENCES = ("rhs", "initial")


@dataclass(frozen=True)
class SolverConfig:
    """GMRES settings.

    ``side`` selects where the preconditioner is applied. ``reference``
    selects the denominator of the stopping test: ``"rhs"`` stops when
    ``||r_k|| < rtol ||b||``, ``"initial"`` when ``||r_k|| < rtol ||r_0||``.
    Under left preconditioning both ``r_k`` and ``b`` are the preconditioned
    vectors. The defaults (left, rhs) follow MATLAB's ``gmres`` and reproduce
    the published iteration counts; ``side="right", reference="initial"``
    monitors the true residual against the initial one.
    """

    restart: int = 20
    rtol: float = 1e-8
    maxiter: int = 2000
    precondition: bool = True
    side: str = "left"
    reference: str = "rhs"

    def __post_init__(self):
        if self.restart < 1:
            raise ParameterError("restart must be >= 1")
        if not 0.0 < self.rtol < 1.0:
            raise ParameterError("rtol must lie in (0, 1)")
        if self.maxiter < self.restart:
            raise ParameterError("maxiter must be >= restart")
        if self.side not in SIDES:
            raise ParameterError(f"side must be one of {SIDES}, got {self.side!r}")
        if self.reference not in REFERENCES:
            raise ParameterError(f"reference must be one of {REFERENCES}, got {self.reference!r}")


@dataclass
class IterationReport:
    """Outcome of one linear solve.

    ``residual_history[k]`` is the monitored residual norm after ``k`` inner
    iterations divided by the reference norm of the stopping test. Inside a
    cycle it is the Arnoldi least-squares value; the last entry of each
    cycle is recomputed from the explicit residual. ``true_residual`` is the
    unpreconditioned ``||b - A x|| / ||b - A x_0||`` of the returned iterate.
    """

    iterations: int = 0
    residual_history: list = field(default_factory=list)
    converged: bool = False
    restarts: int = 0
    true_residual: float = float("nan")

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else float("nan")


def _check_finite(w: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(w)):
        raise NumericBreakdownError(f"non-finite values in {what} output")


def _identity(v):
    return v


def gmres_solve(
    applyA: LinearOp,
    applyPinv: Optional[LinearOp],
    b,
    x0=None,
    cfg: SolverConfig | None = None,
    exact_history: bool = False,
) -> tuple[np.ndarray, IterationReport]:
    """Solve ``A x = b`` by restarted GMRES(m).

    With right preconditioning the Arnoldi process runs on ``A Pinv`` and
    each correction is mapped back through ``Pinv``, so the monitored
    residual is the true one. With left preconditioning it runs on
    ``Pinv A`` and monitors ``Pinv (b - A x)``.

    Orthogonalization is modified Gram-Schmidt with one extra pass when
    cancellation is detected. Hitting ``cfg.maxiter`` returns
    ``converged=False`` rather than raising.

    Parameters
    ----------
    applyA, applyPinv : callable
        Linear actions on 1-D arrays of ``len(b)``. ``applyPinv=None``
        disables preconditioning regardless of ``cfg``.
    b, x0 : array_like
        Right-hand side and initial guess (zeros if omitted).
    cfg : SolverConfig
        Restart length, tolerance, iteration cap, side and reference.
        ``cfg.precondition`` is not consulted here.
    exact_history : bool
        Record the explicit monitored residual of every inner iterate
        instead of the Arnoldi estimate. Costs one small triangular solve and
        one extra application of each operator per iteration.
    """
    cfg = cfg or SolverConfig()
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    m = cfg.restart

    if applyPinv is None:
        left = right = _identity
    elif cfg.side == "right":
        left, right = _identity, applyPinv
    else:
        left, right = applyPinv, _identity

    def monitored_residual(xk):
        r = b - applyA(xk)
        _check_finite(r, "operator")
        return r, left(r)

    r_true, r = monitored_residual(x)
    true0 = np.linalg.norm(r_true)
    beta = np.linalg.norm(r)
    report = IterationReport()
    ref = np.linalg.norm(left(b)) if cfg.reference == "rhs" else beta
    if ref == 0.0:
        # b = 0 under the rhs reference, or x0 already exact
        ref = 1.0
    report.residual_history.append(beta / ref)
    if beta == 0.0 or beta / ref < cfg.rtol:
        report.converged = True
        report.true_residual = 0.0 if true0 == 0.0 else 1.0
        return x, report

    V = np.empty((m + 1, n))
    H = np.zeros((m + 1, m))
    cs = np.zeros(m)
    sn = np.zeros(m)
    g = np.zeros(m + 1)

    while report.iterations < cfg.maxiter:
        V[0] = r / beta
        g[:] = 0.0
        g[0] = beta
        H[:] = 0.0
        k = 0
        for j in range(m):
            w = left(applyA(right(V[j])))
            _check_finite(w, "operator")
            w = np.array(w, dtype=np.float64)
            norm_in = np.linalg.norm(w)
            for i in range(j + 1):
                H[i, j] = V[i] @ w
                w -= H[i, j] * V[i]
            h_next = np.linalg.norm(w)
            if h_next < _REORTH_RATIO * norm_in:
                for i in range(j + 1):
                    c = V[i] @ w
                    H[i, j] += c
                    w -= c * V[i]
                h_next = np.linalg.norm(w)
            H[j + 1, j] = h_next

            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = np.hypot(H[j, j], H[j + 1, j])
            if denom == 0.0:
                raise NumericBreakdownError("Krylov direction mapped to zero; operator is singular")
            cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]

            k = j + 1
            report.iterations += 1
            if exact_history:
                y = solve_triangular(H[:k, :k], g[:k])
                _, rk = monitored_residual(x + right(V[:k].T @ y))
                report.residual_history.append(np.linalg.norm(rk) / ref)
            else:
                report.residual_history.append(abs(g[k]) / ref)

            happy = h_next <= np.finfo(float).eps * norm_in
            if happy or report.residual_history[-1] < cfg.rtol or report.iterations >= cfg.maxiter:
                break
            V[j + 1] = w / h_next

        y = solve_triangular(H[:k, :k], g[:k])
        x = x + right(V[:k].T @ y)
        r_true, r = monitored_residual(x)
        beta = np.linalg.norm(r)
        report.residual_history[-1] = beta / ref
        report.true_residual = np.linalg.norm(r_true) / true0 if true0 > 0 else 0.0
        if beta / ref < cfg.rtol:
            report.converged = True
            return x, report
        report.restarts += 1

    return x, report
