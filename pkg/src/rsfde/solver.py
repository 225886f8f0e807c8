"""Implicit Euler time stepping of the penalized scheme, and the ellipse test case."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .discretization import (
    DomainMask,
    FractionalParams,
    GridSpec,
    PenalizedOperator,
    build_mask,
    unvec,
    vec,
)
from .errors import ParameterError, StepFailure
from .krylov import IterationReport, SolverConfig, gmres_solve
from .precond import TauPreconditioner


@dataclass(frozen=True)
class ProblemDef:
    """A fractional diffusion problem posed on a convex region.

    All callables act elementwise on ``(n1, n2)`` node arrays ``X, Y``:

    - ``region(X, Y) -> bool array``
    - ``u0(X, Y)``
    - ``source(u, X, Y, t, fp)`` where ``fp`` is the :class:`FractionalParams`
      of the run (the manufactured source depends on orders and diffusivities)
    - ``exact(X, Y, t)``, optional

    ``u0`` and ``source`` must already be zero outside ``region``.
    ``bounds = (a, b, c, d)`` is the enclosing rectangle.
    """

    region: Callable
    u0: Callable
    source: Callable
    bounds: tuple[float, float, float, float]
    exact: Optional[Callable] = None

    def grid(self, n1: int, n2: int, m: int, T: float) -> GridSpec:
        return GridSpec(*self.bounds, n1=n1, n2=n2, m=m, T=T)


def example1_h(alpha: float, s, d):
    """``24 s^(4-a)/G(5-a) - 24 d s^(3-a)/G(4-a) + 8 d^2 s^(2-a)/G(3-a)``.

    This is the one-sided Riemann-Liouville derivative of order ``alpha`` of
    ``s^2 (s - 2d)^2`` in the distance ``s`` from the chord endpoint.
    """
    s = np.maximum(np.asarray(s, dtype=np.float64), 0.0)
    d = np.asarray(d, dtype=np.float64)
    return (
        24.0 * s ** (4.0 - alpha) / math.gamma(5.0 - alpha)
        - 24.0 * d * s ** (3.0 - alpha) / math.gamma(4.0 - alpha)
        + 8.0 * d**2 * s ** (2.0 - alpha) / math.gamma(3.0 - alpha)
    )


def example1_problem(a: float = 2.0, b: float = 1.0) -> ProblemDef:
    """Ellipse ``(x-a)^2/a^2 + (y-b)^2/b^2 <= 1`` inside ``(0, 2a) x (0, 2b)``.

    Exact solution ``exp(-t) (r - 1)^2`` with ``r`` the ellipse quadratic form.
    """
    if not (a > 0 and b > 0):
        raise ParameterError(f"semi-axes must be positive, got a={a!r}, b={b!r}")
    a = float(a)
    b = float(b)

    def quad(X, Y):
        return (X - a) ** 2 / a**2 + (Y - b) ** 2 / b**2

    def region(X, Y):
        return quad(X, Y) <= 1.0

    def exact(X, Y, t):
        r = quad(X, Y)
        return np.where(r <= 1.0, math.exp(-t) * (r - 1.0) ** 2, 0.0)

    def u0(X, Y):
        return exact(X, Y, 0.0)

    def source(u, X, Y, t, fp: FractionalParams):
        inside = region(X, Y)
        # half chord lengths through (x, y) in the x and y directions
        half_x = a * np.sqrt(np.clip(1.0 - (Y - b) ** 2 / b**2, 0.0, None))
        half_y = b * np.sqrt(np.clip(1.0 - (X - a) ** 2 / a**2, 0.0, None))
        et = math.exp(-t)
        rx = fp.kx * fp.c_alpha1 * et / a**4 * (
            example1_h(fp.alpha1, X - a + half_x, half_x) + example1_h(fp.alpha1, a + half_x - X, half_x)
        )
        ry = fp.ky * fp.c_alpha2 * et / b**4 * (
            example1_h(fp.alpha2, Y - b + half_y, half_y) + example1_h(fp.alpha2, b + half_y - Y, half_y)
        )
        return np.where(inside, -rx - ry - u, 0.0)

    return ProblemDef(region=region, u0=u0, source=source, bounds=(0.0, 2 * a, 0.0, 2 * b), exact=exact)


@dataclass(frozen=True, eq=False)
class PenalizedSystem:
    """Everything about one (grid, orders, eta) configuration that is time invariant."""

    grid: GridSpec
    fp: FractionalParams
    op: PenalizedOperator
    precond: Optional[TauPreconditioner]
    X: np.ndarray = field(repr=False)
    Y: np.ndarray = field(repr=False)

    @classmethod
    def build(
        cls,
        prob: ProblemDef,
        grid: GridSpec,
        fp: FractionalParams,
        eta: float,
        with_precond: bool = True,
    ) -> "PenalizedSystem":
        fp = fp.for_grid(grid)
        mask = build_mask(grid, prob.region, eta)
        op = PenalizedOperator.build(grid, fp, mask)
        P = TauPreconditioner.from_operator(op) if with_precond else None
        X, Y = grid.mesh()
        return cls(grid, fp, op, P, X, Y)

    @property
    def mask(self) -> DomainMask:
        return self.op.mask

    def rhs(self, prob: ProblemDef, u_prev: np.ndarray, t_prev: float) -> np.ndarray:
        U = unvec(u_prev, self.grid.shape)
        F = prob.source(U, self.X, self.Y, t_prev, self.fp)
        return u_prev + self.grid.dt * vec(F)


@dataclass(frozen=True)
class TimeStepState:
    k: int
    u_prev: np.ndarray
    u_prevprev: Optional[np.ndarray]
    t: float


def initial_state(system: PenalizedSystem, prob: ProblemDef) -> TimeStepState:
    u0 = vec(prob.u0(system.X, system.Y)) * vec(system.mask.inside)
    return TimeStepState(k=0, u_prev=u0, u_prevprev=None, t=0.0)


def step(
    state: TimeStepState,
    system: PenalizedSystem,
    prob: ProblemDef,
    cfg: SolverConfig,
) -> tuple[TimeStepState, IterationReport]:
    """Advance one implicit Euler step with the source lagged to ``t_{k-1}``."""
    b = system.rhs(prob, state.u_prev, state.t)
    if state.u_prevprev is None:
        x0 = state.u_prev
    else:
        x0 = 2.0 * state.u_prev - state.u_prevprev
    Pinv = system.precond.apply if (cfg.precondition and system.precond is not None) else None
    u, rep = gmres_solve(system.op.apply, Pinv, b, x0, cfg)
    k = state.k + 1
    if not rep.converged:
        raise StepFailure(
            f"GMRES did not converge at step {k} (residual {rep.final_residual:.3e})",
            report=rep,
            step=k,
        )
    return TimeStepState(k=k, u_prev=u, u_prevprev=state.u_prev, t=k * system.grid.dt), rep


@dataclass
class SolveReport:
    reports: list = field(default_factory=list)
    error: float = float("nan")
    ext_max: float = float("nan")
    timings: dict = field(default_factory=dict)
    step_times: list = field(default_factory=list)
    u_final: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def total_iterations(self) -> int:
        return sum(r.iterations for r in self.reports)

    @property
    def avg_iterations(self) -> float:
        """Inner iterations per time step, all steps included."""
        return self.total_iterations / len(self.reports) if self.reports else float("nan")

    @property
    def avg_iterations_after_first(self) -> float:
        if len(self.reports) < 2:
            return float("nan")
        return sum(r.iterations for r in self.reports[1:]) / (len(self.reports) - 1)

    @property
    def time_per_step(self) -> float:
        return self.timings.get("solve", float("nan")) / max(len(self.reports), 1)

    @property
    def median_step_time(self) -> float:
        """Median wall time of one step; less sensitive to scheduler noise than the mean."""
        return float(np.median(self.step_times)) if self.step_times else float("nan")


def relative_error(u: np.ndarray, u_exact: np.ndarray, inside: np.ndarray) -> float:
    """``||u_e - u||_inf / ||u_e||_inf`` restricted to ``inside`` nodes."""
    sel = vec(inside)
    diff = np.max(np.abs(u_exact[sel] - u[sel]))
    return float(diff / np.max(np.abs(u_exact[sel])))


def extension_max(u: np.ndarray, inside: np.ndarray) -> float:
    sel = ~vec(inside)
    return float(np.max(np.abs(u[sel]))) if sel.any() else 0.0


def run(
    prob: ProblemDef,
    grid: GridSpec,
    fp: FractionalParams,
    eta: float,
    cfg: SolverConfig | None = None,
    system: PenalizedSystem | None = None,
) -> SolveReport:
    """Integrate to ``grid.T`` and report errors, penalty residue and iteration counts.

    Raises :class:`StepFailure` if an inner solve does not converge; the
    partial report is attached as ``exc.partial``.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    if system is None:
        system = PenalizedSystem.build(prob, grid, fp, eta, with_precond=cfg.precondition)
    t1 = time.perf_counter()

    report = SolveReport()
    state = initial_state(system, prob)
    try:
        for _ in range(grid.m):
            ts = time.perf_counter()
            state, rep = step(state, system, prob, cfg)
            report.step_times.append(time.perf_counter() - ts)
            report.reports.append(rep)
    except StepFailure as exc:
        report.reports.append(exc.report)
        report.timings = {"setup": t1 - t0, "solve": time.perf_counter() - t1}
        exc.partial = report
        raise
    t2 = time.perf_counter()

    report.u_final = state.u_prev
    inside = system.mask.inside
    if prob.exact is not None:
        u_e = vec(prob.exact(system.X, system.Y, state.t))
        report.error = relative_error(state.u_prev, u_e, inside)
    report.ext_max = extension_max(state.u_prev, inside)
    report.timings = {"setup": t1 - t0, "solve": t2 - t1}
    return report
