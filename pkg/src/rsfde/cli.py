"""Command-line experiment harness.

Examples
--------
Convergence table for unit diffusivities::

    rsfde --mode convergence-table --n 32 --n 64 --n 128 --kx 1 --ky 1 --out table.csv

Penalty scan from a config file, with a flag override::

    rsfde --config scan.ini --eta 1e-6

Config files are INI with a single ``[experiment]`` section whose keys mirror
the long flags (dashes or underscores); repeatable flags take comma-separated
lists, e.g. ``n = 32, 64``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from .discretization import DENSE_CAP, FractionalParams, dense_M
from .errors import ParameterError, SizeCapError, StepFailure
from .krylov import REFERENCES, SIDES, SolverConfig
from .precond import dense_P
from .solver import PenalizedSystem, example1_problem, run

log = logging.getLogger(__name__)

MODES = ("solve", "spectrum", "penalty-scan", "convergence-table")
EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_CAP = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    mode: str = "solve"
    alpha1: float = 1.4
    alpha2: float = 1.7
    kx: float = 1.0
    ky: float = 1.0
    a: float = 2.0
    b: float = 1.0
    n: list = field(default_factory=list)
    m_rule: str = "eq-n"
    T: float = 1.0
    eta: list = field(default_factory=lambda: [1e-5])
    restart: int = 20
    rtol: float = 1e-8
    maxiter: int = 2000
    side: str = "left"
    reference: str = "rhs"
    precondition: bool = True
    out: str | None = None
    format: str = "csv"
    dump_dense: str | None = None
    dense_cap: int = DENSE_CAP

    def validate(self) -> None:
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}; choose from {', '.join(MODES)}")
        if not self.n:
            raise UsageError("empty grid sweep: give at least one --n")
        if any(int(k) != k or k < 1 for k in self.n):
            raise UsageError(f"grid sizes must be positive integers, got {self.n}")
        if not self.eta:
            raise UsageError("empty eta list")
        if any(not e > 0 for e in self.eta):
            raise UsageError("eta values must be positive")
        if self.format not in ("csv", "json"):
            raise UsageError(f"unknown format {self.format!r}")
        self.steps(self.n[0])
        try:
            self.solver_config()
            self.fractional_params()
        except ParameterError as exc:
            raise UsageError(str(exc)) from exc

    def steps(self, n: int) -> int:
        rule = self.m_rule
        if rule == "eq-n":
            return n
        if rule == "10n":
            return 10 * n
        if rule.startswith("explicit:"):
            try:
                m = int(rule.split(":", 1)[1])
            except ValueError:
                m = 0
            if m >= 1:
                return m
        raise UsageError(f"bad --m-rule {rule!r}; use eq-n, 10n or explicit:<int>")

    def solver_config(self, precondition: bool | None = None) -> SolverConfig:
        return SolverConfig(
            restart=self.restart,
            rtol=self.rtol,
            maxiter=max(self.maxiter, self.restart),
            precondition=self.precondition if precondition is None else precondition,
            side=self.side,
            reference=self.reference,
        )

    def fractional_params(self) -> FractionalParams:
        return FractionalParams(self.alpha1, self.alpha2, self.kx, self.ky)

    def param_columns(self) -> dict:
        return {
            "mode": self.mode,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "kx": self.kx,
            "ky": self.ky,
            "a": self.a,
            "b": self.b,
            "T": self.T,
            "restart": self.restart,
            "rtol": self.rtol,
            "side": self.side,
            "reference": self.reference,
        }


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rsfde", description="Penalized Riesz fractional diffusion experiments.")
    p.add_argument("--config", help="INI file with an [experiment] section")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--alpha1", type=float)
    p.add_argument("--alpha2", type=float)
    p.add_argument("--kx", type=float)
    p.add_argument("--ky", type=float)
    p.add_argument("--a", type=float, help="ellipse semi-axis along x")
    p.add_argument("--b", type=float, help="ellipse semi-axis along y")
    p.add_argument("--n", type=int, action="append", help="interior points per axis (repeatable)")
    p.add_argument("--m-rule", dest="m_rule", help="eq-n, 10n or explicit:<int>")
    p.add_argument("--T", type=float)
    p.add_argument("--eta", type=float, action="append", help="penalization parameter (repeatable)")
    p.add_argument("--restart", type=int)
    p.add_argument("--rtol", type=float)
    p.add_argument("--maxiter", type=int)
    p.add_argument("--side", choices=SIDES)
    p.add_argument("--reference", choices=REFERENCES)
    p.add_argument("--no-precond", dest="precondition", action="store_false", default=None)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--dump-dense", dest="dump_dense", help="write dense M, P, Phat^-1 and mask (.npz)")
    p.add_argument("--dense-cap", dest="dense_cap", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


_LIST_KEYS = {"n": int, "eta": float}
_BOOL_KEYS = {"precondition", "no_precond"}


def _parse_bool(raw: str) -> bool:
    states = configparser.ConfigParser.BOOLEAN_STATES
    if raw.strip().lower() not in states:
        raise ValueError(raw)
    return states[raw.strip().lower()]


def read_config_file(path: str) -> dict:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise UsageError(f"cannot read config file {path!r}")
    if not cp.has_section("experiment"):
        raise UsageError(f"config file {path!r} lacks an [experiment] section")
    fields = ExperimentConfig.__dataclass_fields__
    out = {}
    for key, raw in cp.items("experiment"):
        key = key.replace("-", "_")
        if key == "t":
            key = "T"
        try:
            if key in _LIST_KEYS:
                items = [s for s in raw.replace(",", " ").split() if s]
                out[key] = [_LIST_KEYS[key](s) for s in items]
            elif key in _BOOL_KEYS:
                flag = _parse_bool(raw)
                out["precondition"] = flag if key == "precondition" else not flag
            elif key in fields:
                default = fields[key].default
                if isinstance(default, bool):
                    out[key] = _parse_bool(raw)
                elif isinstance(default, int):
                    out[key] = int(raw)
                elif isinstance(default, float):
                    out[key] = float(raw)
                else:
                    out[key] = raw.strip()
            else:
                raise UsageError(f"unknown config key {key!r}")
        except ValueError as exc:
            raise UsageError(f"bad value for {key!r}: {raw!r}") from exc
    return out


def config_from_args(argv) -> tuple[ExperimentConfig, bool]:
    args = build_parser().parse_args(argv)
    values = read_config_file(args.config) if args.config else {}
    for key in ExperimentConfig.__dataclass_fields__:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg, args.verbose


def _run_point(cfg: ExperimentConfig, n: int, eta: float, precondition: bool):
    prob = example1_problem(cfg.a, cfg.b)
    grid = prob.grid(n, n, cfg.steps(n), cfg.T)
    return run(prob, grid, cfg.fractional_params(), eta, cfg.solver_config(precondition))


def _solve_rows(cfg: ExperimentConfig):
    for n in cfg.n:
        for eta in cfg.eta:
            rep = _run_point(cfg, n, eta, cfg.precondition)
            yield {
                "n": n,
                "m": cfg.steps(n),
                "eta": eta,
                "precondition": cfg.precondition,
                "error": rep.error,
                "avg_iter": rep.avg_iterations,
                "avg_iter_after_first": rep.avg_iterations_after_first,
                "ext_max": rep.ext_max,
                "time_setup": rep.timings["setup"],
                "time_solve": rep.timings["solve"],
            }


def _convergence_rows(cfg: ExperimentConfig):
    eta = cfg.eta[0]
    prev = None
    for n in cfg.n:
        pre = _run_point(cfg, n, eta, True)
        plain = _run_point(cfg, n, eta, False)
        order = math.log2(prev / pre.error) if prev else float("nan")
        prev = pre.error
        yield {
            "n": n,
            "m": cfg.steps(n),
            "eta": eta,
            "error": pre.error,
            "order": order,
            "iter_precond": pre.avg_iterations,
            "iter_plain": plain.avg_iterations,
            "iter_precond_after_first": pre.avg_iterations_after_first,
            "iter_plain_after_first": plain.avg_iterations_after_first,
            "time_precond": pre.timings["solve"],
            "time_plain": plain.timings["solve"],
        }


def _penalty_rows(cfg: ExperimentConfig):
    for n in cfg.n:
        for eta in cfg.eta:
            rep = _run_point(cfg, n, eta, cfg.precondition)
            yield {"n": n, "m": cfg.steps(n), "eta": eta, "ext_max": rep.ext_max, "error": rep.error}


def spectrum_summary(system: PenalizedSystem, cap: int = DENSE_CAP) -> dict:
    """Extreme eigenvalues of ``P^{-1} M``, ``tau1(A)^{-1} A`` and ``Phat^{-1} M``."""
    M = dense_M(system.op, cap)
    P = dense_P(system.precond, cap)
    A = system.op.dense_A(cap)
    tau1 = system.precond.dense_tau1(cap)
    ev_pm = sla.eigh(M, P, eigvals_only=True)
    # both negative definite: flip signs for the SPD generalized solver
    ev_ta = sla.eigh(-A, -tau1, eigvals_only=True)
    ev_hat = np.linalg.eigvals(system.precond.dense_Phat_inv(cap) @ M)
    return {
        "pm_min": float(ev_pm.min()),
        "pm_max": float(ev_pm.max()),
        "ta_min": float(ev_ta.min()),
        "ta_max": float(ev_ta.max()),
        "phat_re_min": float(ev_hat.real.min()),
        "phat_re_max": float(ev_hat.real.max()),
        "phat_im_absmax": float(np.abs(ev_hat.imag).max()),
    }


def _build_system(cfg: ExperimentConfig, n: int, eta: float) -> PenalizedSystem:
    prob = example1_problem(cfg.a, cfg.b)
    grid = prob.grid(n, n, cfg.steps(n), cfg.T)
    return PenalizedSystem.build(prob, grid, cfg.fractional_params(), eta)


def _spectrum_rows(cfg: ExperimentConfig):
    for n in cfg.n:
        for eta in cfg.eta:
            row = {"n": n, "m": cfg.steps(n), "eta": eta}
            row.update(spectrum_summary(_build_system(cfg, n, eta), cfg.dense_cap))
            yield row


_ROW_BUILDERS = {
    "solve": _solve_rows,
    "convergence-table": _convergence_rows,
    "penalty-scan": _penalty_rows,
    "spectrum": _spectrum_rows,
}


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render(rows: list, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"rows": rows}, indent=2, allow_nan=True) + "\n"
    buf = io.StringIO()
    if rows:
        writer = csv.writer(buf, lineterminator="\n")
        cols = list(dict.fromkeys(c for row in rows for c in row))
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in cols])
    return buf.getvalue()


def dump_dense(cfg: ExperimentConfig, path: str) -> None:
    n = cfg.n[0]
    if n * n > cfg.dense_cap:
        raise SizeCapError(f"--dump-dense needs n^2 <= {cfg.dense_cap}, got n={n}")
    system = _build_system(cfg, n, cfg.eta[0])
    np.savez(
        path,
        M=dense_M(system.op, cfg.dense_cap),
        P=dense_P(system.precond, cfg.dense_cap),
        Phat_inv=system.precond.dense_Phat_inv(cfg.dense_cap),
        inside=system.mask.inside,
    )


def run_experiment(cfg: ExperimentConfig) -> int:
    """Run the sweep in ``cfg`` and write its table; returns the exit status."""
    if cfg.mode == "spectrum":
        too_big = [n for n in cfg.n if n * n > cfg.dense_cap]
        if too_big:
            log.error("spectrum mode needs n^2 <= %d; refusing n=%s", cfg.dense_cap, too_big)
            return EXIT_CAP
    if cfg.dump_dense:
        try:
            dump_dense(cfg, cfg.dump_dense)
        except SizeCapError as exc:
            log.error("%s", exc)
            return EXIT_CAP

    base = cfg.param_columns()
    rows = []
    status = EXIT_OK
    try:
        for row in _ROW_BUILDERS[cfg.mode](cfg):
            rows.append({**base, **row, "status": "ok"})
            log.info("finished %s", {k: row[k] for k in ("n", "eta") if k in row})
    except StepFailure as exc:
        log.error("solver failure: %s", exc)
        rows.append({**base, "status": "failed", "detail": str(exc)})
        status = EXIT_SOLVER
    except SizeCapError as exc:
        log.error("%s", exc)
        return EXIT_CAP

    text = render(rows, cfg.format)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


def main(argv=None) -> int:
    try:
        cfg, verbose = config_from_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"rsfde: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())
