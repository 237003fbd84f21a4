"""Damped Newton solver for the regularized split energy, with warm-started
continuation along a decreasing regularization schedule and a seeded
multi-start uniqueness probe.

Unknowns are the interior nodal values; the boundary ring carries the
Dirichlet data.  Newton directions come from a Jacobi-preconditioned
conjugate-gradient solve on the (matrix-free) discrete Hessian, with
steepest descent as fallback and Armijo backtracking for global descent.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .densities import DensityPair
from .energy import EnergyOverflowError
from .grid import CellField2, Grid, GridFunction, gradient

__all__ = [
    "NonConvexDetected",
    "ContinuationContractError",
    "SolveConfig",
    "DeltaRecord",
    "SolveReport",
    "minimize_J_delta",
    "continuation",
    "multi_start",
]

ARMIJO_FACTOR = 0.5
ARMIJO_SLOPE = 1e-4
MAX_BACKTRACKS = 60
CURVATURE_FLOOR = -1e-10


class NonConvexDetected(ArithmeticError):
    """A Hessian-vector product showed negative curvature beyond the floor."""


class ContinuationContractError(RuntimeError):
    """A monotonicity contract of the continuation run was violated."""


@dataclass
class SolveConfig:
    """Problem and solver parameters.

    ``u0`` is a full nodal field: its boundary ring is the Dirichlet data,
    its interior the initial guess.  ``delta_schedule`` must be strictly
    decreasing within (0, 1).  ``p_reg`` defaults to the power-growth
    exponent of f2 when that is at least 2, else to 2.
    """

    grid: Grid
    densities: DensityPair
    u0: GridFunction
    delta_schedule: Sequence[float]
    p_reg: Optional[float] = None
    tol_grad: float = 1e-10
    max_iter: int = 200
    seed: int = 0
    cg_tol: float = 1e-8
    cg_maxiter: Optional[int] = None
    store_fields: bool = False

    def __post_init__(self):
        sched = tuple(float(x) for x in self.delta_schedule)
        if len(sched) == 0:
            raise ValueError("delta schedule must be nonempty")
        if any(not (0.0 < x < 1.0) for x in sched):
            raise ValueError(f"schedule values must lie in (0, 1): {sched}")
        if any(b >= a for a, b in zip(sched, sched[1:])):
            raise ValueError(f"schedule must be strictly decreasing: {sched}")
        self.delta_schedule = sched
        if self.p_reg is None:
            p = getattr(self.densities.f2, "p", 2.0)
            self.p_reg = float(p) if p >= 2.0 else 2.0
        if self.p_reg < 2.0:
            raise ValueError(f"p_reg must be >= 2, got {self.p_reg}")
        if self.tol_grad <= 0.0:
            raise ValueError("tol_grad must be positive")
        if self.u0.grid != self.grid:
            raise ValueError("u0 grid does not match the config grid")
        # spot-check convexity of both densities
        probe = np.linspace(-100.0, 100.0, 41)
        if np.any(np.asarray(self.densities.f1.second_deriv(probe)) < -1e-12) or np.any(
            np.asarray(self.densities.f2.second_deriv(probe[probe != 0.0])) < -1e-12
        ):
            raise ValueError("densities must be convex")


@dataclass
class DeltaRecord:
    """Per-level continuation record."""

    delta: float
    j_value: float
    j_delta_value: float
    delta_term: float
    euler_residual_max: float
    iterations: int
    converged: bool
    flags: tuple = ()
    u: Optional[np.ndarray] = None


@dataclass
class SolveReport:
    records: list
    u_final: GridFunction
    stress_final: CellField2

    def to_dict(self) -> dict:
        return {
            "records": [
                {
                    "delta": r.delta,
                    "j_value": r.j_value,
                    "j_delta_value": r.j_delta_value,
                    "delta_term": r.delta_term,
                    "euler_residual_max": r.euler_residual_max,
                    "iterations": r.iterations,
                    "converged": r.converged,
                    "flags": list(r.flags),
                }
                for r in self.records
            ]
        }

    def write_records_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["delta", "j", "j_delta", "delta_term", "euler_residual", "iterations"]
            )
            for r in self.records:
                writer.writerow(
                    [
                        repr(r.delta),
                        repr(r.j_value),
                        repr(r.j_delta_value),
                        repr(r.delta_term),
                        repr(r.euler_residual_max),
                        r.iterations,
                    ]
                )


# ---------------------------------------------------------------------------
# inner Newton solver
# ---------------------------------------------------------------------------


class _DeltaProblem:
    """Energy, gradient, and Hessian products for one regularization level."""

    def __init__(self, grid: Grid, d: DensityPair, delta: float, p_reg: float):
        self.grid = grid
        self.d = d
        self.delta = delta
        self.p = p_reg
        self.area = grid.cell_area

    def split_energy(self, values: np.ndarray):
        c1, c2 = _kernels.cell_gradient(values, self.grid.h1, self.grid.h2)
        # overflow surfaces through the finiteness check in energy()
        with np.errstate(over="ignore", invalid="ignore"):
            f1v = np.asarray(self.d.f1.eval(c1))
            f2v = np.asarray(self.d.f2.eval(c2))
            reg = (1.0 + c1 * c1) ** (0.5 * self.p)
        j = self.area * (float(np.sum(f1v)) + float(np.sum(f2v)))
        delta_term = self.delta * self.area * float(np.sum(reg))
        return j, delta_term, c1, c2

    def energy(self, values: np.ndarray) -> float:
        j, dt, _, _ = self.split_energy(values)
        if not math.isfinite(j + dt):
            raise EnergyOverflowError("non-finite energy during line search")
        return j + dt

    def stress_components(self, c1, c2):
        """(t1, t2): the regularized stress evaluated on cell gradients."""
        p = self.p
        x_delta = p * (1.0 + c1 * c1) ** (0.5 * (p - 2.0)) * c1
        t1 = np.asarray(self.d.f1.deriv(c1)) + self.delta * x_delta
        t2 = np.asarray(self.d.f2.deriv(c2))
        return t1, t2

    def residual(self, c1, c2) -> np.ndarray:
        t1, t2 = self.stress_components(c1, c2)
        out = _kernels.scatter_adjoint(t1, t2, self.grid.h1, self.grid.h2)
        out[0, :] = 0.0
        out[-1, :] = 0.0
        out[:, 0] = 0.0
        out[:, -1] = 0.0
        return out

    def curvatures(self, c1, c2):
        p = self.p
        w = 1.0 + c1 * c1
        reg2 = p * w ** (0.5 * (p - 2.0)) + p * (p - 2.0) * c1 * c1 * w ** (
            0.5 * (p - 4.0)
        )
        w1 = np.asarray(self.d.f1.second_deriv(c1)) + self.delta * reg2
        w2 = np.asarray(self.d.f2.second_deriv(c2))
        # superlinear curvature may vanish at isolated zeros (pure powers > 2)
        w2 = np.where(np.isfinite(w2), w2, 0.0)
        return w1, w2


def _zero_ring(arr: np.ndarray) -> np.ndarray:
    arr[0, :] = 0.0
    arr[-1, :] = 0.0
    arr[:, 0] = 0.0
    arr[:, -1] = 0.0
    return arr


def _pcg(apply_h, b, diag, tol_rel, maxiter):
    """Jacobi-preconditioned CG on interior-supported nodal arrays.

    Returns (x, converged); raises NonConvexDetected on negative curvature.
    """
    x = np.zeros_like(b)
    r = b.copy()
    b_norm = math.sqrt(float(np.sum(b * b)))
    if b_norm == 0.0:
        return x, True
    z = r / diag
    p = z.copy()
    rz = float(np.sum(r * z))
    for _ in range(maxiter):
        hp = apply_h(p)
        php = float(np.sum(p * hp))
        pp = float(np.sum(p * p))
        if php < CURVATURE_FLOOR * pp:
            raise NonConvexDetected(
                f"negative curvature {php / max(pp, 1e-300):.3e} in CG"
            )
        if php <= 0.0:
            # flat direction: return current iterate, let the line search act
            return x, False
        alpha = rz / php
        x += alpha * p
        r -= alpha * hp
        if math.sqrt(float(np.sum(r * r))) <= tol_rel * b_norm:
            return x, True
        z = r / diag
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, False


def minimize_J_delta(
    cfg: SolveConfig, delta: float, warm_start: Optional[GridFunction] = None
):
    """Minimize the regularized energy at one level; returns (u, DeltaRecord).

    The Euler residual is the discrete weak divergence of the regularized
    stress, which coincides with the energy gradient by construction.
    Hitting the iteration cap or a stalled line search is reported through
    record flags (the best iterate is still returned); negative curvature
    raises NonConvexDetected.
    """
    grid = cfg.grid
    prob = _DeltaProblem(grid, cfg.densities, delta, cfg.p_reg)
    start = warm_start if warm_start is not None else cfg.u0
    values = start.values.copy()
    # re-impose the boundary data of the config
    ring = ~grid.interior_mask()
    values[ring] = cfg.u0.values[ring]

    n_dof = (grid.n1 - 1) * (grid.n2 - 1)
    cg_maxiter = cfg.cg_maxiter if cfg.cg_maxiter is not None else max(200, n_dof)

    flags = []
    steps = 0
    energy = prob.energy(values)
    res_max = math.inf
    while steps < cfg.max_iter:
        _, _, c1, c2 = prob.split_energy(values)
        g = prob.residual(c1, c2)
        res_max = float(np.max(np.abs(g)))
        if res_max <= cfg.tol_grad:
            break

        w1, w2 = prob.curvatures(c1, c2)
        diag = _kernels.scatter_diag(w1, w2, grid.h1, grid.h2)
        diag = _zero_ring(diag)
        diag = np.where(diag > 0.0, diag, 1.0)

        def apply_h(v):
            hv = _kernels.hessvec(v, w1, w2, grid.h1, grid.h2)
            return _zero_ring(hv)

        d_dir, cg_ok = _pcg(apply_h, -g, diag, cfg.cg_tol, cg_maxiter)
        slope = float(np.sum(g * d_dir))
        if not cg_ok or slope >= 0.0:
            if "cg_fallback" not in flags:
                flags.append("cg_fallback")
            d_dir = -g
            slope = -float(np.sum(g * g))

        alpha = 1.0
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            trial = values + alpha * d_dir
            try:
                e_trial = prob.energy(trial)
            except ArithmeticError:
                alpha *= ARMIJO_FACTOR
                continue
            if e_trial <= energy + ARMIJO_SLOPE * alpha * slope:
                values = trial
                energy = e_trial
                accepted = True
                break
            alpha *= ARMIJO_FACTOR
        if not accepted:
            flags.append("stalled")
            break
        steps += 1

    if res_max > cfg.tol_grad and "stalled" not in flags:
        # the cap may have been hit right after an accepted step
        _, _, c1, c2 = prob.split_energy(values)
        res_max = float(np.max(np.abs(prob.residual(c1, c2))))
        if res_max > cfg.tol_grad:
            flags.append("iteration_cap_exceeded")

    j, delta_term, c1, c2 = prob.split_energy(values)
    record = DeltaRecord(
        delta=delta,
        j_value=j,
        j_delta_value=j + delta_term,
        delta_term=delta_term,
        euler_residual_max=res_max,
        iterations=steps,
        converged=res_max <= cfg.tol_grad,
        flags=tuple(flags),
        u=values.copy() if cfg.store_fields else None,
    )
    u_out = GridFunction(grid, values, boundary_mask=ring)
    return u_out, record


def continuation(cfg: SolveConfig, enforce_contracts: bool = True) -> SolveReport:
    """Warm-started sweep along the regularization schedule.

    Checks that the plain energy is nonincreasing along the schedule (slack
    1e-10 relative) and that the regularization term contracts at least by
    the schedule ratio times 1.1 between consecutive levels; violations
    raise ContinuationContractError unless ``enforce_contracts`` is False.
    """
    records = []
    u = None
    for delta in cfg.delta_schedule:
        u, rec = minimize_J_delta(cfg, delta, warm_start=u)
        if rec.delta_term < delta * 4.0 * (1.0 - 1e-12):
            raise ContinuationContractError(
                "regularization term fell below its area lower bound"
            )
        if records:
            prev = records[-1]
            slack = 1e-10 * (1.0 + abs(prev.j_value))
            if rec.j_value > prev.j_value + slack and enforce_contracts:
                raise ContinuationContractError(
                    f"energy increased along the schedule at delta={delta:g}: "
                    f"{prev.j_value!r} -> {rec.j_value!r}"
                )
            ratio_cap = (rec.delta / prev.delta) * 1.1
            if rec.delta_term > prev.delta_term * ratio_cap and enforce_contracts:
                raise ContinuationContractError(
                    f"regularization term contracted too slowly at delta={delta:g}"
                )
        records.append(rec)

    prob = _DeltaProblem(cfg.grid, cfg.densities, cfg.delta_schedule[-1], cfg.p_reg)
    _, _, c1, c2 = prob.split_energy(u.values)
    t1, t2 = prob.stress_components(c1, c2)
    stress_final = CellField2(cfg.grid, t1, t2)
    return SolveReport(records=records, u_final=u, stress_final=stress_final)


def multi_start(
    cfg: SolveConfig, n_starts: int, seeds: Optional[Sequence[int]] = None
) -> dict:
    """Uniqueness probe: rerun the continuation from seeded random interiors.

    Initial interiors are uniform on (-1, 1).  Returns the runs plus the
    maximum over interior cells (inset by 10% of each side) and start pairs
    of the 2-norm difference of the final discrete gradients.
    """
    if n_starts < 2:
        raise ValueError(f"need at least 2 starts, got {n_starts}")
    if seeds is None:
        seeds = [cfg.seed + k for k in range(n_starts)]
    if len(seeds) != n_starts:
        raise ValueError("seeds list length must equal n_starts")

    grid = cfg.grid
    reports = []
    grads = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        u_init = cfg.u0.copy()
        u_init.values[1:-1, 1:-1] = rng.uniform(
            -1.0, 1.0, size=(grid.n1 - 1, grid.n2 - 1)
        )
        run_cfg = replace(cfg, u0=u_init)
        report = continuation(run_cfg)
        reports.append(report)
        grads.append(gradient(report.u_final))

    xc, yc = grid.cell_centers()
    inset = 1.0 - 0.1 * 2.0
    mask = (np.abs(xc)[:, None] <= inset) & (np.abs(yc)[None, :] <= inset)
    worst = 0.0
    for a in range(n_starts):
        for b in range(a + 1, n_starts):
            d1 = grads[a].comp1 - grads[b].comp1
            d2 = grads[a].comp2 - grads[b].comp2
            norm = np.sqrt(d1 * d1 + d2 * d2)
            worst = max(worst, float(np.max(norm[mask])))
    return {"max_gradient_discrepancy": worst, "reports": reports, "seeds": list(seeds)}
