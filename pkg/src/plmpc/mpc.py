"""Receding-horizon control by iterated relinearization of the identified model.

Each control step anchors a prediction grid one step ahead of the data,
rolls the identified recursion out over the horizon, freezes its
output-dependent coefficients along that trajectory, and solves the
resulting equality-constrained QP. The QP's control block feeds the next
relinearization; a quasi-Newton update on the fixed-point residual
accelerates the loop, guarded so an accepted iterate never has a larger
residual than its predecessor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import qp
from .model import History, ModelStructure, regressor
from .qp import QpProblem

__all__ = [
    "HorizonConfig",
    "HorizonState",
    "SdcTable",
    "StepDiagnostics",
    "RolloutDivergedError",
    "anchor_prediction",
    "rollout",
    "rollout_frozen",
    "build_sdc",
    "assemble",
    "subiterate",
    "RecedingHorizonController",
]


class RolloutDivergedError(RuntimeError):
    """Predicted trajectory left the representable range."""


@dataclass(frozen=True)
class HorizonConfig:
    horizon: int                      # planned steps past the anchor
    subiterations: int                # QP-solve budget per control step
    q_weight: float                   # tracking weight on each predicted output
    r_weight: float                   # effort weight on each planned control
    u_min: float | None = None
    u_max: float | None = None
    fixed_point_tol: float = 1e-9

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.subiterations < 1:
            raise ValueError(f"subiterations must be >= 1, got {self.subiterations}")
        if self.q_weight < 0.0 or self.r_weight < 0.0:
            raise ValueError("cost weights must be nonnegative")
        if (self.u_min is None) != (self.u_max is None):
            raise ValueError("bounds must be given as a pair or not at all")
        if self.u_min is not None and self.u_min > self.u_max:
            raise ValueError(f"u_min={self.u_min} exceeds u_max={self.u_max}")
        if self.fixed_point_tol <= 0.0:
            raise ValueError("fixed_point_tol must be positive")


@dataclass(frozen=True)
class HorizonState:
    """Everything the planner knows at one control step.

    Grid convention: index 1 is the anchored one-step prediction, indices
    2..horizon+1 are planned outputs, indices <= 0 are measured data. past_y
    and past_u hold the order-1 most recent measured values, oldest first,
    so past[j] is the grid value at index j - (order - 2) ... 0.
    """

    anchor: float
    past_y: np.ndarray
    past_u: np.ndarray
    commands: np.ndarray

    def y_known(self, i: int) -> float:
        # grid output at index i <= 1 (anchor or measured)
        if i == 1:
            return self.anchor
        return float(self.past_y[i + len(self.past_y) - 1])

    def u_known(self, i: int) -> float:
        # grid control at index i <= 0 (already applied)
        return float(self.past_u[i + len(self.past_u) - 1])


@dataclass(frozen=True)
class SdcTable:
    """Coefficients of the frozen linear recursion along one trajectory.

    Row r describes grid index i = r + 2:
    y_i = sum_lag f_coef[r, lag-1] * y_{i-lag} + g_coef[r, lag-1] * u_{i-lag} + offset[r].
    """

    f_coef: np.ndarray
    g_coef: np.ndarray
    offset: np.ndarray

    @property
    def horizon(self) -> int:
        return self.offset.size

    @property
    def order(self) -> int:
        return self.f_coef.shape[1]


@dataclass
class StepDiagnostics:
    qp_solves: int = 0
    qp_iterations: int = 0
    residual: float = math.inf
    ridge_applied: bool = False
    diverged: bool = False
    stagnated: bool = False
    accepted_residuals: list = field(default_factory=list)


def anchor_prediction(structure: ModelStructure, theta, y_hist: History,
                      u_hist: History, k: int) -> float:
    """One-step prediction of y_{k+1} from data through step k."""
    phi = regressor(structure, y_hist, u_hist, k + 1)
    return float(np.asarray(theta, dtype=float) @ phi)


def _grid_outputs(state: HorizonState, planned: np.ndarray) -> np.ndarray:
    # full output grid over indices 2-order .. horizon+1
    return np.concatenate([state.past_y, [state.anchor], planned])


def rollout(structure: ModelStructure, theta, state: HorizonState,
            controls: np.ndarray) -> np.ndarray:
    """Propagate the identified recursion over the horizon under `controls`.

    Returns planned outputs for grid indices 2..horizon+1. Raises
    RolloutDivergedError as soon as a value stops being finite.
    """
    n = structure.order
    horizon = controls.size
    fs, gs, h_row = structure.split(theta)
    h_spec = structure.h_spec

    ys = np.empty(horizon + n)          # grid indices 2-n .. horizon+1
    ys[:n - 1] = state.past_y
    ys[n - 1] = state.anchor
    us = np.empty(horizon + n - 1)      # grid indices 2-n .. horizon
    us[:n - 1] = state.past_u
    us[n - 1:] = controls

    # overflow is the expected divergence signal here, not an anomaly: any
    # non-finite product lands in acc and trips the check before it is stored
    with np.errstate(over="ignore", invalid="ignore"):
        for r in range(horizon):
            acc = 0.0
            for lag in range(1, n + 1):
                yl = ys[r + n - lag]
                ul = us[r + n - lag]
                acc += -(fs[lag - 1] @ structure.f_specs[lag - 1].eval(yl)) * yl
                acc += (gs[lag - 1] @ structure.g_specs[lag - 1].eval(yl)) * ul
            if h_spec is not None:
                acc += h_row @ h_spec.eval(ys[r + n - 1])
            if not math.isfinite(acc):
                raise RolloutDivergedError(
                    f"prediction left finite range at horizon step {r + 1}")
            ys[r + n] = acc
    return ys[n:]


def rollout_frozen(table: SdcTable, state: HorizonState, controls: np.ndarray) -> np.ndarray:
    """Propagate the frozen linear recursion; same grid conventions as rollout."""
    n = table.order
    horizon = controls.size
    ys = np.empty(horizon + n)
    ys[:n - 1] = state.past_y
    ys[n - 1] = state.anchor
    us = np.empty(horizon + n - 1)
    us[:n - 1] = state.past_u
    us[n - 1:] = controls
    for r in range(horizon):
        acc = table.offset[r]
        for lag in range(1, n + 1):
            acc += table.f_coef[r, lag - 1] * ys[r + n - lag]
            acc += table.g_coef[r, lag - 1] * us[r + n - lag]
        ys[r + n] = acc
    return ys[n:]


def build_sdc(structure: ModelStructure, theta, state: HorizonState,
              planned: np.ndarray) -> SdcTable:
    """Freeze the output-dependent coefficients along a planned trajectory."""
    n = structure.order
    horizon = planned.size
    fs, gs, h_row = structure.split(theta)
    grid = _grid_outputs(state, planned)  # index i at position i + n - 2

    f_coef = np.empty((horizon, n))
    g_coef = np.empty((horizon, n))
    for lag in range(1, n + 1):
        # arguments y_{i-lag} for rows i = 2..horizon+1
        args = grid[n - lag:n - lag + horizon]
        f_coef[:, lag - 1] = -(structure.f_specs[lag - 1].eval_grid(args) @ fs[lag - 1])
        g_coef[:, lag - 1] = structure.g_specs[lag - 1].eval_grid(args) @ gs[lag - 1]
    if structure.h_spec is not None:
        args = grid[n - 1:n - 1 + horizon]
        offset = structure.h_spec.eval_grid(args) @ h_row
    else:
        offset = np.zeros(horizon)
    return SdcTable(f_coef, g_coef, offset)


def assemble(table: SdcTable, state: HorizonState, config: HorizonConfig,
             guess: np.ndarray | None = None) -> QpProblem:
    """Stack the frozen recursion into the horizon QP.

    Terms that reference planned outputs/controls land in the equality block;
    references to the anchor or to measured data fold into the right-hand
    side together with the frozen offsets.
    """
    n = table.order
    horizon = table.horizon
    f_pred = np.zeros((horizon, horizon))
    g_pred = np.zeros((horizon, horizon))
    rhs = table.offset.copy()
    for r in range(horizon):
        i = r + 2
        for lag in range(1, n + 1):
            j = i - lag
            fc = table.f_coef[r, lag - 1]
            if j >= 2:
                f_pred[r, j - 2] = fc
            else:
                rhs[r] += fc * state.y_known(j)
            gc = table.g_coef[r, lag - 1]
            if j >= 1:
                g_pred[r, j - 1] = gc
            else:
                rhs[r] += gc * state.u_known(j)

    a_eq = np.hstack([np.eye(horizon) - f_pred, -g_pred])
    cost_quad = np.zeros((2 * horizon, 2 * horizon))
    cost_quad[:horizon, :horizon] = config.q_weight * np.eye(horizon)
    cost_quad[horizon:, horizon:] = config.r_weight * np.eye(horizon)
    cost_lin = np.concatenate([-2.0 * config.q_weight * state.commands, np.zeros(horizon)])
    return QpProblem(cost_quad, cost_lin, a_eq, rhs,
                     u_min=config.u_min, u_max=config.u_max, initial_guess=guess)


def _relinearize_once(structure, theta, state, config, controls):
    """One fixed-point evaluation: rollout, freeze, assemble, solve."""
    planned = rollout(structure, theta, state, controls)
    table = build_sdc(structure, theta, state, planned)
    problem = assemble(table, state, config, guess=np.concatenate([planned, controls]))
    x, qdiag = qp.solve(problem)
    return x[config.horizon:], qdiag


def subiterate(structure: ModelStructure, theta, state: HorizonState,
               config: HorizonConfig, u_init: np.ndarray) -> tuple[np.ndarray, StepDiagnostics]:
    """Drive the relinearization map to a fixed point within the QP budget.

    The quasi-Newton step uses a rank-one secant update of the inverse
    Jacobian, initialized at minus identity so the first step reproduces the
    plain relinearization iteration. A candidate is accepted only if its
    residual does not grow; a rejected quasi-Newton step falls back to the
    plain step, and if that also grows the loop stops at the best iterate.
    """
    diag = StepDiagnostics()
    u_acc = np.array(u_init, dtype=float, copy=True)

    def apply_map(u):
        u_next, qdiag = _relinearize_once(structure, theta, state, config, u)
        diag.qp_solves += 1
        diag.qp_iterations += qdiag.iterations
        diag.ridge_applied = diag.ridge_applied or qdiag.ridge_applied
        return u_next

    try:
        mapped_acc = apply_map(u_acc)
    except RolloutDivergedError:
        diag.diverged = True
        return u_acc, diag

    g_acc = mapped_acc - u_acc
    res_acc = float(np.linalg.norm(g_acc))
    diag.accepted_residuals.append(res_acc)

    inv_jac = -np.eye(u_acc.size)
    plain = True  # inv_jac is exactly minus identity

    while (diag.qp_solves < config.subiterations
           and res_acc >= config.fixed_point_tol * (1.0 + float(np.linalg.norm(u_acc)))):
        u_cand = u_acc - inv_jac @ g_acc
        was_plain = plain
        try:
            mapped_cand = apply_map(u_cand)
        except RolloutDivergedError:
            diag.diverged = True
            break
        g_cand = mapped_cand - u_cand
        res_cand = float(np.linalg.norm(g_cand))

        du = u_cand - u_acc
        dg = g_cand - g_acc
        jdg = inv_jac @ dg
        denom = float(du @ jdg)
        if abs(denom) > 1e-12 * (1.0 + float(np.linalg.norm(du)) * float(np.linalg.norm(jdg))):
            inv_jac = inv_jac + np.outer(du - jdg, du @ inv_jac) / denom
            plain = False
        else:
            inv_jac = -np.eye(u_acc.size)
            plain = True

        if res_cand <= res_acc:
            u_acc, mapped_acc, g_acc, res_acc = u_cand, mapped_cand, g_cand, res_cand
            diag.accepted_residuals.append(res_acc)
            continue

        if was_plain:
            diag.stagnated = True
            break

        # discard the quasi-Newton candidate, take the plain step from u_acc
        inv_jac = -np.eye(u_acc.size)
        plain = True
        if diag.qp_solves >= config.subiterations:
            break
        u_plain = mapped_acc.copy()
        try:
            mapped_plain = apply_map(u_plain)
        except RolloutDivergedError:
            diag.diverged = True
            break
        g_plain = mapped_plain - u_plain
        res_plain = float(np.linalg.norm(g_plain))
        if res_plain <= res_acc:
            u_acc, mapped_acc, g_acc, res_acc = u_plain, mapped_plain, g_plain, res_plain
            diag.accepted_residuals.append(res_acc)
        else:
            diag.stagnated = True
            break

    diag.residual = res_acc
    return mapped_acc.copy(), diag


class RecedingHorizonController:
    """Plans controls on the anchored grid and keeps the warm start between steps."""

    def __init__(self, structure: ModelStructure, config: HorizonConfig):
        self.structure = structure
        self.config = config
        self._last_plan: np.ndarray | None = None

    def reset(self) -> None:
        self._last_plan = None

    def plan(self, theta, y_hist: History, u_hist: History, k: int,
             command) -> tuple[float, StepDiagnostics]:
        """Compute the control to apply over [k+1, k+2) from data through k."""
        structure, config = self.structure, self.config
        n = structure.order
        anchor = anchor_prediction(structure, theta, y_hist, u_hist, k)
        past_y = np.array([y_hist.at(k + j) for j in range(2 - n, 1)], dtype=float)
        past_u = np.array([u_hist.at(k + j) for j in range(2 - n, 1)], dtype=float)
        commands = np.array([command(k + i) for i in range(2, config.horizon + 2)], dtype=float)
        state = HorizonState(anchor, past_y, past_u, commands)

        if self._last_plan is None:
            u_init = np.full(config.horizon, u_hist.at(k))
        else:
            u_init = np.concatenate([self._last_plan[1:], self._last_plan[-1:]])

        plan, diag = subiterate(structure, theta, state, config, u_init)
        self._last_plan = plan
        u_next = float(plan[0])
        if config.u_min is not None:
            u_next = min(max(u_next, config.u_min), config.u_max)
        return u_next, diag
