"""Rollout-based model evaluation shared by the trainer and the CLI.

Trajectories with identical evaluation grids are integrated as one batch;
blow-ups are masked (frozen rows) so a single unstable trajectory cannot
abort a test-set sweep - it simply scores a huge error.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError
from .metrics import EvalReport, build_report, relative_l2
from .odeint import SolverConfig, ar_rollout, rollout, rollout_reverse
from .systems import TrajectorySet
from .vector_field import VectorFieldParams, forward_batch


def flow_field(params: VectorFieldParams):
    """The learned right-hand side as f(t, u) for the ODE solvers."""

    def f(t, u):
        u = np.asarray(u, dtype=np.float64)
        if u.ndim == 1:
            return forward_batch(params, t, u[None, :])[0]
        return forward_batch(params, t, u)

    return f


def one_step_map(params: VectorFieldParams):
    """The learned next-state map as F(u) for recursive rollouts."""
    def apply(u):
        u = np.asarray(u, dtype=np.float64)
        if u.ndim == 1:
            return forward_batch(params, 0.0, u[None, :])[0]
        return forward_batch(params, 0.0, u)

    return apply


def strided_indices(n_times: int, stride: int) -> np.ndarray:
    """Indices 0, stride, ..., n_times-1; stride must divide the span."""
    if stride < 1:
        raise InvalidArgumentError("eval stride must be >= 1")
    if (n_times - 1) % stride != 0:
        raise InvalidArgumentError(
            f"stride {stride} does not divide the grid span of {n_times - 1} intervals"
        )
    return np.arange(0, n_times, stride)


def _grouped_by_grid(dataset: TrajectorySet):
    groups = {}
    for idx, grid in enumerate(dataset.grids):
        groups.setdefault(grid.times.tobytes(), []).append(idx)
    return [(dataset.grids[ids[0]], ids) for ids in groups.values()]


def evaluate_flow_model(
    params: VectorFieldParams,
    dataset: TrajectorySet,
    solver: SolverConfig,
    eval_stride: int = 1,
    fingerprint: str = "",
) -> EvalReport:
    """Roll out every trajectory from its initial state and score it.

    The evaluation grid is each trajectory's own grid thinned by
    eval_stride; truth snapshots at those times are compared against the
    integrated states.
    """
    f = flow_field(params)
    preds = [None] * dataset.n_traj
    truths = [None] * dataset.n_traj
    diverged = np.zeros(dataset.n_traj, dtype=bool)
    nfe = 0
    for grid, ids in _grouped_by_grid(dataset):
        keep = strided_indices(len(grid), eval_stride)
        eval_times = grid.times[keep]
        u0 = np.stack([dataset.states[i][0] for i in ids])
        result = rollout(f, u0, eval_times, solver, on_blowup="mask")
        nfe = result.nfe  # per-trajectory cost; identical across groups of one grid
        for col, i in enumerate(ids):
            preds[i] = result.states[:, col, :]
            truths[i] = dataset.states[i][keep]
            diverged[i] = result.diverged[col]
    return build_report(preds, truths, nfe=nfe, fingerprint=fingerprint, diverged=diverged)


def evaluate_one_step_model(
    params: VectorFieldParams,
    dataset: TrajectorySet,
    eval_stride: int = 1,
    fingerprint: str = "",
) -> EvalReport:
    """Recursive one-step rollout over each full grid, scored on a stride.

    The model always steps at its native (training) resolution; the stride
    only thins the comparison times so reports align with flow-model runs.
    """
    step_fn = one_step_map(params)
    preds, truths = [], []
    diverged = np.zeros(dataset.n_traj, dtype=bool)
    nfe = 0
    for grid, ids in _grouped_by_grid(dataset):
        keep = strided_indices(len(grid), eval_stride)
        u0 = np.stack([dataset.states[i][0] for i in ids])
        result = ar_rollout(step_fn, u0, len(grid) - 1, times=grid.times)
        nfe = result.nfe
        for col, i in enumerate(ids):
            preds.append(result.states[keep][:, col, :])
            truths.append(dataset.states[i][keep])
    return build_report(preds, truths, nfe=nfe, fingerprint=fingerprint, diverged=diverged)


def final_time_error_at_budget(
    params: VectorFieldParams,
    dataset: TrajectorySet,
    method: str,
    budget_nfe: int,
):
    """Mean final-time relative error using a fixed total NFE budget.

    The budget is spent on equal steps from t = 0 to t = 1 (stages
    included), so budget_nfe = steps * stages up to rounding; returns
    (mean_error, actual_nfe).
    """
    stages = SolverConfig(method=method).stages
    n_steps = max(1, int(round(budget_nfe / stages)))
    solver = SolverConfig(method=method, substeps_per_interval=n_steps)
    f = flow_field(params)
    errs = []
    actual_nfe = 0
    for grid, ids in _grouped_by_grid(dataset):
        u0 = np.stack([dataset.states[i][0] for i in ids])
        endpoints = np.array([grid.times[0], grid.times[-1]])
        result = rollout(f, u0, endpoints, solver, on_blowup="mask")
        actual_nfe = result.nfe
        for col, i in enumerate(ids):
            errs.append(relative_l2(result.states[-1, col], dataset.states[i][-1]))
    return float(np.mean(errs)), actual_nfe


def reverse_time_study(
    params: VectorFieldParams,
    dataset: TrajectorySet,
    t_star: float,
    noise_levels,
    solver: SolverConfig,
    seed: int = 0,
    max_horizons: int = 20,
):
    """Backward-integration error versus backward horizon and terminal noise.

    Anchors at the grid time closest to t_star, perturbs the anchor state
    with isotropic Gaussian noise per level, integrates backward to
    earlier grid times, and averages the per-time relative error over
    trajectories. Returns rows (noise_level, backward_horizon, mean_error).
    """
    f = flow_field(params)
    rows = []
    for grid, ids in _grouped_by_grid(dataset):
        anchor = int(np.argmin(np.abs(grid.times - t_star)))
        if anchor == 0:
            continue  # no backward horizon
        stride = max(1, anchor // max_horizons)
        target_idx = np.arange(anchor - stride, -1, -stride)
        if target_idx[-1] != 0:
            target_idx = np.append(target_idx, 0)
        targets = grid.times[target_idx]
        u_star = np.stack([dataset.states[i][anchor] for i in ids])
        truth = np.stack([dataset.states[i][target_idx] for i in ids])  # (B, K, d)
        for level in noise_levels:
            rng = np.random.default_rng([seed, int(round(level * 1e9))])
            perturbed = u_star + level * rng.standard_normal(u_star.shape)
            result = rollout_reverse(
                f, perturbed, grid.times[anchor], targets, solver, on_blowup="mask"
            )
            # result.states: (K, B, d); per-horizon mean relative error
            for k, s in enumerate(targets):
                num = np.linalg.norm(result.states[k] - truth[:, k, :], axis=-1)
                den = np.linalg.norm(truth[:, k, :], axis=-1)
                err = float(np.mean(num / np.where(den == 0.0, np.inf, den)))
                rows.append((float(level), float(grid.times[anchor] - s), err))
    return rows
