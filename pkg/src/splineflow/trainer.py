"""Adam training loops for the velocity model and the one-step AR baseline.

Both trainers share the same skeleton: draw a batch, take an Adam step,
periodically score a full validation rollout, and keep the parameters
with the best validation error (long trainings on chaotic data
fluctuate, so last-step weights are a poor pick). Runs are bit-for-bit
reproducible for a fixed config and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, NumericError, TrainingAbortedError
from .interpolant import InterpolantSampler, SampleBatch
from .odeint import SolverConfig
from .spline import NoiseSchedule, build_linear, build_quintic
from .systems import TrajectorySet
from .vector_field import (
    MlpConfig,
    VectorFieldParams,
    init_params,
    loss_and_grad,
)

SPLINE_KINDS = ("linear", "quintic")


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 20000
    batch_size: int = 256
    learning_rate: float = 1e-3
    adam_betas: tuple = (0.9, 0.99)
    adam_eps: float = 1e-8
    eval_every: int = 2000
    gamma0: float = 1e-5
    noise_m: int = 3
    spline_kind: str = "quintic"
    seed: int = 0

    def __post_init__(self):
        if self.steps <= 0 or self.batch_size <= 0:
            raise InvalidArgumentError("steps and batch_size must be positive")
        if self.learning_rate <= 0.0:
            raise InvalidArgumentError("learning_rate must be positive")
        b1, b2 = self.adam_betas
        if not (0.0 <= b1 < 1.0 and 0.0 <= b2 < 1.0):
            raise InvalidArgumentError("adam betas must lie in [0, 1)")
        if self.eval_every <= 0:
            raise InvalidArgumentError("eval_every must be positive")
        if self.spline_kind not in SPLINE_KINDS:
            raise InvalidArgumentError(f"spline_kind must be one of {SPLINE_KINDS}")


@dataclass
class AdamState:
    """First/second moment accumulators aligned with params.arrays()."""

    m: list
    v: list
    step_count: int = 0

    @staticmethod
    def zeros_like(params: VectorFieldParams) -> "AdamState":
        arrays = params.arrays()
        return AdamState(
            m=[np.zeros_like(a) for a in arrays],
            v=[np.zeros_like(a) for a in arrays],
        )


def adam_step(
    params: VectorFieldParams,
    state: AdamState,
    grads: VectorFieldParams,
    config: TrainConfig,
):
    """One bias-corrected Adam update; returns fresh (params, state)."""
    b1, b2 = config.adam_betas
    t = state.step_count + 1
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_arrays, new_m, new_v = [], [], []
    for p, m, v, g in zip(params.arrays(), state.m, state.v, grads.arrays()):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        update = config.learning_rate * (m / c1) / (np.sqrt(v / c2) + config.adam_eps)
        p = p - update
        if not np.isfinite(p).all():
            raise NumericError("non-finite parameter after Adam update")
        new_arrays.append(p)
        new_m.append(m)
        new_v.append(v)
    weights = new_arrays[0::2]
    biases = new_arrays[1::2]
    return (
        VectorFieldParams(config=params.config, weights=weights, biases=biases),
        AdamState(m=new_m, v=new_v, step_count=t),
    )


@dataclass
class HistoryRow:
    step: int
    train_loss: float
    val_error: float  # nan on steps without a validation rollout


@dataclass
class TrainResult:
    params: VectorFieldParams
    history: list
    best_step: int
    best_val_error: float


def smoothed_loss(history, window: int = 100) -> np.ndarray:
    """Rolling-mean training loss; length len(history) - window + 1."""
    losses = np.array([row.train_loss for row in history])
    if losses.size < window:
        raise InvalidArgumentError("history shorter than smoothing window")
    kernel = np.full(window, 1.0 / window)
    return np.convolve(losses, kernel, mode="valid")


def build_splines(dataset: TrajectorySet, spline_kind: str):
    if spline_kind == "linear":
        return [build_linear(g, u) for g, u in zip(dataset.grids, dataset.states)]
    if spline_kind == "quintic":
        return [build_quintic(g, u) for g, u in zip(dataset.grids, dataset.states)]
    raise InvalidArgumentError(f"spline_kind must be one of {SPLINE_KINDS}")


def _optimize(params, draw_batch, score_validation, config: TrainConfig) -> TrainResult:
    """Shared Adam loop with best-validation checkpointing."""
    state = AdamState.zeros_like(params)
    history = []
    best = params.copy()
    best_step = 0
    best_val = math.inf
    evaluated = False
    for step_idx in range(1, config.steps + 1):
        batch = draw_batch()
        try:
            loss, grads = loss_and_grad(params, batch)
            params, state = adam_step(params, state, grads, config)
        except NumericError as exc:
            raise TrainingAbortedError(
                f"training diverged at step {step_idx}: {exc}",
                step=step_idx,
                best_params=best if evaluated else params,
                history=history,
            ) from exc
        val = math.nan
        if score_validation is not None and (
            step_idx % config.eval_every == 0 or step_idx == config.steps
        ):
            val = score_validation(params)
            evaluated = True
            if val <= best_val:
                best_val = val
                best = params.copy()
                best_step = step_idx
        history.append(HistoryRow(step=step_idx, train_loss=loss, val_error=val))
    if not evaluated:
        best, best_step, best_val = params, config.steps, math.nan
    return TrainResult(params=best, history=history, best_step=best_step, best_val_error=best_val)


def train_flow_matching(
    train_set: TrajectorySet,
    config: TrainConfig,
    mlp_config: MlpConfig | None = None,
    val_set: TrajectorySet | None = None,
    val_solver: SolverConfig | None = None,
) -> TrainResult:
    """Fit the velocity model to spline-path targets by flow matching.

    Splines are constructed once per trajectory up front; each step then
    draws (trajectory, time, noise) triples and regresses the network on
    the analytic path velocity. Validation (when a set is given) scores a
    full RK4 rollout from each held-out initial condition.
    """
    from .evaluation import evaluate_flow_model

    splines = build_splines(train_set, config.spline_kind)
    schedule = NoiseSchedule(gamma0=config.gamma0, m=config.noise_m)
    sampler = InterpolantSampler(splines, schedule)
    mlp_config = mlp_config or MlpConfig(state_dim=train_set.state_dim)
    if mlp_config.state_dim != train_set.state_dim:
        raise InvalidArgumentError("mlp state_dim does not match the dataset")
    params = init_params(mlp_config, config.seed)
    rng = np.random.default_rng([config.seed, 1])
    solver = val_solver or SolverConfig(method="rk4", substeps_per_interval=1)

    score = None
    if val_set is not None:
        score = lambda p: evaluate_flow_model(p, val_set, solver).mean

    return _optimize(
        params,
        lambda: sampler.sample_batch(config.batch_size, rng),
        score,
        config,
    )


def train_one_step(
    train_set: TrajectorySet,
    config: TrainConfig,
    mlp_config: MlpConfig | None = None,
    val_set: TrajectorySet | None = None,
) -> TrainResult:
    """Teacher-forced one-step predictor u(t_i) -> u(t_{i+1}).

    Requires a shared uniform time grid: a single next-state map only
    makes sense for one fixed step size, which is why irregularly
    subsampled datasets are rejected.
    """
    from .evaluation import evaluate_one_step_model

    step_size = _uniform_step_or_raise(train_set)
    states = np.stack(train_set.states)  # (M, N, d)
    inputs = states[:, :-1, :].reshape(-1, train_set.state_dim)
    targets = states[:, 1:, :].reshape(-1, train_set.state_dim)

    mlp_config = mlp_config or MlpConfig(
        state_dim=train_set.state_dim, use_time_embedding=False
    )
    if mlp_config.use_time_embedding:
        raise InvalidArgumentError("the one-step baseline does not take a time input")
    if mlp_config.state_dim != train_set.state_dim:
        raise InvalidArgumentError("mlp state_dim does not match the dataset")
    params = init_params(mlp_config, config.seed)
    rng = np.random.default_rng([config.seed, 1])
    zeros = np.zeros(config.batch_size)

    def draw():
        idx = rng.integers(0, inputs.shape[0], size=config.batch_size)
        return SampleBatch(t=zeros, x=inputs[idx], v_target=targets[idx])

    score = None
    if val_set is not None:
        _uniform_step_or_raise(val_set, expected=step_size)
        score = lambda p: evaluate_one_step_model(p, val_set).mean

    return _optimize(params, draw, score, config)


def _uniform_step_or_raise(dataset: TrajectorySet, expected: float | None = None) -> float:
    steps = set()
    for g in dataset.grids:
        if not g.is_uniform():
            raise InvalidArgumentError(
                "autoregressive training requires a uniform time grid; "
                "irregularly subsampled trajectories are not supported"
            )
        steps.add(round(float(g.steps[0]), 12))
    if len(steps) != 1:
        raise InvalidArgumentError(
            "autoregressive training requires one shared step size across trajectories"
        )
    step_size = steps.pop()
    if expected is not None and abs(step_size - expected) > 1e-12:
        raise InvalidArgumentError("validation grid step differs from the training step")
    return step_size
