"""Fixed-step ODE solvers, rollouts, and function-evaluation accounting.

Only fixed-step methods (Euler, Heun, RK4) are provided: inference sweeps
fix NFE budgets, and adaptive stepping would blur that cost axis. A
rollout integrates each interval of the evaluation grid with a constant
number of substeps and records the state at every evaluation time;
``nfe`` counts vector-field calls (intervals * substeps * stages).

States may be a single vector (d,) or a batch (B, d) integrated jointly;
the right-hand side must then accept and return matching shapes. On
blow-up (norm above ``norm_bound`` or non-finite entries) the default is
to raise DivergedError with the partial result; evaluation code can pass
``on_blowup="mask"`` to freeze offending batch rows and keep going.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergedError, InvalidArgumentError

_STAGES = {"euler": 1, "heun": 2, "rk4": 4}

DEFAULT_NORM_BOUND = 1e8


@dataclass(frozen=True)
class SolverConfig:
    method: str = "rk4"
    substeps_per_interval: int = 1

    def __post_init__(self):
        if self.method not in _STAGES:
            raise InvalidArgumentError(
                f"unknown method {self.method!r}; choose from {sorted(_STAGES)}"
            )
        if self.substeps_per_interval < 1:
            raise InvalidArgumentError("substeps_per_interval must be >= 1")

    @property
    def stages(self) -> int:
        return _STAGES[self.method]


@dataclass
class RolloutResult:
    """States recorded at the requested times, plus solver cost metadata.

    diverged flags batch rows that hit the norm bound (all-False for
    clean rollouts); frozen rows keep their last finite state.
    """

    times: np.ndarray
    states: np.ndarray
    nfe: int
    diverged: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.diverged is None:
            batch_shape = self.states.shape[1:-1]
            self.diverged = np.zeros(batch_shape if batch_shape else (), dtype=bool)


def step(method: str, f, t: float, u: np.ndarray, h: float) -> np.ndarray:
    """One explicit step of size h (h < 0 integrates backward in time)."""
    if h == 0.0:
        raise InvalidArgumentError("step size must be nonzero")
    if method == "euler":
        return u + h * f(t, u)
    if method == "heun":
        k1 = f(t, u)
        k2 = f(t + h, u + h * k1)
        return u + 0.5 * h * (k1 + k2)
    if method == "rk4":
        k1 = f(t, u)
        k2 = f(t + 0.5 * h, u + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, u + 0.5 * h * k2)
        k4 = f(t + h, u + h * k3)
        return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    raise InvalidArgumentError(f"unknown method {method!r}")


def _row_norms(u: np.ndarray) -> np.ndarray:
    if u.ndim == 1:
        return np.linalg.norm(u)
    return np.linalg.norm(u, axis=-1)


def _integrate(f, u0, times_out, solver, norm_bound, on_blowup):
    """Shared fixed-step driver for forward and reverse rollouts."""
    u0 = np.asarray(u0, dtype=np.float64)
    batched = u0.ndim == 2
    if not np.isfinite(u0).all():
        raise InvalidArgumentError("initial state must be finite")
    u = u0.copy() if batched else u0[None, :].copy()
    fn = f if batched else (lambda t, x: np.atleast_2d(f(t, x[0])))
    states = np.empty((len(times_out),) + u.shape)
    states[0] = u
    alive = np.ones(u.shape[0], dtype=bool)
    nfe = 0
    for k in range(len(times_out) - 1):
        t0, t1 = times_out[k], times_out[k + 1]
        h = (t1 - t0) / solver.substeps_per_interval
        for s in range(solver.substeps_per_interval):
            if not alive.any():
                break
            t = t0 + s * h
            if alive.all():
                u_new = step(solver.method, fn, t, u, h)
            else:
                u_new = u.copy()
                u_new[alive] = step(solver.method, fn, t, u[alive], h)
            nfe += solver.stages
            bad = (~np.isfinite(u_new).all(axis=-1) | (_row_norms(u_new) > norm_bound)) & alive
            if bad.any():
                if on_blowup == "raise":
                    recorded = states[: k + 1]
                    partial = RolloutResult(
                        times=np.asarray(times_out[: k + 1], dtype=np.float64),
                        states=recorded if batched else recorded[:, 0, :],
                        nfe=nfe,
                    )
                    raise DivergedError(
                        f"state norm exceeded {norm_bound:g} at t={t + h:.6g}",
                        partial=partial,
                    )
                u_new[bad] = u[bad]  # freeze at last finite state
                alive &= ~bad
            u = u_new
        states[k + 1] = u
    return RolloutResult(
        times=np.asarray(times_out, dtype=np.float64),
        states=states if batched else states[:, 0, :],
        nfe=nfe,
        diverged=~alive if batched else bool(not alive[0]),
    )


def rollout(
    f,
    u0: np.ndarray,
    eval_times,
    solver: SolverConfig,
    norm_bound: float = DEFAULT_NORM_BOUND,
    on_blowup: str = "raise",
) -> RolloutResult:
    """Integrate du/dt = f(t, u) forward, recording each evaluation time.

    eval_times must be increasing; the first entry is the initial time and
    states[0] is u0 itself.
    """
    times = np.asarray(eval_times, dtype=np.float64)
    if times.ndim != 1 or times.size < 2:
        raise InvalidArgumentError("need at least two evaluation times")
    if not np.all(np.diff(times) > 0.0):
        raise InvalidArgumentError("evaluation times must be strictly increasing")
    if on_blowup not in ("raise", "mask"):
        raise InvalidArgumentError("on_blowup must be 'raise' or 'mask'")
    return _integrate(f, u0, times, solver, norm_bound, on_blowup)


def rollout_reverse(
    f,
    u_star: np.ndarray,
    t_star: float,
    target_times,
    solver: SolverConfig,
    norm_bound: float = DEFAULT_NORM_BOUND,
    on_blowup: str = "raise",
) -> RolloutResult:
    """Integrate backward from (t_star, u_star) to each earlier target time.

    target_times must be strictly decreasing and contained in [0, t_star).
    The returned states exclude the anchor state itself.
    """
    targets = np.asarray(target_times, dtype=np.float64)
    if targets.size == 0:
        return RolloutResult(
            times=targets,
            states=np.empty((0,) + np.shape(u_star)),
            nfe=0,
        )
    if targets.ndim != 1:
        raise InvalidArgumentError("target_times must be one-dimensional")
    if not np.all(np.diff(targets) < 0.0):
        raise InvalidArgumentError("target times must be strictly decreasing")
    if targets[0] >= t_star or targets[-1] < 0.0:
        raise InvalidArgumentError("target times must lie in [0, t_star)")
    path = np.concatenate(([t_star], targets))
    result = _integrate(f, u_star, path, solver, norm_bound, on_blowup)
    return RolloutResult(
        times=result.times[1:],
        states=result.states[1:],
        nfe=result.nfe,
        diverged=result.diverged,
    )


def ar_rollout(one_step_model, u0: np.ndarray, n_steps: int, times=None) -> RolloutResult:
    """Recursive one-step rollout: u_{k+1} = F(u_k); nfe equals n_steps."""
    if n_steps < 0:
        raise InvalidArgumentError("n_steps must be >= 0")
    u = np.array(u0, dtype=np.float64)
    if times is None:
        times = np.linspace(0.0, 1.0, n_steps + 1)
    times = np.asarray(times, dtype=np.float64)
    if times.size != n_steps + 1:
        raise InvalidArgumentError("times must have n_steps + 1 entries")
    states = np.empty((n_steps + 1,) + u.shape)
    states[0] = u
    for k in range(n_steps):
        u = np.asarray(one_step_model(u), dtype=np.float64)
        if not np.isfinite(u).all() or np.any(_row_norms(u) > DEFAULT_NORM_BOUND):
            raise DivergedError(
                f"one-step rollout blew up at step {k + 1}",
                partial=RolloutResult(times=times[: k + 1], states=states[: k + 1], nfe=k),
            )
        states[k + 1] = u
    return RolloutResult(times=times, states=states, nfe=n_steps)
