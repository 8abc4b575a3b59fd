"""Piecewise temporal interpolants and the per-segment noise schedule.

Two spline families over a TimeGrid:

* LinearSpline: C0, straight segments; the one-sided velocity at a knot is
  the forward-difference slope of the segment to its right.
* QuinticSpline: C2 Hermite interpolant matching values plus estimated
  first/second derivatives at both endpoints of every segment.

Knot convention: segments are half-open [t_i, t_{i+1}) and t = 1 maps to
the final closed segment, so evaluation at an interior knot uses the
right-hand segment.

The noise schedule is the per-segment polynomial bump
gamma(t) = gamma0 * (t - t_k)^m (t_{k+1} - t)^m / (t_{k+1} - t_k)^{2m},
which vanishes at every knot together with its first m - 1 derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, OutOfRangeError
from .stencil import KnotDerivatives, estimate_knot_derivatives
from .timegrid import TimeGrid

# Quintic Hermite basis on the unit interval, ordered
# [h00, h10, h20, h01, h11, h21]: value / first / second derivative at the
# left endpoint, then the same at the right endpoint.


def hermite_basis(tau: np.ndarray) -> np.ndarray:
    """Basis values at tau; shape (..., 6)."""
    t = np.asarray(tau, dtype=np.float64)
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    t5 = t4 * t
    return np.stack(
        [
            1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
            t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
            0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5),
            10.0 * t3 - 15.0 * t4 + 6.0 * t5,
            -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
            0.5 * (t3 - 2.0 * t4 + t5),
        ],
        axis=-1,
    )


def hermite_basis_d1(tau: np.ndarray) -> np.ndarray:
    """d/dtau of the basis; shape (..., 6)."""
    t = np.asarray(tau, dtype=np.float64)
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    return np.stack(
        [
            -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
            1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
            0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4),
            30.0 * t2 - 60.0 * t3 + 30.0 * t4,
            -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
            0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4),
        ],
        axis=-1,
    )


def hermite_basis_d2(tau: np.ndarray) -> np.ndarray:
    """d2/dtau2 of the basis; shape (..., 6)."""
    t = np.asarray(tau, dtype=np.float64)
    t2 = t * t
    t3 = t2 * t
    return np.stack(
        [
            -60.0 * t + 180.0 * t2 - 120.0 * t3,
            -36.0 * t + 96.0 * t2 - 60.0 * t3,
            0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3),
            60.0 * t - 180.0 * t2 + 120.0 * t3,
            -24.0 * t + 84.0 * t2 - 60.0 * t3,
            0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3),
        ],
        axis=-1,
    )


def locate_segments(times: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Half-open segment index for each query time; t == 1 uses the last."""
    idx = np.searchsorted(times, t, side="right") - 1
    return np.clip(idx, 0, times.size - 2)


def _check_range(t: np.ndarray) -> None:
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise OutOfRangeError("query times must lie in the normalized interval [0, 1]")


def _as_queries(t) -> tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    _check_range(arr)
    return arr, scalar


def _check_values(grid: TimeGrid, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise InvalidArgumentError("snapshot array must have shape (n_times, state_dim)")
    if values.shape[0] != len(grid):
        raise InvalidArgumentError(
            f"got {values.shape[0]} snapshots for a {len(grid)}-point grid"
        )
    return values


@dataclass(frozen=True)
class LinearSpline:
    """C0 piecewise-linear interpolant of one trajectory."""

    grid: TimeGrid
    values: np.ndarray

    @property
    def state_dim(self) -> int:
        return int(self.values.shape[1])

    def eval(self, t):
        ts, scalar = _as_queries(t)
        seg = locate_segments(self.grid.times, ts)
        t0 = self.grid.times[seg]
        h = self.grid.steps[seg]
        tau = ((ts - t0) / h)[:, None]
        out = (1.0 - tau) * self.values[seg] + tau * self.values[seg + 1]
        return out[0] if scalar else out

    def eval_velocity(self, t):
        ts, scalar = _as_queries(t)
        seg = locate_segments(self.grid.times, ts)
        h = self.grid.steps[seg][:, None]
        out = (self.values[seg + 1] - self.values[seg]) / h
        return out[0] if scalar else out


@dataclass(frozen=True)
class QuinticSpline:
    """C2 quintic Hermite interpolant with knot derivative data."""

    grid: TimeGrid
    values: np.ndarray
    derivs: KnotDerivatives

    @property
    def state_dim(self) -> int:
        return int(self.values.shape[1])

    def _segment_data(self, ts: np.ndarray):
        seg = locate_segments(self.grid.times, ts)
        t0 = self.grid.times[seg]
        h = self.grid.steps[seg]
        tau = (ts - t0) / h
        h_ = h[:, None]
        coeffs = (
            self.values[seg],
            self.derivs.d[seg] * h_,
            self.derivs.a[seg] * h_ * h_,
            self.values[seg + 1],
            self.derivs.d[seg + 1] * h_,
            self.derivs.a[seg + 1] * h_ * h_,
        )
        return tau, h, coeffs

    @staticmethod
    def _combine(basis: np.ndarray, coeffs) -> np.ndarray:
        out = basis[:, 0:1] * coeffs[0]
        for j in range(1, 6):
            out += basis[:, j : j + 1] * coeffs[j]
        return out

    def eval(self, t):
        ts, scalar = _as_queries(t)
        tau, _, coeffs = self._segment_data(ts)
        out = self._combine(hermite_basis(tau), coeffs)
        return out[0] if scalar else out

    def eval_velocity(self, t):
        ts, scalar = _as_queries(t)
        tau, h, coeffs = self._segment_data(ts)
        out = self._combine(hermite_basis_d1(tau), coeffs) / h[:, None]
        return out[0] if scalar else out

    def eval_accel(self, t):
        ts, scalar = _as_queries(t)
        tau, h, coeffs = self._segment_data(ts)
        out = self._combine(hermite_basis_d2(tau), coeffs) / (h * h)[:, None]
        return out[0] if scalar else out


def build_linear(grid: TimeGrid, values: np.ndarray) -> LinearSpline:
    """Linear interpolant of the snapshots on their grid."""
    return LinearSpline(grid=grid, values=_check_values(grid, values))


def build_quintic(
    grid: TimeGrid, values: np.ndarray, derivs: KnotDerivatives | None = None
) -> QuinticSpline:
    """Quintic Hermite interpolant; derivatives estimated via stencils.

    Passing explicit `derivs` overrides the finite-difference estimates
    (used when exact derivatives are known). Needs at least 3 knots.
    """
    values = _check_values(grid, values)
    if len(grid) < 3:
        raise InvalidArgumentError(
            "quintic splines need at least 3 knots for derivative stencils; "
            "use build_linear for 2-point trajectories"
        )
    if derivs is None:
        derivs = estimate_knot_derivatives(grid, values)
    if derivs.d.shape != values.shape or derivs.a.shape != values.shape:
        raise InvalidArgumentError("derivative arrays must match the snapshot shape")
    return QuinticSpline(grid=grid, values=values, derivs=derivs)


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-segment polynomial noise bump with amplitude gamma0 (state units).

    m controls smoothness: the schedule and its derivatives up to order
    m - 1 vanish at every knot, so m >= 3 keeps the noisy path C2.
    """

    gamma0: float = 0.0
    m: int = 3

    def __post_init__(self):
        if self.gamma0 < 0.0:
            raise InvalidArgumentError("gamma0 must be >= 0")
        if self.m < 1:
            raise InvalidArgumentError("smoothness exponent m must be >= 1")

    def from_tau(self, tau: np.ndarray, h: np.ndarray):
        """(gamma, dgamma/dt) from the local segment coordinate and width."""
        if self.gamma0 == 0.0:
            zeros = np.zeros_like(np.asarray(tau, dtype=np.float64))
            return zeros, zeros
        tau = np.asarray(tau, dtype=np.float64)
        bump = tau * (1.0 - tau)
        value = self.gamma0 * bump**self.m
        slope = self.gamma0 * self.m * bump ** (self.m - 1) * (1.0 - 2.0 * tau) / h
        return value, slope


def gamma(schedule: NoiseSchedule, grid: TimeGrid, t):
    """Noise amplitude and its time derivative at t. Scalar in, scalars out."""
    ts, scalar = _as_queries(t)
    seg = locate_segments(grid.times, ts)
    t0 = grid.times[seg]
    h = grid.steps[seg]
    tau = (ts - t0) / h
    value, slope = schedule.from_tau(tau, h)
    if scalar:
        return float(value[0]), float(slope[0])
    return value, slope
