"""Finite-difference weights on arbitrary nodes and knot derivative estimates.

General weights come from solving the (m+1)x(m+1) Vandermonde system
P w = k! e_k with P[r, j] = (x_j - x_center)^r. Shifting nodes to the
evaluation point before building P is required for conditioning. The
interior three-point formulas are also provided in closed form; they agree
with the Vandermonde solve to roundoff and cost nothing to vectorize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .timegrid import TimeGrid


@dataclass(frozen=True)
class StencilWeights:
    """Weights approximating the order-k derivative at nodes[center_index]."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int
    center_index: int = 0

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Combine samples f(nodes[j]) along the first axis."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape[0] != self.weights.size:
            raise InvalidArgumentError(
                f"expected {self.weights.size} samples, got {values.shape[0]}"
            )
        return np.tensordot(self.weights, values, axes=(0, 0))


def fd_weights(nodes, center_index: int, k: int) -> StencilWeights:
    """Finite-difference weights for the k-th derivative at nodes[center_index].

    Solves P w = k! e_k on the shifted nodes; exact for polynomials of
    degree <= m and accurate to O(h^{m+1-k}) on smooth functions, where
    m + 1 is the number of nodes.
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    m = nodes.size - 1
    if nodes.ndim != 1 or m < 0:
        raise InvalidArgumentError("nodes must be a nonempty 1-d sequence")
    if not (0 <= center_index <= m):
        raise InvalidArgumentError(f"center_index {center_index} outside nodes")
    if not (0 <= k <= m):
        raise InvalidArgumentError(
            f"derivative order k={k} needs at least k+1 nodes, got {m + 1}"
        )
    if np.unique(nodes).size != nodes.size:
        raise InvalidArgumentError("nodes must be pairwise distinct (singular system)")
    shifted = nodes - nodes[center_index]
    powers = np.vander(shifted, m + 1, increasing=True).T  # P[r, j] = shifted[j]^r
    rhs = np.zeros(m + 1)
    rhs[k] = math.factorial(k)
    try:
        weights = np.linalg.solve(powers, rhs)
    except np.linalg.LinAlgError as exc:  # near-duplicate nodes
        raise InvalidArgumentError(f"singular stencil system: {exc}") from exc
    return StencilWeights(nodes=nodes, weights=weights, order=k, center_index=center_index)


def first_derivative_3pt(h_prev: float, h_next: float) -> StencilWeights:
    """Second-order first-derivative weights at the middle of three nodes.

    Applied to (u(t-h_prev), u(t), u(t+h_next)).
    """
    _check_steps(h_prev, h_next)
    total = h_prev + h_next
    weights = np.array(
        [
            -h_next / (h_prev * total),
            (h_next - h_prev) / (h_prev * h_next),
            h_prev / (h_next * total),
        ]
    )
    nodes = np.array([-h_prev, 0.0, h_next])
    return StencilWeights(nodes=nodes, weights=weights, order=1, center_index=1)


def second_derivative_3pt(h_prev: float, h_next: float) -> StencilWeights:
    """First-order second-derivative weights at the middle of three nodes.

    The divided-difference form 2/(h_prev+h_next) * (forward - backward
    slope); exact on quadratics for any step pair.
    """
    _check_steps(h_prev, h_next)
    total = h_prev + h_next
    weights = (2.0 / total) * np.array(
        [1.0 / h_prev, -(1.0 / h_prev + 1.0 / h_next), 1.0 / h_next]
    )
    nodes = np.array([-h_prev, 0.0, h_next])
    return StencilWeights(nodes=nodes, weights=weights, order=2, center_index=1)


def _check_steps(h_prev: float, h_next: float) -> None:
    if not (h_prev > 0.0 and h_next > 0.0):
        raise InvalidArgumentError(f"steps must be positive, got ({h_prev}, {h_next})")


@dataclass(frozen=True)
class KnotDerivatives:
    """First (d) and second (a) time-derivative estimates at every knot.

    Shapes are (n_knots, state_dim); units are state per unit normalized
    time and per unit squared, respectively.
    """

    d: np.ndarray
    a: np.ndarray


def estimate_knot_derivatives(grid: TimeGrid, values: np.ndarray) -> KnotDerivatives:
    """Estimate du/dt and d2u/dt2 at the knots of one trajectory.

    Interior knots use the three-point formulas (second order for d,
    first order for a); the first and last knots use one-sided
    three-point weights over the nearest three knots, keeping the same
    accuracy orders at the boundary. Componentwise over the state.
    """
    values = np.asarray(values, dtype=np.float64)
    n = len(grid)
    if n < 3:
        raise InvalidArgumentError("derivative estimation needs at least 3 knots")
    if values.shape[0] != n:
        raise InvalidArgumentError(
            f"got {values.shape[0]} snapshots for a {n}-point grid"
        )
    t = grid.times
    h = grid.steps
    d = np.empty_like(values)
    a = np.empty_like(values)

    # Interior: vectorized closed forms over all middle knots at once.
    hp = h[:-1][:, None]  # h_{i-1}
    hn = h[1:][:, None]  # h_i
    tot = hp + hn
    u_prev, u_mid, u_next = values[:-2], values[1:-1], values[2:]
    d[1:-1] = (
        -hn / (hp * tot) * u_prev
        + (hn - hp) / (hp * hn) * u_mid
        + hp / (hn * tot) * u_next
    )
    a[1:-1] = (2.0 / tot) * ((u_next - u_mid) / hn - (u_mid - u_prev) / hp)

    # Endpoints: one-sided stencils on the nearest three knots.
    for idx, sl in ((0, slice(0, 3)), (n - 1, slice(n - 3, n))):
        center = 0 if idx == 0 else 2
        d[idx] = fd_weights(t[sl], center, 1).apply(values[sl])
        a[idx] = fd_weights(t[sl], center, 2).apply(values[sl])
    return KnotDerivatives(d=d, a=a)
