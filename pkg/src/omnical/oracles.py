"""Mixture linear optimization oracles.

Given one distinguisher per payoff set and a convex combination over sets,
these oracles return a distribution over net points whose mixed payoff stays
small against every label the adversary could reveal. The binary oracle is an
exact case analysis on the scalar grid; the multiclass oracle reduces to an
approximate zero-sum matrix game solved by multiplicative weights against
exact best responses, with a primal/dual certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from . import accel
from .core import InternalInvariantError, SimplexNet, SolverConvergenceError


# ---------------------------------------------------------------------------
# binary oracle


@dataclass(frozen=True)
class BinaryOracleInput:
    """Inputs for one binary oracle call: mixture weights (q over the
    calibration set, r over the comparator set), the calibration
    distinguisher u over grid points, and the comparator value d in [-1,1]."""

    q: float
    r: float
    u: np.ndarray
    d: float

    def __post_init__(self):
        if abs(self.q + self.r - 1.0) > 1e-9 or self.q < -1e-12 or self.r < -1e-12:
            raise ValueError(f"(q, r) = ({self.q}, {self.r}) is not on the 2-simplex")
        if abs(self.d) > 1.0 + 1e-9:
            raise ValueError(f"|d| = {abs(self.d)} exceeds 1")
        u = np.asarray(self.u, dtype=np.float64)
        if u.min() < -1e-12 or abs(u.sum() - 1.0) > 1e-9:
            raise ValueError("u must be a probability vector over the grid")
        object.__setattr__(self, "u", u)


def binary_cmloo_support(inp: BinaryOracleInput, grid: np.ndarray):
    """Support form of the binary oracle output: (lo, hi, w_lo)."""
    lo, hi, w_lo = accel.binary_oracle_case(grid, inp.u, inp.q, inp.r, inp.d)
    if lo < 0:
        raise InternalInvariantError("no sign change found despite h(0) < 0 < h(1)")
    return int(lo), int(hi), float(w_lo)


def binary_cmloo(inp: BinaryOracleInput, grid: np.ndarray) -> np.ndarray:
    """Distribution over grid points with mixed payoff <= grid spacing at
    both labels; support size at most 2."""
    lo, hi, w_lo = binary_cmloo_support(inp, grid)
    a = np.zeros(grid.shape[0])
    a[lo] += w_lo
    a[hi] += 1.0 - w_lo
    return a


def binary_mixture_payoff(a: np.ndarray, grid: np.ndarray, inp: BinaryOracleInput, b: float) -> float:
    """f(a, b): the quantity the oracle promises to keep below the grid step."""
    signs = np.where(grid[:, None] >= grid[None, :], 1.0, -1.0)  # sign(p_i - s_j)
    cal = float(a @ ((grid - b)[:, None] * signs) @ inp.u)
    ma = inp.d * float(a @ (grid - b))
    return inp.q * cal + inp.r * ma


# ---------------------------------------------------------------------------
# zero-sum matrix games


@dataclass(frozen=True)
class GameMatrix:
    """Normalized payoff matrix of min_a max_b b^T M a, entries in [-2, 2]."""

    M: np.ndarray
    R: float = 1.0
    f: np.ndarray | None = field(default=None, repr=False)
    g: np.ndarray | None = field(default=None, repr=False)


def build_game_matrix(f: np.ndarray, net_points: np.ndarray, R: float = 1.0) -> GameMatrix:
    """Assemble the game whose value is max_q min_s <f_s, s - q>, normalized by R.

    f has one row per net point (the concatenated distinguisher weights); the
    matrix is ones(k) g^T - F with g_s = <f_s, s> and F stacking the rows of
    f as columns.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2 or f.shape[0] != net_points.shape[0] or f.shape[1] != net_points.shape[1]:
        raise ValueError(f"f must have shape {net_points.shape}, got {f.shape}")
    fmax = float(np.max(np.abs(f), initial=0.0))
    if fmax > R + 1e-9:
        raise ValueError(f"max |f| = {fmax} exceeds the declared bound R = {R}")
    fn = f / R
    g = np.einsum("sj,sj->s", fn, net_points)
    M = g[None, :] - fn.T
    if np.max(np.abs(M)) > 2.0 + 1e-9:
        raise InternalInvariantError("normalized game matrix exceeded [-2, 2]")
    M = np.clip(M, -2.0, 2.0)
    return GameMatrix(M=np.ascontiguousarray(M), R=R, f=f, g=g * R)


@dataclass(frozen=True)
class GameSolution:
    a: np.ndarray
    b: np.ndarray
    value: float      # primal value max(M a); within gap of the true value
    primal: float
    dual: float
    gap: float
    iters: int


def default_iteration_cap(k: int, eps: float) -> int:
    # anytime MWU closes the duality gap at ~3 L sqrt(log k / T); L <= 2 here
    return int(math.ceil(64.0 * 4.0 * math.log(max(k, 2)) / eps**2)) + 256


def solve_matrix_game(game: GameMatrix | np.ndarray, eps: float,
                      max_iter: int | None = None, check_every: int = 32,
                      rng=None) -> GameSolution:
    """Additive-eps solve with a primal-dual certificate.

    Multiplicative weights on the (maximizing) row player against exact best
    responses over columns; deterministic, so the rng argument is accepted
    for interface uniformity and ignored. Raises SolverConvergenceError if
    the certificate gap is still above eps at the iteration cap.
    """
    M = game.M if isinstance(game, GameMatrix) else np.ascontiguousarray(game, dtype=np.float64)
    if eps <= 0:
        raise ValueError("eps must be positive")
    k = M.shape[0]
    if max_iter is None:
        max_iter = default_iteration_cap(k, eps)
    a, b, primal, dual, iters, ok = accel.solve_zero_sum(M, eps, max_iter, check_every)
    if not ok:
        raise SolverConvergenceError(
            f"certificate gap {primal - dual:.3g} > eps = {eps} after {iters} iterations"
        )
    return GameSolution(a=a, b=b, value=primal, primal=primal, dual=dual,
                        gap=primal - dual, iters=iters)


def exact_game_value(M: np.ndarray) -> tuple[float, np.ndarray]:
    """Exact value of min_a max_b b^T M a via linear programming (test oracle)."""
    M = np.asarray(M, dtype=np.float64)
    k, n = M.shape
    # variables (a_1..a_n, t): minimize t s.t. M a <= t 1, sum a = 1, a >= 0
    c = np.zeros(n + 1)
    c[-1] = 1.0
    A_ub = np.hstack([M, -np.ones((k, 1))])
    b_ub = np.zeros(k)
    A_eq = np.zeros((1, n + 1))
    A_eq[0, :n] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * n + [(None, None)], method="highs")
    if not res.success:
        raise RuntimeError(f"LP solve failed: {res.message}")
    return float(res.fun), res.x[:n]


# ---------------------------------------------------------------------------
# multiclass mixture oracle


def calibration_adjoint(u: np.ndarray) -> np.ndarray:
    """Adjoint of the identity payoff map: the distinguisher is already a
    weight per (net point, class) pair."""
    return u


def multiaccuracy_adjoint(n_net: int) -> Callable[[np.ndarray], np.ndarray]:
    """Adjoint of the map summing per-net-point payoffs into one k-vector:
    broadcast the k-vector distinguisher to every net point (never
    materialize the stacked-identity matrix it represents)."""

    def apply(u: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(u, dtype=np.float64), (n_net, u.shape[0]))

    return apply


@dataclass(frozen=True)
class MlooResult:
    a: np.ndarray
    value: float
    gap: float
    iters: int


def multiclass_mloo(w, distinguishers, adjoints, net: SimplexNet, R: float = 1.0,
                    eps: float | None = None, rng=None,
                    max_iter: int | None = None) -> MlooResult:
    """Mixture oracle for payoff maps linear in the per-net-point error
    vectors: combine the adjoint-applied distinguishers into one weight array,
    assemble the game, and solve it to additive eps (default: the net radius).

    The returned distribution a keeps sum_i w_i <u_i, v_i(a, b)> below
    2 * eps * R (value <= eps R by net coverage, plus the certificate gap) at
    every vertex label b.
    """
    w = np.asarray(w, dtype=np.float64)
    if len(distinguishers) != w.shape[0] or len(adjoints) != w.shape[0]:
        raise ValueError("need one distinguisher and one adjoint per mixture weight")
    if eps is None:
        eps = net.eps
    f = np.zeros_like(net.points)
    for wi, ui, adj in zip(w, distinguishers, adjoints):
        if wi == 0.0:
            continue
        f += wi * adj(ui)
    game = build_game_matrix(f, net.points, R=R)
    sol = solve_matrix_game(game, eps=eps, max_iter=max_iter, rng=rng)
    return MlooResult(a=sol.a, value=sol.value * R, gap=sol.gap * R, iters=sol.iters)


def mixture_payoff_at_vertices(a: np.ndarray, w, distinguishers, adjoints,
                               net: SimplexNet) -> np.ndarray:
    """sum_i w_i <u_i, v_i(a, e_j)> for each class vertex j (for checking the
    oracle guarantee; linearity in b makes vertices sufficient)."""
    w = np.asarray(w, dtype=np.float64)
    f = np.zeros_like(net.points)
    for wi, ui, adj in zip(w, distinguishers, adjoints):
        f += wi * adj(ui)
    g = np.einsum("sj,sj->s", f, net.points)  # <f_s, s>
    base = float(np.dot(a, g))
    # subtract <f_s, e_j> weighted by a_s for each vertex j
    return base - a @ f
