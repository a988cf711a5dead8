"""Loss families: multiclass GLM losses, binary GLM and threshold losses, and
the decomposition of piecewise-linear proper losses into threshold losses.

A GLM loss is ell(t, y) = scale * (omega(t) - <t, y>) for convex omega whose
gradient maps into the simplex; the scale puts values in [-1, 1] on the box
[-1, 1]^k. Its discrete derivative (vector of per-class losses, modulo
constant shifts) is -scale * t, which is what ties these losses to linear
multiaccuracy. Every ex-ante map here is exact, not approximate: identity for
the quadratic potential, a one-dimensional root for log-sum-exp, a vertex for
the max potential, and closed-form inverse links in the binary case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp, softmax

from .core import euclidean_simplex_projection

BOX_TOL = 1e-9


def sign_plus(x):
    """sign with sign(0) = +1, the convention used everywhere here."""
    return np.where(np.asarray(x, dtype=np.float64) >= 0.0, 1.0, -1.0)


# ---------------------------------------------------------------------------
# multiclass GLM losses


@dataclass(frozen=True)
class GlmLoss:
    """A scaled GLM loss on [-1,1]^k with exact ex-ante optimum map."""

    name: str
    k: int
    scale: float
    omega: Callable[[np.ndarray], float]
    grad_omega: Callable[[np.ndarray], np.ndarray]
    ex_ante: Callable[[np.ndarray], np.ndarray] = field(repr=False, default=None)

    def value(self, t: np.ndarray, y: int) -> float:
        t = self._check_box(t)
        return self.scale * (self.omega(t) - t[y])

    def expected_value(self, t: np.ndarray, p: np.ndarray) -> float:
        t = self._check_box(t)
        return self.scale * (self.omega(t) - float(np.dot(t, p)))

    def discrete_derivative(self, t: np.ndarray) -> np.ndarray:
        return -self.scale * np.asarray(t, dtype=np.float64)

    def ex_ante_optimum(self, p: np.ndarray) -> np.ndarray:
        if self.ex_ante is not None:
            return self.ex_ante(p)
        return solve_ex_ante_numeric(self, p)

    def _check_box(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        if t.shape != (self.k,):
            raise ValueError(f"expected t of shape ({self.k},), got {t.shape}")
        if np.max(np.abs(t)) > 1.0 + BOX_TOL:
            raise ValueError(f"t outside [-1,1]^k: max |t_i| = {np.max(np.abs(t))}")
        return t


def _cross_entropy_ex_ante(p: np.ndarray) -> np.ndarray:
    """Exact box-constrained minimizer of lse(t) - <t, p>.

    The optimum is t = clip(log p + c, -1, 1) where c solves
    log sum_j exp(clip(log p_j + c, -1, 1)) = c; the residual is monotone, so
    bisection nails it. The objective is invariant along the all-ones
    direction, so afterwards we shift to center the range (canonical output).
    """
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore"):
        logp = np.where(p > 0.0, np.log(np.maximum(p, 1e-300)), -np.inf)

    def residual(c):
        return logsumexp(np.clip(logp + c, -1.0, 1.0)) - c

    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if residual(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    t = np.clip(logp + c, -1.0, 1.0)
    shift = float(np.clip(-(t.max() + t.min()) / 2.0, -1.0 - t.min(), 1.0 - t.max()))
    return np.clip(t + shift, -1.0, 1.0)


def _max_linear_ex_ante(p: np.ndarray) -> np.ndarray:
    # max_j t_j >= <t, p> always, with equality at any t constant on supp(p);
    # the all-ones vertex attains expected loss 0, the global minimum.
    return np.ones_like(np.asarray(p, dtype=np.float64))


def cross_entropy_loss(k: int) -> GlmLoss:
    return GlmLoss(
        name="cross-entropy",
        k=k,
        scale=1.0 / (math.log(k) + 2.0),
        omega=lambda t: float(logsumexp(t)),
        grad_omega=lambda t: softmax(t),
        ex_ante=_cross_entropy_ex_ante,
    )


def brier_loss(k: int) -> GlmLoss:
    def omega(t):
        q = euclidean_simplex_projection(t)
        return float(np.dot(t, q) - 0.5 * np.dot(q, q))

    return GlmLoss(
        name="brier",
        k=k,
        scale=0.5,
        omega=omega,
        grad_omega=euclidean_simplex_projection,
        ex_ante=lambda p: np.asarray(p, dtype=np.float64).copy(),
    )


def max_linear_loss(k: int) -> GlmLoss:
    return GlmLoss(
        name="max-linear",
        k=k,
        scale=0.5,
        omega=lambda t: float(np.max(t)),
        grad_omega=lambda t: np.eye(len(t))[int(np.argmax(t))],
        ex_ante=_max_linear_ex_ante,
    )


def make_loss_bank(k: int) -> dict[str, GlmLoss]:
    losses = [cross_entropy_loss(k), brier_loss(k), max_linear_loss(k)]
    return {loss.name: loss for loss in losses}


def solve_ex_ante_numeric(loss: GlmLoss, p: np.ndarray, grid_fallback: int = 9) -> np.ndarray:
    """Box-constrained minimization of the expected loss for losses without a
    closed-form ex-ante map. L-BFGS-B from multiple starts, with a coarse grid
    start thrown in for small k."""
    p = np.asarray(p, dtype=np.float64)
    k = loss.k

    def objective(t):
        return loss.scale * (loss.omega(t) - float(np.dot(t, p)))

    def gradient(t):
        return loss.scale * (loss.grad_omega(t) - p)

    starts = [np.zeros(k), np.clip(2.0 * p - 1.0, -1.0, 1.0)]
    if k <= 3:
        axis = np.linspace(-1.0, 1.0, grid_fallback)
        grids = np.meshgrid(*([axis] * k), indexing="ij")
        candidates = np.stack([g.ravel() for g in grids], axis=1)
        best = candidates[np.argmin([objective(c) for c in candidates])]
        starts.append(best)
    best_t, best_val = None, np.inf
    for x0 in starts:
        res = minimize(objective, x0, jac=gradient, method="L-BFGS-B",
                       bounds=[(-1.0, 1.0)] * k, options={"ftol": 1e-14, "gtol": 1e-10})
        if res.fun < best_val:
            best_t, best_val = res.x, res.fun
    return np.clip(best_t, -1.0, 1.0)


# ---------------------------------------------------------------------------
# binary losses (scalar predictions, labels in {0, 1})


def threshold_value(s: float, p: float, y: float) -> float:
    """-|p - s| + (p - y) sign(p - s), with sign(0) = +1."""
    sgn = 1.0 if p - s >= 0.0 else -1.0
    return -abs(p - s) + (p - y) * sgn


@dataclass(frozen=True)
class ThresholdLoss:
    """Proper loss with weight function sign(. - s); values in [-1, 1]."""

    s: float

    @property
    def name(self) -> str:
        return f"thresh-{self.s:g}"

    def value(self, t: float, y: float) -> float:
        return threshold_value(self.s, t, y)

    def expected_value(self, t: float, phat: float) -> float:
        return (1.0 - phat) * self.value(t, 0.0) + phat * self.value(t, 1.0)

    def discrete_derivative(self, t: float) -> float:
        return self.value(t, 1.0) - self.value(t, 0.0)

    def ex_ante_optimum(self, phat: float) -> float:
        return float(phat)


@dataclass(frozen=True)
class BinaryGlmLoss:
    """Binary GLM loss scale * (omega(t) - t y) with monotone link omega'."""

    name: str
    scale: float
    omega: Callable[[float], float]
    omega_prime: Callable[[float], float]
    inv_link: Callable[[float], float] = field(repr=False)

    def value(self, t: float, y: float) -> float:
        if abs(t) > 1.0 + BOX_TOL:
            raise ValueError(f"t outside [-1,1]: {t}")
        return self.scale * (self.omega(t) - t * y)

    def expected_value(self, t: float, phat: float) -> float:
        return self.scale * (self.omega(t) - t * phat)

    def discrete_derivative(self, t: float) -> float:
        return -self.scale * t

    def ex_ante_optimum(self, phat: float) -> float:
        # scalar convex objective: the clamped root of omega'(t) = phat is
        # exactly the constrained minimizer
        return float(np.clip(self.inv_link(phat), -1.0, 1.0))


def squared_binary_loss() -> BinaryGlmLoss:
    return BinaryGlmLoss(
        name="squared",
        scale=1.0,
        omega=lambda t: (t + 1.0) ** 2 / 4.0,
        omega_prime=lambda t: (t + 1.0) / 2.0,
        inv_link=lambda p: 2.0 * p - 1.0,
    )


def log_binary_loss() -> BinaryGlmLoss:
    def logit(p):
        if p <= 0.0:
            return -np.inf
        if p >= 1.0:
            return np.inf
        return math.log(p / (1.0 - p))

    return BinaryGlmLoss(
        name="log",
        scale=1.0 / math.log1p(math.e),
        omega=lambda t: float(np.logaddexp(0.0, t)),
        omega_prime=lambda t: 1.0 / (1.0 + math.exp(-t)),
        inv_link=logit,
    )


def make_binary_loss_bank(thresholds=tuple(round(0.1 * i, 1) for i in range(1, 10))):
    bank: dict[str, object] = {}
    for loss in (squared_binary_loss(), log_binary_loss()):
        bank[loss.name] = loss
    for s in thresholds:
        loss = ThresholdLoss(s)
        bank[loss.name] = loss
    return bank


# ---------------------------------------------------------------------------
# threshold-basis decomposition of piecewise-linear proper losses


@dataclass(frozen=True)
class PiecewiseLinearConvex:
    """Convex piecewise-linear function on [0, 1]: breakpoints in (0, 1),
    one slope per segment, and the value at 0."""

    breakpoints: np.ndarray
    slopes: np.ndarray
    value0: float

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=np.float64)
        sl = np.asarray(self.slopes, dtype=np.float64)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "slopes", sl)
        if sl.size != bp.size + 1:
            raise ValueError("need exactly one slope per segment")
        if bp.size and (bp.min() <= 0.0 or bp.max() >= 1.0 or np.any(np.diff(bp) <= 0)):
            raise ValueError("breakpoints must be strictly increasing within (0, 1)")

    def value(self, p: float) -> float:
        knots = np.concatenate(([0.0], self.breakpoints))
        v = self.value0
        for left, right, slope in zip(knots[:-1], knots[1:], self.slopes[:-1]):
            if p <= right:
                return v + slope * (p - left)
            v += slope * (right - left)
        return v + self.slopes[-1] * (p - knots[-1])

    def right_slope(self, p: float) -> float:
        # at p = 1 the last segment's slope stands in for the one-sided limit
        idx = int(np.searchsorted(self.breakpoints, p, side="right"))
        return float(self.slopes[min(idx, self.slopes.size - 1)])

    def loss_value(self, p: float, y: float) -> float:
        """The proper loss induced by this potential: -psi(p) + psi'(p)(p-y)."""
        return -self.value(p) + self.right_slope(p) * (p - y)

    @classmethod
    def from_function(cls, f: Callable[[float], float], grid: np.ndarray) -> "PiecewiseLinearConvex":
        grid = np.asarray(grid, dtype=np.float64)
        vals = np.array([f(g) for g in grid])
        slopes = np.diff(vals) / np.diff(grid)
        return cls(breakpoints=grid[1:-1], slopes=slopes, value0=float(vals[0]))


@dataclass(frozen=True)
class ProperDecomposition:
    """Threshold-loss decomposition ell(p,y) = a y + b + sum_i (lam_i/2) ell_{s_i}(p,y)."""

    breakpoints: np.ndarray
    lambdas: np.ndarray
    a: float
    b: float

    @property
    def weight_budget(self) -> float:
        """Total threshold mass after folding the affine-in-y part into the
        constant-weight endpoint losses; at most 4 when |psi'| <= 2."""
        return float(np.sum(self.lambdas)) + abs(self.a)

    def reconstruct(self, p: float, y: float) -> float:
        acc = self.a * y + self.b
        for s, lam in zip(self.breakpoints, self.lambdas):
            acc += 0.5 * lam * threshold_value(float(s), p, y)
        return acc


def decompose_proper(psi: PiecewiseLinearConvex, jump_tol: float = 1e-12) -> ProperDecomposition:
    """Slope-jump decomposition of a piecewise-linear convex potential.

    lambdas are the (nonnegative) slope jumps at the breakpoints; a negative
    jump means the input is not convex and is rejected.
    """
    slopes = psi.slopes
    if np.max(np.abs(slopes), initial=0.0) > 2.0 + 1e-9:
        raise ValueError("slopes must be bounded by 2")
    jumps = np.diff(slopes)
    if jumps.size and jumps.min() < -jump_tol:
        raise ValueError(f"negative slope jump {jumps.min()}: input not convex")
    jumps = np.clip(jumps, 0.0, None)
    a = -(float(slopes[0]) + 0.5 * float(jumps.sum()))
    b = -psi.value0 + 0.5 * float(np.dot(jumps, psi.breakpoints))
    return ProperDecomposition(breakpoints=psi.breakpoints.copy(), lambdas=jumps, a=a, b=b)
