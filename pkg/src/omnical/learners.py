"""Online learners: multiplicative weights over a simplex and projected
gradient ascent over box / ball / row-ball feasible sets.

All learners maximize cumulative gain <point, gain_t> against adversarial
gain sequences; gains outside the declared bound are rejected rather than
clipped, since clipping would void the regret guarantees. Step sizes default
to the horizon-tuned schedules the regret bounds assume; the stochastic flag
switches to the high-probability schedule (the deterministic one scaled by
1/sqrt(5)) used when gains are only conditionally unbiased.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

GAIN_TOL = 1e-9


# ---------------------------------------------------------------------------
# multiplicative weights


@dataclass(frozen=True)
class MwuState:
    weights: np.ndarray
    eta: float
    gain_bound: float
    t: int = 0


def mwu_init(m: int, horizon: int, gain_bound: float = 1.0, eta: float | None = None,
             stochastic: bool = False) -> MwuState:
    if m < 1 or horizon < 1:
        raise ValueError("need m >= 1 and horizon >= 1")
    if eta is None:
        scale = 5.0 * horizon if stochastic else float(horizon)
        eta = math.sqrt(2.0 * math.log(max(m, 1)) / scale) / gain_bound if m > 1 else 0.0
    return MwuState(weights=np.full(m, 1.0 / m), eta=float(eta), gain_bound=float(gain_bound))


def mwu_update(state: MwuState, gains) -> MwuState:
    """Exponential reweighting by exp(eta * gains), renormalized."""
    gains = np.asarray(gains, dtype=np.float64)
    if gains.shape != state.weights.shape:
        raise ValueError(f"gain shape {gains.shape} != weights shape {state.weights.shape}")
    if np.max(np.abs(gains)) > state.gain_bound + GAIN_TOL:
        raise ValueError(
            f"gain magnitude {np.max(np.abs(gains))} exceeds declared bound {state.gain_bound}"
        )
    logw = np.log(state.weights) + state.eta * gains
    logw -= logw.max()
    w = np.exp(logw)
    w /= w.sum()
    return replace(state, weights=w, t=state.t + 1)


# ---------------------------------------------------------------------------
# projected gradient ascent

BOX = "box"
BALL = "ball"
ROWBALL = "rowball"

_GAIN_BOUNDS = {BOX: 2.0, BALL: 1.0, ROWBALL: 2.0}


@dataclass(frozen=True)
class PgdState:
    point: np.ndarray
    kind: str
    eta: float
    radius: float = 1.0
    t: int = 0


def _project(point: np.ndarray, kind: str, radius: float) -> np.ndarray:
    if kind == BOX:
        return np.clip(point, -1.0, 1.0)
    if kind == BALL:
        nrm = float(np.linalg.norm(point))
        return point * (radius / nrm) if nrm > radius else point
    if kind == ROWBALL:
        norms = np.linalg.norm(point, axis=1, keepdims=True)
        scale = np.where(norms > radius, radius / np.maximum(norms, 1e-300), 1.0)
        return point * scale
    raise ValueError(f"unknown feasible set kind {kind!r}")


def pgd_init(kind: str, shape, horizon: int, eta: float | None = None,
             eps: float | None = None, stochastic: bool = False,
             radius: float = 1.0) -> PgdState:
    """Start at the center of the feasible set with the bound-matching step.

    Box over [-1,1]^shape uses eta = eps/2 (eps/10 stochastic); the unit ball
    uses 1/sqrt(T); the row-ball over k x d matrices uses sqrt(k)/(2 sqrt(T)).
    Stochastic ball/row-ball schedules divide by sqrt(5).
    """
    point = np.zeros(shape, dtype=np.float64)
    if eta is None:
        if kind == BOX:
            if eps is None:
                raise ValueError("box learner needs its accuracy parameter eps")
            eta = eps / 10.0 if stochastic else eps / 2.0
        elif kind == BALL:
            eta = 1.0 / math.sqrt(5.0 * horizon if stochastic else horizon)
        elif kind == ROWBALL:
            k = shape[0]
            eta = 0.5 * math.sqrt(k / (5.0 * horizon if stochastic else float(horizon)))
        else:
            raise ValueError(f"unknown feasible set kind {kind!r}")
    return PgdState(point=point, kind=kind, eta=float(eta), radius=radius)


def _gain_norm(gain: np.ndarray, kind: str) -> float:
    return float(np.linalg.norm(gain))  # entrywise l2 in every case


def pgd_update(state: PgdState, gain) -> PgdState:
    """Ascent step then exact projection back onto the feasible set."""
    gain = np.asarray(gain, dtype=np.float64)
    if gain.shape != state.point.shape:
        raise ValueError(f"gain shape {gain.shape} != point shape {state.point.shape}")
    bound = _GAIN_BOUNDS[state.kind]
    if _gain_norm(gain, state.kind) > bound + GAIN_TOL:
        raise ValueError(f"gain norm {_gain_norm(gain, state.kind)} exceeds bound {bound}")
    point = _project(state.point + state.eta * gain, state.kind, state.radius)
    return replace(state, point=point, t=state.t + 1)


# ---------------------------------------------------------------------------
# driver-facing wrappers: init / current point / observe gain

class MwuLearner:
    """Multiplicative weights over m arms, class interface for the driver."""

    def __init__(self, m: int, horizon: int, gain_bound: float = 1.0,
                 eta: float | None = None, stochastic: bool = False):
        self.state = mwu_init(m, horizon, gain_bound, eta, stochastic)

    def current(self) -> np.ndarray:
        return self.state.weights

    def observe(self, gain) -> None:
        self.state = mwu_update(self.state, gain)


class PgdLearner:
    """Projected gradient ascent over a box, ball, or row-ball."""

    def __init__(self, kind: str, shape, horizon: int, eta: float | None = None,
                 eps: float | None = None, stochastic: bool = False, radius: float = 1.0):
        self.state = pgd_init(kind, shape, horizon, eta, eps, stochastic, radius)

    def current(self) -> np.ndarray:
        return self.state.point

    def observe(self, gain) -> None:
        self.state = pgd_update(self.state, gain)

    def observe_box_row(self, row: int, gain_row: np.ndarray) -> None:
        """Sparse box update: only one row of the matrix point moves."""
        if self.state.kind != BOX:
            raise ValueError("row update only applies to box sets")
        if float(np.linalg.norm(gain_row)) > _GAIN_BOUNDS[BOX] + GAIN_TOL:
            raise ValueError("gain norm exceeds bound")
        point = self.state.point
        point[row] = np.clip(point[row] + self.state.eta * gain_row, -1.0, 1.0)
        self.state = replace(self.state, point=point, t=self.state.t + 1)


class ConstantLearner:
    """Singleton distinguisher class: plays one fixed point, zero regret."""

    def __init__(self, value):
        self.value = value

    def current(self):
        return self.value

    def observe(self, gain) -> None:
        pass


# ---------------------------------------------------------------------------
# closed-form regret bounds, used as test assertions and report diagnostics

def theoretical_regret(kind: str, T: int, **params) -> float:
    """Closed-form cumulative regret bound for a learner kind over horizon T.

    Kinds: mwu (params m, L), mwu-net (eps), mwu-net-stat (eps, delta),
    pgd-ball, pgd-ball-stat (delta), pgd-box (eps, kn), pgd-box-stat
    (eps, kn, delta), pgd-rowball (k), pgd-rowball-stat (k, delta),
    sgd-high-prob (L, theta, radius, delta).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if kind == "mwu":
        return params.get("L", 1.0) * math.sqrt(2.0 * T * math.log(params["m"]))
    if kind == "mwu-net":
        return math.sqrt(2.0 * T * math.log(1.0 / params["eps"] + 2.0))
    if kind == "mwu-net-stat":
        return 20.0 * math.sqrt(T * math.log(4.0 / (params["delta"] * params["eps"])))
    if kind == "pgd-ball":
        return math.sqrt(T)
    if kind == "pgd-ball-stat":
        return 20.0 * math.sqrt(T * math.log(2.0 / params["delta"]))
    if kind == "pgd-box":
        return params["eps"] * T + params["kn"] / params["eps"]
    if kind == "pgd-box-stat":
        return (params["eps"] * T + 10.0 * params["kn"] / params["eps"]
                + 32.0 * math.sqrt(T * math.log(2.0 / params["delta"])))
    if kind == "pgd-rowball":
        return 2.0 * math.sqrt(params["k"] * T)
    if kind == "pgd-rowball-stat":
        return 40.0 * math.sqrt(params["k"] * T * math.log(2.0 / params["delta"]))
    if kind == "sgd-high-prob":
        L, theta, radius = params["L"], params["theta"], params["radius"]
        return (4.0 * L * math.sqrt(T * theta)
                + 16.0 * L * radius * math.sqrt(T * math.log(2.0 / params["delta"])))
    raise ValueError(f"unknown regret kind {kind!r}")


def realized_regret_mwu(weights_played: np.ndarray, gains: np.ndarray) -> float:
    """sup over the simplex of sum_t <w - w_t, g_t>, computed in closed form."""
    total = gains.sum(axis=0)
    earned = float(np.sum(weights_played * gains))
    return float(total.max() - earned)


def realized_regret_pgd(points_played, gains, kind: str, radius: float = 1.0) -> float:
    """sup over the feasible set of sum_t <u - u_t, g_t> in closed form."""
    total = np.sum(gains, axis=0)
    earned = float(sum(np.sum(p * g) for p, g in zip(points_played, gains)))
    if kind == BOX:
        best = float(np.abs(total).sum())
    elif kind == BALL:
        best = radius * float(np.linalg.norm(total))
    elif kind == ROWBALL:
        best = radius * float(np.linalg.norm(total, axis=1).sum())
    else:
        raise ValueError(f"unknown feasible set kind {kind!r}")
    return best - earned
