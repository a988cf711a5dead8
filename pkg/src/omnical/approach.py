"""Simultaneous approachability driver.

One loop covers both operating modes: "deterministic" plays the oracle's
mixture directly (contextless analysis, step size ~ 1/sqrt(T)), "sampled"
draws a pure net point with the mixture as its conditional mean and uses the
high-probability step size ~ 1/sqrt(5T). Per-set online learners supply the
distinguishers; a mixture oracle turns the current weights and distinguishers
into the next action. The driver's own weights over sets follow exponential
reweighting by the realized scalar gains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import Rng, sample_index

DETERMINISTIC = "deterministic"
SAMPLED = "sampled"


@dataclass
class PayoffSet:
    """One approachability target: a learner over its distinguisher class plus
    the maps defining its vector payoff.

    payoff(support, probs, b) -> realized payoff vector for a (possibly
    mixed) action; pair(u, v, x) -> scalar gain <u(x), v>; learner_gain(v, x)
    -> the gradient fed to the learner; sup_average(gain_sum, T) -> exact sup
    over the distinguisher class of the averaged payoff. width bounds |pair|.
    """

    set_id: str
    learner: object
    payoff: Callable
    pair: Callable
    learner_gain: Callable
    sup_average: Callable
    width: float = 1.0


@dataclass
class ApproachState:
    """Round-by-round record of one driver run."""

    m: int
    T: int
    mode: str
    eta: float
    weights: np.ndarray            # (T, m) weights used at each round
    gains: np.ndarray              # (T, m) realized scalar gains
    mean_gains: np.ndarray | None  # (T, m) conditional means of the gains
    action_idx: np.ndarray         # (T,) sampled action index, -1 if unsampled
    gain_sums: dict = field(default_factory=dict)   # set_id -> summed learner gains
    earned: dict = field(default_factory=dict)      # set_id -> sum_t <u_t, v_t>
    set_ids: list = field(default_factory=list)

    def round_records(self):
        for t in range(self.T):
            rec = {
                "t": t,
                "w": [float(v) for v in self.weights[t]],
                "gains": [float(v) for v in self.gains[t]],
                "action_index": int(self.action_idx[t]),
            }
            if self.mean_gains is not None:
                rec["mean_gains"] = [float(v) for v in self.mean_gains[t]]
            yield rec


def driver_step_size(m: int, L: float, T: int, mode: str) -> float:
    if m <= 1:
        return 0.0
    horizon = 5.0 * T if mode == SAMPLED else float(T)
    return math.sqrt(2.0 * math.log(m)) / (L * math.sqrt(horizon))


def run_approach(sets: list[PayoffSet], oracle: Callable, stream, T: int,
                 mode: str = SAMPLED, rng: Rng | None = None,
                 record_mean_gains: bool = True) -> ApproachState:
    """Run the coupled protocol for T rounds over a stream of (x_t, b_t).

    The oracle is called as oracle(w, currents, x, rng) and must return
    (support_indices, probs) over the action set before b_t is revealed.
    Learner and oracle contract violations are re-raised with the round index.
    """
    if mode not in (DETERMINISTIC, SAMPLED):
        raise ValueError(f"unknown mode {mode!r}")
    if T < 1:
        raise ValueError("T must be >= 1")
    if rng is None:
        rng = Rng(0)
    m = len(sets)
    L = max(s.width for s in sets)
    eta = driver_step_size(m, L, T, mode)
    w = np.full(m, 1.0 / m)

    weights = np.empty((T, m))
    gains = np.empty((T, m))
    mean_gains = np.empty((T, m)) if (record_mean_gains and mode == SAMPLED) else None
    action_idx = np.full(T, -1, dtype=np.int64)
    gain_sums = {s.set_id: None for s in sets}
    earned = {s.set_id: 0.0 for s in sets}

    it = iter(stream)
    for t in range(T):
        x_t, b_t = next(it)
        currents = [s.learner.current() for s in sets]
        try:
            support, probs = oracle(w, currents, x_t, rng)
        except Exception as exc:
            raise RuntimeError(f"oracle failed at round {t}: {exc}") from exc
        support = np.atleast_1d(np.asarray(support, dtype=np.int64))
        probs = np.atleast_1d(np.asarray(probs, dtype=np.float64))

        if mode == SAMPLED:
            j = support[sample_index(probs, rng)] if support.size > 1 else int(support[0])
            action_idx[t] = j
            played_support = np.array([j], dtype=np.int64)
            played_probs = np.array([1.0])
        else:
            played_support, played_probs = support, probs

        weights[t] = w
        g = np.empty(m)
        for i, s in enumerate(sets):
            try:
                v = s.payoff(played_support, played_probs, b_t)
                g[i] = s.pair(currents[i], v, x_t)
                lg = s.learner_gain(v, x_t)
                s.learner.observe(lg)
            except Exception as exc:
                raise RuntimeError(f"set {s.set_id!r} failed at round {t}: {exc}") from exc
            gain_sums[s.set_id] = lg.copy() if gain_sums[s.set_id] is None else gain_sums[s.set_id] + lg
            earned[s.set_id] += g[i]
            if mean_gains is not None:
                v_mean = s.payoff(support, probs, b_t)
                mean_gains[t, i] = s.pair(currents[i], v_mean, x_t)
        gains[t] = g

        if m > 1:
            logw = np.log(w) + eta * g
            logw -= logw.max()
            w = np.exp(logw)
            w /= w.sum()

    return ApproachState(m=m, T=T, mode=mode, eta=eta, weights=weights, gains=gains,
                         mean_gains=mean_gains, action_idx=action_idx,
                         gain_sums=gain_sums, earned=earned,
                         set_ids=[s.set_id for s in sets])


def average_payoff(state: ApproachState, sets: list[PayoffSet], set_id: str) -> float:
    """Exact sup over the set's distinguisher class of the averaged payoff."""
    matches = [s for s in sets if s.set_id == set_id]
    if not matches:
        raise KeyError(f"unknown set id {set_id!r}")
    return float(matches[0].sup_average(state.gain_sums[set_id], state.T))


def realized_learner_regret(state: ApproachState, sets: list[PayoffSet], set_id: str) -> float:
    """sup_u sum_t <u, v_t> minus what the learner actually earned."""
    matches = [s for s in sets if s.set_id == set_id]
    if not matches:
        raise KeyError(f"unknown set id {set_id!r}")
    sup_avg = matches[0].sup_average(state.gain_sums[set_id], state.T)
    return float(sup_avg * state.T - state.earned[set_id])
