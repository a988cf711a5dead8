"""Executable negative results.

Two checks: (i) two scalar targets that are each approachable in isolation
but provably not simultaneously, because the two average payoffs always sum
to one; (ii) the cyclically-monotone (multiclass isotonic) regression
instance whose squared-loss and log-loss minimizers differ, so the
loss-independence enjoyed by one-dimensional isotonic regression fails in
higher dimension. The isotonic solver is certified only for this instance
family and its one-parameter reduction; it is a verification harness, not a
general solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Rng

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# simultaneous approachability impossibility


@dataclass
class ImpossibilityReport:
    T: int
    avg_first: float       # average of a_t[0]
    avg_second: float      # average of a_t[1]
    total: float           # their sum; identically 1
    worst: float           # max of the two averages; always >= 1/2
    constant_play: dict = field(default_factory=dict)

    @property
    def sum_is_one(self) -> bool:
        return abs(self.total - 1.0) <= 1e-12

    @property
    def max_at_least_half(self) -> bool:
        return self.worst >= 0.5 - 1e-12


def demo_mloo_impossibility(T: int, actions: np.ndarray | None = None,
                            rng: Rng | None = None) -> ImpossibilityReport:
    """Evaluate both scalar payoffs (first and second action coordinate) on an
    action sequence over the 2-simplex.

    Whatever the sequence, the two averages sum to 1, so at least one is
    >= 1/2: no coupled strategy drives both below. Constant play drives
    either one alone to zero, which the report also records.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if actions is None:
        rng = rng or Rng(0)
        first = rng.uniform(size=T)
        actions = np.stack([first, 1.0 - first], axis=1)
    actions = np.asarray(actions, dtype=np.float64)
    if actions.shape != (T, 2) or np.min(actions) < -1e-12:
        raise ValueError("actions must be a (T, 2) array of simplex points")
    avg1 = float(actions[:, 0].mean())
    avg2 = float(actions[:, 1].mean())
    constant = {
        "play-second": {"avg_first": 0.0, "avg_second": 1.0},
        "play-first": {"avg_first": 1.0, "avg_second": 0.0},
    }
    return ImpossibilityReport(T=T, avg_first=avg1, avg_second=avg2,
                               total=avg1 + avg2, worst=max(avg1, avg2),
                               constant_play=constant)


# ---------------------------------------------------------------------------
# multiclass isotonic regression counterexample


SQUARED = "squared"
LOG = "log"

PAPER_V = np.array([[0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]).T   # v_1 = 0, v_2 = e_1
PAPER_Y = np.array([0, 1])                                    # labels e_1, e_2
SQUARED_MINIMIZER = np.array([[3.0 / 7.0, 3.0 / 7.0],
                              [2.0 / 7.0, 4.0 / 7.0],
                              [2.0 / 7.0, 0.0]])


@dataclass(frozen=True)
class IsotonicInstance:
    V: np.ndarray          # (n, k) unlinked predictor values
    labels: np.ndarray     # (n,) class indices of the vertex labels
    loss: str = SQUARED

    def __post_init__(self):
        V = np.asarray(self.V, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "labels", labels)
        if self.loss not in (SQUARED, LOG):
            raise ValueError(f"loss must be {SQUARED!r} or {LOG!r}")
        if V.ndim != 2 or V.shape[1] < 2 or labels.shape[0] != V.shape[0]:
            raise ValueError("V must be (n, k) with one label per row, k >= 2")


@dataclass
class IsotonicSolution:
    P: np.ndarray          # (n, k) fitted simplex points
    t: float               # the scalar parameter of the certified family
    objective: float
    feasible: bool
    stationarity: float    # |d objective / d t| at the optimum (0 at interior optimum)


def paper_instance(loss: str = SQUARED) -> IsotonicInstance:
    return IsotonicInstance(V=PAPER_V, labels=PAPER_Y, loss=loss)


def _is_paper_family(inst: IsotonicInstance) -> bool:
    if inst.V.shape != (2, 3) or not np.array_equal(inst.labels, PAPER_Y):
        return False
    diff = inst.V[0] - inst.V[1]
    return np.allclose(diff, [-1.0, 0.0, 0.0]) and np.allclose(inst.V[0], 0.0)


def _family_points(t: float) -> np.ndarray:
    return np.array([[t, (1.0 - t) / 2.0, (1.0 - t) / 2.0],
                     [t, 1.0 - t, 0.0]])


def _family_objective(t: float, loss: str) -> float:
    if loss == SQUARED:
        # 1/2 ||p_1 - e_1||^2 + 1/2 ||p_2 - e_2||^2 along the family
        return 0.5 * ((1.0 - t) ** 2 + 0.5 * (1.0 - t) ** 2 + 2.0 * t * t)
    return -math.log(max(t, 1e-300)) - math.log(max(1.0 - t, 1e-300))


def _golden_section(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def cyclic_monotonicity_violation(P: np.ndarray, V: np.ndarray) -> float:
    """Worst violation of the pairwise constraints <p_j, v_i - v_j> <= f_i - f_j
    over all potentials f (0 when some feasible f exists).

    Feasibility of a potential is a shortest-path/no-negative-cycle condition;
    for two points it reduces to the two-cycle sum."""
    n = P.shape[0]
    worst = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            # two-cycle i -> j -> i must have nonnegative slack sum
            cyc = float(P[j] @ (V[i] - V[j]) + P[i] @ (V[j] - V[i]))
            worst = max(worst, cyc)
    return worst


def solve_isotonic(inst: IsotonicInstance) -> IsotonicSolution:
    """Certified solve: the degenerate equal-predictor case and the paper's
    two-point family (reduced to one scalar, minimized by golden section)."""
    if inst.V.shape[0] == 2 and np.allclose(inst.V[0], inst.V[1]):
        # equal unlinked values force equal potentials; constraints are vacuous
        P = np.eye(inst.V.shape[1])[inst.labels].astype(np.float64)
        return IsotonicSolution(P=P, t=float(P[0, 0]), objective=0.0, feasible=True,
                                stationarity=0.0)
    if not _is_paper_family(inst):
        raise ValueError("solver is certified only for the two-point counterexample family")
    lo = 1e-9 if inst.loss == LOG else 0.0
    hi = 1.0 - lo
    t = _golden_section(lambda u: _family_objective(u, inst.loss), lo, hi)
    P = _family_points(t)
    h = 1e-6
    deriv = (_family_objective(min(t + h, hi), inst.loss)
             - _family_objective(max(t - h, lo), inst.loss)) / (2.0 * h)
    return IsotonicSolution(P=P, t=t, objective=_family_objective(t, inst.loss),
                            feasible=cyclic_monotonicity_violation(P, inst.V) <= 1e-9,
                            stationarity=abs(deriv))


@dataclass
class CounterexampleReport:
    squared_P: np.ndarray
    squared_t: float
    log_t: float
    squared_matches_closed_form: bool
    log_differs: bool
    candidate_beats_squared_minimizer: bool
    margin_matrix: float
    margin_t: float
    margin_log_objective: float

    @property
    def passed(self) -> bool:
        return (self.squared_matches_closed_form and self.log_differs
                and self.candidate_beats_squared_minimizer)


def verify_isotonic_counterexample(matrix_tol: float = 1e-6,
                                   t_tol: float = 1e-3) -> CounterexampleReport:
    """True iff the squared-loss minimizer matches the closed form 3/7 family
    and the log-loss optimum lands at a different parameter (it sits at 1/2,
    where -log(1/4) beats -log(12/49))."""
    sq = solve_isotonic(paper_instance(SQUARED))
    lg = solve_isotonic(paper_instance(LOG))
    matrix_err = float(np.max(np.abs(sq.P.T - SQUARED_MINIMIZER)))
    log_at_sq_t = _family_objective(sq.t, LOG)
    log_at_candidate = _family_objective(0.5, LOG)  # the explicit 1/2 candidate
    return CounterexampleReport(
        squared_P=sq.P,
        squared_t=sq.t,
        log_t=lg.t,
        squared_matches_closed_form=matrix_err <= matrix_tol,
        log_differs=abs(lg.t - 3.0 / 7.0) > t_tol,
        candidate_beats_squared_minimizer=log_at_candidate < log_at_sq_t,
        margin_matrix=matrix_err,
        margin_t=abs(lg.t - 3.0 / 7.0),
        margin_log_objective=log_at_sq_t - log_at_candidate,
    )
