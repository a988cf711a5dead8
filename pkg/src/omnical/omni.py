"""End-to-end omnipredictor pipelines.

Online pipelines couple a calibration learner and one comparator learner per
family through the mixture oracle and the approachability driver; statistical
pipelines run the same loop against one fresh i.i.d. example per round and
return a randomized predictor that replays a uniformly random round. Reports
carry the closed-form calibration/multiaccuracy sups, per-loss gaps against
an ERM-plus-ground-truth benchmark, and the traced quantities that make the
gap <= multiaccuracy + calibration decomposition checkable on every run.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import metrics as mt
from .approach import DETERMINISTIC, SAMPLED, ApproachState, PayoffSet, run_approach
from .core import Rng, SimplexNet, binary_grid, build_simplex_net, sample_index
from .datagen import Stream
from .learners import BALL, BOX, ROWBALL, MwuLearner, PgdLearner, theoretical_regret
from .losses import make_binary_loss_bank, make_loss_bank
from .oracles import (BinaryOracleInput, binary_cmloo_support, calibration_adjoint,
                      multiaccuracy_adjoint, multiclass_mloo)

BINARY_BUDGET = 15.0
MULTICLASS_ONLINE_BUDGET = 12.0
MULTICLASS_STAT_BUDGET = 9.0


@dataclass(frozen=True)
class PipelineConfig:
    k: int
    d: int
    eps: float
    T: int | None = None
    delta: float = 0.01
    seed: int = 0
    c1: float = 1.0
    c2: float = 1.0
    erm_iters: int = 200
    net_cap: int = 500_000
    record_mean_gains: bool = False

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0):
            raise ValueError("eps must lie in (0, 1)")
        if self.T is not None and self.T < 1:
            raise ValueError("T must be >= 1")

    def horizon(self, statistical: bool = False) -> int:
        if self.T is not None:
            return self.T
        if self.k == 2:
            base = self.c2 * math.log(1.0 / (self.delta * self.eps)) / self.eps**2
            return int(math.ceil(base))
        return int(math.ceil(self.c1 * self.k * (1.0 / self.eps) ** (self.k + 1)
                             + self.c2 * math.log(1.0 / self.delta) / self.eps**2))

    def to_dict(self) -> dict:
        return {"k": self.k, "d": self.d, "eps": self.eps, "T": self.T,
                "delta": self.delta, "seed": self.seed, "c1": self.c1, "c2": self.c2,
                "erm_iters": self.erm_iters}


@dataclass(frozen=True)
class ComparatorFamily:
    """A comparator class: bounded linear maps on top of a feature map with
    norm at most 1 on the feature domain."""

    name: str
    feature_map: Callable[[np.ndarray], np.ndarray]
    dim: int


def linear_family(d: int) -> ComparatorFamily:
    return ComparatorFamily(name="linear", feature_map=lambda x: x, dim=d)


def quadratic_family(d: int) -> ComparatorFamily:
    return ComparatorFamily(name="square", feature_map=lambda x: x * x, dim=d)


FAMILY_REGISTRY = {"linear": linear_family, "square": quadratic_family}


@dataclass
class OnlineResult:
    preds: np.ndarray              # binary: scalar predictions; multiclass: (T, k) points
    pred_idx: np.ndarray           # indices into the grid / net
    state: ApproachState
    report: mt.MetricsReport
    benchmark: dict
    net: SimplexNet | None = None
    grid: np.ndarray | None = None


# ---------------------------------------------------------------------------
# binary online


def _binary_sets(grid: np.ndarray, d: int, T: int, stochastic: bool):
    n = grid.shape[0]
    signs = np.where(grid[:, None] >= grid[None, :], 1.0, -1.0)  # sign(p_j - s)

    def cal_payoff(support, probs, y):
        coef = probs * (grid[support] - y)
        return coef @ signs[support]

    cal = PayoffSet(
        set_id="calibration",
        learner=MwuLearner(n, T, gain_bound=1.0, stochastic=stochastic),
        payoff=cal_payoff,
        pair=lambda u, v, x: float(u @ v),
        learner_gain=lambda v, x: v,
        sup_average=lambda gsum, T_: float(gsum.max()) / T_,
        width=1.0,
    )

    comp = PayoffSet(
        set_id="multiaccuracy",
        learner=PgdLearner(BALL, (d,), T, stochastic=stochastic),
        payoff=lambda support, probs, y: float(probs @ grid[support] - y),
        pair=lambda c, v, x: v * float(np.clip(c @ x, -1.0, 1.0)),
        learner_gain=lambda v, x: v * x,
        sup_average=lambda gsum, T_: float(np.linalg.norm(gsum)) / T_,
        width=1.0,
    )
    return [cal, comp]


def _binary_oracle(grid: np.ndarray):
    def oracle(w, currents, x, rng):
        u1, c = currents
        d_val = float(np.clip(c @ x, -1.0, 1.0))
        inp = BinaryOracleInput(q=float(w[0]), r=float(w[1]), u=u1, d=d_val)
        lo, hi, w_lo = binary_cmloo_support(inp, grid)
        if lo == hi:
            return np.array([lo]), np.array([1.0])
        return np.array([lo, hi]), np.array([w_lo, 1.0 - w_lo])

    return oracle


def fit_online_binary(stream: Stream, cfg: PipelineConfig) -> OnlineResult:
    """Online binary pipeline: predictions on the scalar grid, chosen each
    round before the label is revealed."""
    t0 = time.perf_counter()
    T = cfg.horizon()
    if stream.T < T:
        raise ValueError(f"stream has {stream.T} rounds, config needs {T}")
    if np.max(np.linalg.norm(stream.X[:T], axis=1)) > 1.0 + 1e-9:
        raise ValueError("features must lie in the unit ball")
    if not np.all((stream.labels[:T] == 0) | (stream.labels[:T] == 1)):
        raise ValueError("binary labels must be 0/1")
    net = build_simplex_net(2, cfg.eps, max_size=cfg.net_cap)
    grid = binary_grid(net)
    sets = _binary_sets(grid, cfg.d, T, stochastic=False)
    rng = Rng(cfg.seed)
    pairs = zip(stream.X[:T], stream.labels[:T].astype(np.float64))
    state = run_approach(sets, _binary_oracle(grid), pairs, T, mode=SAMPLED, rng=rng,
                         record_mean_gains=cfg.record_mean_gains)
    pred_idx = state.action_idx
    preds = grid[pred_idx]
    report = build_report_binary(preds, stream.labels[:T], stream.X[:T], grid, cfg,
                                 truth=stream.truth, state=state, sets=sets)
    report.wallclock_ms = 1000.0 * (time.perf_counter() - t0)
    bench = _binary_benchmark(stream.X[:T], stream.labels[:T], cfg, stream.truth)
    return OnlineResult(preds=preds, pred_idx=pred_idx, state=state, report=report,
                        benchmark=bench, net=net, grid=grid)


def _binary_benchmark(X, labels, cfg, truth):
    bank = make_binary_loss_bank()
    return mt.build_benchmark_binary(bank, X, labels, truth=truth, erm_iters=cfg.erm_iters)


def build_report_binary(preds, labels, X, grid, cfg: PipelineConfig, truth=None,
                        state: ApproachState | None = None, sets=None) -> mt.MetricsReport:
    T = len(preds)
    bank = make_binary_loss_bank()
    bench = mt.build_benchmark_binary(bank, X, labels, truth=truth, erm_iters=cfg.erm_iters)
    gaps, argmins, w_cal, traced_ma = {}, {}, {}, {}
    for name, loss in bank.items():
        gaps[name], argmins[name] = mt.omni_gap_binary(loss, preds, labels, X, bench)
        w_cal[name] = mt.traced_w_calibration_binary(loss, preds, labels)
        traced_ma[name] = mt.traced_multiaccuracy_binary(loss, preds, labels, X, bench)
    regret = _regret_diagnostics(state, sets, {
        "calibration": theoretical_regret("mwu", T, m=grid.shape[0], L=1.0),
        "multiaccuracy": theoretical_regret("pgd-ball", T),
    })
    return mt.MetricsReport(
        kind="binary", T=T, k=2, eps=cfg.eps, seed=cfg.seed,
        calibration=mt.thresh_calibration(preds, labels, grid),
        calibration_abs=mt.thresh_calibration(preds, labels, grid, absolute=True),
        multiaccuracy=mt.multiaccuracy_binary(preds, labels, X),
        gaps=gaps, gap_argmin=argmins, w_calibration=w_cal, traced_multiaccuracy=traced_ma,
        regret=regret, theorem_budget=BINARY_BUDGET * cfg.eps, config=cfg.to_dict(),
    )


def _regret_diagnostics(state, sets, bounds: dict) -> dict:
    out = {"bounds": bounds}
    if state is not None and sets is not None:
        from .approach import realized_learner_regret

        out["realized"] = {s.set_id: realized_learner_regret(state, sets, s.set_id)
                           for s in sets}
        out["driver_eta"] = state.eta
    return out


# ---------------------------------------------------------------------------
# multiclass online (single family and unions share one implementation)


def _multiclass_sets(net: SimplexNet, families, T: int, stochastic: bool):
    n = len(net)
    k = net.k

    def cal_payoff(support, probs, y):
        v = np.zeros((n, k))
        v[support] = probs[:, None] * (net.points[support] - mt.one_hot([y], k)[0])
        return v

    sets = [PayoffSet(
        set_id="calibration",
        learner=PgdLearner(BOX, (n, k), T, eps=net.eps, stochastic=stochastic),
        payoff=cal_payoff,
        pair=lambda u, v, x: float(np.sum(u * v)),
        learner_gain=lambda v, x: v,
        sup_average=lambda gsum, T_: float(np.abs(gsum).sum()) / T_,
        width=2.0,
    )]
    for fam in families:
        def payoff(support, probs, y):
            return probs @ net.points[support] - mt.one_hot([y], k)[0]

        def pair(C, v, x, _fm=fam.feature_map):
            return float(np.clip(C @ _fm(x), -1.0, 1.0) @ v)

        def learner_gain(v, x, _fm=fam.feature_map):
            return np.outer(v, _fm(x))

        sets.append(PayoffSet(
            set_id=f"ma-{fam.name}",
            learner=PgdLearner(ROWBALL, (k, fam.dim), T, stochastic=stochastic),
            payoff=payoff,
            pair=pair,
            learner_gain=learner_gain,
            sup_average=lambda gsum, T_: float(np.linalg.norm(gsum, axis=1).sum()) / T_,
            width=2.0,
        ))
    return sets


def _multiclass_oracle(net: SimplexNet, families, max_iter: int | None = None):
    n = len(net)
    adjoints = [calibration_adjoint] + [multiaccuracy_adjoint(n)] * len(families)

    def oracle(w, currents, x, rng):
        u1 = currents[0]
        dvecs = [np.clip(C @ fam.feature_map(x), -1.0, 1.0)
                 for C, fam in zip(currents[1:], families)]
        res = multiclass_mloo(w, [u1] + dvecs, adjoints, net, R=1.0, eps=net.eps,
                              max_iter=max_iter)
        support = np.nonzero(res.a > 0.0)[0]
        return support, res.a[support]

    return oracle


def fit_online_multiclass(stream: Stream, cfg: PipelineConfig,
                          families=None) -> OnlineResult:
    """Online multiclass pipeline over the lattice net; a single linear
    comparator family unless a union of families is supplied."""
    t0 = time.perf_counter()
    T = cfg.horizon()
    if stream.T < T:
        raise ValueError(f"stream has {stream.T} rounds, config needs {T}")
    if np.max(np.linalg.norm(stream.X[:T], axis=1)) > 1.0 + 1e-9:
        raise ValueError("features must lie in the unit ball")
    families = families or [linear_family(cfg.d)]
    net = build_simplex_net(cfg.k, cfg.eps, max_size=cfg.net_cap)
    sets = _multiclass_sets(net, families, T, stochastic=False)
    rng = Rng(cfg.seed)
    pairs = zip(stream.X[:T], stream.labels[:T])
    state = run_approach(sets, _multiclass_oracle(net, families), pairs, T,
                         mode=SAMPLED, rng=rng, record_mean_gains=cfg.record_mean_gains)
    pred_idx = state.action_idx
    preds = net.points[pred_idx]
    report = build_report_multiclass(pred_idx, stream.labels[:T], stream.X[:T], net, cfg,
                                     truth=stream.truth, state=state, sets=sets,
                                     families=families,
                                     budget=MULTICLASS_ONLINE_BUDGET)
    report.wallclock_ms = 1000.0 * (time.perf_counter() - t0)
    bench = _multiclass_benchmark(stream.X[:T], stream.labels[:T], cfg, stream.truth, families)
    return OnlineResult(preds=preds, pred_idx=pred_idx, state=state, report=report,
                        benchmark=bench, net=net)


def fit_union(stream: Stream, cfg: PipelineConfig, families) -> OnlineResult:
    """Omniprediction against the union of the supplied comparator families."""
    if not families:
        raise ValueError("need at least one comparator family")
    return fit_online_multiclass(stream, cfg, families=families)


def _multiclass_benchmark(X, labels, cfg, truth, families) -> dict:
    bank = make_loss_bank(cfg.k)
    bench: dict[str, tuple[ComparatorFamily, np.ndarray]] = {}
    for fam in families:
        Phi = np.apply_along_axis(fam.feature_map, 1, X)
        fam_truth = truth if (fam.name == "linear" and truth is not None
                              and np.ndim(truth) == 2) else None
        for name, C in mt.build_benchmark_multiclass(bank, Phi, labels, truth=fam_truth,
                                                     erm_iters=cfg.erm_iters).items():
            bench[f"{fam.name}:{name}"] = (fam, C)
    return bench


def build_report_multiclass(pred_idx, labels, X, net: SimplexNet, cfg: PipelineConfig,
                            truth=None, state=None, sets=None, families=None,
                            budget: float = MULTICLASS_ONLINE_BUDGET) -> mt.MetricsReport:
    T = len(pred_idx)
    families = families or [linear_family(cfg.d)]
    bank = make_loss_bank(cfg.k)
    bench = _multiclass_benchmark(X, labels, cfg, truth, families)
    feats = {fam.name: np.apply_along_axis(fam.feature_map, 1, X) for fam in families}
    gaps, argmins, w_cal, traced_ma = {}, {}, {}, {}
    for name, loss in bank.items():
        kstar_net = np.stack([loss.ex_ante_optimum(s) for s in net.points])
        own = float(mt.glm_values_batch(loss, kstar_net[pred_idx], labels).mean())
        best_name, best_val = None, np.inf
        ma_best = -np.inf
        E = net.points[pred_idx] - mt.one_hot(labels, net.k)
        for bname, (fam, C) in bench.items():
            vals = mt.comparator_values_multiclass(C, feats[fam.name])
            v = float(mt.glm_values_batch(loss, vals, labels).mean())
            if v < best_val:
                best_name, best_val = bname, v
            ma_best = max(ma_best, float(np.einsum("tj,tj->t", E, -loss.scale * vals).mean()))
        gaps[name] = own - best_val
        argmins[name] = best_name
        traced_ma[name] = ma_best
        w_cal[name] = mt.traced_w_calibration_multiclass(loss, pred_idx, labels, net)
    fam_ma = {fam.name: mt.multiaccuracy_multiclass(net.points[pred_idx], labels, feats[fam.name])
              for fam in families}
    bounds = {"calibration": theoretical_regret("pgd-box", T, eps=net.eps, kn=net.k * len(net))}
    for fam in families:
        bounds[f"ma-{fam.name}"] = theoretical_regret("pgd-rowball", T, k=net.k)
    regret = _regret_diagnostics(state, sets, bounds)
    return mt.MetricsReport(
        kind="multiclass", T=T, k=cfg.k, eps=cfg.eps, seed=cfg.seed,
        calibration=mt.linf_calibration(pred_idx, labels, net),
        calibration_abs=mt.linf_calibration(pred_idx, labels, net),
        multiaccuracy=max(fam_ma.values()),
        gaps=gaps, gap_argmin=argmins, w_calibration=w_cal, traced_multiaccuracy=traced_ma,
        family_multiaccuracy=fam_ma, regret=regret,
        theorem_budget=budget * cfg.eps, config=cfg.to_dict(),
    )


# ---------------------------------------------------------------------------
# statistical pipelines


@dataclass
class StatPredictorBinary:
    """Randomized binary predictor: replay the oracle inputs of a uniformly
    random training round at the query point."""

    grid: np.ndarray
    weights: np.ndarray    # (T, 2)
    cal_dists: np.ndarray  # (T, N)
    comparators: np.ndarray  # (T, d)
    eps: float
    seed: int
    config: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return self.weights.shape[0]

    def round_dist(self, x: np.ndarray, t: int) -> np.ndarray:
        d_val = float(np.clip(self.comparators[t] @ x, -1.0, 1.0))
        inp = BinaryOracleInput(q=float(self.weights[t, 0]), r=float(self.weights[t, 1]),
                                u=self.cal_dists[t], d=d_val)
        lo, hi, w_lo = binary_cmloo_support(inp, self.grid)
        dist = np.zeros(self.grid.shape[0])
        dist[lo] += w_lo
        dist[hi] += 1.0 - w_lo
        return dist

    def predict(self, x: np.ndarray, rng: Rng) -> float:
        t = int(rng.integers(0, self.T))
        return float(self.grid[sample_index(self.round_dist(x, t), rng)])

    def mean_prediction(self, x: np.ndarray) -> float:
        acc = 0.0
        for t in range(self.T):
            acc += float(self.round_dist(x, t) @ self.grid)
        return acc / self.T


def fit_statistical_binary(train: Stream, cfg: PipelineConfig) -> StatPredictorBinary:
    """One fresh example per round; learners run on conditionally unbiased
    gains, and the returned predictor replays a uniform round."""
    T = cfg.horizon(statistical=True)
    if train.T < T:
        raise ValueError(f"sample exhaustion: {train.T} examples for {T} rounds")
    net = build_simplex_net(2, cfg.eps, max_size=cfg.net_cap)
    grid = binary_grid(net)
    n = grid.shape[0]
    signs = np.where(grid[:, None] >= grid[None, :], 1.0, -1.0)
    cal = MwuLearner(n, T, gain_bound=1.0, stochastic=True)
    comp = PgdLearner(BALL, (cfg.d,), T, stochastic=True)
    eta = math.sqrt(2.0 * math.log(2.0)) / math.sqrt(5.0 * T)
    w = np.full(2, 0.5)
    W = np.empty((T, 2))
    U1 = np.empty((T, n))
    Cs = np.empty((T, cfg.d))
    for t in range(T):
        x, y = train.X[t], float(train.labels[t])
        u1, c = cal.current(), comp.current()
        W[t], U1[t], Cs[t] = w, u1, c
        d_val = float(np.clip(c @ x, -1.0, 1.0))
        inp = BinaryOracleInput(q=float(w[0]), r=float(w[1]), u=u1, d=d_val)
        lo, hi, w_lo = binary_cmloo_support(inp, grid)
        support = np.array([lo, hi]) if lo != hi else np.array([lo])
        probs = np.array([w_lo, 1.0 - w_lo]) if lo != hi else np.array([1.0])
        coef = probs * (grid[support] - y)
        v1 = coef @ signs[support]
        v2 = float(probs @ grid[support] - y)
        g = np.array([float(u1 @ v1), d_val * v2])
        cal.observe(v1)
        comp.observe(v2 * x)
        logw = np.log(w) + eta * g
        logw -= logw.max()
        w = np.exp(logw)
        w /= w.sum()
    return StatPredictorBinary(grid=grid, weights=W, cal_dists=U1, comparators=Cs,
                               eps=cfg.eps, seed=cfg.seed, config=cfg.to_dict())


@dataclass
class StatPredictorMulticlass:
    """Randomized multiclass predictor over the net, replaying stored rounds."""

    net: SimplexNet
    families: list
    weights: np.ndarray            # (T, m)
    cal_dists: np.ndarray          # (T, N, k)
    comparators: list              # per family: (T, k, dim)
    eps: float
    seed: int
    config: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return self.weights.shape[0]

    def round_dist(self, x: np.ndarray, t: int) -> np.ndarray:
        adjoints = [calibration_adjoint] + [multiaccuracy_adjoint(len(self.net))] * len(self.families)
        dvecs = [np.clip(self.comparators[i][t] @ fam.feature_map(x), -1.0, 1.0)
                 for i, fam in enumerate(self.families)]
        res = multiclass_mloo(self.weights[t], [self.cal_dists[t]] + dvecs, adjoints,
                              self.net, R=1.0, eps=self.net.eps)
        return res.a

    def predict_index(self, x: np.ndarray, rng: Rng) -> int:
        t = int(rng.integers(0, self.T))
        return sample_index(self.round_dist(x, t), rng)

    def predict(self, x: np.ndarray, rng: Rng) -> np.ndarray:
        return self.net.points[self.predict_index(x, rng)]

    def mean_prediction(self, x: np.ndarray) -> np.ndarray:
        acc = np.zeros(self.net.k)
        for t in range(self.T):
            acc += self.round_dist(x, t) @ self.net.points
        return acc / self.T


def fit_statistical_multiclass(train: Stream, cfg: PipelineConfig,
                               families=None) -> StatPredictorMulticlass:
    T = cfg.horizon(statistical=True)
    if train.T < T:
        raise ValueError(f"sample exhaustion: {train.T} examples for {T} rounds")
    families = families or [linear_family(cfg.d)]
    net = build_simplex_net(cfg.k, cfg.eps, max_size=cfg.net_cap)
    n, k = len(net), cfg.k
    m = 1 + len(families)
    cal = PgdLearner(BOX, (n, k), T, eps=net.eps, stochastic=True)
    comps = [PgdLearner(ROWBALL, (k, fam.dim), T, stochastic=True) for fam in families]
    adjoints = [calibration_adjoint] + [multiaccuracy_adjoint(n)] * len(families)
    eta = math.sqrt(2.0 * math.log(m)) / (2.0 * math.sqrt(5.0 * T)) if m > 1 else 0.0
    w = np.full(m, 1.0 / m)
    W = np.empty((T, m))
    U1 = np.empty((T, n, k))
    Cs = [np.empty((T, k, fam.dim)) for fam in families]
    for t in range(T):
        x, y = train.X[t], int(train.labels[t])
        u1 = cal.current()
        W[t], U1[t] = w, u1
        dvecs = []
        for i, (fam, comp) in enumerate(zip(families, comps)):
            Cs[i][t] = comp.current()
            dvecs.append(np.clip(comp.current() @ fam.feature_map(x), -1.0, 1.0))
        res = multiclass_mloo(w, [u1] + dvecs, adjoints, net, R=1.0, eps=net.eps)
        a = res.a
        e_y = mt.one_hot([y], k)[0]
        v1 = a[:, None] * (net.points - e_y)
        v2 = a @ net.points - e_y
        g = np.empty(m)
        g[0] = float(np.sum(u1 * v1))
        for i, (fam, comp) in enumerate(zip(families, comps)):
            g[1 + i] = float(dvecs[i] @ v2)
        cal.observe(v1)
        for i, (fam, comp) in enumerate(zip(families, comps)):
            comp.observe(np.outer(v2, fam.feature_map(x)))
        if m > 1:
            logw = np.log(w) + eta * g
            logw -= logw.max()
            w = np.exp(logw)
            w /= w.sum()
    return StatPredictorMulticlass(net=net, families=list(families), weights=W, cal_dists=U1,
                                   comparators=Cs, eps=cfg.eps, seed=cfg.seed,
                                   config=cfg.to_dict())


def evaluate_binary_predictor(pred: StatPredictorBinary, eval_stream: Stream,
                              cfg: PipelineConfig, rng: Rng | None = None) -> mt.MetricsReport:
    """Estimate the population metrics of a randomized binary predictor on a
    held-out sample (one draw per point)."""
    rng = rng or Rng(cfg.seed + 1)
    preds = np.array([pred.predict(x, rng) for x in eval_stream.X])
    report = build_report_binary(preds, eval_stream.labels, eval_stream.X, pred.grid, cfg,
                                 truth=eval_stream.truth)
    report.theorem_budget = BINARY_BUDGET * cfg.eps
    return report


def evaluate_multiclass_predictor(pred: StatPredictorMulticlass, eval_stream: Stream,
                                  cfg: PipelineConfig, rng: Rng | None = None) -> mt.MetricsReport:
    rng = rng or Rng(cfg.seed + 1)
    idx = np.array([pred.predict_index(x, rng) for x in eval_stream.X])
    return build_report_multiclass(idx, eval_stream.labels, eval_stream.X, pred.net, cfg,
                                   truth=eval_stream.truth, families=pred.families,
                                   budget=MULTICLASS_STAT_BUDGET)


# ---------------------------------------------------------------------------
# trace files (one JSON record per round, header first)

TRACE_SCHEMA = "omnical-trace-v1"


def write_trace(path, kind: str, cfg: PipelineConfig, X, labels, preds, pred_idx,
                state: ApproachState | None = None) -> None:
    with open(path, "w") as fh:
        header = {"schema": TRACE_SCHEMA, "kind": kind, "config": cfg.to_dict()}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for t in range(len(preds)):
            rec = {
                "t": t,
                "x": [float(v) for v in X[t]],
                "label": int(labels[t]),
                "p_index": int(pred_idx[t]),
                "p": (float(preds[t]) if np.ndim(preds[t]) == 0
                      else [float(v) for v in preds[t]]),
            }
            if state is not None:
                rec["w"] = [float(v) for v in state.weights[t]]
                rec["gains"] = [float(v) for v in state.gains[t]]
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_trace(path):
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("schema") != TRACE_SCHEMA:
            raise ValueError(f"not an omnical trace: {path}")
        rows = [json.loads(line) for line in fh if line.strip()]
    X = np.array([r["x"] for r in rows])
    labels = np.array([r["label"] for r in rows], dtype=np.int64)
    pred_idx = np.array([r["p_index"] for r in rows], dtype=np.int64)
    preds = np.array([r["p"] for r in rows])
    return header, X, labels, preds, pred_idx


def report_from_trace(path) -> mt.MetricsReport:
    """Recompute the full metrics report from a saved trace."""
    header, X, labels, preds, pred_idx = read_trace(path)
    cfg = PipelineConfig(**{k: v for k, v in header["config"].items()
                            if k in PipelineConfig.__dataclass_fields__})
    if header["kind"] == "binary":
        net = build_simplex_net(2, cfg.eps)
        return build_report_binary(preds, labels, X, binary_grid(net), cfg)
    net = build_simplex_net(cfg.k, cfg.eps)
    return build_report_multiclass(pred_idx, labels, X, net, cfg)
