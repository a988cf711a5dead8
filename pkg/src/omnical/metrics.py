"""Closed-form evaluators for calibration, multiaccuracy, and omniprediction
gaps, plus the ERM comparator benchmark the gaps are measured against.

The two calibration/multiaccuracy sups have exact closed forms because the
distinguisher classes are a box (sup of a linear functional = entrywise l1
norm), a Euclidean ball (= l2 norm), a row-wise ball (= sum of row norms),
and a simplex (= max coordinate). Everything is one-sided, matching the
definitions; absolute variants are logged alongside for diagnostics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .core import SimplexNet
from .losses import BinaryGlmLoss, GlmLoss, ThresholdLoss, sign_plus


def one_hot(labels: np.ndarray, k: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    return np.eye(k, dtype=np.float64)[labels]


# ---------------------------------------------------------------------------
# batched potential evaluation for the multiclass bank


def _project_rows_to_simplex(T: np.ndarray) -> np.ndarray:
    n, k = T.shape
    u = -np.sort(-T, axis=1)
    css = np.cumsum(u, axis=1)
    idx = np.arange(1, k + 1, dtype=np.float64)
    cond = u * idx[None, :] > (css - 1.0)
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = (css[np.arange(n), rho] - 1.0) / (rho + 1.0)
    return np.clip(T - theta[:, None], 0.0, None)


def omega_batch(loss: GlmLoss, T: np.ndarray) -> np.ndarray:
    """Row-wise potential values for the bank losses; generic fallback loops."""
    if loss.name == "cross-entropy":
        m = T.max(axis=1, keepdims=True)
        return (m + np.log(np.exp(T - m).sum(axis=1, keepdims=True)))[:, 0]
    if loss.name == "brier":
        Q = _project_rows_to_simplex(T)
        return np.einsum("ij,ij->i", T, Q) - 0.5 * np.einsum("ij,ij->i", Q, Q)
    if loss.name == "max-linear":
        return T.max(axis=1)
    return np.array([loss.omega(row) for row in T])


def grad_omega_batch(loss: GlmLoss, T: np.ndarray) -> np.ndarray:
    """Row-wise potential gradients (each row lands on the simplex)."""
    if loss.name == "cross-entropy":
        m = T.max(axis=1, keepdims=True)
        e = np.exp(T - m)
        return e / e.sum(axis=1, keepdims=True)
    if loss.name == "brier":
        return _project_rows_to_simplex(T)
    if loss.name == "max-linear":
        return one_hot(np.argmax(T, axis=1), T.shape[1])
    return np.stack([loss.grad_omega(row) for row in T])


def glm_values_batch(loss: GlmLoss, T: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """scale * (omega(t_row) - t_row[label]) per row."""
    om = omega_batch(loss, T)
    picked = T[np.arange(T.shape[0]), np.asarray(labels, dtype=np.int64)]
    return loss.scale * (om - picked)


def binary_values_batch(loss, t: np.ndarray, y: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if isinstance(loss, ThresholdLoss):
        return -np.abs(t - loss.s) + (t - y) * sign_plus(t - loss.s)
    if loss.name == "squared":
        return loss.scale * ((t + 1.0) ** 2 / 4.0 - t * y)
    if loss.name == "log":
        return loss.scale * (np.logaddexp(0.0, t) - t * y)
    return np.array([loss.value(ti, yi) for ti, yi in zip(t, y)])


def binary_link_batch(loss: BinaryGlmLoss, t: np.ndarray) -> np.ndarray:
    """Vectorized omega' for the binary GLM bank."""
    t = np.asarray(t, dtype=np.float64)
    if loss.name == "squared":
        return (t + 1.0) / 2.0
    if loss.name == "log":
        return 1.0 / (1.0 + np.exp(-t))
    return np.array([loss.omega_prime(ti) for ti in t])


# ---------------------------------------------------------------------------
# calibration and multiaccuracy sups


def thresh_calibration(preds: np.ndarray, labels: np.ndarray, grid: np.ndarray,
                       absolute: bool = False) -> float:
    """max over grid thresholds s of (1/T) sum_t (p_t - y_t) sign(p_t - s)."""
    preds = np.asarray(preds, dtype=np.float64)
    err = preds - np.asarray(labels, dtype=np.float64)
    signs = np.where(preds[:, None] >= grid[None, :], 1.0, -1.0)
    corr = err @ signs / preds.shape[0]
    return float(np.abs(corr).max()) if absolute else float(corr.max())


def linf_calibration(pred_idx: np.ndarray, labels: np.ndarray, net: SimplexNet) -> float:
    """(1/T) sum over net points of the l1 norm of that bucket's summed error.

    This is the exact sup over box distinguishers in [-1,1]^(N x k) of the
    averaged calibration payoff.
    """
    pred_idx = np.asarray(pred_idx, dtype=np.int64)
    T = pred_idx.shape[0]
    dev = np.zeros_like(net.points)
    np.add.at(dev, pred_idx, net.points[pred_idx] - one_hot(labels, net.k))
    return float(np.abs(dev).sum() / T)


def multiaccuracy_binary(preds: np.ndarray, labels: np.ndarray, X: np.ndarray) -> float:
    """Exact sup over unit-ball linear distinguishers: ||mean (p-y) x||_2."""
    err = np.asarray(preds, dtype=np.float64) - np.asarray(labels, dtype=np.float64)
    return float(np.linalg.norm(err @ X / X.shape[0]))


def multiaccuracy_multiclass(P: np.ndarray, labels: np.ndarray, X: np.ndarray) -> float:
    """Exact sup over row-ball linear maps: sum of row norms of mean error outer x."""
    E = P - one_hot(labels, P.shape[1])
    G = E.T @ X / X.shape[0]
    return float(np.linalg.norm(G, axis=1).sum())


# ---------------------------------------------------------------------------
# omniprediction gaps against a finite comparator benchmark


def comparator_values_binary(c: np.ndarray, X: np.ndarray) -> np.ndarray:
    return np.clip(X @ c, -1.0, 1.0)


def comparator_values_multiclass(C: np.ndarray, X: np.ndarray) -> np.ndarray:
    return np.clip(X @ C.T, -1.0, 1.0)


def omni_gap_binary(loss, preds, labels, X, benchmark: Mapping[str, np.ndarray]):
    """(gap, best comparator name) for one binary loss."""
    preds = np.asarray(preds, dtype=np.float64)
    kstar = np.array([loss.ex_ante_optimum(p) for p in np.unique(preds)])
    lookup = dict(zip(np.unique(preds), kstar))
    post = np.array([lookup[p] for p in preds])
    own = float(binary_values_batch(loss, post, labels).mean())
    best_name, best_val = None, np.inf
    for name, c in benchmark.items():
        v = float(binary_values_batch(loss, comparator_values_binary(c, X), labels).mean())
        if v < best_val:
            best_name, best_val = name, v
    return own - best_val, best_name


def omni_gap_multiclass(loss: GlmLoss, pred_idx, labels, X, net: SimplexNet,
                        benchmark: Mapping[str, np.ndarray]):
    pred_idx = np.asarray(pred_idx, dtype=np.int64)
    kstar_net = np.stack([loss.ex_ante_optimum(s) for s in net.points])
    own = float(glm_values_batch(loss, kstar_net[pred_idx], labels).mean())
    best_name, best_val = None, np.inf
    for name, C in benchmark.items():
        v = float(glm_values_batch(loss, comparator_values_multiclass(C, X), labels).mean())
        if v < best_val:
            best_name, best_val = name, v
    return own - best_val, best_name


def traced_w_calibration_binary(loss, preds, labels) -> float:
    """(1/T) sum_t (p_t - y_t) * w(p_t) with w = -(discrete derivative of the
    loss composed with its ex-ante map)."""
    preds = np.asarray(preds, dtype=np.float64)
    uniq = np.unique(preds)
    w_at = {p: -loss.discrete_derivative(loss.ex_ante_optimum(p)) for p in uniq}
    w = np.array([w_at[p] for p in preds])
    err = preds - np.asarray(labels, dtype=np.float64)
    return float(np.mean(err * w))


def traced_w_calibration_multiclass(loss: GlmLoss, pred_idx, labels, net: SimplexNet) -> float:
    pred_idx = np.asarray(pred_idx, dtype=np.int64)
    w_net = np.stack([-loss.discrete_derivative(loss.ex_ante_optimum(s)) for s in net.points])
    E = net.points[pred_idx] - one_hot(labels, net.k)
    return float(np.einsum("tj,tj->t", E, w_net[pred_idx]).mean())


def traced_multiaccuracy_binary(loss, preds, labels, X,
                                benchmark: Mapping[str, np.ndarray]) -> float:
    """max over the benchmark comparators of the correlation between the
    prediction errors and the loss's discrete derivative of that comparator."""
    preds = np.asarray(preds, dtype=np.float64)
    err = preds - np.asarray(labels, dtype=np.float64)
    best = -np.inf
    for c in benchmark.values():
        vals = comparator_values_binary(c, X)
        d = binary_values_batch(loss, vals, np.ones_like(vals)) - binary_values_batch(
            loss, vals, np.zeros_like(vals))
        best = max(best, float(np.mean(err * d)))
    return best


def traced_multiaccuracy_multiclass(loss: GlmLoss, pred_idx, labels, X, net: SimplexNet,
                                    benchmark: Mapping[str, np.ndarray]) -> float:
    pred_idx = np.asarray(pred_idx, dtype=np.int64)
    E = net.points[pred_idx] - one_hot(labels, net.k)
    best = -np.inf
    for C in benchmark.values():
        D = -loss.scale * comparator_values_multiclass(C, X)
        best = max(best, float(np.einsum("tj,tj->t", E, D).mean()))
    return best


# ---------------------------------------------------------------------------
# ERM benchmark comparators (projected subgradient descent, deterministic)


def _project_ball(c: np.ndarray) -> np.ndarray:
    nrm = float(np.linalg.norm(c))
    return c / nrm if nrm > 1.0 else c


def _project_rowball(C: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(C, axis=1, keepdims=True)
    return C * np.where(norms > 1.0, 1.0 / np.maximum(norms, 1e-300), 1.0)


def fit_erm_binary(loss: BinaryGlmLoss, X: np.ndarray, labels: np.ndarray,
                   iters: int = 200) -> np.ndarray:
    """Best unit-ball linear comparator for one binary GLM loss."""
    y = np.asarray(labels, dtype=np.float64)
    c = np.zeros(X.shape[1])
    best_c, best_obj = c.copy(), np.inf
    for j in range(iters):
        t = np.clip(X @ c, -1.0, 1.0)
        obj = float(binary_values_batch(loss, t, y).mean())
        if obj < best_obj:
            best_c, best_obj = c.copy(), obj
        lp = binary_link_batch(loss, t)
        grad = loss.scale * (X.T @ (lp - y)) / X.shape[0]
        c = _project_ball(c - (1.0 / math.sqrt(j + 1.0)) * grad)
    return best_c


def fit_erm_multiclass(loss: GlmLoss, X: np.ndarray, labels: np.ndarray,
                       iters: int = 200) -> np.ndarray:
    """Best row-ball linear comparator for one multiclass GLM loss."""
    Y = one_hot(labels, loss.k)
    C = np.zeros((loss.k, X.shape[1]))
    best_C, best_obj = C.copy(), np.inf
    for j in range(iters):
        T = np.clip(X @ C.T, -1.0, 1.0)
        obj = float(glm_values_batch(loss, T, labels).mean())
        if obj < best_obj:
            best_C, best_obj = C.copy(), obj
        grad = loss.scale * (grad_omega_batch(loss, T) - Y).T @ X / X.shape[0]
        C = _project_rowball(C - (1.0 / math.sqrt(j + 1.0)) * grad)
    return best_C


def build_benchmark_binary(bank, X, labels, truth: np.ndarray | None = None,
                           erm_iters: int = 200) -> dict[str, np.ndarray]:
    bench: dict[str, np.ndarray] = {"zero": np.zeros(X.shape[1])}
    if truth is not None:
        bench["truth"] = np.asarray(truth, dtype=np.float64)
    for name, loss in bank.items():
        if isinstance(loss, BinaryGlmLoss):
            bench[f"erm-{name}"] = fit_erm_binary(loss, X, labels, erm_iters)
    return bench


def build_benchmark_multiclass(bank, X, labels, truth: np.ndarray | None = None,
                               erm_iters: int = 200) -> dict[str, np.ndarray]:
    k = next(iter(bank.values())).k
    bench: dict[str, np.ndarray] = {"zero": np.zeros((k, X.shape[1]))}
    if truth is not None:
        bench["truth"] = np.asarray(truth, dtype=np.float64)
    for name, loss in bank.items():
        bench[f"erm-{name}"] = fit_erm_multiclass(loss, X, labels, erm_iters)
    return bench


# ---------------------------------------------------------------------------
# the report


@dataclass
class MetricsReport:
    kind: str  # "binary" or "multiclass"
    T: int
    k: int
    eps: float
    seed: int
    calibration: float             # thresh (binary) or box/linf (multiclass)
    calibration_abs: float
    multiaccuracy: float
    gaps: dict = field(default_factory=dict)
    gap_argmin: dict = field(default_factory=dict)
    w_calibration: dict = field(default_factory=dict)
    traced_multiaccuracy: dict = field(default_factory=dict)
    family_multiaccuracy: dict = field(default_factory=dict)
    regret: dict = field(default_factory=dict)
    theorem_budget: float = 0.0
    config: dict = field(default_factory=dict)
    wallclock_ms: float = 0.0
    timestamp: str = ""

    def max_gap(self) -> float:
        return max(self.gaps.values()) if self.gaps else 0.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "T": self.T, "k": self.k, "eps": self.eps,
            "seed": self.seed, "calibration": self.calibration,
            "calibration_abs": self.calibration_abs,
            "multiaccuracy": self.multiaccuracy, "gaps": self.gaps,
            "gap_argmin": self.gap_argmin, "w_calibration": self.w_calibration,
            "traced_multiaccuracy": self.traced_multiaccuracy,
            "family_multiaccuracy": self.family_multiaccuracy,
            "regret": self.regret, "theorem_budget": self.theorem_budget,
            "config": self.config, "wallclock_ms": self.wallclock_ms,
            "timestamp": self.timestamp,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "MetricsReport":
        return MetricsReport(**json.loads(text))
