"""Synthetic streams with known ground truth for tests and experiments.

Features are uniform on the unit ball (normalized Gaussian direction with a
radius drawn as U^(1/d)), so the norm constraint that the pipelines assume
holds exactly. Labels follow the declared conditional law per kind.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .core import Rng

KINDS = ("softmax-linear", "logistic-binary", "fixed-marginal", "adversarial-alternating")


@dataclass(frozen=True)
class StreamSpec:
    kind: str
    d: int
    k: int
    T: int
    seed: int
    q: np.ndarray | None = None          # fixed-marginal law
    noise: float = 0.0                    # optional label-flip probability
    comparator_scale: float = 1.0         # scales the ground-truth linear map

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown stream kind {self.kind!r}; choose from {KINDS}")
        if self.T < 1 or self.d < 1 or self.k < 2:
            raise ValueError("need T >= 1, d >= 1, k >= 2")
        if self.kind == "logistic-binary" and self.k != 2:
            raise ValueError("logistic-binary streams are k=2")
        if self.kind == "fixed-marginal":
            if self.q is None:
                raise ValueError("fixed-marginal streams need the label law q")
            object.__setattr__(self, "q", np.asarray(self.q, dtype=np.float64))


@dataclass
class Stream:
    X: np.ndarray            # (T, d) features, each within the unit ball
    labels: np.ndarray       # (T,) class indices
    truth: np.ndarray | None  # ground-truth comparator: (d,) binary, (k,d) multiclass

    @property
    def T(self) -> int:
        return self.X.shape[0]


def _unit_ball(rng: np.random.Generator, T: int, d: int) -> np.ndarray:
    g = rng.normal(size=(T, d))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    radii = rng.uniform(size=(T, 1)) ** (1.0 / d)
    return g / np.maximum(norms, 1e-300) * radii


def _row_ball_matrix(rng: np.random.Generator, k: int, d: int, scale: float) -> np.ndarray:
    C = rng.normal(size=(k, d))
    C /= np.maximum(np.linalg.norm(C, axis=1, keepdims=True), 1e-300)
    return scale * C


def generate(spec: StreamSpec) -> Stream:
    rng = Rng(spec.seed).generator
    X = _unit_ball(rng, spec.T, spec.d)
    truth = None
    if spec.kind == "softmax-linear":
        truth = _row_ball_matrix(rng, spec.k, spec.d, spec.comparator_scale)
        logits = X @ truth.T
        m = logits.max(axis=1, keepdims=True)
        P = np.exp(logits - m)
        P /= P.sum(axis=1, keepdims=True)
        u = rng.uniform(size=(spec.T, 1))
        labels = (np.cumsum(P, axis=1) < u).sum(axis=1).clip(0, spec.k - 1)
    elif spec.kind == "logistic-binary":
        c = rng.normal(size=spec.d)
        c /= max(np.linalg.norm(c), 1e-300)
        c *= spec.comparator_scale
        p1 = 1.0 / (1.0 + np.exp(-(X @ c)))
        labels = (rng.uniform(size=spec.T) < p1).astype(np.int64)
        truth = c
    elif spec.kind == "fixed-marginal":
        q = spec.q / spec.q.sum()
        u = rng.uniform(size=(spec.T, 1))
        labels = (np.cumsum(q)[None, :] < u).sum(axis=1).clip(0, spec.k - 1)
    else:  # adversarial-alternating
        labels = np.arange(spec.T, dtype=np.int64) % spec.k
    labels = np.asarray(labels, dtype=np.int64)
    if spec.noise > 0.0:
        flip = rng.uniform(size=spec.T) < spec.noise
        labels = np.where(flip, rng.integers(0, spec.k, size=spec.T), labels)
    return Stream(X=X, labels=labels, truth=truth)


def write_csv(stream: Stream, path) -> None:
    d = stream.X.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(d)] + ["label"])
        for row, lab in zip(stream.X, stream.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(lab)])


def read_csv(path) -> Stream:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = len(header) - 1
        X, labels = [], []
        for row in reader:
            X.append([float(v) for v in row[:d]])
            labels.append(int(row[d]))
    return Stream(X=np.asarray(X, dtype=np.float64), labels=np.asarray(labels, dtype=np.int64),
                  truth=None)
