"""Simplex geometry, lattice nets over the probability simplex, and seeded RNG.

Everything downstream predicts on a finite l1-covering of the simplex, so the
net construction here is the backbone: an exact, enumerable lattice with an
invertible coordinate index, rather than an existential covering argument.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

SIMPLEX_TOL = 1e-12


class SolverConvergenceError(RuntimeError):
    """A solver hit its iteration cap before reaching its certificate."""


class InternalInvariantError(RuntimeError):
    """An internal case analysis that cannot fail by construction failed."""


def check_simplex(p, k: int | None = None, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate and renormalize a probability vector.

    Entries must be >= -tol and sum to 1 within tol; the returned copy is
    clipped and exactly renormalized.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] < 2:
        raise ValueError(f"simplex point must be a vector with k >= 2, got shape {p.shape}")
    if k is not None and p.shape[0] != k:
        raise ValueError(f"dimension mismatch: expected k={k}, got {p.shape[0]}")
    if np.min(p) < -tol:
        raise ValueError(f"negative mass {np.min(p)} below tolerance {-tol}")
    s = float(np.sum(p))
    if abs(s - 1.0) > max(tol, 1e-9 * max(1.0, abs(s))):
        raise ValueError(f"mass sums to {s}, not 1 within {tol}")
    q = np.clip(p, 0.0, None)
    return q / np.sum(q)


def euclidean_simplex_projection(t) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex."""
    t = np.asarray(t, dtype=np.float64)
    u = np.sort(t)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, t.size + 1) > (css - 1.0))[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.clip(t - theta, 0.0, None)


@dataclass(frozen=True)
class SimplexNet:
    """Lattice covering of the k-simplex with l1 radius <= eps.

    Points are all nonnegative integer combinations m with sum(m) * step == 1,
    i.e. compositions of n = 1/step, enumerated in lexicographic order of the
    first k-1 coordinates. The k vertices are lattice points themselves.
    """

    k: int
    eps: float
    step: float
    points: np.ndarray  # (N, k) float64
    _index: dict = field(repr=False)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def n_steps(self) -> int:
        return round(1.0 / self.step)

    def lattice_index(self, coords) -> int:
        """Exact position lookup from integer lattice coordinates."""
        key = tuple(int(c) for c in coords)
        return self._index[key]

    def vertex_index(self, i: int) -> int:
        coords = [0] * self.k
        coords[i] = self.n_steps
        return self.lattice_index(coords)

    def nearest(self, p) -> int:
        """Index of an l1-nearest net point; lowest index wins ties."""
        p = check_simplex(p, k=self.k)
        dists = np.abs(self.points - p[None, :]).sum(axis=1)
        return int(np.argmin(dists))

    def nearest_batch(self, P: np.ndarray) -> np.ndarray:
        dists = np.abs(self.points[None, :, :] - P[:, None, :]).sum(axis=2)
        return np.argmin(dists, axis=1)

    def to_json(self) -> str:
        return json.dumps(
            {"k": self.k, "eps": self.eps, "step": self.step, "points": self.points.tolist()}
        )

    @staticmethod
    def from_json(text: str) -> "SimplexNet":
        obj = json.loads(text)
        points = np.asarray(obj["points"], dtype=np.float64)
        index = _build_lattice_index(points, obj["step"])
        return SimplexNet(k=obj["k"], eps=obj["eps"], step=obj["step"], points=points, _index=index)


def _build_lattice_index(points: np.ndarray, step: float) -> dict:
    index = {}
    for i, row in enumerate(points):
        key = tuple(int(round(c / step)) for c in row)
        index[key] = i
    return index


def _compositions(n: int, k: int):
    """Yield all length-k tuples of nonnegative ints summing to n, lexicographic."""
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, k - 1):
            yield (first, *rest)


def net_size(k: int, n: int) -> int:
    """Closed-form lattice count: compositions of n into k parts."""
    return math.comb(n + k - 1, k - 1)


def build_simplex_net(k: int, eps: float, max_size: int = 500_000) -> SimplexNet:
    """Build the lattice eps-net of the k-simplex.

    Step is 1/n for n = ceil(2(k-1)/eps), which makes largest-remainder
    rounding of any simplex point land within l1 distance eps (in fact
    eps/2). eps > 1 is clipped to 1; eps <= 0 is rejected.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    eps = min(float(eps), 1.0)
    n = math.ceil(2 * (k - 1) / eps)
    size = net_size(k, n)
    if size > max_size:
        raise ValueError(
            f"net for k={k}, eps={eps} has {size} points, exceeding the cap {max_size}"
        )
    pts = np.array(list(_compositions(n, k)), dtype=np.float64)
    step = 1.0 / n
    points = pts * step
    index = {tuple(int(c) for c in row): i for i, row in enumerate(np.asarray(pts, dtype=np.int64))}
    return SimplexNet(k=k, eps=eps, step=step, points=points, _index=index)


def round_to_lattice(p: np.ndarray, n: int) -> np.ndarray:
    """Largest-remainder rounding of a simplex point to the 1/n lattice."""
    scaled = p * n
    base = np.floor(scaled)
    deficit = int(round(n - base.sum()))
    if deficit > 0:
        remainders = scaled - base
        top = np.argsort(-remainders, kind="stable")[:deficit]
        base[top] += 1.0
    return base / n


def binary_grid(net: SimplexNet) -> np.ndarray:
    """Ascending scalar grid of class-1 probabilities for a k=2 net."""
    if net.k != 2:
        raise ValueError("binary grid requires a k=2 net")
    return np.sort(net.points[:, 1])


@dataclass
class Rng:
    """Seeded random stream with spawnable independent sub-streams."""

    seed: int
    _gen: np.random.Generator = field(default=None, repr=False)
    _seq: np.random.SeedSequence = field(default=None, repr=False)

    def __post_init__(self):
        if self._seq is None:
            self._seq = np.random.SeedSequence(self.seed)
        if self._gen is None:
            self._gen = np.random.Generator(np.random.PCG64(self._seq))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def uniform(self, size=None):
        return self._gen.uniform(size=size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high=high, size=size)

    def normal(self, size=None):
        return self._gen.normal(size=size)

    def split(self, n: int) -> list["Rng"]:
        """Spawn n independent child streams; the parent remains usable."""
        children = self._seq.spawn(n)
        return [Rng(seed=self.seed, _seq=c, _gen=np.random.Generator(np.random.PCG64(c))) for c in children]


def sample_index(dist, rng: Rng) -> int:
    """Draw an index from a probability vector over net indices.

    Negative mass below -1e-12 or total mass off 1 by more than 1e-9 is
    rejected; anything milder is clipped and renormalized.
    """
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim != 1 or dist.size == 0:
        raise ValueError("dist must be a nonempty vector")
    if np.min(dist) < -1e-12:
        raise ValueError(f"dist has negative mass {np.min(dist)}")
    clipped = np.clip(dist, 0.0, None)
    total = float(clipped.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"dist sums to {total}, not normalizable")
    cdf = np.cumsum(clipped / total)
    u = rng.uniform()
    return int(np.searchsorted(cdf, u, side="right").clip(0, dist.size - 1))
