"""Product distributions on {-1,1}^n, perturbations, sampling and datasets."""

from __future__ import annotations

import csv
import zlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

# slack for float round-off when checking box constraints
_BOX_TOL = 1e-12


def derive_rng(seed: int, *keys) -> np.random.Generator:
    """Generator for one labelled purpose under a master seed.

    String keys are hashed with CRC32 so labels are stable across runs and
    platforms.
    """
    spawn_key = tuple(zlib.crc32(k.encode()) if isinstance(k, str) else int(k) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=spawn_key))


def is_bounded(mu, c: float) -> bool:
    mu = np.asarray(mu, dtype=float)
    return bool(np.all(np.abs(mu) <= 1.0 - c + _BOX_TOL))


@dataclass(frozen=True, eq=False)
class ProductDist:
    """Independent bits with ``E[x_i] = mu[i]``, required to be c-bounded."""

    mu: np.ndarray
    c: float

    def __post_init__(self):
        mu = np.array(self.mu, dtype=np.float64).reshape(-1)
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        if not 0.0 < self.c < 0.5:
            raise ValueError(f"margin c must lie in (0, 1/2), got {self.c}")
        if mu.size == 0:
            raise ValueError("need at least one variable")
        if not is_bounded(mu, self.c):
            raise ValueError(f"mean vector is not {self.c}-bounded")

    @property
    def n(self) -> int:
        return self.mu.size

    @cached_property
    def sigma(self) -> np.ndarray:
        s = np.sqrt(1.0 - self.mu ** 2)
        s.setflags(write=False)
        return s

    @classmethod
    def uniform(cls, n: int, c: float = 0.1) -> "ProductDist":
        return cls(np.zeros(n), c)


@dataclass(frozen=True, eq=False)
class Perturbation:
    base_mu: np.ndarray
    delta: np.ndarray
    c: float

    @cached_property
    def dist(self) -> ProductDist:
        return ProductDist(np.clip(self.base_mu + self.delta, -1 + self.c, 1 - self.c), self.c)


def draw_perturbation(base_mu, c: float, rng: np.random.Generator) -> Perturbation:
    base_mu = np.asarray(base_mu, dtype=np.float64)
    if not is_bounded(base_mu, 2 * c):
        raise ValueError(f"base mean vector must be {2 * c}-bounded")
    delta = rng.uniform(-c, c, size=base_mu.size)
    return Perturbation(base_mu, delta, c)


def perturb(base_mu, c: float, rng: np.random.Generator) -> ProductDist:
    """Add an independent uniform [-c, c] shift to each coordinate of a 2c-bounded mean."""
    return draw_perturbation(base_mu, c, rng).dist


def random_base_mu(n: int, c: float, rng: np.random.Generator, lo=None, hi=None) -> np.ndarray:
    """Uniform draw from the 2c-bounded box, or from ``[lo, hi]`` when given."""
    lo = -1 + 2 * c if lo is None else lo
    hi = 1 - 2 * c if hi is None else hi
    mu = rng.uniform(lo, hi, size=n)
    if not is_bounded(mu, 2 * c):
        raise ValueError(f"interval [{lo}, {hi}] is not {2 * c}-bounded")
    return mu


def sample(dist: ProductDist, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``m`` points as an (m, n) int8 array of +-1."""
    if m < 1:
        raise ValueError("sample size must be positive")
    u = rng.random((m, dist.n))
    return np.where(u < (1.0 + dist.mu) / 2.0, 1, -1).astype(np.int8)


def z_transform(dist: ProductDist, X) -> np.ndarray:
    """Coordinate-wise ``(x_i - mu_i) / sqrt(1 - mu_i^2)``; works on a point or a batch."""
    X = np.asarray(X, dtype=np.float64)
    return (X - dist.mu) / dist.sigma


def estimate_means(X, c: float) -> np.ndarray:
    """Empirical bit means clamped into the c-bounded box."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty (m, n) sample")
    return np.clip(X.mean(axis=0), -1 + c, 1 - c)


def exact_point_prob(dist: ProductDist, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.prod((1.0 + dist.mu * x) / 2.0))


def point_probs(dist: ProductDist, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.prod((1.0 + dist.mu * X) / 2.0, axis=1)


def all_points(n: int) -> np.ndarray:
    """Every point of {-1,1}^n as a (2^n, n) int8 array.

    Row ``k`` has ``x_i = +1`` exactly when bit ``i`` of ``k`` is set.
    """
    k = np.arange(2 ** n, dtype=np.int64)[:, None]
    bits = (k >> np.arange(n, dtype=np.int64)) & 1
    return (2 * bits - 1).astype(np.int8)


def from_binary(b):
    """Map {0,1} data (or {0,1} means) to the +-1 convention via ``2b - 1``."""
    return 2 * np.asarray(b) - 1


@dataclass(eq=False)
class Dataset:
    """Labelled examples plus the mean vector handed to the learner."""

    X: np.ndarray
    y: np.ndarray
    mu_used: np.ndarray
    _zt: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.int8)
        self.y = np.asarray(self.y, dtype=np.int8).reshape(-1)
        self.mu_used = np.asarray(self.mu_used, dtype=np.float64).reshape(-1)
        if self.X.ndim != 2 or self.X.shape[0] < 1:
            raise ValueError("dataset needs at least one example")
        if self.X.shape[0] != self.y.size:
            raise ValueError("example and label counts differ")
        if self.mu_used.size != self.X.shape[1]:
            raise ValueError("mean vector length does not match example width")
        if not np.all(np.abs(self.X) == 1):
            raise ValueError("example entries must be +-1")
        if not np.all(np.abs(self.y) == 1):
            raise ValueError("labels must be +-1")

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def zt(self) -> np.ndarray:
        """Transposed z matrix, shape (n, m), computed once."""
        if self._zt is None:
            sigma = np.sqrt(1.0 - self.mu_used ** 2)
            if np.any(sigma <= 0):
                raise ValueError("mean vector has a coordinate at +-1")
            self._zt = np.ascontiguousarray(((self.X - self.mu_used) / sigma).T)
        return self._zt

    def with_mu(self, mu) -> "Dataset":
        return Dataset(self.X, self.y, mu)

    @classmethod
    def generate(cls, f, dist: ProductDist, m: int, rng: np.random.Generator) -> "Dataset":
        X = sample(dist, m, rng)
        return cls(X, f.evaluate_many(X), dist.mu)


def write_dataset_csv(dataset: Dataset, path) -> None:
    header = [f"x{i + 1}" for i in range(dataset.n)] + ["y"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        rows = np.column_stack([dataset.X, dataset.y]).tolist()
        w.writerows(rows)


def read_dataset_csv(path, mu=None) -> Dataset:
    """Read the ``x1..xn,y`` CSV. Without ``mu`` the empirical means are used unclamped."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if not header or header[-1] != "y" or header[:-1] != [f"x{i + 1}" for i in range(len(header) - 1)]:
            raise ValueError(f"{path}: header must be x1,...,xn,y")
        data = np.array([[int(v) for v in row] for row in r if row], dtype=np.int8)
    if data.size == 0:
        raise ValueError(f"{path}: no examples")
    X, y = data[:, :-1], data[:, -1]
    if mu is None:
        mu = X.mean(axis=0)
    return Dataset(X, y, mu)


def write_means(mu, path) -> None:
    Path(path).write_text("".join(f"{float(v)!r}\n" for v in np.asarray(mu).reshape(-1)))


def read_means(path) -> np.ndarray:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    return np.array([float(ln) for ln in lines if ln], dtype=np.float64)
