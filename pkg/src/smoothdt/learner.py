"""Top-down heavy-coefficient search and the sign-of-polynomial hypothesis."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dist import Dataset, ProductDist, all_points, estimate_means, point_probs, sample
from .fourier import (
    ENUM_CAP,
    EnumerationCapError,
    SparsePoly,
    estimate_many,
    eval_poly,
    format_subset,
    function_values,
    members,
    popcount,
    read_coeff_rows,
    write_coeff_csv,
)


def default_threshold(m: int) -> float:
    return m ** (-1.0 / 3.0)


def default_depth(m: int, mu) -> int:
    """``floor(ln(m) / 12 * (1 - max |mu_i|))``."""
    v = 1.0 - float(np.max(np.abs(mu)))
    return max(0, int(math.floor(math.log(m) / 12.0 * v)))


@dataclass
class LearnerConfig:
    """Learner knobs. ``None`` fields take their data-dependent defaults."""

    c: float = 0.1
    threshold: float | None = None
    depth_cap: int | None = None
    frontier_cap: int | None = None
    mu_source: str = "exact"

    def __post_init__(self):
        if self.mu_source not in ("exact", "estimated"):
            raise ValueError(f"mu_source must be 'exact' or 'estimated', got {self.mu_source!r}")
        if self.threshold is not None and self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.depth_cap is not None and self.depth_cap < 0:
            raise ValueError("depth cap must be non-negative")
        if self.frontier_cap is not None and self.frontier_cap < 1:
            raise ValueError("frontier cap must be at least 1")

    def resolve(self, m: int, mu) -> tuple:
        t = default_threshold(m) if self.threshold is None else self.threshold
        D = default_depth(m, mu) if self.depth_cap is None else self.depth_cap
        cap = m if self.frontier_cap is None else self.frontier_cap
        return t, D, cap


@dataclass
class Frontier:
    """Retained subsets in insertion order, grouped by the level that added them."""

    levels: list = field(default_factory=lambda: [[0]])
    estimates: dict = field(default_factory=dict)

    @property
    def sets(self) -> list:
        return [S for level in self.levels for S in level]

    def __len__(self):
        return sum(len(level) for level in self.levels)

    def __contains__(self, S):
        return S in self.estimates

    def sizes(self) -> list:
        """Cumulative ``|S_d|`` for d = 0, 1, ..."""
        out, total = [], 0
        for level in self.levels:
            total += len(level)
            out.append(total)
        return out


class Hypothesis:
    """``sign(p(x))`` with ties broken to +1."""

    def __init__(self, poly: SparsePoly):
        if poly.basis != "z":
            raise ValueError("hypothesis polynomial must be in the z basis")
        self.poly = poly

    @property
    def n(self):
        return self.poly.n

    @property
    def mu(self):
        return self.poly.mu

    def evaluate_many(self, X) -> np.ndarray:
        return np.where(eval_poly(self.poly, np.asarray(X)) >= 0, 1, -1).astype(np.int8)

    def evaluate(self, x) -> int:
        return predict(self, x)

    def __call__(self, X):
        return self.evaluate_many(X)

    def write_csv(self, path) -> None:
        mu = ";".join(repr(float(v)) for v in self.poly.mu)
        write_coeff_csv(self.poly, path, header_comment=f"# n={self.n} mu={mu}")

    @classmethod
    def read_csv(cls, path) -> "Hypothesis":
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
        if not lines or not lines[0].startswith("# "):
            raise ValueError(f"{path}: missing '# n=... mu=...' header")
        fields = dict(tok.split("=", 1) for tok in lines[0][2:].split())
        n = int(fields["n"])
        mu = np.array([float(v) for v in fields["mu"].split(";")])
        coeffs = read_coeff_rows(lines[1:])
        return cls(SparsePoly(n, coeffs, "z", mu))


def predict(h: Hypothesis, x) -> int:
    return 1 if eval_poly(h.poly, np.asarray(x)) >= 0 else -1


@dataclass
class LearnOutcome:
    hypothesis: Hypothesis | None
    frontier: Frontier
    threshold: float
    depth_cap: int
    mu: np.ndarray
    failed: bool = False
    estimates_computed: int = 0
    candidates_per_level: list = field(default_factory=list)

    @property
    def frontier_sizes(self) -> list:
        return self.frontier.sizes()


def _estimate_parallel(dataset, candidates, workers):
    if workers <= 1 or len(candidates) < 2 * workers:
        return estimate_many(dataset, candidates)
    dataset.zt()
    chunks = np.array_split(np.arange(len(candidates)), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda idx: estimate_many(dataset, [candidates[k] for k in idx]), chunks)
        return np.concatenate(list(parts))


def learn(dataset: Dataset, config: LearnerConfig | None = None, workers: int = 1) -> LearnOutcome:
    """Grow the frontier level by level and return ``sign`` of the estimated polynomial.

    At each level every retained set ``S`` is extended by each variable not in
    it; an extension is kept when its empirical coefficient has magnitude at
    least the threshold. A level whose frontier exceeds the cap yields a FAIL
    outcome.
    """
    config = config or LearnerConfig()
    if config.mu_source == "estimated":
        dataset = dataset.with_mu(estimate_means(dataset.X, config.c))
    mu = dataset.mu_used
    if np.any(np.abs(mu) >= 1):
        raise ValueError("mean vector must lie strictly inside (-1, 1)")
    t, D, cap = config.resolve(dataset.m, mu)
    n = dataset.n

    frontier = Frontier()
    frontier.estimates[0] = float(estimate_many(dataset, [0])[0])
    outcome = LearnOutcome(None, frontier, t, D, mu.copy(), estimates_computed=1)

    # sets estimated at an earlier level keep the same estimate, so a rejected
    # set is never re-estimated
    seen = {0}
    for _ in range(D):
        candidates = []
        for S in frontier.sets:
            for i in range(n):
                U = S | (1 << i)
                if U not in seen:
                    seen.add(U)
                    candidates.append(U)
        outcome.candidates_per_level.append(len(candidates))
        values = _estimate_parallel(dataset, candidates, workers)
        outcome.estimates_computed += len(candidates)
        added = []
        for U, e in zip(candidates, values.tolist()):
            if abs(e) >= t:
                frontier.estimates[U] = e
                added.append(U)
        frontier.levels.append(added)
        if len(frontier) > cap:
            outcome.failed = True
            return outcome

    coeffs = {S: frontier.estimates[S] for S in frontier.sets}
    outcome.hypothesis = Hypothesis(SparsePoly(n, coeffs, "z", mu))
    return outcome


def exact_error(h, dist: ProductDist, f, cap: int = ENUM_CAP) -> float:
    """``Pr_{x ~ D_mu}[h(x) != f(x)]`` by enumeration."""
    if dist.n > cap:
        raise EnumerationCapError(f"n={dist.n} exceeds the enumeration cap of {cap}")
    X = all_points(dist.n)
    disagree = function_values(h, X) != function_values(f, X)
    return float(np.sum(point_probs(dist, X)[disagree]))


def empirical_error(h, dist: ProductDist, f, trials: int, rng: np.random.Generator) -> float:
    X = sample(dist, trials, rng)
    return float(np.mean(function_values(h, X) != function_values(f, X)))


def describe_frontier(frontier: Frontier) -> str:
    return " ".join(format_subset(S) for S in sorted(frontier.sets, key=lambda s: (popcount(s), members(s))))
