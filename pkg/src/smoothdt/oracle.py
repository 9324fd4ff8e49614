"""Brute-force ground truth and Monte-Carlo checks of the probabilistic bounds.

Everything here enumerates {-1,1}^n and is meant for small ``n``; the
learner never imports this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist import ProductDist, all_points, draw_perturbation, point_probs
from .fourier import (
    ENUM_CAP,
    ZERO_CUTOFF,
    EnumerationCapError,
    SparsePoly,
    coefficients_from_values,
    eval_poly,
    expand_exact,
    popcounts,
    value_table,
)
from .learner import default_depth, default_threshold


@dataclass(frozen=True)
class MCEstimate:
    """A Monte-Carlo frequency with its binomial standard error."""

    estimate: float
    stderr: float
    trials: int

    @classmethod
    def from_hits(cls, hits: int, trials: int) -> "MCEstimate":
        p = hits / trials
        return cls(p, math.sqrt(p * (1 - p) / trials), trials)

    def within(self, value: float, k: float = 3.0) -> bool:
        # floor the band at one count so exact-zero estimates are not brittle
        return abs(self.estimate - value) <= k * max(self.stderr, 1.0 / self.trials)


@dataclass(frozen=True)
class AnalysisParams:
    """Parameter choices from the correctness argument for the learner."""

    s: int
    eps: float
    c: float
    m: int
    d: float
    beta: float
    t: float
    tau: float
    D: int

    @classmethod
    def compute(cls, s: int, eps: float, c: float, m: int, mu) -> "AnalysisParams":
        d = (2.0 / c) * math.log(12.0 * s / eps)
        beta = (eps / (12.0 * s)) ** (1.0 + 2.0 / c)
        t = default_threshold(m)
        tau = t * math.sqrt(eps) / 4.0
        return cls(s, eps, c, m, d, beta, t, tau, default_depth(m, mu))

    @property
    def in_guarantee_regime(self) -> bool:
        return self.D > self.d


@dataclass(frozen=True)
class HeavySet:
    threshold: float
    degree_cap: int
    sets: frozenset

    def __contains__(self, S):
        return S in self.sets

    def __len__(self):
        return len(self.sets)

    def __iter__(self):
        return iter(sorted(self.sets))


def _dense(f, dist: ProductDist) -> np.ndarray:
    if isinstance(f, SparsePoly):
        if not (f.complete and f.basis == "z" and f.same_mu(dist.mu)):
            raise ValueError("need a complete z-basis table at this mean vector")
        return f.to_dense()
    return expand_exact(f, dist).to_dense()


def heavy_set(f, dist: ProductDist, threshold: float, degree_cap: int) -> HeavySet:
    """All ``S`` with ``|S| <= degree_cap`` and ``|f^(S, mu)| >= threshold``.

    ``f`` may also be a precomputed complete expansion at ``dist.mu``.
    """
    table = _dense(f, dist)
    keep = (np.abs(table) >= threshold) & (popcounts(dist.n) <= degree_cap)
    return HeavySet(threshold, degree_cap, frozenset(np.flatnonzero(keep).tolist()))


def sparse_approx_mass(f, dist: ProductDist, beta: float, d: int) -> float:
    """Squared mass on coefficients with ``|f^(S, mu)| >= beta`` and ``|S| <= d``."""
    table = _dense(f, dist)
    keep = (np.abs(table) >= beta) & (popcounts(dist.n) <= d)
    return float(np.sum(table[keep] ** 2))


def sparse_approx_bound(s: int, c: float, d: int, beta: float) -> float:
    """Lower bound ``1 - (4 (1 - c/2)^d s + 2^(d+2) beta)`` on the retained mass."""
    return 1.0 - (4.0 * (1.0 - c / 2.0) ** d * s + 2.0 ** (d + 2) * beta)


def high_degree_mass(f, dist: ProductDist, d: int) -> float:
    table = _dense(f, dist)
    return float(np.sum(table[popcounts(dist.n) > d] ** 2))


def truncation_zero_prob(truncated, dist: ProductDist) -> float:
    """``Pr[g(x) = 0]`` for a truncated tree ``g``, by enumeration."""
    X = all_points(dist.n)
    return float(np.sum(point_probs(dist, X)[truncated.evaluate_many(X) == 0]))


# --- continuous Schwartz-Zippel --------------------------------------------

def sz_probability(d: int, eps: float, trials: int, rng: np.random.Generator,
                   chunk: int = 250_000) -> MCEstimate:
    """Monte-Carlo ``Pr[|x_1 ... x_d| <= eps]`` for ``x`` uniform on ``[-1,1]^d``."""
    if d < 1:
        raise ValueError("degree must be at least 1")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    hits = 0
    left = trials
    while left > 0:
        k = min(chunk, left)
        prod = np.prod(rng.uniform(-1.0, 1.0, size=(k, d)), axis=1)
        hits += int(np.count_nonzero(np.abs(prod) <= eps))
        left -= k
    return MCEstimate.from_hits(hits, trials)


def sz_exact(d: int, eps: float) -> float:
    """Closed form ``eps * sum_{i<d} ln(1/eps)^i / i!``."""
    L = math.log(1.0 / eps)
    return eps * sum(L ** i / math.factorial(i) for i in range(d))


def sz_bound(d: int, eps: float) -> float:
    return 2.0 ** d * math.sqrt(eps)


# --- coefficient propagation under random shifts ---------------------------

def _subset_min(values: np.ndarray, n: int) -> np.ndarray:
    """``out[U] = min_{T subset of U} values[..., T]`` along the last axis."""
    out = values.copy()
    for i in range(n):
        bit = 1 << i
        view = out.reshape(out.shape[:-1] + (-1, 2, bit))
        np.minimum(view[..., 1, :], view[..., 0, :], out=view[..., 1, :])
    return out


def propagation_event(table: np.ndarray, n: int, a: float, b: float, degree_cap: int) -> np.ndarray:
    """Whether some ``T subset of U`` with ``|U| <= cap`` has ``|c_T| <= a`` and ``|c_U| >= b``.

    ``table`` holds coefficient tables along its last axis; magnitudes below
    the zero cutoff count as exact zeros.
    """
    mag = np.abs(table)
    mag = np.where(mag < ZERO_CUTOFF, 0.0, mag)
    low = _subset_min(mag, n) <= a
    heavy = (mag >= b) & (popcounts(n) <= degree_cap)
    return np.any(low & heavy, axis=-1)


def propagation_frequency(f, base_mu, c: float, a: float, b: float, degree_cap: int,
                          trials: int, rng: np.random.Generator, form: str = "bar") -> MCEstimate:
    """Frequency over random shifts of the propagation failure event.

    ``form="bar"`` tests partially normalized coefficients, ``form="hat"``
    the normalized ones.
    """
    return propagation_frequencies(f, base_mu, c, [a], b, degree_cap, trials, rng, form)[0]


def propagation_frequencies(f, base_mu, c: float, a_values, b: float, degree_cap: int,
                            trials: int, rng: np.random.Generator, form: str = "bar",
                            batch: int = 512) -> list:
    """:func:`propagation_frequency` for several ``a`` on the same shift draws."""
    if form not in ("bar", "hat"):
        raise ValueError("form must be 'bar' or 'hat'")
    base_mu = np.asarray(base_mu, dtype=np.float64)
    n = base_mu.size
    if n > ENUM_CAP:
        raise EnumerationCapError(f"n={n} exceeds the enumeration cap of {ENUM_CAP}")
    values = value_table(f, n)
    bits = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(np.float64)
    a_values = list(a_values)
    hits = [0] * len(a_values)
    done = 0
    while done < trials:
        k = min(batch, trials - done)
        tables = np.empty((k, 2 ** n))
        for r in range(k):
            mu = draw_perturbation(base_mu, c, rng).dist.mu
            coeffs = coefficients_from_values(values, mu)
            if form == "bar":
                coeffs = coeffs / np.exp(bits @ (0.5 * np.log(1.0 - mu ** 2)))
            tables[r] = coeffs
        for q, a in enumerate(a_values):
            hits[q] += int(np.count_nonzero(propagation_event(tables, n, a, b, degree_cap)))
        done += k
    return [MCEstimate.from_hits(h, trials) for h in hits]


def propagation_bound(a: float, b: float, c: float, d: int, form: str = "bar") -> float:
    """Union bound on the propagation failure frequency.

    ``hat``: ``a^(1/2) b^(-5/2) (2/c)^(2d)``;
    ``bar``: ``a^(1/2) b^(-5/2) 4^d c^(-3d/2)``.
    """
    if a == 0:
        return 0.0
    if form == "hat":
        return math.sqrt(a) * b ** -2.5 * (2.0 / c) ** (2 * d)
    return math.sqrt(a) * b ** -2.5 * 4.0 ** d * c ** (-1.5 * d)


def pair_propagation_bound(a: float, b: float, c: float, gap: int) -> float:
    """Conditional bound ``sqrt(a/b) (4/c)^(gap/2)`` for one pair ``T subset of U``."""
    return math.sqrt(a / b) * (4.0 / c) ** (gap / 2.0)


# --- squared loss -----------------------------------------------------------

class OracleDisagreement(AssertionError):
    pass


def pointwise_squared_loss(poly: SparsePoly, dist: ProductDist, f, fx=None) -> float:
    """``E_{x ~ D_mu}[(p(x) - f(x))^2]`` by enumeration; ``p`` may use any basis."""
    X = all_points(dist.n)
    if fx is None:
        fx = value_table(f, dist.n)
    return float(np.sum(point_probs(dist, X) * (eval_poly(poly, X) - fx) ** 2))


def exact_squared_loss(poly: SparsePoly, dist: ProductDist, f, tol: float = 1e-9) -> float:
    """``E[(p(x) - f(x))^2]`` computed pointwise and via coefficient differences.

    Raises :class:`OracleDisagreement` when the two routes differ by more
    than ``tol``.
    """
    if dist.n > ENUM_CAP:
        raise EnumerationCapError(f"n={dist.n} exceeds the enumeration cap of {ENUM_CAP}")
    if poly.basis != "z" or not poly.same_mu(dist.mu):
        raise ValueError("polynomial must be in the z basis at the distribution's mean")
    fx = value_table(f, dist.n)
    pointwise = pointwise_squared_loss(poly, dist, f, fx)
    f_coeffs = coefficients_from_values(fx, dist.mu)
    p_coeffs = poly.to_dense()
    coeffwise = float(np.sum((p_coeffs - f_coeffs) ** 2))
    if abs(pointwise - coeffwise) > tol * max(1.0, abs(pointwise)):
        raise OracleDisagreement(f"pointwise {pointwise!r} vs coefficient-space {coeffwise!r}")
    return pointwise
