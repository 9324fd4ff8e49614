"""Fourier coefficients with respect to product distributions.

Subsets of variables are integer bitmasks: bit ``i`` stands for the
0-indexed variable ``i`` (variable ``i + 1`` in text). Three bases are
supported for a :class:`SparsePoly`:

``"z"``
    normalized characters ``z_S = prod (x_i - mu_i) / sigma_i``
``"bar"``
    centered monomials ``prod (x_i - mu_i)``; coefficients in this basis are
    the partially normalized coefficients
``"x"``
    plain monomials ``x_S``
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dist import Dataset, ProductDist, all_points, point_probs

ENUM_CAP = 20
ZERO_CUTOFF = 1e-15
BASES = ("z", "bar", "x")


class EnumerationCapError(ValueError):
    pass


# --- subsets ---------------------------------------------------------------

def subset(*variables: int) -> int:
    """Mask for 1-indexed variables, e.g. ``subset(1, 3) == 0b101``."""
    mask = 0
    for v in variables:
        if v < 1:
            raise ValueError(f"variables are 1-indexed, got {v}")
        mask |= 1 << (v - 1)
    return mask


def members(mask: int) -> tuple:
    """0-indexed members in ascending order."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def format_subset(mask: int) -> str:
    return ";".join(str(i + 1) for i in members(mask)) or "empty"


def parse_subset(text: str) -> int:
    text = text.strip()
    if text in ("empty", ""):
        return 0
    return subset(*(int(tok) for tok in text.split(";")))


def popcounts(n: int) -> np.ndarray:
    """``|S|`` for every mask in ``range(2**n)``."""
    k = np.arange(2 ** n, dtype=np.int64)
    counts = np.zeros_like(k)
    for i in range(n):
        counts += (k >> i) & 1
    return counts


def _check_cap(n, cap=ENUM_CAP):
    if n > cap:
        raise EnumerationCapError(f"n={n} exceeds the enumeration cap of {cap}")


# --- polynomials -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SparsePoly:
    """Map from subset masks to real coefficients in one of :data:`BASES`.

    ``complete`` marks tables that hold every coefficient of a function
    (entries below :data:`ZERO_CUTOFF` are dropped, so presence alone cannot
    tell).
    """

    n: int
    coeffs: dict
    basis: str = "z"
    mu: np.ndarray | None = None
    complete: bool = False
    _dense: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValueError(f"unknown basis {self.basis!r}")
        if self.basis != "x":
            if self.mu is None:
                raise ValueError(f"basis {self.basis!r} needs a mean vector")
            mu = np.array(self.mu, dtype=np.float64).reshape(-1)
            if mu.size != self.n:
                raise ValueError("mean vector length does not match n")
            object.__setattr__(self, "mu", mu)
        limit = 1 << self.n
        clean = {}
        for S, v in self.coeffs.items():
            S = int(S)
            if not 0 <= S < limit:
                raise ValueError(f"subset {S:#x} references a variable above {self.n}")
            if abs(v) >= ZERO_CUTOFF:
                clean[S] = float(v)
        object.__setattr__(self, "coeffs", clean)

    def __getitem__(self, S: int) -> float:
        return self.coeffs.get(S, 0.0)

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        return iter(sorted(self.coeffs))

    @property
    def degree(self) -> int:
        return max((popcount(S) for S in self.coeffs), default=0)

    def to_dense(self) -> np.ndarray:
        if self._dense is not None:
            return self._dense.copy()
        _check_cap(self.n)
        out = np.zeros(2 ** self.n)
        for S, v in self.coeffs.items():
            out[S] = v
        return out

    @classmethod
    def from_dense(cls, table, n, basis="z", mu=None, complete=True):
        table = np.asarray(table, dtype=np.float64)
        nz = np.flatnonzero(np.abs(table) >= ZERO_CUTOFF)
        poly = cls(n, dict(zip(nz.tolist(), table[nz].tolist())), basis, mu, complete)
        dense = np.where(np.abs(table) >= ZERO_CUTOFF, table, 0.0)
        object.__setattr__(poly, "_dense", dense)
        return poly

    def same_mu(self, mu) -> bool:
        return self.mu is not None and np.array_equal(self.mu, np.asarray(mu, dtype=np.float64))


@dataclass(frozen=True)
class CoeffEstimate:
    subset: int
    value: float
    m: int


# --- exact computation -----------------------------------------------------

def function_values(f, X) -> np.ndarray:
    """Values of ``f`` on the rows of ``X``; ``f`` may be a tree or any vectorized callable."""
    if hasattr(f, "evaluate_many"):
        return np.asarray(f.evaluate_many(X), dtype=np.float64)
    return np.asarray(f(X), dtype=np.float64)


def value_table(f, n: int) -> np.ndarray:
    _check_cap(n)
    return function_values(f, all_points(n))


def exact_coeff(f, dist: ProductDist, S: int, cap: int = ENUM_CAP) -> float:
    """``E_{x ~ D_mu}[f(x) z_S(x)]`` by summing over all ``2^n`` points."""
    _check_cap(dist.n, cap)
    X = all_points(dist.n)
    w = point_probs(dist, X) * function_values(f, X)
    idx = list(members(S))
    if idx and idx[-1] >= dist.n:
        raise ValueError("subset references a variable above n")
    zS = np.prod((X[:, idx] - dist.mu[idx]) / dist.sigma[idx], axis=1)
    return float(np.sum(w * zS))


def _axis_apply(table, n, per_var):
    """Apply a 2x2 linear map along each variable axis of a length-2^n table.

    ``per_var(i)`` returns ``(a00, a01, a10, a11)`` mapping the pair
    ``(t0, t1)`` (bit ``i`` clear / set) to ``(a00 t0 + a01 t1, a10 t0 + a11 t1)``.
    """
    t = np.array(table, dtype=np.float64).reshape([2] * n) if n else np.array(table, dtype=np.float64)
    for i in range(n):
        axis = n - 1 - i
        a00, a01, a10, a11 = per_var(i)
        t0 = np.take(t, 0, axis=axis)
        t1 = np.take(t, 1, axis=axis)
        t = np.stack([a00 * t0 + a01 * t1, a10 * t0 + a11 * t1], axis=axis)
    return t.reshape(-1)


def coefficients_from_values(values, mu) -> np.ndarray:
    """Dense z-basis coefficient table from a dense value table."""
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.sqrt(1 - mu ** 2)

    def per_var(i):
        pm, pp = (1 - mu[i]) / 2, (1 + mu[i]) / 2
        zm, zp = (-1 - mu[i]) / sigma[i], (1 - mu[i]) / sigma[i]
        return pm, pp, pm * zm, pp * zp

    return _axis_apply(values, mu.size, per_var)


def values_from_coefficients(coeffs, mu) -> np.ndarray:
    """Inverse of :func:`coefficients_from_values`."""
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.sqrt(1 - mu ** 2)

    def per_var(i):
        return 1.0, (-1 - mu[i]) / sigma[i], 1.0, (1 - mu[i]) / sigma[i]

    return _axis_apply(coeffs, mu.size, per_var)


def expand_exact(f, dist: ProductDist, cap: int = ENUM_CAP) -> SparsePoly:
    """Complete z-basis expansion of ``f`` under ``dist``."""
    _check_cap(dist.n, cap)
    table = coefficients_from_values(value_table(f, dist.n), dist.mu)
    return SparsePoly.from_dense(table, dist.n, "z", dist.mu, complete=True)


def estimate_coeff(dataset: Dataset, S: int) -> CoeffEstimate:
    """Empirical ``(1/m) sum_j y_j z_S(x_j)`` with the dataset's mean vector."""
    if S >> dataset.n:
        raise ValueError("subset references a variable above n")
    total = kernels.subset_sums(dataset.zt(), dataset.y.astype(np.float64), [members(S)])[0]
    return CoeffEstimate(S, total / dataset.m, dataset.m)


def estimate_many(dataset: Dataset, subsets) -> np.ndarray:
    subsets = list(subsets)
    if not subsets:
        return np.zeros(0)
    sums = kernels.subset_sums(dataset.zt(), dataset.y.astype(np.float64), [members(S) for S in subsets])
    return sums / dataset.m


# --- basis changes ---------------------------------------------------------

def _sigma_prod(mu, S):
    idx = list(members(S))
    return float(np.prod(np.sqrt(1 - mu[idx] ** 2))) if idx else 1.0


def to_partially_normalized(poly: SparsePoly) -> SparsePoly:
    if poly.basis != "z":
        raise ValueError("expected a z-basis polynomial")
    coeffs = {S: v / _sigma_prod(poly.mu, S) for S, v in poly.coeffs.items()}
    return SparsePoly(poly.n, coeffs, "bar", poly.mu, poly.complete)


def from_partially_normalized(poly: SparsePoly) -> SparsePoly:
    if poly.basis != "bar":
        raise ValueError("expected a bar-basis polynomial")
    coeffs = {S: v * _sigma_prod(poly.mu, S) for S, v in poly.coeffs.items()}
    return SparsePoly(poly.n, coeffs, "z", poly.mu, poly.complete)


def translate_basis(poly_bar: SparsePoly, delta) -> SparsePoly:
    """Re-express complete bar coefficients at ``mu + delta``.

    Each new coefficient is the sum over supersets ``T`` of ``S`` of the old
    coefficient of ``T`` times ``prod_{i in T \\ S} delta_i``.
    """
    if poly_bar.basis != "bar":
        raise ValueError("expected a bar-basis polynomial")
    if not poly_bar.complete:
        raise ValueError("translation needs the complete coefficient table")
    delta = np.asarray(delta, dtype=np.float64)
    if delta.size != poly_bar.n:
        raise ValueError("shift length does not match n")

    def per_var(i):
        return 1.0, delta[i], 0.0, 1.0

    table = _axis_apply(poly_bar.to_dense(), poly_bar.n, per_var)
    return SparsePoly.from_dense(table, poly_bar.n, "bar", poly_bar.mu + delta)


# --- evaluation ------------------------------------------------------------

def _factors(poly: SparsePoly, X):
    X = np.asarray(X, dtype=np.float64)
    if poly.basis == "x":
        return X
    if poly.basis == "bar":
        return X - poly.mu
    return (X - poly.mu) / np.sqrt(1 - poly.mu ** 2)


def eval_poly(poly: SparsePoly, X, dist: ProductDist | None = None):
    """Evaluate at one point (returns a float) or at each row of a batch.

    When ``dist`` is given it must carry the mean vector the polynomial was
    built against.
    """
    if dist is not None and poly.basis != "x" and not poly.same_mu(dist.mu):
        raise ValueError("polynomial basis was built for a different mean vector")
    X = np.asarray(X)
    single = X.ndim == 1
    X2 = X.reshape(1, -1) if single else X
    if X2.shape[1] != poly.n:
        raise ValueError(f"expected points with {poly.n} entries")
    F = _factors(poly, X2)
    out = np.zeros(X2.shape[0])
    for S in sorted(poly.coeffs):
        idx = list(members(S))
        term = np.prod(F[:, idx], axis=1) if idx else 1.0
        out = out + poly.coeffs[S] * term
    return float(out[0]) if single else out


# --- CSV -------------------------------------------------------------------

def write_coeff_csv(poly: SparsePoly, path_or_file, header_comment: str | None = None) -> None:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        if header_comment is not None:
            fh.write(header_comment.rstrip("\n") + "\n")
        w = csv.writer(fh)
        w.writerow(["subset", "value"])
        for S in sorted(poly.coeffs, key=lambda s: (popcount(s), members(s))):
            w.writerow([format_subset(S), repr(poly.coeffs[S])])
    finally:
        if own:
            fh.close()


def read_coeff_rows(lines) -> dict:
    rows = list(csv.reader(lines))
    if not rows or rows[0] != ["subset", "value"]:
        raise ValueError("coefficient table must start with a subset,value header")
    return {parse_subset(s): float(v) for s, v in rows[1:] if s}
