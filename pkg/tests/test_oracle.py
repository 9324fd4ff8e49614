import math

import numpy as np
import pytest
from scipy import integrate

from smoothdt.dist import ProductDist
from smoothdt.fourier import SparsePoly, expand_exact, subset, to_partially_normalized
from smoothdt.oracle import (
    AnalysisParams,
    MCEstimate,
    OracleDisagreement,
    exact_squared_loss,
    heavy_set,
    high_degree_mass,
    propagation_bound,
    propagation_event,
    propagation_frequencies,
    propagation_frequency,
    sparse_approx_bound,
    sparse_approx_mass,
    sz_bound,
    sz_exact,
    sz_probability,
)
from smoothdt.tree import constant_tree, parity_tree, random_tree, truncate


def sz_by_integration(d, eps):
    """Pr[|x_1...x_d| <= eps] by recursive numerical integration over |x_d| = t."""
    if d == 1:
        return min(1.0, eps)
    inner = lambda t: 1.0 if t <= eps else sz_by_integration(d - 1, eps / t)
    val, _ = integrate.quad(inner, 0, 1, points=[eps], limit=200)
    return val


def test_analysis_params():
    p = AnalysisParams.compute(s=8, eps=0.1, c=0.2, m=10 ** 6, mu=np.zeros(4))
    assert p.d == pytest.approx(10 * math.log(960))
    assert p.beta == pytest.approx((0.1 / 96) ** 11)
    assert p.t == pytest.approx(0.01)
    assert p.tau == pytest.approx(0.01 * math.sqrt(0.1) / 4)
    assert p.D == 1 and not p.in_guarantee_regime
    assert all(v > 0 for v in (p.d, p.beta, p.t, p.tau))


def test_heavy_set_examples():
    d = ProductDist([0.2, 0.2], 0.1)
    assert set(heavy_set(constant_tree(1, 2), d, 0.5, 2)) == {0}
    hs = heavy_set(parity_tree({1, 2}, 2), d, 0.1, 2)
    assert set(hs) == {subset(1, 2), subset(1), subset(2)}
    assert set(heavy_set(parity_tree({1, 2}, 2), d, 0.1, 1)) == {subset(1), subset(2)}


def test_heavy_set_size_bound():
    gen = np.random.default_rng(40)
    for _ in range(20):
        n = int(gen.integers(3, 10))
        f = random_tree(n, int(gen.integers(1, min(2 ** n, 20))), gen)
        dist = ProductDist(gen.uniform(-0.8, 0.8, n), 0.2)
        for theta in (0.05, 0.1, 0.3):
            assert len(heavy_set(f, dist, theta, n)) <= theta ** -2


def test_sparse_mass_trivial():
    gen = np.random.default_rng(41)
    f = random_tree(6, 9, gen)
    dist = ProductDist(gen.uniform(-0.8, 0.8, 6), 0.2)
    assert sparse_approx_mass(f, dist, 0.0, 6) == pytest.approx(1.0, abs=1e-9)
    assert sparse_approx_mass(constant_tree(-1, 6), dist, 0.9, 0) == pytest.approx(1.0)


def test_sparse_mass_against_bound():
    gen = np.random.default_rng(42)
    c, d, beta = 0.2, 8, 1e-4
    for _ in range(10):
        f = random_tree(10, 8, gen)
        dist = ProductDist(gen.uniform(-1 + c, 1 - c, 10), c)
        assert sparse_approx_mass(f, dist, beta, d) >= sparse_approx_bound(8, c, d, beta)


def test_high_degree_mass_below_truncation_rate():
    gen = np.random.default_rng(43)
    for _ in range(15):
        c = 0.2
        f = random_tree(9, 12, gen)
        dist = ProductDist(gen.uniform(-1 + c, 1 - c, 9), c)
        for d in range(f.depth + 1):
            assert high_degree_mass(f, dist, d) <= (1 - c / 2) ** d * f.size + 1e-12


def test_sz_closed_form_against_integration():
    assert sz_exact(2, 0.01) == pytest.approx(0.0560517, abs=1e-7)
    for d in (1, 2, 3, 4):
        for eps in (0.3, 0.01):
            assert sz_exact(d, eps) == pytest.approx(sz_by_integration(d, eps), rel=1e-6)


def test_sz_series_without_factorials_is_wrong_for_d3():
    eps = 0.01
    L = math.log(1 / eps)
    no_factorial = eps * sum(L ** i for i in range(3))
    assert no_factorial != pytest.approx(sz_by_integration(3, eps), rel=1e-3)


def test_sz_monte_carlo_low_degree():
    est = sz_probability(1, 0.1, 200_000, np.random.default_rng(1))
    assert est.within(0.1)
    est = sz_probability(2, 0.01, 10 ** 6, np.random.default_rng(2))
    assert est.within(0.05605)
    assert est.stderr > 0


def test_sz_bound_grid():
    gen = np.random.default_rng(3)
    for d in range(1, 6):
        for k in range(1, 5):
            eps = 10.0 ** -k
            assert sz_probability(d, eps, 50_000, gen).estimate <= sz_bound(d, eps)


def test_sz_argument_checks(rng):
    with pytest.raises(ValueError):
        sz_probability(0, 0.1, 10, rng)
    with pytest.raises(ValueError):
        sz_probability(2, 1.5, 10, rng)


def test_mc_estimate_band():
    e = MCEstimate.from_hits(0, 1000)
    assert e.estimate == 0 and e.within(0.002) and not e.within(0.01)


def test_propagation_event_by_hand():
    # n = 2: table over masks 0..3
    table = np.array([1e-3, 0.4, 0.02, 0.9])
    assert propagation_event(table, 2, 1e-3, 0.5, 2)
    assert not propagation_event(table, 2, 1e-4, 0.5, 2)
    assert not propagation_event(table, 2, 1e-3, 0.5, 1)
    assert propagation_event(table, 2, 1e-3, 0.3, 1)


def test_propagation_degenerate_rows(rng):
    f = random_tree(6, 8, np.random.default_rng(4))
    base = np.random.default_rng(5).uniform(-0.8, 0.8, 6)
    assert propagation_frequency(f, base, 0.1, 0.0, 0.3, 3, 500, rng).estimate == 0.0
    cap = 3
    b = 0.1 ** (-cap / 2) * 1.01
    assert propagation_frequency(f, base, 0.1, 0.5, b, cap, 500, rng, form="bar").estimate == 0.0
    assert propagation_frequency(f, base, 0.1, 0.5, 1.01, cap, 500, rng, form="hat").estimate == 0.0


def test_propagation_parity_against_union_bound():
    f = parity_tree({1, 2, 3}, 8)
    est = propagation_frequency(f, np.zeros(8), 0.1, 1e-6, 0.5, 3, 10_000, np.random.default_rng(6))
    assert est.estimate <= propagation_bound(1e-6, 0.5, 0.1, 3, "bar")
    assert est.estimate <= math.sqrt(1e-6 / 0.5) * (4 / 0.1) ** 1.5 * 3 * 8


def test_propagation_pair_bound_nontrivial():
    """A single pair with a non-vacuous conditional bound: T = {1} inside U = {1,2,3} for a 3-parity.

    With zero base means the bar coefficient of {1} is delta_2 * delta_3 and
    that of U is 1, so the event frequency is the small-product probability.
    """
    f = parity_tree({1, 2, 3}, 3)
    a, c = 1e-4, 0.1
    gen = np.random.default_rng(7)
    hits = 0
    trials = 20_000
    for _ in range(trials):
        delta = gen.uniform(-c, c, 3)
        bar = to_partially_normalized(expand_exact(f, ProductDist(delta, c)))
        hits += abs(bar[subset(1)]) <= a
    freq = MCEstimate.from_hits(hits, trials)
    assert freq.within(sz_exact(2, a / c ** 2))
    assert freq.estimate <= math.sqrt(a / 1.0) * (4 / c) ** (2 / 2)


def test_propagation_monotone_in_a():
    f = random_tree(8, 8, np.random.default_rng(8))
    base = np.random.default_rng(9).uniform(-0.8, 0.8, 8)
    alphas = [0.0, 1e-6, 1e-4, 1e-2, 0.1]
    ests = propagation_frequencies(f, base, 0.1, alphas, 0.2, 3, 2000, np.random.default_rng(10), "hat")
    freqs = [e.estimate for e in ests]
    assert freqs == sorted(freqs)


def test_squared_loss_trivial_cases():
    gen = np.random.default_rng(11)
    f = random_tree(7, 10, gen)
    dist = ProductDist(gen.uniform(-0.8, 0.8, 7), 0.1)
    assert exact_squared_loss(expand_exact(f, dist), dist, f) == pytest.approx(0.0, abs=1e-12)
    assert exact_squared_loss(SparsePoly(7, {}, "z", dist.mu), dist, f) == pytest.approx(1.0, abs=1e-12)


def test_squared_loss_dual_routes_on_truncations():
    gen = np.random.default_rng(12)
    for _ in range(15):
        n = int(gen.integers(4, 10))
        f = random_tree(n, int(gen.integers(4, 16)), gen)
        dist = ProductDist(gen.uniform(-0.9, 0.9, n), 0.1)
        g = truncate(f, int(gen.integers(0, f.depth + 1)))
        exact_squared_loss(expand_exact(g, dist), dist, f)


def test_squared_loss_disagreement_is_reported():
    dist = ProductDist([0.1, 0.2], 0.1)
    f = parity_tree({1, 2}, 2)
    poly = expand_exact(f, dist)
    # a table that claims the wrong mean vector cannot pass the dual check
    with pytest.raises(ValueError):
        exact_squared_loss(SparsePoly(2, poly.coeffs, "z", [0.0, 0.0]), dist, f)
    assert issubclass(OracleDisagreement, AssertionError)
