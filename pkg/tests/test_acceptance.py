"""Acceptance criteria 1-10, each reporting one pass/fail line."""

import math

import numpy as np
import pytest
from scipy import integrate

import conftest
from smoothdt import harness, oracle
from smoothdt.dist import ProductDist, all_points, draw_perturbation, point_probs
from smoothdt.fourier import (
    coefficients_from_values,
    expand_exact,
    members,
    popcounts,
    to_partially_normalized,
    translate_basis,
    value_table,
)
from smoothdt.harness import ExperimentConfig
from smoothdt.tree import random_tree

pytestmark = pytest.mark.slow


def report(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def random_mu(n, c, rng):
    return rng.uniform(-(1 - c), 1 - c, size=n)


def character_matrix(dist):
    """Rows are points, columns are subsets; entry is z_S(x) built one factor at a time."""
    n = dist.n
    Z = (all_points(n) - dist.mu) / dist.sigma
    out = np.ones((2 ** n, 2 ** n))
    for S in range(1, 2 ** n):
        for i in members(S):
            out[:, S] *= Z[:, i]
    return out


def criterion_instances():
    gen = np.random.default_rng(101)
    cases = []
    for _ in range(20):
        n = int(gen.integers(3, 11))
        size = int(gen.integers(1, min(2 ** n, 24) + 1))
        cases.append((random_tree(n, size, gen), ProductDist(random_mu(n, 0.1, gen), 0.1)))
    return cases


def test_criterion_01_orthonormality_and_parseval():
    worst_gram = worst_parseval = 0.0
    for f, dist in criterion_instances():
        C = character_matrix(dist)
        p = point_probs(dist, all_points(dist.n))
        gram = C.T @ (p[:, None] * C)
        worst_gram = max(worst_gram, float(np.max(np.abs(gram - np.eye(2 ** dist.n)))))
        coeffs = C.T @ (p * value_table(f, dist.n))
        worst_parseval = max(worst_parseval, abs(float(np.sum(coeffs ** 2)) - 1.0))
    ok = worst_gram <= 1e-9 and worst_parseval <= 1e-9
    report(1, ok, f"max |gram - I| = {worst_gram:.2e}, max |parseval - 1| = {worst_parseval:.2e}")
    assert ok


def test_criterion_02_basis_translation():
    gen = np.random.default_rng(202)
    worst = 0.0
    c = 0.1
    for _ in range(50):
        n = int(gen.integers(2, 11))
        f = random_tree(n, int(gen.integers(1, min(2 ** n, 20) + 1)), gen)
        base = ProductDist(random_mu(n, 2 * c, gen), c)
        pert = draw_perturbation(base.mu, c, gen)
        moved = translate_basis(to_partially_normalized(expand_exact(f, base)), pert.delta)
        direct = to_partially_normalized(expand_exact(f, pert.dist))
        worst = max(worst, float(np.max(np.abs(moved.to_dense() - direct.to_dense()))))
    ok = worst <= 1e-9
    report(2, ok, f"50 instances, max deviation {worst:.2e}")
    assert ok


def test_criterion_03_coefficient_sandwich():
    checked = violations = 0
    for f, dist in criterion_instances():
        hat = np.abs(coefficients_from_values(value_table(f, dist.n), dist.mu))
        sig = np.ones(2 ** dist.n)
        for S in range(2 ** dist.n):
            for i in members(S):
                sig[S] *= dist.sigma[i]
        bar = hat / sig
        upper = hat / dist.c ** (popcounts(dist.n) / 2.0)
        violations += int(np.count_nonzero((hat > bar) | (bar > upper)))
        checked += hat.size
    ok = violations == 0
    report(3, ok, f"{checked} coefficients, {violations} violations")
    assert ok


def test_criterion_04_sparse_approximation():
    gen = np.random.default_rng(404)
    n, c, s = 10, 0.2, 8
    grid = [(d, beta) for d in (2, 4, 6, 8) for beta in (1e-2, 1e-4)]
    applicable = violations = tail_violations = 0
    for _ in range(50):
        f = random_tree(n, s, gen)
        dist = ProductDist(random_mu(n, c, gen), c)
        expansion = expand_exact(f, dist)
        for d, beta in grid:
            bound = oracle.sparse_approx_bound(s, c, d, beta)
            if bound > 0:
                applicable += 1
                if oracle.sparse_approx_mass(expansion, dist, beta, d) < bound:
                    violations += 1
        for d in (2, 4, 6, 8):
            if oracle.high_degree_mass(expansion, dist, d) > (1 - c / 2) ** d * s + 1e-12:
                tail_violations += 1
    ok = violations == 0 and tail_violations == 0
    report(4, ok, f"bound positive in {applicable}/{50 * len(grid)} cells, {violations} violations; "
                  f"high-degree tail violations {tail_violations}")
    assert ok


def test_criterion_05_schwartz_zippel():
    trials = 10 ** 6
    eps_grid = [1e-1, 1e-2, 1e-3, 1e-4]
    rows = harness.run_sz_check(ExperimentConfig(kind="sz-check", m=trials, seed=0,
                                                 sz_degrees=[1, 2, 3, 4, 5], sz_eps=eps_grid))
    bound_ok = all(r.passed for r in rows if r.quantity == "sz-bound")
    low = [r for r in rows if r.quantity == "sz-closed-form" and r.params.startswith(("d=1;", "d=2;"))]
    exact_ok = all(r.passed for r in low)
    # independent value for d=2, eps=0.01: the area of |x y| <= eps in the unit square
    area, _ = integrate.quad(lambda x: min(1.0, 0.01 / x), 0.0, 1.0, points=[0.01])
    oracle_ok = abs(area - 0.05605) < 1e-4 and abs(area - oracle.sz_exact(2, 0.01)) < 1e-9
    ok = bound_ok and exact_ok and oracle_ok
    report(5, ok, f"bound holds on {sum(r.passed for r in rows if r.quantity == 'sz-bound')}/20 cells, "
                  f"d<=2 within 3 SE on {sum(r.passed for r in low)}/{len(low)}, integral {area:.5f}")
    assert ok


@pytest.mark.parametrize("tree", ["parity:3", "random:8"])
def test_criterion_06_propagation(tree):
    alphas = [0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1e-1]
    cfg = ExperimentConfig(kind="propagation-check", n=8, c=0.1, tree=tree, mu="random", seed=6,
                           trials=10 ** 4, alphas=alphas, beta=0.5, degree_cap=3, form="hat")
    rows = harness.run_propagation_check(cfg)
    bound_ok = all(r.passed for r in rows)
    freqs = [r.estimate for r in rows]
    monotone = all(a <= b for a, b in zip(freqs, freqs[1:]))
    ok = bound_ok and monotone and freqs[0] == 0.0
    trend = ", ".join(f"{a:g}:{p:.4f}" for a, p in zip(alphas, freqs))
    report(6, ok, f"{tree}: bound holds on all rows, frequency by alpha [{trend}]")
    assert ok


@pytest.fixture(scope="module")
def recovery_records():
    cfg = ExperimentConfig(kind="coeff-recovery", n=12, tree="random:8", c=0.1, mu="random",
                           m=10 ** 5, trials=50, seed=7, depth="log2s", eps=0.1)
    return harness.run_coeff_recovery(cfg)


LEARN_BASE = dict(kind="learn", n=16, c=0.1, mu="random", m=2 * 10 ** 5, trials=20, seed=8,
                  depth="log2s", eval="exact")


@pytest.fixture(scope="module")
def learn_campaigns():
    out = {}
    for tree in ("parity:4", "random:16"):
        cfg = ExperimentConfig(tree=tree, **LEARN_BASE)
        out[tree] = harness.run_learn_experiment(cfg)
    return out


def test_criterion_07_heavy_set_capture(recovery_records):
    captured = sum(r.heavy_captured for r in recovery_records)
    pebbles = sum(r.within_pebbles for r in recovery_records)
    ok = captured >= 45 and pebbles >= 45
    report(7, ok, f"heavy set captured {captured}/50, frontier within pebbles {pebbles}/50")
    assert ok


def test_criterion_08_end_to_end(learn_campaigns):
    ok = True
    parts = []
    for tree, records in learn_campaigns.items():
        good = sum(1 for r in records if not r.failed and r.error <= 0.1)
        fails = sum(r.failed for r in records)
        worst = max(r.error for r in records)
        parts.append(f"{tree}: {good}/20 with error <= 0.1, {fails} FAIL, worst {worst:.4f}")
        ok &= good >= 18 and fails == 0
    report(8, ok, "; ".join(parts))
    assert ok


def test_criterion_09_squared_loss_bound(recovery_records, learn_campaigns):
    records = list(recovery_records) + [r for recs in learn_campaigns.values() for r in recs]
    usable = [r for r in records if not r.failed]
    bad = [r for r in usable if not (r.error <= r.sq_loss)]
    ok = not bad and all(math.isfinite(r.sq_loss) for r in usable)
    report(9, ok, f"{len(usable)} hypotheses, {len(bad)} with error above squared loss")
    assert ok


def test_criterion_10_determinism(learn_campaigns):
    same = True
    for tree, records in learn_campaigns.items():
        first = harness.records_csv(records)
        for workers in (1, 8):
            cfg = ExperimentConfig(tree=tree, workers=workers, **LEARN_BASE)
            same &= harness.records_csv(harness.run_learn_experiment(cfg)) == first
    report(10, same, "criterion-8 CSVs byte-identical across reruns with 1 and 8 workers")
    assert same
