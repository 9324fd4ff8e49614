"""Seeded experiment campaigns and their CSV output.

Every trial draws its randomness from streams derived from
``(seed, trial index, purpose)``, so a single row can be reproduced in
isolation and results do not depend on the worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import oracle
from .dist import (
    Dataset,
    derive_rng,
    draw_perturbation,
    from_binary,
    random_base_mu,
    read_means,
)
from .fourier import expand_exact
from .learner import LearnerConfig, empirical_error, exact_error, learn
from .tree import parity_tree, parse_tree, random_tree

KINDS = ("learn", "sz-check", "propagation-check", "coeff-recovery", "oracle-coeffs")
ORACLE_COLUMNS = ["quantity", "params", "estimate", "stderr", "bound", "pass"]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str = "learn"
    n: int = 16
    c: float = 0.1
    m: int = 100_000
    eps: float = 0.1
    delta: float = 0.1
    tree: str = "random:8"
    mu: str = "random"
    mu_convention: str = "pm1"
    seed: int = 0
    trials: int = 1
    eval: str | None = None
    workers: int = 1
    out: str | None = None
    depth: str = "auto"
    threshold: float | None = None
    mu_source: str = "exact"
    max_fail_rate: float = 0.0
    timing: bool = False
    sz_degrees: list = field(default_factory=lambda: [1, 2, 3, 4, 5])
    sz_eps: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    alphas: list = field(default_factory=lambda: [0.0, 1e-8, 1e-6, 1e-4, 1e-2])
    beta: float = 0.5
    degree_cap: int = 3
    form: str = "hat"

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        for name in ("n", "m", "trials", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if not 0 < self.c < 0.5:
            raise ConfigError("c must lie in (0, 1/2)")
        if self.kind in ("learn", "coeff-recovery") and not self.c < 0.25:
            raise ConfigError("learning experiments need c in (0, 1/4)")
        if not 0 < self.eps < 1:
            raise ConfigError("eps must lie in (0, 1)")
        if self.mu_convention not in ("pm1", "01"):
            raise ConfigError("mu convention must be 'pm1' or '01'")
        if self.mu_source not in ("exact", "estimated"):
            raise ConfigError("mu source must be 'exact' or 'estimated'")
        if self.form not in ("bar", "hat"):
            raise ConfigError("form must be 'bar' or 'hat'")
        if self.depth not in ("auto", "log2s"):
            try:
                if int(self.depth) < 0:
                    raise ValueError
            except ValueError:
                raise ConfigError(f"depth must be auto, log2s or a non-negative integer, got {self.depth!r}")
        self.eval_mode()
        self.tree_spec()
        self.mu_spec()
        return self

    def eval_mode(self) -> tuple:
        """``("exact", None)`` or ``("mc", points)``."""
        mode = self.eval or ("exact" if self.n <= 20 else "mc:100000")
        if mode == "exact":
            if self.n > 20:
                raise ConfigError("exact evaluation needs n <= 20")
            return ("exact", None)
        if mode.startswith("mc:"):
            try:
                return ("mc", int(mode[3:]))
            except ValueError:
                pass
        raise ConfigError(f"bad evaluation mode {mode!r}")

    def tree_spec(self) -> tuple:
        kind, _, arg = self.tree.partition(":")
        if kind == "random":
            size = _positive_int(arg, "random tree size")
            if size > 2 ** min(self.n, 62):
                raise ConfigError(f"no tree with {size} leaves on {self.n} variables")
            return ("random", size)
        if kind == "parity":
            k = _positive_int(arg, "parity width")
            if k > self.n:
                raise ConfigError("parity width exceeds n")
            return ("parity", k)
        if kind == "const":
            return ("const", -1 if arg == "-1" else 1)
        if kind == "file":
            if not arg:
                raise ConfigError("file tree source needs a path")
            return ("file", arg)
        raise ConfigError(f"bad tree source {self.tree!r}")

    def mu_spec(self) -> tuple:
        kind, _, arg = self.mu.partition(":")
        if kind in ("zero", "random"):
            return (kind, None)
        if kind == "uniform":
            try:
                lo, hi = (float(v) for v in arg.split(":"))
            except ValueError:
                raise ConfigError("uniform mean source is uniform:<lo>:<hi>")
            if self.mu_convention == "01":
                lo, hi = float(from_binary(lo)), float(from_binary(hi))
            if not (-1 + 2 * self.c <= lo <= hi <= 1 - 2 * self.c):
                raise ConfigError(f"mean interval [{lo}, {hi}] is not {2 * self.c}-bounded")
            return ("uniform", (lo, hi))
        if kind == "file":
            if not arg:
                raise ConfigError("file mean source needs a path")
            return ("file", arg)
        raise ConfigError(f"bad mean source {self.mu!r}")

    def tree_size_hint(self) -> int:
        kind, arg = self.tree_spec()
        if kind == "random":
            return arg
        if kind == "parity":
            return 2 ** arg
        if kind == "const":
            return 1
        return load_tree(arg, self.n).size

    def depth_cap(self) -> int | None:
        if self.depth == "auto":
            return None
        if self.depth == "log2s":
            return max(0, math.ceil(math.log2(self.tree_size_hint())))
        return int(self.depth)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def _positive_int(text, what):
    try:
        v = int(text)
    except ValueError:
        raise ConfigError(f"{what} must be an integer, got {text!r}")
    if v < 1:
        raise ConfigError(f"{what} must be positive")
    return v


def load_tree(path, n):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read tree file {path}: {exc}")
    tree = parse_tree(text)
    if max(tree.variables, default=0) >= n:
        raise ConfigError(f"tree in {path} uses variables above n={n}")
    return parse_tree(text, n)


def load_means(path, n, convention):
    try:
        mu = read_means(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read mean file {path}: {exc}")
    if convention == "01":
        mu = from_binary(mu)
    if mu.size != n:
        raise ConfigError(f"mean file {path} has {mu.size} entries, expected {n}")
    return mu


def digest(array) -> str:
    return hashlib.sha256(np.ascontiguousarray(array, dtype=np.float64).tobytes()).hexdigest()[:16]


# --- trial construction ------------------------------------------------------

def trial_tree(config, trial):
    kind, arg = config.tree_spec()
    if kind == "random":
        return random_tree(config.n, arg, derive_rng(config.seed, trial, "tree"))
    if kind == "parity":
        return parity_tree(range(1, arg + 1), config.n)
    if kind == "const":
        return parse_tree(f"(leaf {arg:+d})", config.n)
    return load_tree(arg, config.n)


def trial_base_mu(config, trial):
    kind, arg = config.mu_spec()
    if kind == "zero":
        return np.zeros(config.n)
    if kind == "random":
        return random_base_mu(config.n, config.c, derive_rng(config.seed, trial, "mu-bar"))
    if kind == "uniform":
        lo, hi = arg
        return random_base_mu(config.n, config.c, derive_rng(config.seed, trial, "mu-bar"), lo, hi)
    return load_means(arg, config.n, config.mu_convention)


@dataclass
class TrialRecord:
    trial: int
    seed: int
    mu_bar_digest: str
    delta_digest: str
    depth_cap: int
    threshold: float
    frontier_sizes: str
    final_size: int
    failed: bool
    error: float
    sq_loss: float
    heavy_count: int
    heavy_captured: bool
    within_pebbles: bool
    wall_time: float = 0.0

    @classmethod
    def columns(cls, timing=False):
        names = [f.name for f in fields(cls)]
        return names if timing else names[:-1]

    def row(self, timing=False):
        out = []
        for name in self.columns(timing):
            v = getattr(self, name)
            if isinstance(v, bool):
                v = int(v)
            elif isinstance(v, float):
                v = repr(v)
            out.append(v)
        return out


def run_trial(config: ExperimentConfig, trial: int) -> TrialRecord:
    """One draw of tree, base mean, shift and sample, then learn and measure."""
    start = time.perf_counter()
    f = trial_tree(config, trial)
    base_mu = trial_base_mu(config, trial)
    pert = draw_perturbation(base_mu, config.c, derive_rng(config.seed, trial, "delta"))
    dist = pert.dist
    data = Dataset.generate(f, dist, config.m, derive_rng(config.seed, trial, "sample"))
    lc = LearnerConfig(
        c=config.c,
        threshold=config.threshold,
        depth_cap=config.depth_cap(),
        mu_source=config.mu_source,
    )
    outcome = learn(data, lc)
    frontier = outcome.frontier
    error = sq_loss = math.nan
    heavy_count, captured, pebbles = -1, False, False
    if not outcome.failed:
        mode, points = config.eval_mode()
        h = outcome.hypothesis
        if mode == "exact":
            error = exact_error(h, dist, f)
        else:
            error = empirical_error(h, dist, f, points, derive_rng(config.seed, trial, "eval"))
    if mode_is_exact(config):
        expansion = expand_exact(f, dist)
        t, D = outcome.threshold, outcome.depth_cap
        heavy = oracle.heavy_set(expansion, dist, 2 * t, D)
        heavy_count = len(heavy)
        captured = all(S in frontier for S in heavy)
        tau = t * math.sqrt(config.eps) / 4
        table = expansion.to_dense()
        pebbles = all(S == 0 or abs(table[S]) >= t - tau for S in frontier.sets)
        if not outcome.failed:
            poly = outcome.hypothesis.poly
            if poly.same_mu(dist.mu):
                sq_loss = oracle.exact_squared_loss(poly, dist, f)
            else:
                sq_loss = oracle.pointwise_squared_loss(poly, dist, f)
    return TrialRecord(
        trial=trial,
        seed=config.seed,
        mu_bar_digest=digest(base_mu),
        delta_digest=digest(pert.delta),
        depth_cap=outcome.depth_cap,
        threshold=outcome.threshold,
        frontier_sizes=";".join(str(k) for k in outcome.frontier_sizes),
        final_size=len(frontier),
        failed=outcome.failed,
        error=error,
        sq_loss=sq_loss,
        heavy_count=heavy_count,
        heavy_captured=captured,
        within_pebbles=pebbles,
        wall_time=time.perf_counter() - start,
    )


def mode_is_exact(config):
    return config.eval_mode()[0] == "exact"


def _run_trial_packed(args):
    return run_trial(*args)


def run_trials(config: ExperimentConfig) -> list:
    config.validate()
    jobs = [(config, k) for k in range(config.trials)]
    if config.workers == 1:
        records = [run_trial(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_trial_packed, jobs))
    return sorted(records, key=lambda r: r.trial)


def run_learn_experiment(config: ExperimentConfig) -> list:
    return run_trials(config)


def run_coeff_recovery(config: ExperimentConfig) -> list:
    if not mode_is_exact(config):
        raise ConfigError("coefficient recovery needs exact evaluation (n <= 20)")
    return run_trials(config)


def records_csv(records, timing=False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TrialRecord.columns(timing))
    for r in records:
        w.writerow(r.row(timing))
    return buf.getvalue()


def fail_rate(records) -> float:
    return sum(r.failed for r in records) / len(records) if records else 0.0


# --- oracle campaigns ----------------------------------------------------------

@dataclass
class ReportRow:
    quantity: str
    params: str
    estimate: float
    stderr: float
    bound: float
    passed: bool

    def row(self):
        return [self.quantity, self.params, repr(self.estimate), repr(self.stderr),
                repr(self.bound), int(self.passed)]


def report_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ORACLE_COLUMNS)
    for r in rows:
        w.writerow(r.row())
    return buf.getvalue()


def run_sz_check(config: ExperimentConfig) -> list:
    """Monte-Carlo small-product probabilities against the bound and closed form.

    ``config.m`` is the number of Monte-Carlo points per grid cell.
    """
    config.validate()
    rows = []
    for d in config.sz_degrees:
        for eps in config.sz_eps:
            est = oracle.sz_probability(d, eps, config.m, derive_rng(config.seed, d, f"sz:{eps!r}"))
            params = f"d={d};eps={eps!r}"
            bound = oracle.sz_bound(d, eps)
            rows.append(ReportRow("sz-bound", params, est.estimate, est.stderr, bound, est.estimate <= bound))
            exact = oracle.sz_exact(d, eps)
            rows.append(ReportRow("sz-closed-form", params, est.estimate, est.stderr, exact, est.within(exact)))
    return rows


def run_propagation_check(config: ExperimentConfig) -> list:
    """Frequency of the propagation failure event over random shifts.

    One tree and base mean per campaign (trial index 0); ``config.trials``
    shift draws shared across the ``alphas`` grid.
    """
    config.validate()
    if config.n > 20:
        raise ConfigError("propagation check needs n <= 20")
    f = trial_tree(config, 0)
    base_mu = trial_base_mu(config, 0)
    ests = oracle.propagation_frequencies(
        f, base_mu, config.c, config.alphas, config.beta, config.degree_cap,
        config.trials, derive_rng(config.seed, "propagation"), form=config.form,
    )
    rows = []
    for a, est in zip(config.alphas, ests):
        bound = oracle.propagation_bound(a, config.beta, config.c, config.degree_cap, config.form)
        params = (f"form={config.form};a={a!r};b={config.beta!r};cap={config.degree_cap};"
                  f"tree={config.tree};mu_bar={digest(base_mu)}")
        rows.append(ReportRow("propagation", params, est.estimate, est.stderr, bound, est.estimate <= bound))
    return rows


def oracle_coefficients(config: ExperimentConfig):
    """Exact expansion of trial 0's tree at its perturbed mean."""
    config.validate()
    if config.n > 20:
        raise ConfigError("exact coefficients need n <= 20")
    f = trial_tree(config, 0)
    base_mu = trial_base_mu(config, 0)
    dist = draw_perturbation(base_mu, config.c, derive_rng(config.seed, 0, "delta")).dist
    return f, dist, expand_exact(f, dist)


def write_outputs(config: ExperimentConfig, text: str) -> None:
    """Write ``text`` to ``config.out`` (stdout when unset) plus a config sidecar."""
    if config.out is None:
        print(text, end="")
        return
    path = Path(config.out)
    path.write_text(text)
    Path(str(path) + ".config.json").write_text(config.to_json())

