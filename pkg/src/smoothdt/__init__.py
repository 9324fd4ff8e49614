"""Learning decision trees from random examples under perturbed product distributions."""

from .dist import Dataset, ProductDist, derive_rng, perturb, sample
from .fourier import SparsePoly, estimate_coeff, exact_coeff, expand_exact
from .learner import Hypothesis, LearnerConfig, LearnOutcome, learn
from .tree import DecisionTree, parity_tree, parse_tree, random_tree, serialize_tree

__version__ = "0.1.0"

__all__ = [
    "Dataset", "ProductDist", "derive_rng", "perturb", "sample",
    "SparsePoly", "estimate_coeff", "exact_coeff", "expand_exact",
    "Hypothesis", "LearnerConfig", "LearnOutcome", "learn",
    "DecisionTree", "parity_tree", "parse_tree", "random_tree", "serialize_tree",
]
