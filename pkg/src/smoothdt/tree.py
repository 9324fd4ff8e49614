"""Boolean decision trees over {-1,1}^n.

Variables are 0-indexed in memory and 1-indexed in text and in the public
constructors (``parity_tree``), matching the usual N = {1..n} convention.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Union

import numpy as np

from . import kernels


class TreeError(ValueError):
    """Raised for structurally invalid trees or malformed tree text."""


@dataclass(frozen=True)
class Leaf:
    value: int


@dataclass(frozen=True)
class Node:
    var: int
    neg: "TreeNode"
    pos: "TreeNode"


TreeNode = Union[Leaf, Node]


class DecisionTree:
    """An immutable decision tree on ``n`` variables.

    ``Node.neg`` is followed when the tested bit is -1, ``Node.pos`` when it
    is +1.
    """

    def __init__(self, root: TreeNode, n: int):
        if n < 1:
            raise TreeError(f"variable count must be positive, got {n}")
        self.root = root
        self.n = n
        validate(root, n)

    def __repr__(self):
        return f"DecisionTree(n={self.n}, {serialize_node(self.root)})"

    def __eq__(self, other):
        return (
            isinstance(other, DecisionTree)
            and self.n == other.n
            and self.root == other.root
        )

    def __hash__(self):
        return hash((self.n, self.root))

    @cached_property
    def size(self) -> int:
        return _size(self.root)

    @cached_property
    def depth(self) -> int:
        return _depth(self.root)

    @cached_property
    def variables(self) -> frozenset:
        """0-indexed variables tested anywhere in the tree."""
        out = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Node):
                out.add(node.var)
                stack.extend((node.neg, node.pos))
        return frozenset(out)

    @cached_property
    def _flat(self):
        var, neg, pos, value = [], [], [], []

        def visit(node):
            k = len(var)
            var.append(-1)
            neg.append(-1)
            pos.append(-1)
            value.append(0)
            if isinstance(node, Leaf):
                value[k] = node.value
            else:
                var[k] = node.var
                neg[k] = visit(node.neg)
                pos[k] = visit(node.pos)
            return k

        visit(self.root)
        return (
            np.array(var, dtype=np.int_),
            np.array(neg, dtype=np.int_),
            np.array(pos, dtype=np.int_),
            np.array(value, dtype=np.int8),
        )

    def evaluate(self, x) -> int:
        x = np.asarray(x)
        if x.shape != (self.n,):
            raise TreeError(f"expected a point with {self.n} entries, got shape {x.shape}")
        node = self.root
        while isinstance(node, Node):
            node = node.pos if x[node.var] > 0 else node.neg
        return node.value

    def evaluate_many(self, X) -> np.ndarray:
        """Evaluate on each row of a (k, n) array of +-1 values."""
        X = np.asarray(X, dtype=np.int8)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise TreeError(f"expected shape (k, {self.n}), got {X.shape}")
        return kernels.evaluate_tree(*self._flat, X)

    def __call__(self, X):
        return self.evaluate_many(X)


def validate(root: TreeNode, n: int) -> None:
    """Check leaf labels, variable range and path-distinctness."""
    stack = [(root, frozenset())]
    while stack:
        node, seen = stack.pop()
        if isinstance(node, Leaf):
            if node.value not in (-1, 1):
                raise TreeError(f"leaf value must be +1 or -1, got {node.value!r}")
        elif isinstance(node, Node):
            if not 0 <= node.var < n:
                raise TreeError(f"variable {node.var + 1} outside 1..{n}")
            if node.var in seen:
                raise TreeError(f"variable {node.var + 1} repeats on a path")
            path = seen | {node.var}
            stack.append((node.neg, path))
            stack.append((node.pos, path))
        else:
            raise TreeError(f"not a tree node: {node!r}")


def _size(node):
    if isinstance(node, Leaf):
        return 1
    return _size(node.neg) + _size(node.pos)


def _depth(node):
    if isinstance(node, Leaf):
        return 0
    return 1 + max(_depth(node.neg), _depth(node.pos))


def random_tree(n: int, target_size: int, rng: np.random.Generator) -> DecisionTree:
    """Grow a tree with exactly ``target_size`` leaves.

    Repeatedly picks a uniformly random leaf that still has an unused
    variable on its path and splits it on a uniformly random unused
    variable. Leaf labels are drawn uniformly at the end.
    """
    if n < 1:
        raise TreeError("n must be positive")
    if not 1 <= target_size <= 2 ** min(n, 62):
        raise TreeError(f"cannot build a tree with {target_size} leaves on {n} variables")
    # leaves are (path_vars, slot) where slot addresses the parent's child list
    children = {}
    labels = {}
    leaves = [((), 0)]
    next_id = 1
    while len(leaves) < target_size:
        expandable = [k for k, (path, _) in enumerate(leaves) if len(path) < n]
        k = expandable[int(rng.integers(len(expandable)))]
        path, node_id = leaves.pop(k)
        unused = [v for v in range(n) if v not in path]
        var = unused[int(rng.integers(len(unused)))]
        labels[node_id] = var
        neg_id, pos_id = next_id, next_id + 1
        next_id += 2
        children[node_id] = (neg_id, pos_id)
        leaves.insert(k, (path + (var,), pos_id))
        leaves.insert(k, (path + (var,), neg_id))
    leaf_ids = sorted(node_id for _, node_id in leaves)
    signs = rng.integers(0, 2, size=len(leaf_ids)) * 2 - 1
    leaf_value = dict(zip(leaf_ids, signs.tolist()))

    def build(node_id):
        if node_id in labels:
            neg_id, pos_id = children[node_id]
            return Node(labels[node_id], build(neg_id), build(pos_id))
        return Leaf(int(leaf_value[node_id]))

    return DecisionTree(build(0), n)


def parity_tree(variables: Iterable[int], n: int) -> DecisionTree:
    """Complete tree computing the product of the given (1-indexed) variables."""
    vs = sorted(set(variables))
    if not vs:
        raise TreeError("parity needs at least one variable")
    if vs[0] < 1 or vs[-1] > n:
        raise TreeError(f"parity variables must lie in 1..{n}")

    def build(k, sign):
        if k == len(vs):
            return Leaf(sign)
        return Node(vs[k] - 1, build(k + 1, -sign), build(k + 1, sign))

    return DecisionTree(build(0, 1), n)


def constant_tree(value: int, n: int) -> DecisionTree:
    return DecisionTree(Leaf(value), n)


class TruncatedTree:
    """A tree with every internal node at depth ``d`` replaced by a 0 leaf.

    Evaluates to -1, 0 or +1; 0 exactly where evaluation of the original
    tree would pass depth ``d``.
    """

    def __init__(self, tree: DecisionTree, d: int):
        if d < 0:
            raise ValueError("truncation depth must be non-negative")
        self.tree = tree
        self.d = d
        self.n = tree.n

    def evaluate(self, x) -> int:
        x = np.asarray(x)
        if x.shape != (self.n,):
            raise TreeError(f"expected a point with {self.n} entries")
        node, level = self.tree.root, 0
        while isinstance(node, Node):
            if level >= self.d:
                return 0
            node = node.pos if x[node.var] > 0 else node.neg
            level += 1
        return node.value

    def evaluate_many(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.int8)
        out = np.empty(X.shape[0], dtype=np.int8)
        for r in range(X.shape[0]):
            out[r] = self.evaluate(X[r])
        return out

    def __call__(self, X):
        return self.evaluate_many(X)


def truncate(tree: DecisionTree, d: int) -> TruncatedTree:
    return TruncatedTree(tree, d)


# --- text format -----------------------------------------------------------

_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def serialize_node(node: TreeNode) -> str:
    if isinstance(node, Leaf):
        return "(leaf +1)" if node.value > 0 else "(leaf -1)"
    return f"(node {node.var + 1} {serialize_node(node.neg)} {serialize_node(node.pos)})"


def serialize_tree(tree: DecisionTree) -> str:
    return serialize_node(tree.root)


def parse_tree(text: str, n: int | None = None) -> DecisionTree:
    """Parse the s-expression form.

    When ``n`` is omitted it is taken as the largest variable index used
    (at least 1).
    """
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise TreeError("empty tree text")
    pos = 0

    def expect(tok):
        nonlocal pos
        if pos >= len(tokens) or tokens[pos] != tok:
            got = tokens[pos] if pos < len(tokens) else "end of input"
            raise TreeError(f"expected {tok!r} at token {pos}, got {got!r}")
        pos += 1

    def parse():
        nonlocal pos
        expect("(")
        if pos >= len(tokens):
            raise TreeError("unexpected end of input")
        head = tokens[pos]
        pos += 1
        if head == "leaf":
            if pos >= len(tokens) or tokens[pos] not in ("+1", "-1", "1"):
                raise TreeError(f"bad leaf value at token {pos}")
            value = -1 if tokens[pos] == "-1" else 1
            pos += 1
            expect(")")
            return Leaf(value)
        if head == "node":
            if pos >= len(tokens) or not tokens[pos].isdigit():
                raise TreeError(f"bad variable index at token {pos}")
            var = int(tokens[pos])
            if var < 1:
                raise TreeError(f"variable index must be >= 1, got {var}")
            pos += 1
            neg = parse()
            pos_child = parse()
            expect(")")
            return Node(var - 1, neg, pos_child)
        raise TreeError(f"unknown form {head!r}")

    root = parse()
    if pos != len(tokens):
        raise TreeError(f"trailing input after token {pos}")
    if n is None:
        n = max((v + 1 for v in _all_vars(root)), default=1)
    return DecisionTree(root, n)


def _all_vars(node):
    if isinstance(node, Node):
        yield node.var
        yield from _all_vars(node.neg)
        yield from _all_vars(node.pos)
