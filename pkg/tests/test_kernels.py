import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from smoothdt import kernels
from smoothdt.kernels import _pykernels
from smoothdt.tree import random_tree

try:
    from smoothdt.kernels import _ckernels
except ImportError:
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")
    if _ckernels is not None and not os.environ.get("SMOOTHDT_PURE"):
        assert kernels.BACKEND == "cython"


def test_pure_backend_override():
    code = "import smoothdt.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, SMOOTHDT_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_pairwise_sum_small_cases():
    assert _pykernels.pairwise_sum([]) == 0.0
    assert _pykernels.pairwise_sum([3.0]) == 3.0
    # ((1 + 2) + (3 + 4)) + 5
    assert _pykernels.pairwise_sum([1e16, 1.0, -1e16, 1.0, 5.0]) == ((1e16 + 1.0) + (-1e16 + 1.0)) + 5.0


@needs_ext
@given(hnp.arrays(np.float64, st.integers(0, 3000), elements=st.floats(-1e6, 1e6)))
@settings(max_examples=80, deadline=None)
def test_pairwise_sum_bit_identical(a):
    assert _ckernels.pairwise_sum(a) == _pykernels.pairwise_sum(a)


@needs_ext
@pytest.mark.parametrize("m", [1, 2, 7, 1000, 65537])
def test_subset_sums_bit_identical(m):
    gen = np.random.default_rng(m)
    zt = gen.normal(size=(6, m))
    y = gen.choice([-1.0, 1.0], size=m)
    cands = [(), (0,), (2, 5), (0, 1, 3, 4), (0, 1, 2, 3, 4, 5)]
    np.testing.assert_array_equal(_ckernels.subset_sums(zt, y, cands), _pykernels.subset_sums(zt, y, cands))


def test_subset_sums_value():
    zt = np.array([[1.0, 2.0, 3.0], [0.5, -1.0, 2.0]])
    y = np.array([1.0, -1.0, 1.0])
    out = kernels.subset_sums(zt, y, [(), (0,), (0, 1)])
    np.testing.assert_allclose(out, [1.0, 1 - 2 + 3, 0.5 + 2 + 6])


@needs_ext
def test_tree_kernel_bit_identical():
    gen = np.random.default_rng(1)
    for _ in range(20):
        t = random_tree(10, int(gen.integers(1, 40)), gen)
        X = gen.choice(np.array([-1, 1], dtype=np.int8), size=(500, 10))
        flat = t._flat
        np.testing.assert_array_equal(_ckernels.evaluate_tree(*flat, X), _pykernels.evaluate_tree(*flat, X))
        np.testing.assert_array_equal(_pykernels.evaluate_tree(*flat, X), [t.evaluate(x) for x in X])


def test_fallback_module_runs_learner():
    """The learner gives identical frontiers when forced onto the numpy backend."""
    code = (
        "import numpy as np\n"
        "from smoothdt import kernels\n"
        "from smoothdt.dist import Dataset, ProductDist\n"
        "from smoothdt.learner import learn, LearnerConfig\n"
        "from smoothdt.tree import random_tree\n"
        "f = random_tree(8, 8, np.random.default_rng(0))\n"
        "d = ProductDist(np.linspace(-0.5, 0.5, 8), 0.1)\n"
        "ds = Dataset.generate(f, d, 5000, np.random.default_rng(1))\n"
        "o = learn(ds, LearnerConfig(depth_cap=3))\n"
        "print(kernels.BACKEND, sorted((k, v.hex()) for k, v in o.frontier.estimates.items()))\n"
    )
    outs = {}
    for pure in ("", "1"):
        env = dict(os.environ, SMOOTHDT_PURE=pure)
        if not pure:
            env.pop("SMOOTHDT_PURE")
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, _, payload = res.stdout.partition(" ")
        outs[backend] = payload
    assert "python" in outs
    if len(outs) == 2:
        assert outs["python"] == outs["cython"]
