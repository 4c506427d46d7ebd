import itertools
import os
import subprocess
import sys

import numpy as np
import pytest

from ndtstream import kernels

needs_ext = pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled core not built")


def instance(rng, h, n, zero_bw=False):
    bits = np.sort(rng.uniform(0.5e6, 16e6, n))
    util = np.log(bits / bits[0]) / np.log(bits[-1] / bits[0]) if n > 1 else np.ones(1)
    bw = rng.uniform(0.5e6, 12e6, h)
    if zero_bw:
        bw[rng.integers(h)] = 0.0
    rtt = rng.uniform(0.0, 0.9, h)
    limits = rng.integers(0, n, h)
    state = (float(rng.uniform(0, 30)), float(util[rng.integers(n)]), bool(rng.integers(2)),
             float(rng.uniform(2, 8)), float(rng.uniform(2, 12)), 2.0, 30.0)
    weights = tuple(float(x) for x in rng.uniform(0, 50, 3)) + (10.0,)
    return limits, bits, util, bw, rtt, state, weights


@needs_ext
def test_backends_agree_on_search_and_evaluation():
    rng = np.random.default_rng(7)
    for trial in range(300):
        h, n = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        limits, bits, util, bw, rtt, state, w = instance(rng, h, n, zero_bw=trial % 7 == 0)
        a = kernels.search_plans(limits, bits, util, bw, rtt, *state, *w, backend="cython")
        b = kernels.search_plans(limits, bits, util, bw, rtt, *state, *w, backend="python")
        assert a == b
        plan = tuple(int(rng.integers(0, lim + 1)) for lim in limits)
        ea = kernels.evaluate_plan(plan, bits, util, bw, rtt, *state, *w, backend="cython")
        eb = kernels.evaluate_plan(plan, bits, util, bw, rtt, *state, *w, backend="python")
        assert ea == eb


@pytest.mark.parametrize("backend", list(kernels.BACKENDS))
def test_search_is_first_maximum_in_lexicographic_order(backend):
    rng = np.random.default_rng(3)
    for _ in range(50):
        h, n = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        limits, bits, util, bw, rtt, state, w = instance(rng, h, n)
        w = (0.0, 0.0, 0.0, 10.0) if rng.random() < 0.3 else w
        best, best_v = None, -np.inf
        for plan in itertools.product(*(range(lim + 1) for lim in limits)):
            v = kernels.evaluate_plan(plan, bits, util, bw, rtt, *state, *w, backend=backend)
            if v > best_v:
                best, best_v = plan, v
        assert kernels.search_plans(limits, bits, util, bw, rtt, *state, *w, backend=backend) == (best, best_v)


def test_pure_fallback_selected_by_env():
    env = dict(os.environ, NDTSTREAM_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from ndtstream import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_default_backend_prefers_compiled():
    expect = "cython" if "cython" in kernels.BACKENDS else "python"
    assert kernels.BACKEND == expect
