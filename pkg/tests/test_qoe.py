import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ndtstream.media import default_ladder
from ndtstream.qoe import QoeWeights, SessionMetrics, chunk_utility, qoe_score, smoothness

unit = st.floats(0, 1)
secs = st.floats(0, 100)


def test_utility_endpoints_and_midpoint():
    lad = default_ladder()
    assert chunk_utility(0.4e6, lad) == 0.0
    assert chunk_utility(8.0e6, lad) == 1.0
    assert chunk_utility(2, [1, 2, 4]) == pytest.approx(0.5, abs=1e-12)


def test_utility_of_720p_rung():
    # ln(2.5/0.4) / ln(8/0.4), evaluated independently of the library
    expect = math.log(6.25) / math.log(20.0)
    assert chunk_utility(2.5e6, default_ladder()) == pytest.approx(expect, abs=1e-12)
    assert round(expect, 4) == 0.6117


def test_utility_single_rung_and_errors():
    assert chunk_utility(3.0, [3.0]) == 1.0
    with pytest.raises(ValueError):
        chunk_utility(3.0, [1.0, 2.0])
    with pytest.raises(ValueError):
        chunk_utility(3.0, [])


@given(st.lists(st.floats(1e3, 1e8), min_size=2, max_size=8, unique=True))
def test_utility_strictly_increasing(rates):
    rates = sorted(rates)
    u = [chunk_utility(r, rates) for r in rates]
    assert all(a < b for a, b in zip(u, u[1:]))


def test_qoe_examples():
    assert qoe_score(SessionMetrics(1, 0, 0, 0)) == 100.0
    assert qoe_score(SessionMetrics(0, 10, 10, 1)) == 0.0
    # 100 * (0.8 - 0.2*0.2 - 0.6*0.1 - 0.2*0.1)
    assert qoe_score(SessionMetrics(0.8, 2, 1, 0.1)) == pytest.approx(68.0, abs=1e-9)


@pytest.mark.parametrize("seq,expect", [([0.5, 0.5, 0.5], 0.0), ([0, 1, 0], 1.0), ([0.2, 0.6, 0.5], 0.25), ([0.3], 0.0)])
def test_smoothness_examples(seq, expect):
    assert smoothness(seq) == pytest.approx(expect, abs=1e-12)


def test_smoothness_empty_rejected():
    with pytest.raises(ValueError):
        smoothness([])


@given(st.lists(unit, min_size=1, max_size=30))
def test_smoothness_reversal_and_zero(seq):
    assert smoothness(seq) == pytest.approx(smoothness(seq[::-1]), abs=1e-12)
    assert (smoothness(seq) == 0) == (len(set(seq)) == 1)


@given(unit, secs, secs, unit)
def test_qoe_in_range(r, d, b, s):
    assert 0 <= qoe_score(SessionMetrics(r, d, b, s)) <= 100


@given(unit, unit, secs, secs, secs, secs, unit, unit)
def test_qoe_monotone(r1, r2, d1, d2, b1, b2, s1, s2):
    lo_r, hi_r = sorted((r1, r2))
    lo_d, hi_d = sorted((d1, d2))
    lo_b, hi_b = sorted((b1, b2))
    lo_s, hi_s = sorted((s1, s2))
    best = qoe_score(SessionMetrics(hi_r, lo_d, lo_b, lo_s))
    assert best >= qoe_score(SessionMetrics(lo_r, lo_d, lo_b, lo_s))
    assert best >= qoe_score(SessionMetrics(hi_r, hi_d, lo_b, lo_s))
    assert best >= qoe_score(SessionMetrics(hi_r, lo_d, hi_b, lo_s))
    assert best >= qoe_score(SessionMetrics(hi_r, lo_d, lo_b, hi_s))


def test_invalid_metrics_and_weights():
    with pytest.raises(ValueError):
        SessionMetrics(1.5, 0, 0, 0)
    with pytest.raises(ValueError):
        SessionMetrics(0.5, -1, 0, 0)
    with pytest.raises(ValueError):
        QoeWeights(w_b=-0.1)
    with pytest.raises(ValueError):
        QoeWeights(b_ref=0)
