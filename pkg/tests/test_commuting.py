import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from rifsdim.commuting import (SinkInfo, block_extremes, column_sum_range, find_sink,
                               interpolation_check, local_dim_interval, neck_distribution)
from rifsdim.config import rifs_from_dict
from rifsdim.errors import CapTooSmall
from rifsdim.finite_type import enumerate_graph
from rifsdim.lyapunov import neck_positions
from rifsdim.model import rng_stream, sample_letters
from rifsdim.oracles import run_block_oracle

F = Fraction
LOG2, LOG3 = math.log(2), math.log(3)


@pytest.fixture(scope="module")
def sec61_sink(sec61_graph):
    return find_sink(sec61_graph)


@pytest.fixture(scope="module")
def sec61_model(sec61_graph, sec61_sink):
    return block_extremes(sec61_graph, sec61_sink, 40)


def base3_family(second):
    return rifs_from_dict({"systems": [
        {"maps": [{"ratio": "1/3", "translation": t} for t in ("0", "1/3", "2/3")], "probs": ["1/3"] * 3},
        {"maps": [{"ratio": "1/3", "translation": t} for t in second],
         "probs": [str(F(1, len(second)))] * len(second)}]})


def is_sink(graph, word):
    sets = [{u} for u in range(len(graph))]
    for j in word:
        sets = [{e.child for u in s for e in graph.out(u, j)} for s in sets]
    return all(s == sets[0] for s in sets) and len(sets[0]) == 1


def test_sink_sec61(sec61_sink):
    assert sec61_sink == SinkInfo((0,), 0, True)


def test_sink_dyadic(dyadic_graph):
    assert find_sink(dyadic_graph) == SinkInfo((0,), 0, True)


@pytest.mark.parametrize("second,depth", [(("0", "2/9", "4/9", "2/3"), 2),
                                          (("0", "1/27", "1/3", "2/3"), 3),
                                          (("0", "8/27", "16/27", "2/3"), 3)])
def test_sink_commuting_family(second, depth):
    g = enumerate_graph(base3_family(second))
    sink = find_sink(g)
    assert sink.commuting
    assert set(sink.word) == {0} and len(sink.word) <= depth
    assert is_sink(g, sink.word)
    assert is_sink(g, (0,) * depth)


def test_no_sink_reported_as_none(sec63_graph):
    assert find_sink(sec63_graph, max_len=2) is None


# -- neck-length law ----------------------------------------------------------

def test_geometric_law():
    d = neck_distribution([F(1, 2), F(1, 2)], SinkInfo((0,), 0, True))
    assert d.probs[:5] == tuple(F(1, 2 ** n) for n in range(1, 6))
    assert d.mean == 2
    assert sum(d.probs) == 1 - d.deficit
    d = neck_distribution([F(1), F(0)], SinkInfo((0,), 0, True))
    assert d.probs[0] == 1 and d.deficit == 0


def first_hit_oracle(word, theta, n):
    """P(first occurrence of word ends at n) by brute force over all strings."""
    total = F(0)
    L = len(word)
    for s in itertools.product(range(len(theta)), repeat=n):
        hits = [i for i in range(L - 1, n) if s[i - L + 1:i + 1] == tuple(word)]
        if hits and hits[0] == n - 1:
            p = F(1)
            for x in s:
                p *= theta[x]
            total += p
    return total


@pytest.mark.parametrize("word,mean", [((0, 1), 4), ((0, 0), 6), ((0, 1, 0), 10)])
def test_automaton_law(word, mean):
    th = [F(1, 2), F(1, 2)]
    d = neck_distribution(th, SinkInfo(word, 0, True))
    assert d.mean == mean
    for n in range(1, 11):
        assert d.probs[n - 1] == first_hit_oracle(word, th, n)
    assert sum(d.probs) == 1 - d.deficit


def test_automaton_mean_monte_carlo():
    th = [F(1, 3), F(2, 3)]
    d = neck_distribution(th, SinkInfo((0, 1), 0, True))
    letters = sample_letters(th, 400_000, seed=1, tag="test-neck")
    pos = neck_positions(letters, (0, 1))
    waits = np.diff(np.concatenate([[-1], pos]))
    assert abs(waits.mean() - float(d.mean)) < 4 * waits.std() / math.sqrt(len(waits))


def test_deficit_small_for_reasonable_theta():
    for t in (F(1, 10), F(1, 2), F(9, 10)):
        d = neck_distribution([t, 1 - t], SinkInfo((0,), 0, True))
        assert d.deficit < 1e-12
    with pytest.raises(CapTooSmall):
        neck_distribution([F(1, 100), F(99, 100)], SinkInfo((0,), 0, True), cap=10, max_deficit=1e-6)


# -- block extremes -----------------------------------------------------------

def test_block_extremes_sec61(sec61_model):
    per = sec61_model.by_length()
    assert per[1] == (F(1, 6), F(2, 3))
    assert per[4] == (F(1, 6 ** 4), F(1, 12))
    for n in range(1, 41):
        assert per[n] == (F(1, 6 ** n), F(4, 3 * 2 ** n))


def test_block_extremes_brute_force(sec61_graph, sec61_model):
    assert run_block_oracle(sec61_graph, sec61_model, n_max=8).passed


def test_block_monotonicity(sec61_graph, sec61_model):
    per = sec61_model.by_length()
    c = max(x for e in sec61_graph.all_transitions() for x in e.column_sums())
    for n in range(2, 41):
        assert per[n][0] < per[n - 1][0] and per[n][1] < per[n - 1][1]
        assert per[n][1] <= c * per[n - 1][1]
        assert per[n][0] <= per[n][1]


# -- interval -----------------------------------------------------------------

def test_interval_half(sec61_graph, sec61_model):
    iv = local_dim_interval(sec61_model, [F(1, 2), F(1, 2)], sec61_graph.r, sec61_graph)
    assert iv.exact and not iv.bounds_only
    assert iv.lo == pytest.approx(0.5, abs=1e-14)
    assert iv.hi == pytest.approx(1 + LOG2 / LOG3, abs=1e-14)
    assert iv.lo_symbolic == "1/2"
    assert iv.hi_symbolic == "log(2)/log(3) + 1"
    a, b = column_sum_range(sec61_graph)
    assert a - 1e-12 <= iv.lo <= iv.hi <= b + 1e-12  # hi attains the bound


@pytest.mark.parametrize("theta", [F(1, 7), F(1, 3), F(3, 5), F(9, 10)])
def test_interval_theta(sec61_graph, sec61_model, theta):
    iv = local_dim_interval(sec61_model, [theta, 1 - theta], sec61_graph.r, sec61_graph)
    t = float(theta)
    assert iv.lo == pytest.approx((t * math.log(3 / 4) + LOG2) / LOG3, abs=1e-12)
    assert iv.hi == pytest.approx(1 + LOG2 / LOG3, abs=1e-12)


def test_interval_limits(sec61_graph, sec61_model):
    lo0 = local_dim_interval(sec61_model, [F(1, 10 ** 9), 1 - F(1, 10 ** 9)], sec61_graph.r, sec61_graph).lo
    lo1 = local_dim_interval(sec61_model, [1 - F(1, 10 ** 9), F(1, 10 ** 9)], sec61_graph.r, sec61_graph).lo
    assert lo0 == pytest.approx(LOG2 / LOG3, abs=1e-8)
    assert lo1 == pytest.approx(1 - LOG2 / LOG3, abs=1e-8)


def test_truncated_sum_reports_error(sec61_graph, sec61_sink):
    # at n_max = 2 the geometric pattern is not detectable, so the sum is truncated
    model = block_extremes(sec61_graph, sec61_sink, 2)
    iv = local_dim_interval(model, [F(1, 2), F(1, 2)], sec61_graph.r, sec61_graph)
    assert not iv.exact and iv.lo_err > 0 and iv.hi_err > 0
    assert abs(iv.lo - 0.5) <= iv.lo_err
    assert abs(iv.hi - (1 + LOG2 / LOG3)) <= iv.hi_err


# -- interpolation --------------------------------------------------------------

def test_interpolation(sec61_graph, sec61_sink):
    th = [F(1, 2), F(1, 2)]
    lo, hi = 0.5, 1 + LOG2 / LOG3
    res = dict(interpolation_check(sec61_graph, sec61_sink, th, [0, 0.25, 0.5, 0.75, 1],
                                   n=20_000, trials=20, seed=1))
    # t is the probability of taking the smallest block
    assert abs(res[0].value - lo) <= 3 * res[0].stderr
    assert abs(res[1].value - hi) <= 3 * res[1].stderr + 1e-12
    assert abs(res[0.5].value - (lo + hi) / 2) <= 3 * res[0.5].stderr
    vals = [res[t] for t in (0, 0.25, 0.5, 0.75, 1)]
    for a, b in zip(vals, vals[1:]):
        assert b.value >= a.value - 3 * math.hypot(a.stderr, b.stderr)


def test_neck_gaps_vanish_relative_to_position():
    letters = sample_letters([F(1, 2), F(1, 2)], 200_000, seed=6, tag="test-gaps")
    pos = neck_positions(letters, (0,)).astype(float)
    late = pos[pos > 50_000]
    ratios = np.diff(late) / late[:-1]
    assert ratios.max() < 1e-3
