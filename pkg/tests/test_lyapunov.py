import math
from fractions import Fraction

import numpy as np
import pytest

from rifsdim import _kernels as K
from rifsdim.config import rifs_from_dict
from rifsdim.errors import NotAPath, NotRegular, PreconditionError
from rifsdim.finite_type import enumerate_graph, essential_class, measure_vector
from rifsdim.lyapunov import (dimension_mc, isolated_point_scan, left_endpoint_dim, local_dim_mc,
                              neck_positions)
from rifsdim.model import letters_from_uniforms, rng_stream
from rifsdim.spectrum import dimension_ussc

from conftest import two_map

LOG2, LOG3 = math.log(2), math.log(3)


def _exact_log_norm(mats, letters):
    v = [1] * len(mats[0])
    for j in letters:
        a = mats[j]
        v = [sum(v[i] * a[i][u] for i in range(len(v))) for u in range(len(v))]
    return math.log(sum(v))


@pytest.mark.parametrize("every", [1, 4, 64])
def test_renormalized_product_matches_exact(sec61_graph, every):
    counts = essential_class(sec61_graph).counts
    mats = np.array(counts, dtype=np.float64)
    gen = rng_stream(5, "test-renorm", every)
    for n in range(1, 31):
        letters = gen.integers(0, 2, n).astype(np.int64)
        e, s = K.matrix_product_log2(mats, letters, every)
        got = e * LOG2 + math.log(s)
        assert got == pytest.approx(_exact_log_norm(counts, letters), abs=1e-10)


def test_walk_matches_exact_measure(sec61_graph):
    # the leftmost walk's log-norm equals the exact Q-vector norm
    th = (Fraction(1, 2), Fraction(1, 2))
    for n in (5, 17, 30):
        est = local_dim_mc(sec61_graph, th, "given_path", n, 1, seed=3, path="leftmost")
        letters = letters_from_uniforms(th, rng_stream(3, "localdim:given_path", 0).random(n))
        q = measure_vector(sec61_graph, [int(x) for x in letters], [0] * n)
        exact = math.log(q.norm) / (n * math.log(1 / 3))
        assert est.value == pytest.approx(exact, abs=1e-12)


def test_dimension_exact_cases(sec63_graph, dyadic_graph):
    ess = essential_class(sec63_graph)
    for seed in (0, 1, 99):
        d = dimension_mc(ess, [0.5, 0.5], n=1000, trials=5, seed=seed)
        assert d.value == 1.0 and d.stderr == 0.0
    assert dimension_mc(essential_class(dyadic_graph), [1], n=500, trials=3).value == pytest.approx(1, abs=1e-15)
    cantor = rifs_from_dict({"systems": [two_map("1/3")["systems"][0]] * 2})
    d = dimension_mc(essential_class(enumerate_graph(cantor)), [0.5, 0.5], n=1000, trials=3)
    assert d.value == pytest.approx(LOG2 / LOG3, abs=1e-15)


def test_disjoint_seeds_agree(sec61_graph):
    ess = essential_class(sec61_graph)
    a = dimension_mc(ess, [0.5, 0.5], n=20_000, trials=20, seed=1)
    b = dimension_mc(ess, [0.5, 0.5], n=20_000, trials=20, seed=2)
    assert abs(a.value - b.value) <= 6 * math.hypot(a.stderr, b.stderr)
    assert a.per_trial != b.per_trial


def test_dimension_matches_ussc_formula():
    rifs = rifs_from_dict({"systems": [
        {"maps": [{"ratio": "1/5", "translation": t} for t in ("0", "4/5")], "probs": ["1/2"] * 2},
        {"maps": [{"ratio": "1/5", "translation": t} for t in ("0", "2/5", "4/5")], "probs": ["1/3"] * 3}]})
    d = dimension_mc(essential_class(enumerate_graph(rifs)), [0.5, 0.5], n=100_000, trials=50, seed=0)
    assert abs(d.value - dimension_ussc(rifs)) <= 3 * d.stderr


def test_stderr_definition(sec61_graph):
    d = dimension_mc(essential_class(sec61_graph), [0.5, 0.5], n=2000, trials=8, seed=4)
    vals = np.array(d.per_trial)
    assert d.stderr == pytest.approx(vals.std(ddof=1) / math.sqrt(len(vals)), rel=1e-9)
    assert d.value == pytest.approx(vals.mean(), rel=1e-12)


def test_leftmost_path_sec61(sec61_graph):
    d = local_dim_mc(sec61_graph, [0.5, 0.5], "given_path", 5000, 4, path="leftmost")
    assert d.value == pytest.approx(1 + LOG2 / LOG3, abs=1e-12)


def test_sandwich_and_max_block_endpoint(sec61_graph):
    kw = dict(n=10_000, trials=8, seed=11, sink_word=(0,))
    rnd = local_dim_mc(sec61_graph, [0.5, 0.5], "random_child", **kw)
    lo = local_dim_mc(sec61_graph, [0.5, 0.5], "max_block", **kw)
    hi = local_dim_mc(sec61_graph, [0.5, 0.5], "min_block", **kw)
    assert lo.value <= rnd.value <= hi.value
    assert abs(lo.value - 0.5) < 0.01
    assert abs(hi.value - (1 + LOG2 / LOG3)) < 0.01


def test_seed_determinism(sec61_graph):
    a = local_dim_mc(sec61_graph, [0.5, 0.5], "random_child", 3000, 4, seed=8)
    b = local_dim_mc(sec61_graph, [0.5, 0.5], "random_child", 3000, 4, seed=8)
    assert a == b


def test_errors(sec61_graph, golden_graph):
    with pytest.raises(NotRegular):
        local_dim_mc(golden_graph, None, "random_child", 100, 2)
    with pytest.raises(NotAPath):
        local_dim_mc(sec61_graph, None, "given_path", 10, 1, path=[0] * 5)
    with pytest.raises(NotAPath):
        local_dim_mc(sec61_graph, None, "given_path", 10, 1, path=[7] * 10)
    with pytest.raises(ValueError):
        local_dim_mc(sec61_graph, None, "greedy", 10, 1)
    with pytest.raises(PreconditionError):
        dimension_mc(essential_class(sec61_graph), [0.5, 0.5], n=0)


def test_neck_positions_do_not_overlap():
    assert list(neck_positions([0, 0, 0, 0, 0], (0, 0))) == [1, 3]
    assert list(neck_positions([1, 0, 1, 0, 1, 0], (0, 1, 0))) == [3]
    assert list(neck_positions([1, 1], (0,))) == []


def test_left_endpoint(golden):
    rho = (1 + math.sqrt(5)) / 2
    assert left_endpoint_dim(golden) == pytest.approx(
        (math.log(1 / 4) + math.log(1 / 3)) / (2 * math.log(1 / rho)), abs=1e-12)
    assert left_endpoint_dim(golden, [1, 0]) == pytest.approx(math.log(1 / 4) / math.log(1 / rho), abs=1e-12)
    same = rifs_from_dict({"field": golden_field(), "systems": [golden_system("1/5")] * 2})
    assert left_endpoint_dim(same) == pytest.approx(math.log(1 / 5) / math.log(1 / rho), abs=1e-12)


def golden_field():
    return {"minpoly": [-1, -1, 1], "interval": ["3/2", "2"]}


def golden_system(p):
    r = {"coeffs": ["-1", "1"]}
    return {"maps": [{"ratio": r, "translation": "0"}, {"ratio": r, "translation": {"coeffs": ["2", "-1"]}}],
            "probs": [p, str(1 - Fraction(p))]}


def test_left_endpoint_needs_fixed_zero():
    rifs = rifs_from_dict({"systems": [{"maps": [{"ratio": "1/2", "translation": "1/4"}], "probs": ["1"]}]})
    with pytest.raises(PreconditionError):
        left_endpoint_dim(rifs)


def test_isolated_scan_symmetric_not_flagged():
    g = enumerate_graph(rifs_from_dict({"field": golden_field(), "systems": [golden_system("1/2")]}))
    rep = isolated_point_scan(g, [1], n=20_000, trials=10, seed=0)
    assert not rep.flagged
    assert rep.gap < 0.02


def test_isolated_scan_deterministic_biased_flagged():
    g = enumerate_graph(rifs_from_dict({"field": golden_field(), "systems": [golden_system("1/4")]}))
    rep = isolated_point_scan(g, [1], n=20_000, trials=10, seed=0)
    assert rep.flagged
    assert rep.gap > 3 * rep.stderr
