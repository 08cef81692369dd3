import itertools
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

from rifsdim.config import rifs_from_dict
from rifsdim.errors import OutOfRange
from rifsdim.oracles import cantor_beta, legendre_on_grid
from rifsdim.spectrum import alpha_endpoints, beta, dim_level_set, dimension_ussc, spectrum_curve

from conftest import two_map

LOG2, LOG3 = math.log(2), math.log(3)


def p_cantor(p="1/4", r="1/3"):
    return rifs_from_dict(two_map(r, probs=(p, str(1 - Fraction(p)))))


@pytest.fixture(scope="module")
def curve(random_cantor):
    return spectrum_curve(random_cantor, [round(q, 1) for q in np.arange(-20, 20.05, 0.1)])


def test_dimension_examples(dyadic, random_cantor):
    with pytest.warns(UserWarning, match="USSC"):  # touching images
        assert dimension_ussc(dyadic) == pytest.approx(1, abs=1e-12)
    assert dimension_ussc(random_cantor) == pytest.approx(2 * LOG2 / (LOG3 + math.log(4)), abs=1e-12)
    single = rifs_from_dict({"systems": [{"maps": [{"ratio": "1/2", "translation": "0"}], "probs": ["1"]},
                                         {"maps": [{"ratio": "1/3", "translation": "0"}], "probs": ["1"]}]})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert dimension_ussc(single) == pytest.approx(0, abs=1e-12)


def test_beta_basics(random_cantor):
    assert abs(beta(random_cantor, 1).beta) <= 1e-12
    b0 = beta(random_cantor, 0)
    assert b0.beta == pytest.approx(dimension_ussc(random_cantor), abs=1e-15)
    assert abs(b0.residual) <= 1e-12
    # implicit derivative against a central difference
    h = 1e-6
    fd = (beta(random_cantor, 0.3 + h).beta - beta(random_cantor, 0.3 - h).beta) / (2 * h)
    assert beta(random_cantor, 0.3).beta_prime == pytest.approx(fd, abs=1e-8)


def test_beta_self_similar_closed_form():
    rifs = rifs_from_dict({"systems": [two_map("1/3")["systems"][0]] * 2})
    for q in (-3, -0.5, 0, 0.7, 2, 10):
        assert beta(rifs, q).beta == pytest.approx((1 - q) * LOG2 / LOG3, abs=1e-12)


def test_alpha_endpoints_random_cantor(random_cantor):
    ends = alpha_endpoints(random_cantor)
    g = 0.5 * (math.log(1 / 3) + math.log(1 / 4))
    assert ends.lo == pytest.approx(math.log(3 / 4) / g, abs=1e-14)
    assert ends.hi == pytest.approx(math.log(1 / 4) / g, abs=1e-14)
    assert ends.argmin == ((1, 1),)
    assert ends.argmax == ((0, 0),)


def test_alpha_endpoints_sec61(sec61):
    ends = alpha_endpoints(sec61)
    assert ends.hi == pytest.approx(1 + LOG2 / LOG3, abs=1e-14)
    assert set(ends.argmax) == set(itertools.product((0, 2), (0, 1, 3)))
    assert ends.lo == pytest.approx(0.5, abs=1e-14)
    assert ends.argmin == ((1, 2),)


def test_degenerate_endpoints_coincide(dyadic):
    ends = alpha_endpoints(dyadic)
    assert ends.lo == pytest.approx(ends.hi, abs=1e-14)
    with pytest.raises(OutOfRange):
        dim_level_set(dyadic, ends.lo)


def test_exchange_property():
    # ties everywhere: system 1 has two minimal maps, system 2 three
    rifs = rifs_from_dict({"systems": [
        {"maps": [{"ratio": "1/4", "translation": t} for t in ("0", "1/4", "3/4")],
         "probs": ["1/4", "1/2", "1/4"]},
        {"maps": [{"ratio": "1/4", "translation": t} for t in ("0", "1/4", "1/2", "3/4")],
         "probs": ["1/6", "1/6", "1/2", "1/6"]}]})
    ends = alpha_endpoints(rifs)
    assert len(ends.argmax) == 6
    for ext in (set(ends.argmin), set(ends.argmax)):
        for a, b in itertools.product(ext, repeat=2):
            for i in range(len(a)):
                swapped = a[:i] + (b[i],) + a[i + 1:]
                assert swapped in ext


def test_convexity_and_ranges(curve):
    betas = np.array([s.beta for s in curve.samples])
    second = betas[2:] - 2 * betas[1:-1] + betas[:-2]
    assert second.min() >= -1e-8
    assert np.all(np.diff(betas) < 0)  # alpha_lo > 0
    lo, hi = curve.endpoints.lo, curve.endpoints.hi
    for s in curve.samples:
        assert lo - 1e-9 <= s.alpha <= hi + 1e-9
        assert s.f <= curve.dim_k + 1e-9
        assert abs(s.residual) <= 1e-12
    peak = next(s for s in curve.samples if s.q == 0)
    assert peak.f == pytest.approx(curve.dim_k, abs=1e-10)


def test_extreme_q_reaches_endpoints(random_cantor, sec61):
    for rifs in (random_cantor, sec61):
        ends = alpha_endpoints(rifs)
        assert abs(beta(rifs, 50).alpha - ends.lo) < 1e-3
        assert abs(beta(rifs, -50).alpha - ends.hi) < 1e-3


def test_symmetric_cantor_degenerates():
    c = spectrum_curve(p_cantor("1/2"), [-5, 0, 5])
    for s in c.samples:
        assert s.alpha == pytest.approx(c.dim_k, abs=1e-12)
        assert s.f == pytest.approx(c.dim_k, abs=1e-12)


def test_level_set_at_peak(random_cantor):
    a0 = beta(random_cantor, 0).alpha
    v = dim_level_set(random_cantor, a0)
    assert v.q == pytest.approx(0, abs=1e-10)
    assert v.f == pytest.approx(beta(random_cantor, 0).beta, abs=1e-12)


def test_level_set_against_dense_legendre_grid():
    rifs = p_cantor("1/4")
    ends = alpha_endpoints(rifs)
    qs = np.arange(-30, 30, 0.001)
    for alpha in (ends.lo + 0.25 * (ends.hi - ends.lo), (ends.lo + ends.hi) / 2,
                  ends.lo + 0.9 * (ends.hi - ends.lo)):
        f = dim_level_set(rifs, alpha).f
        oracle = legendre_on_grid(lambda q: cantor_beta([0.25, 0.75], 1 / 3, q), alpha, qs)
        assert f == pytest.approx(oracle, abs=1e-6)


def test_level_set_out_of_range(random_cantor):
    ends = alpha_endpoints(random_cantor)
    for a in (ends.hi, ends.lo, ends.hi + 0.1):
        with pytest.raises(OutOfRange):
            dim_level_set(random_cantor, a)
