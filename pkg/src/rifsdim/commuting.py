"""Sinks, neck blocks and the local-dimension interval of commuting RIFS."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import sympy

from .errors import CapTooSmall, ExplosionGuard, NotCommuting
from .finite_type import CvGraph, mat_vec
from .lyapunov import DimensionEstimate, _failure, _summarize, neck_positions
from .model import letters_from_uniforms, rng_stream

DEFAULT_NECK_CAP = 40
DEFAULT_DIST_CAP = 400
DEFAULT_PATH_BUDGET = 200_000

_mp = mpmath.MPContext()
_mp.dps = 50


@dataclass(frozen=True)
class SinkInfo:
    word: tuple  # 0-based letters
    node: int
    commuting: bool


def _step_sets(graph: CvGraph, state: tuple, letter: int) -> tuple:
    return tuple(frozenset(e.child for u in s for e in graph.out(u, letter)) for s in state)


def find_sink(graph: CvGraph, max_len: int = 8) -> SinkInfo | None:
    """Shortest word sending every node to one and the same node.

    Breadth-first over words in lexicographic order; a word whose tuple of
    descendant sets was already produced by a shorter word is not extended.
    """
    start = tuple(frozenset((u,)) for u in range(len(graph.nodes)))
    seen = {start}
    queue = deque([((), start)])
    while queue:
        word, state = queue.popleft()
        if len(word) >= max_len:
            continue
        for j in range(graph.rifs.m):
            nxt = _step_sets(graph, state, j)
            w = word + (j,)
            first = nxt[0]
            if len(first) == 1 and all(s == first for s in nxt):
                node = next(iter(first))
                return SinkInfo(w, node, len(graph.nodes[node].neighbours) == 1)
            if nxt not in seen:
                seen.add(nxt)
                queue.append((w, nxt))
    return None


# ---------------------------------------------------------------------------
# neck-length law
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NeckDistribution:
    probs: tuple  # probs[n-1] = P(N = n), exact
    mean: Fraction  # exact E(N), not truncated
    deficit: Fraction  # mass beyond the cap

    def tail_mass(self, n: int) -> Fraction:
        """P(N >= n)."""
        return 1 - sum(self.probs[: n - 1], Fraction(0))


def _automaton(word: Sequence[int], m: int) -> list:
    """Transition table of the occurrence automaton; state len(word) is absorbing."""
    w = list(word)
    fail = _failure(w)
    L = len(w)
    table = []
    for s in range(L):
        row = []
        for x in range(m):
            k = s
            while k and w[k] != x:
                k = fail[k - 1]
            row.append(k + 1 if w[k] == x else 0)
        table.append(row)
    return table


def neck_distribution(theta: Sequence, sink: SinkInfo, cap: int = DEFAULT_DIST_CAP,
                      max_deficit: float | None = None) -> NeckDistribution:
    """Law of the waiting time N until the sink word first occurs."""
    th = [Fraction(t) for t in theta]
    word = sink.word
    if len(word) == 1:
        t = th[word[0]]
        if t == 0:
            raise CapTooSmall("sink letter has probability zero: necks never occur")
        probs = tuple(t * (1 - t) ** (n - 1) for n in range(1, cap + 1))
        mean = 1 / t
        deficit = (1 - t) ** cap
    else:
        table = _automaton(word, len(th))
        L = len(word)
        dist = [Fraction(0)] * L
        dist[0] = Fraction(1)
        probs = []
        for _ in range(cap):
            nxt = [Fraction(0)] * L
            hit = Fraction(0)
            for s, p in enumerate(dist):
                if p:
                    for x, tx in enumerate(th):
                        if tx:
                            d = table[s][x]
                            if d == L:
                                hit += p * tx
                            else:
                                nxt[d] += p * tx
            probs.append(hit)
            dist = nxt
        probs = tuple(probs)
        deficit = sum(dist, Fraction(0))
        # expected absorption time: (I - Q) t = 1
        q = sympy.zeros(L, L)
        for s in range(L):
            for x, tx in enumerate(th):
                d = table[s][x]
                if d < L:
                    q[s, d] += sympy.Rational(tx.numerator, tx.denominator)
        sol = (sympy.eye(L) - q).LUsolve(sympy.ones(L, 1))
        mean = Fraction(int(sympy.fraction(sol[0])[0]), int(sympy.fraction(sol[0])[1]))
    if max_deficit is not None and deficit > max_deficit:
        raise CapTooSmall(f"mass {float(deficit):.3g} beyond cap {cap} exceeds {max_deficit}")
    return NeckDistribution(probs, mean, deficit)


# ---------------------------------------------------------------------------
# blocks between necks
# ---------------------------------------------------------------------------


def neck_strings(sink: SinkInfo, m: int, n_max: int, budget: int = DEFAULT_PATH_BUDGET):
    """All letter strings of length <= n_max whose only sink-word occurrence ends them."""
    table = _automaton(sink.word, m)
    L = len(sink.word)
    out = []
    frontier = [((), 0)]
    for _ in range(n_max):
        nxt = []
        for s, state in frontier:
            for x in range(m):
                d = table[state][x]
                if d == L:
                    out.append(s + (x,))
                else:
                    nxt.append((s + (x,), d))
        if len(nxt) + len(out) > budget:
            raise ExplosionGuard(f"more than {budget} neck strings below length {n_max}")
        frontier = nxt
    return sorted(out, key=lambda s: (len(s), s))


def _pareto(vecs: list, maximize: bool) -> list:
    """Drop vectors another one dominates in the direction that matters."""
    vecs = sorted(set(vecs), key=lambda v: sum(v), reverse=maximize)
    keep = []
    for v in vecs:
        if maximize:
            dominated = any(all(a >= b for a, b in zip(k, v)) for k in keep)
        else:
            dominated = any(all(a <= b for a, b in zip(k, v)) for k in keep)
        if not dominated:
            keep.append(v)
    return keep


def block_value(graph: CvGraph, sink: SinkInfo, letters: Sequence[int], maximize: bool,
                budget: int = DEFAULT_PATH_BUDGET) -> Fraction:
    """Exact max (or min) of the sink-to-sink block over all paths along ``letters``.

    Partial products are pruned by componentwise dominance at each node,
    which is exact because all later factors are nonnegative.
    """
    width = len(graph.nodes[sink.node].neighbours)
    fronts = {sink.node: [(Fraction(1),) * width]}
    for j in letters:
        nxt = {}
        for u, vecs in fronts.items():
            for e in graph.out(u, j):
                bucket = nxt.setdefault(e.child, [])
                for v in vecs:
                    bucket.append(mat_vec(v, e.matrix))
        fronts = {u: _pareto(vs, maximize) for u, vs in nxt.items()}
        if sum(len(vs) for vs in fronts.values()) > budget:
            raise ExplosionGuard(f"more than {budget} partial block products")
    if set(fronts) != {sink.node}:
        raise NotCommuting("block does not return to the sink node")
    vals = [sum(v, Fraction(0)) for v in fronts[sink.node]]
    if sink.commuting and any(len(v) != 1 for v in fronts[sink.node]):
        raise NotCommuting("sink-to-sink block is not scalar")
    return max(vals) if maximize else min(vals)


@dataclass(frozen=True)
class NeckString:
    letters: tuple
    prob: Fraction
    lo: Fraction  # smallest block
    hi: Fraction  # largest block


@dataclass(frozen=True)
class NeckModel:
    sink: SinkInfo
    strings: tuple  # NeckString, by length then lexicographic
    n_max: int
    bounds_only: bool  # True for non-commuting sinks: block norms bound, not pin, the interval

    def by_length(self) -> dict:
        """n -> (min block, max block) over strings of length n."""
        out = {}
        for s in self.strings:
            lo, hi = out.get(len(s.letters), (s.lo, s.hi))
            out[len(s.letters)] = (min(lo, s.lo), max(hi, s.hi))
        return out


def block_extremes(graph: CvGraph, sink: SinkInfo, n_max: int = DEFAULT_NECK_CAP,
                   theta: Sequence | None = None, budget: int = DEFAULT_PATH_BUDGET) -> NeckModel:
    """Exact smallest and largest sink-to-sink blocks for every neck string."""
    th = [Fraction(t) for t in (graph.rifs.theta if theta is None else theta)]
    out = []
    for s in neck_strings(sink, graph.rifs.m, n_max, budget):
        p = Fraction(1)
        for x in s:
            p *= th[x]
        out.append(NeckString(s, p, block_value(graph, sink, s, False, budget),
                              block_value(graph, sink, s, True, budget)))
    return NeckModel(sink, tuple(out), n_max, not sink.commuting)


# ---------------------------------------------------------------------------
# the local-dimension interval
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalDimInterval:
    lo: float
    hi: float
    lo_err: float
    hi_err: float
    exact: bool  # closed-form tail, no truncation error
    lo_symbolic: str | None = None
    hi_symbolic: str | None = None
    bounds_only: bool = False


def _geometric_tail(model: NeckModel, which: str):
    """(n0, B(n0), ratio) if B(n) = B(n0) * ratio**(n - n0) from n0 on, else None.

    Needs a single block value per length and at least three lengths past n0.
    """
    per = {}
    for s in model.strings:
        v = getattr(s, which)
        if per.setdefault(len(s.letters), v) != v:
            return None
    ns = sorted(per)
    if ns != list(range(ns[0], ns[0] + len(ns))):
        return None
    for i in range(len(ns) - 2):
        ratio = per[ns[i + 1]] / per[ns[i]]
        if all(per[ns[k + 1]] == per[ns[k]] * ratio for k in range(i, len(ns) - 1)):
            if len(ns) - i >= 3:
                return ns[i], per[ns[i]], ratio
    return None


def _expected_log(model: NeckModel, dist: NeckDistribution, which: str, bound_c: float):
    """E log B as [(weight, rational argument)] terms, plus a truncation bound."""
    probs = {s.letters: s.prob for s in model.strings}
    lengths = {}
    for s in model.strings:
        lengths.setdefault(len(s.letters), []).append((s, probs[s.letters]))
    pat = _geometric_tail(model, which)
    terms = []
    if pat is not None:
        n0, b0, ratio = pat
        for n in range(1, n0):
            for s, p in lengths.get(n, []):
                terms.append((p, getattr(s, which)))
        head_mean = sum((n * dist.probs[n - 1] for n in range(1, n0)), Fraction(0))
        tail = dist.tail_mass(n0)
        terms.append((tail, b0))
        terms.append((dist.mean - head_mean - n0 * tail, ratio))
        return terms, 0.0
    for n in sorted(lengths):
        for s, p in lengths[n]:
            terms.append((p, getattr(s, which)))
    covered = sum((n * dist.probs[n - 1] for n in lengths if n <= len(dist.probs)), Fraction(0))
    tail_mean = float(dist.mean - covered)
    return terms, bound_c * max(tail_mean, 0.0)


def _mp_log_sum(terms):
    return _mp.fsum(_mp.mpf(w.numerator) / w.denominator * _mp.log(_mp.mpf(x.numerator) / x.denominator)
                    for w, x in terms if w)


def _sym_log_sum(terms):
    return sympy.Add(*[sympy.Rational(w.numerator, w.denominator) * sympy.log(sympy.Rational(x.numerator, x.denominator))
                       for w, x in terms if w])


def _render(expr) -> str:
    return str(sympy.expand(sympy.expand_log(expr, force=True)))


def local_dim_interval(model: NeckModel, theta: Sequence, r, graph: CvGraph | None = None,
                       dist_cap: int = DEFAULT_DIST_CAP) -> LocalDimInterval:
    """lo = E log B_max / (E N log r), hi = E log B_min / (E N log r).

    When block values are geometric in the neck length from some point on,
    the tail is summed in closed form; otherwise the sum stops at the neck
    cap and the error bound uses |log B(n)| <= n * max |log column sum|.
    """
    th = [Fraction(t) for t in theta]
    if model.strings:
        # the stored string probabilities must match this theta
        model = NeckModel(model.sink, tuple(
            NeckString(s.letters, _prod(th[x] for x in s.letters), s.lo, s.hi) for s in model.strings),
            model.n_max, model.bounds_only)
    dist = neck_distribution(th, model.sink, max(dist_cap, model.n_max))
    bound_c = _log_bound(graph) if graph is not None else 0.0
    hi_terms, hi_err = _expected_log(model, dist, "lo", bound_c)
    lo_terms, lo_err = _expected_log(model, dist, "hi", bound_c)
    if (hi_err or lo_err) and graph is None:
        raise ValueError("truncated sum needs the graph for its error bound")
    r_val = r.as_fraction() if hasattr(r, "as_fraction") else Fraction(r)
    denom = _mp.mpf(dist.mean.numerator) / dist.mean.denominator * _mp.log(_mp.mpf(r_val.numerator) / r_val.denominator)
    lo = _mp_log_sum(lo_terms) / denom
    hi = _mp_log_sum(hi_terms) / denom
    scale = float(abs(denom))
    exact = lo_err == 0 and hi_err == 0
    lo_s = hi_s = None
    if exact and max(dist.mean.numerator, dist.mean.denominator) < 10 ** 6:
        sden = sympy.Rational(dist.mean.numerator, dist.mean.denominator) * \
            sympy.log(sympy.Rational(r_val.numerator, r_val.denominator))
        lo_s = _render(_sym_log_sum(lo_terms) / sden)
        hi_s = _render(_sym_log_sum(hi_terms) / sden)
    return LocalDimInterval(float(lo), float(hi), lo_err / scale, hi_err / scale, exact, lo_s, hi_s,
                            model.bounds_only)


def _prod(xs) -> Fraction:
    out = Fraction(1)
    for x in xs:
        out *= x
    return out


def _log_bound(graph: CvGraph) -> float:
    sums = [c for e in graph.all_transitions() for c in e.column_sums()]
    return max(abs(math.log(min(sums))), abs(math.log(max(sums))))


def column_sum_range(graph: CvGraph) -> tuple:
    """(log M / log r, log m / log r) from the global min/max column sums."""
    sums = [c for e in graph.all_transitions() for c in e.column_sums()]
    lr = math.log(float(graph.r))
    return math.log(max(sums)) / lr, math.log(min(sums)) / lr


# ---------------------------------------------------------------------------
# interpolating blocks
# ---------------------------------------------------------------------------


def interpolation_check(graph: CvGraph, sink: SinkInfo, theta: Sequence, t_grid: Sequence[float],
                        n: int = 10_000, trials: int = 20, seed: int = 0) -> list:
    """Per t, the local dimension when each block is the smallest with probability t.

    Returns ``[(t, DimensionEstimate)]``.  Block extremes are computed
    exactly per neck string and cached.
    """
    th = [Fraction(t) for t in theta]
    r_log = _mp.log(graph.r.to_mpf(_mp))
    cache = {}

    def extremes(s):
        if s not in cache:
            cache[s] = (_mp.log(_frac_mpf(block_value(graph, sink, s, False))),
                        _mp.log(_frac_mpf(block_value(graph, sink, s, True))))
        return cache[s]

    out = []
    for t in t_grid:
        vals = []
        for trial in range(trials):
            gen = rng_stream(seed, "interpolation", trial)
            letters = letters_from_uniforms(th, gen.random(n))
            coins = gen.random(n)
            necks = neck_positions(letters, sink.word)
            if len(necks) == 0:
                raise CapTooSmall("no neck within the sampled depth; increase n")
            acc = _mp.mpf(0)
            start = 0
            for b, end in enumerate(necks):
                s = tuple(int(x) for x in letters[start:end + 1])
                lo, hi = extremes(s)
                acc += lo if coins[b] < t else hi
                start = end + 1
            vals.append(acc / ((int(necks[-1]) + 1) * r_log))
        out.append((float(t), _summarize(vals, n, seed, "local_dim", f"interpolate:{t}")))
    return out


def _frac_mpf(x: Fraction):
    return _mp.mpf(x.numerator) / x.denominator
