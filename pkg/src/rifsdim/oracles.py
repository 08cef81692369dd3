"""Brute-force cross-checks that do not go through the graph machinery."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .finite_type import CvGraph, essential_class, measure_vector, net_interval
from .model import Rifs, cylinders, rng_stream


def brute_force_measure(rifs: Rifs, word: Sequence[int], left, right) -> dict:
    """offset -> total weight of the level-n codings whose image covers [left, right].

    Walks the cylinder tree keeping only images that contain the interval;
    offsets are (left - image left) / r**n, matching neighbour offsets.
    """
    n = len(word)

    def covers(c):
        return c.left <= left and c.right >= right

    cs = cylinders(rifs, word, n, keep=covers)
    scale = rifs.ratio ** n
    out = {}
    for c in cs.entries:
        a = (left - c.left) / scale
        out[a] = out.get(a, Fraction(0)) + c.weight
    return out


def random_graph_path(graph: CvGraph, n: int, gen: np.random.Generator):
    """A random letter word of length n and a uniformly chosen child index per step.

    Letters under which the current node has no child are skipped.
    """
    word, path = [], []
    node = 0
    for _ in range(n):
        live = [j for j in range(graph.rifs.m) if graph.out(node, j)]
        j = live[int(gen.integers(len(live)))]
        opts = graph.out(node, j)
        i = int(gen.integers(len(opts)))
        word.append(j)
        path.append(i)
        node = opts[i].child
    return word, path


def measure_matches(graph: CvGraph, word, path) -> bool:
    """Q-recursion vector equals the brute-force coding sum entry by entry."""
    q = measure_vector(graph, word, path)
    left, right = net_interval(graph, word, path)
    brute = brute_force_measure(graph.rifs, word[: len(path)], left, right)
    nbrs = graph.nodes[q.node].neighbours
    return len(brute) == len(nbrs) and all(brute.get(a) == x for a, x in zip(nbrs, q.entries))


def all_block_values(graph: CvGraph, sink_node: int, letters: Sequence[int]) -> list:
    """Every sink-to-sink block along ``letters``, with no pruning."""
    vals = []

    def rec(node, vec, t):
        if t == len(letters):
            if node == sink_node:
                vals.append(sum(vec, Fraction(0)))
            return
        for e in graph.out(node, letters[t]):
            rec(e.child, tuple(sum((vec[i] * e.matrix[i][u] for i in range(len(vec))), Fraction(0))
                               for u in range(len(e.matrix[0]))), t + 1)

    rec(sink_node, (Fraction(1),) * len(graph.nodes[sink_node].neighbours), 0)
    return vals


def legendre_on_grid(beta_fn, alpha: float, qs: Sequence[float]) -> float:
    """inf_q beta(q) + alpha q over a grid."""
    return min(beta_fn(q) + alpha * q for q in qs)


def cantor_beta(p: Sequence[float], r: float, q: float) -> float:
    """beta(q) of a deterministic equicontractive IFS: sum p^q r^beta = 1."""
    return math.log(sum(x ** q for x in p)) / -math.log(r)


@dataclass(frozen=True)
class OracleResult:
    name: str
    passed: bool
    detail: str


def run_graph_oracles(graph: CvGraph, samples: int = 100, max_depth: int = 8, seed: int = 0) -> list:
    """Measure-vector oracle on random paths plus essential-class closure."""
    out = []
    gen = rng_stream(seed, "oracle", 0)
    bad = 0
    for _ in range(samples):
        n = int(gen.integers(0, max_depth + 1))
        word, path = random_graph_path(graph, n, gen)
        if not measure_matches(graph, word, path):
            bad += 1
    out.append(OracleResult("measure-vector", bad == 0, f"{samples - bad}/{samples} paths agree"))
    ess = set(essential_class(graph).nodes)
    leaks = [(u, v) for u in ess for v in graph.successors(u) if v not in ess]
    out.append(OracleResult("essential-closure", not leaks, f"{len(ess)} nodes, {len(leaks)} leaving edges"))
    return out


def run_block_oracle(graph: CvGraph, model, n_max: int = 6) -> OracleResult:
    """Pruned block extremes equal min/max over all unpruned paths."""
    bad = 0
    checked = 0
    for s in model.strings:
        if len(s.letters) > n_max:
            continue
        vals = all_block_values(graph, model.sink.node, s.letters)
        checked += 1
        if (min(vals), max(vals)) != (s.lo, s.hi):
            bad += 1
    return OracleResult("block-extremes", bad == 0, f"{checked - bad}/{checked} neck strings agree")


def choice_vectors(rifs: Rifs):
    return itertools.product(*(range(len(s.maps)) for s in rifs.systems))
