"""Monte Carlo Lyapunov exponents: a.s. dimension and local dimensions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from . import _kernels as K
from .errors import NotAPath, NotRegular, PreconditionError
from .finite_type import CvGraph, EssentialClass, essential_class
from .model import Rifs, rng_stream, letters_from_uniforms, validate

RENORM_EVERY = 64
DEFAULT_DEPTH = 100_000
DEFAULT_TRIALS = 50
DEFAULT_WINDOW = 8
MAX_NECK_WINDOW = 12

POLICIES = ("given_path", "random_child", "max_block", "min_block")

_mp = mpmath.MPContext()
_mp.dps = 40


@dataclass(frozen=True)
class DimensionEstimate:
    value: float
    stderr: float
    trials: int
    depth: int
    seed: int
    mode: str
    policy: str | None = None
    per_trial: tuple = field(default=(), repr=False)


def _log_of(exp2: int, s: float):
    return exp2 * _mp.ln2 + _mp.log(s)


def _summarize(values: list, depth: int, seed: int, mode: str, policy=None) -> DimensionEstimate:
    vals = list(values)
    mean = _mp.fsum(vals) / len(vals)
    if len(vals) > 1:
        var = _mp.fsum((x - mean) ** 2 for x in vals) / (len(vals) - 1)
        stderr = float(_mp.sqrt(var / len(vals)))
    else:
        stderr = float("nan")
    return DimensionEstimate(float(mean), stderr, len(vals), depth, seed, mode, policy,
                             tuple(float(x) for x in vals))


def _theta(theta, m: int) -> tuple:
    th = tuple(Fraction(t) for t in theta)
    if len(th) != m or sum(th) != 1 or any(t < 0 for t in th):
        raise PreconditionError("theta must be a probability vector with one weight per system")
    return th


def _letters(theta, n, seed, tag, trial):
    return letters_from_uniforms(theta, rng_stream(seed, tag, trial).random(n))


# ---------------------------------------------------------------------------
# dimension of the attractor
# ---------------------------------------------------------------------------


def dimension_mc(essential: EssentialClass, theta: Sequence, n: int = DEFAULT_DEPTH,
                 trials: int = DEFAULT_TRIALS, seed: int = 0) -> DimensionEstimate:
    """log ||A_{w_1} ... A_{w_n}|| / (n |log r|) averaged over sampled words."""
    if n < 1:
        raise PreconditionError("depth must be at least 1")
    th = _theta(theta, len(essential.counts))
    mats = np.array(essential.counts, dtype=np.float64)
    log_r = _mp.log(essential.r.to_mpf(_mp))
    vals = []
    for trial in range(trials):
        letters = _letters(th, n, seed, "dimension", trial)
        e, s = K.matrix_product_log2(mats, letters, RENORM_EVERY)
        vals.append(_log_of(int(e), float(s)) / (n * -log_r))
    return _summarize(vals, n, seed, "dimension")


# ---------------------------------------------------------------------------
# local dimensions along graph paths
# ---------------------------------------------------------------------------


@dataclass
class FlatGraph:
    """Array form of a CvGraph for the compiled walkers."""

    nbr: np.ndarray
    e_start: np.ndarray
    e_end: np.ndarray
    e_child: np.ndarray
    mats: np.ndarray
    log_r: object

    @classmethod
    def build(cls, graph: CvGraph) -> "FlatGraph":
        cached = graph.meta.get("_flat")
        if cached is not None:
            return cached
        nn, m = len(graph.nodes), graph.rifs.m
        nbr = np.array([len(cv.neighbours) for cv in graph.nodes], dtype=np.int64)
        maxj = int(nbr.max())
        e_start = np.zeros((nn, m), dtype=np.int64)
        e_end = np.zeros((nn, m), dtype=np.int64)
        child, mats = [], []
        for u in range(nn):
            for j in range(m):
                e_start[u, j] = len(child)
                for e in graph.out(u, j):
                    child.append(e.child)
                    mat = np.zeros((maxj, maxj))
                    for i, row in enumerate(e.matrix):
                        mat[i, :len(row)] = [float(x) for x in row]
                    mats.append(mat)
                e_end[u, j] = len(child)
        flat = cls(nbr, e_start, e_end, np.array(child, dtype=np.int64), np.array(mats),
                   _mp.log(graph.r.to_mpf(_mp)))
        graph.meta["_flat"] = flat
        return flat


def _window_ends(n: int, necks: np.ndarray | None, width: int) -> np.ndarray:
    ends = np.zeros(n, dtype=np.bool_)
    if necks is None:
        ends[width - 1::width] = True
    else:
        last = -1
        for pos in list(necks) + [n - 1]:
            pos = int(pos)
            if pos <= last:
                continue
            while pos - last > MAX_NECK_WINDOW:
                last += MAX_NECK_WINDOW
                ends[last] = True
            ends[pos] = True
            last = pos
    ends[n - 1] = True
    return ends


def neck_positions(letters: Sequence[int], sink_word: Sequence[int]) -> np.ndarray:
    """End indices of successive non-overlapping occurrences of the sink word.

    After each occurrence the search restarts from scratch, so the blocks
    between consecutive positions are independent and identically distributed.
    """
    w = [int(x) for x in sink_word]
    L = len(w)
    fail = _failure(w)
    out = []
    state = 0
    for t, x in enumerate(letters):
        x = int(x)
        while state and w[state] != x:
            state = fail[state - 1]
        if w[state] == x:
            state += 1
        if state == L:
            out.append(t)
            state = 0
    return np.array(out, dtype=np.int64)


def _failure(w: Sequence[int]) -> list:
    """Knuth-Morris-Pratt failure function."""
    fail = [0] * len(w)
    k = 0
    for i in range(1, len(w)):
        while k and w[i] != w[k]:
            k = fail[k - 1]
        if w[i] == w[k]:
            k += 1
        fail[i] = k
    return fail


def local_dim_mc(graph: CvGraph, theta: Sequence | None = None, policy: str = "random_child",
                 n: int = DEFAULT_DEPTH, trials: int = DEFAULT_TRIALS, seed: int = 0, *,
                 path="leftmost", require_regular: bool = True, sink_word: Sequence[int] | None = None,
                 window: int = DEFAULT_WINDOW, essential_start: bool = False) -> DimensionEstimate:
    """log ||Q_n|| / (n log r) along graph walks chosen by ``policy``.

    ``path`` is used by ``given_path``: "leftmost", "rightmost" or a list of
    child indices (one per step).  Block policies search windows ending at
    sink-word occurrences when ``sink_word`` is given, else fixed windows of
    ``window`` steps.  With ``essential_start`` the walk descends by
    measure until it enters the essential class, then follows ``policy``.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    if n < 1:
        raise PreconditionError("depth must be at least 1")
    rifs = graph.rifs
    th = _theta(rifs.theta if theta is None else theta, rifs.m)
    if require_regular and not validate(rifs, "finite_type").regular:
        raise NotRegular("measure is not regular; pass require_regular=False to override")
    flat = FlatGraph.build(graph)

    fixed = np.zeros(n, dtype=np.int64)
    if policy == "given_path":
        if path == "leftmost":
            mode = K.LEFTMOST
        elif path == "rightmost":
            mode = K.RIGHTMOST
        else:
            mode = K.FIXED
            idx = np.asarray(list(path), dtype=np.int64)
            if len(idx) < n:
                raise NotAPath(f"path gives {len(idx)} steps, depth is {n}")
            fixed = idx[:n]
    else:
        mode = {"random_child": K.RANDOM, "max_block": K.MAX_BLOCK, "min_block": K.MIN_BLOCK}[policy]

    if essential_start:
        members = essential_class(graph).nodes
        switch = np.zeros(len(graph.nodes), dtype=np.bool_)
        switch[list(members)] = True
        before = K.RANDOM
    else:
        switch = np.ones(len(graph.nodes), dtype=np.bool_)
        before = mode

    v0 = np.zeros(flat.mats.shape[1])
    v0[0] = 1.0
    tag = f"localdim:{policy}"
    vals = []
    for trial in range(trials):
        gen = rng_stream(seed, tag, trial)
        letters = letters_from_uniforms(th, gen.random(n))
        uniforms = gen.random(n)
        if mode == K.FIXED:
            _check_fixed(flat, letters, fixed)
        necks = neck_positions(letters, sink_word) if sink_word is not None else None
        ends = _window_ends(n, necks, window)
        e, s, _, dead = K.walk_log2(0, v0, flat.nbr, flat.e_start, flat.e_end, flat.e_child, flat.mats,
                                    letters, uniforms, before, mode, switch, fixed, ends, RENORM_EVERY)
        if dead >= 0:
            raise NotAPath(f"trial {trial}: walk reached a net interval with no child under "
                           f"letter {int(letters[dead]) + 1} at step {int(dead)}")
        vals.append(_log_of(int(e), float(s)) / (n * flat.log_r))
    return _summarize(vals, n, seed, "local_dim", policy)


def _check_fixed(flat: FlatGraph, letters, fixed):
    node = 0
    for t, (j, i) in enumerate(zip(letters, fixed)):
        a, b = flat.e_start[node, j], flat.e_end[node, j]
        if not 0 <= i < b - a:
            raise NotAPath(f"step {t}: child index {int(i)} out of range")
        node = flat.e_child[a + i]


# ---------------------------------------------------------------------------
# left endpoint and isolated points
# ---------------------------------------------------------------------------


def left_endpoint_dim(rifs: Rifs, theta: Sequence | None = None) -> float:
    """sum_j theta_j log p_{j,0} / log r for systems whose first map fixes 0."""
    th = _theta(rifs.theta if theta is None else theta, rifs.m)
    F = rifs.field
    for j, s in enumerate(rifs.systems):
        if s.maps[0].translation != F.zero:
            raise PreconditionError(f"system {j + 1}: leftmost map does not fix 0")
    ctx = mpmath.MPContext()
    ctx.dps = 50
    num = ctx.fsum(ctx.mpf(t.numerator) / t.denominator * ctx.log(ctx.mpf(s.probs[0].numerator) / s.probs[0].denominator)
                   for t, s in zip(th, rifs.systems) if t)
    return float(num / ctx.log(rifs.ratio.to_mpf(ctx)))


@dataclass(frozen=True)
class IsolationReport:
    left_dim: float
    interior_lo: float
    interior_hi: float
    gap: float
    stderr: float
    threshold: float
    flagged: bool
    estimates: dict
    note: str = "heuristic: sampled interior points only, no analytic bound"


def isolated_point_scan(graph: CvGraph, theta: Sequence | None = None, *, n: int = 20_000,
                        trials: int = 20, seed: int = 0, window: int = DEFAULT_WINDOW,
                        min_gap: float = 0.02) -> IsolationReport:
    """Is the local dimension at 0 separated from those at interior essential points?

    Interior estimates come from walks that first enter the essential class
    and then follow the measure (random_child) or the extreme window paths
    (min_block / max_block).  The gap is the distance from the value at 0
    to the range they span; it is flagged when it exceeds both three
    standard errors and ``min_gap`` (a floor for finite-depth bias).
    """
    rifs = graph.rifs
    left = left_endpoint_dim(rifs, theta)
    ests = {}
    for policy in ("random_child", "min_block", "max_block"):
        ests[policy] = local_dim_mc(graph, theta, policy, n, trials, seed, require_regular=False,
                                    window=window, essential_start=True)
    lo_p = min(ests.values(), key=lambda e: e.value)
    hi_p = max(ests.values(), key=lambda e: e.value)
    if left > hi_p.value:
        gap, err = left - hi_p.value, hi_p.stderr
    elif left < lo_p.value:
        gap, err = lo_p.value - left, lo_p.stderr
    else:
        gap, err = 0.0, 0.0
    err = 0.0 if math.isnan(err) else err
    threshold = max(3 * err, min_gap)
    return IsolationReport(left, lo_p.value, hi_p.value, gap, err, threshold, gap > threshold, ests)
