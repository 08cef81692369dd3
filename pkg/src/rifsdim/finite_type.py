"""Characteristic-vector graphs of equicontractive finite-type RIFS.

Geometry is done in parent-normalized units: a net interval of level n is
rescaled by r**-n to ``[0, l]``, and a neighbour offset ``a`` stands for the
covering image ``[-a, 1 - a]``.  Everything is exact.
"""

from __future__ import annotations

import functools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import networkx as nx

from .errors import FiniteTypeBudgetExceeded, MultipleTerminalSccs, NotAPath
from .model import Ifs, Rifs, validate
from .numfield import FieldScalar

DEFAULT_CAP = 100_000


@dataclass(frozen=True)
class CharacteristicVector:
    """Reduced characteristic vector: normalized length and neighbour offsets."""

    length: FieldScalar
    neighbours: tuple

    def key(self) -> tuple:
        return (self.length.key(), tuple(a.key() for a in self.neighbours))

    def __repr__(self):
        return f"({self.length!r}, ({', '.join(repr(a) for a in self.neighbours)}))"


@dataclass(frozen=True)
class PrimitiveTransition:
    parent: int
    child: int
    letter: int
    ordinal: int
    matrix: tuple  # rows = parent neighbours, columns = child neighbours
    offset: FieldScalar  # child's left end in parent-normalized units

    def column_sums(self) -> list:
        return [sum(col) for col in zip(*self.matrix)]


@dataclass(frozen=True)
class ChildSpec:
    cv: CharacteristicVector
    ordinal: int
    matrix: tuple
    offset: FieldScalar


def children(cv: CharacteristicVector, ifs: Ifs, r: FieldScalar) -> list:
    """Children of a net interval with reduced vector ``cv`` under one IFS.

    Returns ``ChildSpec`` entries ordered left to right.  The list is empty
    when no image of the letter meets the interval (possible only when the
    attractor does not have full support).
    """
    return _split(cv, ifs, r)[0]


def _split(cv: CharacteristicVector, ifs: Ifs, r: FieldScalar):
    """Covered children plus the number of uncovered gaps between them."""
    ell = cv.length
    zero = ell.field.zero
    subs = []
    for i, a in enumerate(cv.neighbours):
        for k, mp in enumerate(ifs.maps):
            left = mp.translation - a
            if left < ell and left + r > zero:
                subs.append((left, i, k))
    pts = {zero, ell}
    for left, _, _ in subs:
        for e in (left, left + r):
            if zero < e < ell:
                pts.add(e)
    pts = sorted(pts)

    out = []
    seen = {}
    gaps = 0
    for h, h2 in zip(pts, pts[1:]):
        cover = [(left, i, k) for left, i, k in subs if left <= h and left + r >= h2]
        if not cover:
            gaps += 1
            continue
        offs = {}
        for left, i, k in cover:
            offs.setdefault((h - left) / r, []).append((i, k))
        nbrs = sorted(offs)
        mat = [[Fraction(0)] * len(nbrs) for _ in cv.neighbours]
        for u, a in enumerate(nbrs):
            for i, k in offs[a]:
                mat[i][u] += ifs.probs[k]
        child = CharacteristicVector((h2 - h) / r, tuple(nbrs))
        key = child.key()
        ordinal = seen.get(key, 0) + 1
        seen[key] = ordinal
        out.append(ChildSpec(child, ordinal, tuple(tuple(row) for row in mat), h))
    return out, gaps


@dataclass
class CvGraph:
    rifs: Rifs
    nodes: list
    edges: dict  # (node id, letter) -> list[PrimitiveTransition], left to right
    levels: list  # discovery level per node
    witness: list  # (letters, absolute left end) of the first realization per node
    cap: int = DEFAULT_CAP
    has_gaps: bool = False  # some net interval has a subinterval no image covers
    meta: dict = field(default_factory=dict)

    @property
    def reduced_count(self) -> int:
        """Number of reduced vectors, counting one empty vector when gaps occur."""
        return len(self.nodes) + int(self.has_gaps)

    @property
    def r(self) -> FieldScalar:
        return self.rifs.ratio

    def __len__(self):
        return len(self.nodes)

    def index(self) -> dict:
        return {cv.key(): i for i, cv in enumerate(self.nodes)}

    def out(self, node: int, letter: int) -> list:
        return self.edges[(node, letter)]

    def all_transitions(self):
        for (_, _), lst in sorted(self.edges.items()):
            yield from lst

    def successors(self, node: int) -> set:
        return {e.child for j in range(self.rifs.m) for e in self.edges[(node, j)]}

    def digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(len(self.nodes)))
        for (u, _), lst in self.edges.items():
            for e in lst:
                g.add_edge(u, e.child)
        return g


def enumerate_graph(rifs: Rifs, cap: int = DEFAULT_CAP) -> CvGraph:
    """Breadth-first construction of the reduced characteristic-vector graph.

    Ids are canonical: by discovery level, then lexicographically by the
    coefficient vectors of (length, neighbours).
    """
    validate(rifs, "finite_type")
    F = rifs.field
    r = rifs.ratio
    root = CharacteristicVector(F.one, (F.zero,))
    nodes = [root]
    ids = {root.key(): 0}
    levels = [0]
    witness = [((), F.zero)]
    raw = {}  # (node, letter) -> list of ChildSpec
    has_gaps = False
    frontier = [0]
    level = 0
    scale = F.one  # r**level
    while frontier:
        fresh = {}
        for u in frontier:
            for j, ifs in enumerate(rifs.systems):
                specs, gaps = _split(nodes[u], ifs, r)
                has_gaps = has_gaps or gaps > 0
                raw[(u, j)] = specs
                for sp in specs:
                    key = sp.cv.key()
                    if key not in ids and key not in fresh:
                        word, left = witness[u]
                        fresh[key] = (sp.cv, (word + (j,), left + scale * sp.offset))
        level += 1
        scale = scale * r
        frontier = []
        for key in sorted(fresh):
            if len(nodes) >= cap:
                raise FiniteTypeBudgetExceeded(
                    f"not finite type up to cap: more than {cap} characteristic vectors")
            ids[key] = len(nodes)
            nodes.append(fresh[key][0])
            levels.append(level)
            witness.append(fresh[key][1])
            frontier.append(ids[key])

    edges = {}
    for (u, j), specs in raw.items():
        edges[(u, j)] = [PrimitiveTransition(u, ids[sp.cv.key()], j, sp.ordinal, sp.matrix, sp.offset)
                         for sp in specs]
    return CvGraph(rifs, nodes, edges, levels, witness, cap, has_gaps,
                   meta={"cap": cap, "nodes": len(nodes)})


def finite_type_union_check(rifs: Rifs, cap: int = DEFAULT_CAP) -> bool:
    """Sufficient test: the pooled IFS of all maps has finitely many vectors."""
    enumerate_graph(rifs.pooled(), cap)
    return True


# ---------------------------------------------------------------------------
# measures along symbolic paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureVector:
    level: int
    entries: tuple
    node: int

    @property
    def norm(self) -> Fraction:
        return sum(self.entries, Fraction(0))


def mat_vec(v: Sequence[Fraction], mat: Sequence[Sequence[Fraction]]) -> tuple:
    """Row vector times matrix."""
    ncols = len(mat[0]) if mat else 0
    return tuple(sum((v[i] * mat[i][u] for i in range(len(v))), Fraction(0)) for u in range(ncols))


def resolve_path(graph: CvGraph, word: Sequence[int], path: Sequence) -> list:
    """Map ``(node, ordinal)`` steps (or plain child indices) to transitions."""
    node = 0
    out = []
    if len(path) > len(word):
        raise NotAPath("path is longer than the environment word")
    for step, item in enumerate(path):
        opts = graph.out(node, word[step])
        if isinstance(item, int):
            if not 0 <= item < len(opts):
                raise NotAPath(f"step {step}: child index {item} out of range")
            e = opts[item]
        else:
            target, ordinal = item
            match = [e for e in opts if e.child == target and e.ordinal == ordinal]
            if not match:
                raise NotAPath(f"step {step}: node {target} (ordinal {ordinal}) is not a child of {node}")
            e = match[0]
        out.append(e)
        node = e.child
    return out


def measure_vector(graph: CvGraph, word: Sequence[int], path: Sequence) -> MeasureVector:
    """Q-vector of the net interval reached along ``path``: Q_n = Q_{n-1} T."""
    q = (Fraction(1),)
    node = 0
    for e in resolve_path(graph, word, path):
        q = mat_vec(q, e.matrix)
        node = e.child
    return MeasureVector(len(path), q, node)


def net_interval(graph: CvGraph, word: Sequence[int], path: Sequence):
    """Absolute (left, right) of the net interval reached along ``path``."""
    F = graph.rifs.field
    left, scale = F.zero, F.one
    node = 0
    for e in resolve_path(graph, word, path):
        left = left + scale * e.offset
        scale = scale * graph.r
        node = e.child
    return left, left + scale * graph.nodes[node].length


# ---------------------------------------------------------------------------
# essential class
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EssentialClass:
    nodes: tuple  # graph node ids, ascending
    counts: tuple  # per letter, N x N integer matrix (child multiplicities)
    r: FieldScalar

    def __len__(self):
        return len(self.nodes)


def essential_class(graph: CvGraph) -> EssentialClass:
    """The unique terminal strongly connected component, with count matrices."""
    g = graph.digraph()
    cond = nx.condensation(g)
    terminal = [c for c in cond.nodes if cond.out_degree(c) == 0]
    if len(terminal) != 1:
        raise MultipleTerminalSccs(f"{len(terminal)} terminal components found")
    members = tuple(sorted(cond.nodes[terminal[0]]["members"]))
    pos = {u: i for i, u in enumerate(members)}
    counts = []
    for j in range(graph.rifs.m):
        a = [[0] * len(members) for _ in members]
        for u in members:
            for e in graph.out(u, j):
                a[pos[u]][pos[e.child]] += 1
        counts.append(tuple(tuple(row) for row in a))
    return EssentialClass(members, tuple(counts), graph.r)


def essential_by_construction(graph: CvGraph) -> set:
    """Vector of minimal length with most neighbours, plus all its descendants."""
    best = min(range(len(graph.nodes)),
               key=functools.cmp_to_key(lambda a, b: graph.nodes[a].length.compare(graph.nodes[b].length)
                                        or (len(graph.nodes[b].neighbours) - len(graph.nodes[a].neighbours))))
    seen = {best}
    todo = deque([best])
    while todo:
        u = todo.popleft()
        for v in graph.successors(u):
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return seen


# ---------------------------------------------------------------------------
# column pseudo-norm bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PseudoNormBounds:
    min_colsum: Fraction
    max_colsum: Fraction
    lower: float  # log M / log r
    upper: float  # log m / log r


def pseudo_norm_bounds(matrices: Sequence, r) -> PseudoNormBounds:
    """Local-dimension bounds from min/max column sums along a path tail."""
    if not matrices:
        raise ValueError("need at least one matrix")
    sums = [[sum(col) for col in zip(*m)] for m in matrices]
    lo = min(min(s) for s in sums)
    hi = max(max(s) for s in sums)
    logr = math.log(float(r))
    return PseudoNormBounds(lo, hi, math.log(hi) / logr, math.log(lo) / logr)


# ---------------------------------------------------------------------------
# liveness validation
# ---------------------------------------------------------------------------


def check_liveness(graph: CvGraph, depth: int = 8, samples: int = 4, seed: int = 0,
                   budget: int = 20_000) -> dict:
    """Confirm each vector's interval interior meets a deep cylinder.

    For every node the recorded realization (word prefix and left end) is
    continued by random letters, and a depth-first search looks for an
    image of [0,1] lying strictly inside the interval.  Returns node id ->
    bool; False means no such image was found within ``budget`` visits.
    """
    from .model import sample_letters

    rifs = graph.rifs
    r = graph.r
    out = {}
    for u, (word, left) in enumerate(graph.witness):
        right = left + r ** len(word) * graph.nodes[u].length
        ok = False
        for s in range(samples):
            tail = tuple(int(x) for x in sample_letters(rifs.theta, depth, seed, "liveness", u * samples + s))
            if _inner_cylinder(rifs, tuple(word) + tail, left, right, budget):
                ok = True
                break
        out[u] = ok
    return out


def _inner_cylinder(rifs: Rifs, word: tuple, left, right, budget: int) -> bool:
    stack = [(rifs.field.zero, rifs.field.one, 0)]
    visits = 0
    while stack and visits < budget:
        a, length, lvl = stack.pop()
        visits += 1
        if a > left and a + length < right:
            return True
        if lvl == len(word):
            continue
        for mp in reversed(rifs.systems[word[lvl]].maps):
            ca = a + length * mp.translation
            cl = length * mp.ratio
            if ca < right and ca + cl > left:
                stack.append((ca, cl, lvl + 1))
    return False


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

GRAPH_FORMAT = 1


def _coeffs(x: FieldScalar) -> list:
    return [str(c) for c in x.coeffs]


def graph_to_dict(graph: CvGraph) -> dict:
    """Plain JSON-ready form; field and systems are not included."""
    edges = []
    for (u, j), lst in sorted(graph.edges.items()):
        for e in lst:
            edges.append([u, j, e.child, e.ordinal, _coeffs(e.offset),
                          [[str(x) for x in row] for row in e.matrix]])
    return {
        "format": GRAPH_FORMAT,
        "cap": graph.cap,
        "has_gaps": graph.has_gaps,
        "nodes": [{"length": _coeffs(cv.length), "neighbours": [_coeffs(a) for a in cv.neighbours]}
                  for cv in graph.nodes],
        "levels": list(graph.levels),
        "witness": [[list(w), _coeffs(left)] for w, left in graph.witness],
        "edges": edges,
    }


def graph_from_dict(rifs: Rifs, d: dict) -> CvGraph:
    if d.get("format") != GRAPH_FORMAT:
        raise ValueError(f"unsupported graph format {d.get('format')!r}")
    F = rifs.field
    nodes = [CharacteristicVector(F.from_coeffs(n["length"]),
                                  tuple(F.from_coeffs(a) for a in n["neighbours"])) for n in d["nodes"]]
    edges = {(u, j): [] for u in range(len(nodes)) for j in range(rifs.m)}
    for u, j, child, ordinal, offset, mat in d["edges"]:
        matrix = tuple(tuple(Fraction(x) for x in row) for row in mat)
        edges[(u, j)].append(PrimitiveTransition(u, child, j, ordinal, matrix, F.from_coeffs(offset)))
    witness = [(tuple(w), F.from_coeffs(left)) for w, left in d["witness"]]
    return CvGraph(rifs, nodes, edges, list(d["levels"]), witness, d["cap"], d["has_gaps"],
                   meta={"cap": d["cap"], "nodes": len(nodes)})
