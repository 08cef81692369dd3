"""Random homogeneous IFS instances, sampling and cylinder approximations."""

from __future__ import annotations

import functools
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from .errors import BudgetExceeded, HullViolation, NotEquicontractive, StructuralError
from .numfield import FieldScalar, NumberField

DEFAULT_CYLINDER_BUDGET = 2_000_000


@dataclass(frozen=True)
class SimilarityMap:
    """x -> ratio * x + translation."""

    ratio: FieldScalar
    translation: FieldScalar

    def __post_init__(self):
        if not (self.ratio.sign() > 0 and self.ratio < 1):
            raise StructuralError(f"contraction ratio {self.ratio} not in (0, 1)")

    def __call__(self, x):
        return self.ratio * x + self.translation


@dataclass(frozen=True)
class Ifs:
    maps: tuple
    probs: tuple

    def __post_init__(self):
        if not self.maps:
            raise StructuralError("an IFS needs at least one map")
        if len(self.maps) != len(self.probs):
            raise StructuralError("maps and probabilities differ in length")
        if any(p <= 0 for p in self.probs):
            raise StructuralError("probabilities must be strictly positive")
        if sum(self.probs) != 1:
            raise StructuralError(f"probabilities sum to {sum(self.probs)}, not 1")
        ts = [m.translation for m in self.maps]
        if any(a > b for a, b in zip(ts, ts[1:])):
            raise StructuralError("maps must be sorted by translation")

    @classmethod
    def build(cls, maps: Sequence[SimilarityMap], probs: Sequence) -> "Ifs":
        """Sort maps by translation (then ratio), carrying the probabilities along."""
        pairs = sorted(zip(maps, (Fraction(p) for p in probs)),
                       key=_map_sort_key)
        return cls(tuple(m for m, _ in pairs), tuple(p for _, p in pairs))

    def __len__(self):
        return len(self.maps)


_map_sort_key = functools.cmp_to_key(
    lambda a, b: a[0].translation.compare(b[0].translation) or a[0].ratio.compare(b[0].ratio))


@dataclass(frozen=True)
class Rifs:
    field: NumberField
    systems: tuple
    theta: tuple

    def __post_init__(self):
        if not self.systems:
            raise StructuralError("a RIFS needs at least one IFS")
        if len(self.theta) != len(self.systems):
            raise StructuralError("theta must have one weight per IFS")
        if any(t <= 0 for t in self.theta):
            raise StructuralError("selection weights theta must be strictly positive")
        if sum(self.theta) != 1:
            raise StructuralError(f"theta sums to {sum(self.theta)}, not 1")

    @property
    def m(self) -> int:
        return len(self.systems)

    @property
    def equicontractive(self) -> bool:
        r = self.systems[0].maps[0].ratio
        return all(mp.ratio == r for s in self.systems for mp in s.maps)

    @property
    def ratio(self) -> FieldScalar:
        """Common contraction ratio; only meaningful when equicontractive."""
        if not self.equicontractive:
            raise NotEquicontractive("maps do not share a contraction ratio")
        return self.systems[0].maps[0].ratio

    def with_theta(self, theta: Sequence) -> "Rifs":
        return Rifs(self.field, self.systems, tuple(Fraction(t) for t in theta))

    def single(self, j: int) -> "Rifs":
        """The deterministic IFS made of system ``j`` alone."""
        return Rifs(self.field, (self.systems[j],), (Fraction(1),))

    def pooled(self) -> "Rifs":
        """One IFS holding every map of every system, uniform dummy weights."""
        seen = {}
        for s in self.systems:
            for mp in s.maps:
                seen[(mp.ratio.key(), mp.translation.key())] = mp
        maps = list(seen.values())
        n = len(maps)
        return Rifs(self.field, (Ifs.build(maps, [Fraction(1, n)] * n),), (Fraction(1),))


@dataclass
class ValidationReport:
    mode: str
    hull: bool
    equicontractive: bool
    ussc: str  # "pass" | "inconclusive-fail"
    ussc_gap: Fraction | None
    regular: bool
    messages: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        if self.mode == "finite_type":
            return self.hull and self.equicontractive
        return True

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "hull": "pass" if self.hull else "fail",
            "equicontractive": self.equicontractive,
            "ussc": self.ussc,
            "ussc_gap": None if self.ussc_gap is None else str(self.ussc_gap),
            "regular": self.regular,
            "messages": list(self.messages),
        }


def validate(rifs: Rifs, mode: str = "finite_type", *, strict: bool = True) -> ValidationReport:
    """Check the hull, equicontractivity, USSC (hull-based) and regularity.

    In ``finite_type`` mode with ``strict`` set, a hull violation or a
    non-equicontractive system raises; otherwise everything is only reported.
    """
    if mode not in ("finite_type", "spectrum"):
        raise ValueError(f"unknown validation mode {mode!r}")
    msgs = []
    zero, one = rifs.field.zero, rifs.field.one

    hull = True
    for j, s in enumerate(rifs.systems):
        inside = all(mp.translation >= zero and mp.translation + mp.ratio <= one for mp in s.maps)
        fixes0 = any(mp.translation == zero for mp in s.maps)
        fixes1 = any(mp.translation + mp.ratio == one for mp in s.maps)
        if not (inside and fixes0 and fixes1):
            hull = False
            msgs.append(f"system {j + 1}: convex hull of its attractor is not [0,1]")

    equi = rifs.equicontractive
    if not equi:
        msgs.append("maps do not share a single contraction ratio")

    # USSC with K = [0,1]; sound only when every map sends [0,1] into itself
    gaps = []
    into = all(mp.translation >= zero and mp.translation + mp.ratio <= one
               for s in rifs.systems for mp in s.maps)
    for s in rifs.systems:
        for a, b in zip(s.maps, s.maps[1:]):
            gaps.append(b.translation - (a.translation + a.ratio))
    min_gap = min(gaps) if gaps else None
    if into and (min_gap is None or min_gap.sign() > 0):
        ussc = "pass"
    else:
        ussc = "inconclusive-fail"
        if not into:
            msgs.append("USSC: [0,1] is not invariant, hull-based check is inconclusive")
        else:
            msgs.append("USSC: some first-level images of [0,1] overlap or touch")
    gap_val = None
    if min_gap is not None and min_gap.is_rational():
        gap_val = min_gap.as_fraction()

    regular = all(s.probs[0] == min(s.probs) and s.probs[-1] == min(s.probs)
                  for s in rifs.systems)
    report = ValidationReport(mode, hull, equi, ussc, gap_val, regular, msgs)
    if mode == "finite_type" and strict:
        if not hull:
            raise HullViolation("; ".join(msgs))
        if not equi:
            raise NotEquicontractive("finite type analysis needs a common contraction ratio")
    return report


# ---------------------------------------------------------------------------
# environment words
# ---------------------------------------------------------------------------


def rng_stream(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, purpose tag, trial index)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(tag.encode()), int(index)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class EnvironmentWord:
    letters: tuple
    seed: int | None = None
    tag: str | None = None
    index: int = 0

    def __len__(self):
        return len(self.letters)

    def __getitem__(self, i):
        return self.letters[i]


def letters_from_uniforms(theta: Sequence, u: np.ndarray) -> np.ndarray:
    cum = np.array([float(sum(Fraction(t) for t in theta[: j + 1])) for j in range(len(theta))])
    cum[-1] = np.inf
    return np.searchsorted(cum, u, side="right").astype(np.int64)


def sample_letters(theta: Sequence, n: int, seed: int, tag: str = "word", index: int = 0) -> np.ndarray:
    """i.i.d. letters (0-based) with law theta; prefix-stable in ``n``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    u = rng_stream(seed, tag, index).random(n)
    return letters_from_uniforms(theta, u)


def sample_word(theta: Sequence, n: int, seed: int, tag: str = "word", index: int = 0) -> EnvironmentWord:
    letters = sample_letters(theta, n, seed, tag, index)
    return EnvironmentWord(tuple(int(x) for x in letters), seed=seed, tag=tag, index=index)


# ---------------------------------------------------------------------------
# cylinders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cylinder:
    left: FieldScalar
    length: FieldScalar
    weight: Fraction
    coding: tuple

    @property
    def right(self):
        return self.left + self.length


@dataclass(frozen=True)
class CylinderSet:
    level: int
    entries: tuple

    def __len__(self):
        return len(self.entries)

    def total_weight(self) -> Fraction:
        return sum((c.weight for c in self.entries), Fraction(0))


def cylinders(rifs: Rifs, word: Sequence[int], n: int, *, budget: int = DEFAULT_CYLINDER_BUDGET,
              keep: Callable[[Cylinder], bool] | None = None) -> CylinderSet:
    """All level-``n`` images S_{w,sigma}([0,1]) with their weights.

    ``keep`` prunes the expansion: a cylinder is expanded only if
    ``keep(cyl)`` holds.  The predicate must be inherited by ancestors (a
    child passing implies its parent passes) for the pruned set to be exact.
    """
    letters = tuple(word)
    if n > len(letters):
        raise ValueError(f"level {n} exceeds word length {len(letters)}")
    F = rifs.field
    cur = [Cylinder(F.zero, F.one, Fraction(1), ())]
    for lvl in range(n):
        s = rifs.systems[letters[lvl]]
        nxt = []
        for c in cur:
            for k, (mp, p) in enumerate(zip(s.maps, s.probs)):
                child = Cylinder(c.left + c.length * mp.translation, c.length * mp.ratio,
                                 c.weight * p, c.coding + (k,))
                if keep is None or keep(child):
                    nxt.append(child)
        if len(nxt) > budget:
            raise BudgetExceeded(f"{len(nxt)} cylinders at level {lvl + 1} exceed budget {budget}")
        cur = nxt
    return CylinderSet(n, tuple(cur))


def empirical_local_dim(rifs: Rifs, word: Sequence[int], x, n_list: Sequence[int], *,
                        budget: int = DEFAULT_CYLINDER_BUDGET):
    """Ball-measure local dimension estimates at ``x``.

    For each n the ball has radius s_n = prod_i min_k r_{w_i,k}, and the
    weight of every level-n cylinder meeting the ball is counted.  Returns a
    list of ``(n, estimate)``.
    """
    F = rifs.field
    x = F(x) if not isinstance(x, FieldScalar) else x
    if x < F.zero or x > F.one:
        raise ValueError("x must lie in [0, 1]")
    letters = tuple(word)
    out = []
    for n in sorted(set(n_list)):
        scale = F.one
        for j in letters[:n]:
            scale = scale * min(mp.ratio for mp in rifs.systems[j].maps)
        lo, hi = x - scale, x + scale

        def meets(c, lo=lo, hi=hi):
            return not (c.right < lo or c.left > hi)

        cs = cylinders(rifs, letters, n, budget=budget, keep=meets)
        mass = cs.total_weight()
        if n == 0:
            out.append((0, float("nan")))
            continue
        est = mpmath.log(mpmath.mpf(mass.numerator) / mass.denominator) / mpmath.log(scale.to_mpf())
        out.append((n, float(est)))
    return out
