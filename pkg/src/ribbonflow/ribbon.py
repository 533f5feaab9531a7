"""Ribbon pairings, border cycles, trails and surface data.

Half-edges are labelled ``1..|nu|`` consecutively, vertex by vertex, and the
cyclic order around a vertex is increasing label order. Each half-edge ``k``
has two sides: the *out* side (the column index of the matrix sitting at
``k`` in the trace) and the *in* side (its row index). A vertex corner joins
the out side of ``k`` to the in side of the next half-edge at the same
vertex. A straight gluing of ``k`` and ``k'`` joins in to out; a twisted one
joins in to in and out to out. Border cycles are the cycles of this 2-regular
graph on sides.

Traversing a corner from an out side is written ``k > k'`` (clockwise), from
an in side ``k < k'`` (counterclockwise), and a gluing ``k = k'``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence

MAX_HALF_EDGES = 16

CW, CCW, GLUE = ">", "<", "="
_SYMBOL_ALIASES = {"→": CW, "←": CCW, "≐": GLUE, ">": CW, "<": CCW, "=": GLUE}
_REVERSE = {CW: CCW, CCW: CW, GLUE: GLUE}
_SYMBOL_ORDER = {CW: 0, CCW: 1, GLUE: 2}


@dataclass(frozen=True)
class Composition:
    parts: tuple[int, ...]

    def __init__(self, parts: Sequence[int]):
        parts = tuple(int(p) for p in parts)
        if not parts:
            raise ValueError("a composition needs at least one part")
        if any(p < 1 for p in parts):
            raise ValueError(f"parts must be positive, got {parts}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def parse(cls, text: str) -> "Composition":
        return cls([int(s) for s in text.replace(" ", "").strip("()").split(",") if s])

    @property
    def m(self) -> int:
        return len(self.parts)

    @property
    def size(self) -> int:
        return sum(self.parts)

    @cached_property
    def starts(self) -> tuple[int, ...]:
        """First label of each vertex."""
        out, s = [], 1
        for p in self.parts:
            out.append(s)
            s += p
        return tuple(out)

    @cached_property
    def vertex_of(self) -> tuple[int, ...]:
        """``vertex_of[k]`` for ``k`` in ``1..|nu|``; index 0 is unused."""
        out = [-1]
        for v, p in enumerate(self.parts):
            out.extend([v] * p)
        return tuple(out)

    def next_label(self, k: int) -> int:
        v = self.vertex_of[k]
        s, p = self.starts[v], self.parts[v]
        return s + (k - s + 1) % p

    def prev_label(self, k: int) -> int:
        v = self.vertex_of[k]
        s, p = self.starts[v], self.parts[v]
        return s + (k - s - 1) % p

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.parts)) + ")"


def as_composition(nu) -> Composition:
    return nu if isinstance(nu, Composition) else Composition(nu)


@dataclass(frozen=True)
class RibbonPairing:
    """Pairs of half-edge labels (smaller label first, sorted) with a twist flag each."""

    pairs: tuple[tuple[int, int], ...]
    twist: tuple[bool, ...]

    def __post_init__(self):
        if len(self.pairs) != len(self.twist):
            raise ValueError("one twist flag per pair is required")

    @classmethod
    def from_pairs(cls, pairs, twist=None) -> "RibbonPairing":
        norm = [tuple(sorted(p)) for p in pairs]
        twist = [False] * len(norm) if twist is None else list(twist)
        order = sorted(range(len(norm)), key=lambda i: norm[i])
        return cls(tuple(norm[i] for i in order), tuple(bool(twist[i]) for i in order))

    @cached_property
    def partner(self) -> dict[int, int]:
        out = {}
        for a, b in self.pairs:
            out[a] = b
            out[b] = a
        return out

    @cached_property
    def twisted(self) -> dict[int, bool]:
        out = {}
        for (a, b), t in zip(self.pairs, self.twist):
            out[a] = t
            out[b] = t
        return out

    @property
    def all_straight(self) -> bool:
        return not any(self.twist)

    @property
    def twist_mask(self) -> str:
        return "".join("1" if t else "0" for t in self.twist)

    def check(self, nu: Composition) -> None:
        labels = sorted(k for p in self.pairs for k in p)
        if labels != list(range(1, nu.size + 1)):
            raise ValueError(f"pairs {self.pairs} do not partition 1..{nu.size}")
        if any(a >= b for a, b in self.pairs):
            raise ValueError("each pair must hold two distinct labels, smaller first")

    def __str__(self) -> str:
        return " ".join(f"{a}-{b}" for a, b in self.pairs)


# ---------------------------------------------------------------------------
# enumeration


def double_factorial(m: int) -> int:
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def count_pair_partitions(size: int) -> int:
    return double_factorial(size - 1) if size % 2 == 0 else 0


def count_pairings(nu) -> int:
    """``|nu|! / (|nu|/2)!`` ribbon pairings."""
    size = as_composition(nu).size
    if size % 2:
        return 0
    return math.factorial(size) // math.factorial(size // 2)


def _check_enumerable(nu: Composition, allow_large: bool) -> None:
    if nu.size % 2:
        raise ValueError("odd half-edge count")
    if nu.size > MAX_HALF_EDGES and not allow_large:
        raise ValueError(
            f"|nu|={nu.size} exceeds {MAX_HALF_EDGES}; pass allow_large=True to enumerate anyway"
        )


def unrank_pair_partition(index: int, size: int) -> tuple[tuple[int, int], ...]:
    """Pair partition of ``1..size`` at position ``index`` in lexicographic order of
    (smallest unpaired label, partner)."""
    remaining = list(range(1, size + 1))
    pairs = []
    while remaining:
        block = double_factorial(len(remaining) - 3) if len(remaining) > 2 else 1
        choice, index = divmod(index, block)
        a = remaining.pop(0)
        b = remaining.pop(choice)
        pairs.append((a, b))
    return tuple(pairs)


def iter_pair_partitions(size: int) -> Iterator[tuple[tuple[int, int], ...]]:
    def rec(remaining):
        if not remaining:
            yield ()
            return
        a = remaining[0]
        for i in range(1, len(remaining)):
            b = remaining[i]
            rest = remaining[1:i] + remaining[i + 1 :]
            for tail in rec(rest):
                yield ((a, b),) + tail

    if size % 2:
        return
    yield from rec(tuple(range(1, size + 1)))


def enumerate_pairings(nu, start: int = 0, stop: int | None = None, allow_large: bool = False
                       ) -> Iterator[RibbonPairing]:
    """Stream the ribbon pairings of ``nu``, optionally restricted to ``[start, stop)``.

    Index ``i`` corresponds to pair partition ``i >> r`` and twist mask ``i & (2**r - 1)``,
    where the first pair is the most significant twist bit. Disjoint index ranges
    can be processed independently.
    """
    nu = as_composition(nu)
    _check_enumerable(nu, allow_large)
    r = nu.size // 2
    total = count_pairings(nu)
    stop = total if stop is None else min(stop, total)
    if start >= stop:
        return
    masks = [tuple(bool(m >> (r - 1 - i) & 1) for i in range(r)) for m in range(1 << r)]
    pp_index, mask = divmod(start, 1 << r)
    pos = start
    pp_iter = itertools.islice(iter_pair_partitions(nu.size), pp_index, None)
    for pairs in pp_iter:
        for m in range(mask, 1 << r):
            if pos >= stop:
                return
            yield RibbonPairing(pairs, masks[m])
            pos += 1
        mask = 0


def pairings_for_partition(pairs) -> Iterator[RibbonPairing]:
    """All ``2**r`` ribbon pairings inducing the given pair partition."""
    base = RibbonPairing.from_pairs(pairs)
    for mask in itertools.product((False, True), repeat=len(base.pairs)):
        yield RibbonPairing(base.pairs, mask)


# ---------------------------------------------------------------------------
# trails


def _norm_symbol(s: str) -> str:
    try:
        return _SYMBOL_ALIASES[s]
    except KeyError:
        raise ValueError(f"unknown trail symbol {s!r}") from None


@dataclass(frozen=True)
class Trail:
    """A border cycle read as ``(k1, s1, k2, s2, ...)``, up to rotation and reversal.

    ``steps`` holds the representative as traversed; equality and hashing use
    :attr:`canonical`.
    """

    steps: tuple[tuple[int, str], ...]
    oriented: bool = False

    @classmethod
    def parse(cls, text: str, oriented: bool = False) -> "Trail":
        tokens = [t.strip() for t in text.strip().strip("()").split(",") if t.strip()]
        if len(tokens) % 2:
            raise ValueError(f"malformed trail {text!r}")
        steps = tuple((int(tokens[i]), _norm_symbol(tokens[i + 1])) for i in range(0, len(tokens), 2))
        return cls(steps, oriented)

    @staticmethod
    def rotations(steps):
        return [steps[i:] + steps[:i] for i in range(len(steps))]

    @staticmethod
    def reversed_steps(steps):
        k = [s[0] for s in steps]
        sym = [s[1] for s in steps]
        j = len(steps)
        out = [(k[0], _REVERSE[sym[j - 1]])]
        for i in range(j - 1, 0, -1):
            out.append((k[i], _REVERSE[sym[i - 1]]))
        return tuple(out)

    @cached_property
    def canonical(self) -> tuple[tuple[int, str], ...]:
        candidates = self.rotations(self.steps)
        if not self.oriented:
            candidates += self.rotations(self.reversed_steps(self.steps))
        return min(candidates, key=lambda st: [(k, _SYMBOL_ORDER[s]) for k, s in st])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trail):
            return NotImplemented
        return self.oriented == other.oriented and self.canonical == other.canonical

    def __hash__(self) -> int:
        return hash((self.oriented, self.canonical))

    def __len__(self) -> int:
        return len(self.steps)

    def text(self, canonical: bool = True) -> str:
        steps = self.canonical if canonical else self.steps
        return "(" + ",".join(f"{k},{s}" for k, s in steps) + ")"

    __str__ = text

    @property
    def gluings(self) -> list[tuple[int, int]]:
        """Ordered ``(k, k')`` for every ``k = k'`` step of the representative."""
        j = len(self.steps)
        return [(k, self.steps[(i + 1) % j][0]) for i, (k, s) in enumerate(self.steps) if s == GLUE]


# ---------------------------------------------------------------------------
# border traversal


def _out(k: int) -> int:
    return 2 * k


def _in(k: int) -> int:
    return 2 * k + 1


def _glue(side: int, rho: RibbonPairing) -> int:
    k, s = divmod(side, 2)
    p = rho.partner[k]
    return 2 * p + (s if rho.twisted[k] else 1 - s)


def traverse_borders(nu, rho: RibbonPairing) -> list[Trail]:
    """Walk every border cycle once, starting each from its smallest unvisited out side.

    Cycles containing only straight gluings come out using ``>`` only, so the
    representatives double as oriented trails.
    """
    nu = as_composition(nu)
    seen = set()
    trails = []
    oriented = rho.all_straight
    for k0 in range(1, nu.size + 1):
        start = _out(k0)
        if start in seen:
            continue
        steps = []
        cur = start
        while True:
            k, s = divmod(cur, 2)
            seen.add(cur)
            if s == 0:
                nxt, sym = _in(nu.next_label(k)), CW
            else:
                nxt, sym = _out(nu.prev_label(k)), CCW
            steps.append((k, sym))
            seen.add(nxt)
            steps.append((nxt // 2, GLUE))
            cur = _glue(nxt, rho)
            if cur == start:
                break
        trails.append(Trail(tuple(steps), oriented))
    return trails


@dataclass(frozen=True)
class SurfaceComponent:
    vertices: tuple[int, ...]
    edges: int
    faces: int
    orientable: bool

    @property
    def euler(self) -> int:
        return len(self.vertices) - self.edges + self.faces

    @property
    def genus(self) -> int:
        """Orientable genus, or number of cross-caps when non-orientable."""
        return (2 - self.euler) // 2 if self.orientable else 2 - self.euler

    @property
    def name(self) -> str:
        return surface_name(self.euler, self.orientable)


def surface_name(euler: int, orientable: bool) -> str:
    if orientable:
        g = (2 - euler) // 2
        return {0: "sphere", 1: "torus"}.get(g, f"orientable genus {g}")
    k = 2 - euler
    return {1: "projective plane", 2: "Klein bottle"}.get(k, f"non-orientable genus {k}")


@dataclass(frozen=True)
class BorderData:
    f: int
    trails: tuple[Trail, ...]
    chi: int
    components: tuple[SurfaceComponent, ...]


def _components(nu: Composition, rho: RibbonPairing, trails) -> tuple[SurfaceComponent, ...]:
    parent = list(range(nu.m))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in rho.pairs:
        parent[find(nu.vertex_of[a])] = find(nu.vertex_of[b])
    groups: dict[int, list[int]] = {}
    for v in range(nu.m):
        groups.setdefault(find(v), []).append(v)

    out = []
    for root, verts in sorted(groups.items(), key=lambda kv: kv[1][0]):
        vset = set(verts)
        edges = [(a, b, t) for (a, b), t in zip(rho.pairs, rho.twist) if nu.vertex_of[a] in vset]
        faces = sum(1 for tr in trails if nu.vertex_of[tr.steps[0][0]] in vset)
        # orientable iff vertices can be signed so that twisted edges join opposite signs
        sign = {verts[0]: 0}
        stack = [verts[0]]
        orientable = True
        adj: dict[int, list[tuple[int, int]]] = {v: [] for v in verts}
        for a, b, t in edges:
            u, w = nu.vertex_of[a], nu.vertex_of[b]
            adj[u].append((w, int(t)))
            adj[w].append((u, int(t)))
        while stack and orientable:
            u = stack.pop()
            for w, t in adj[u]:
                want = sign[u] ^ t
                if w not in sign:
                    sign[w] = want
                    stack.append(w)
                elif sign[w] != want:
                    orientable = False
                    break
        out.append(SurfaceComponent(tuple(verts), len(edges), faces, orientable))
    return tuple(out)


def border_cycles(nu, rho: RibbonPairing) -> BorderData:
    nu = as_composition(nu)
    trails = traverse_borders(nu, rho)
    f = len(trails)
    chi = nu.m - nu.size // 2 + f
    return BorderData(f, tuple(trails), chi, _components(nu, rho, trails))


def classify_surface(data: BorderData) -> list[str]:
    return [c.name for c in data.components]


def trails(nu, rho: RibbonPairing) -> set[Trail]:
    return {Trail(t.steps, oriented=False) for t in traverse_borders(nu, rho)}


def oriented_trails(nu, rho: RibbonPairing) -> set[Trail]:
    if not rho.all_straight:
        raise ValueError("oriented trails are only defined when every edge is straight")
    return set(traverse_borders(nu, rho))


# ---------------------------------------------------------------------------
# weights


def weight(nu, rho: RibbonPairing, beta: int, chi: int | None = None) -> Fraction:
    nu = as_composition(nu)
    if beta == 1:
        return Fraction(1, 2 ** (nu.size // 2))
    if beta == 2:
        return Fraction(int(rho.all_straight))
    if beta == 4:
        if chi is None:
            chi = border_cycles(nu, rho).chi
        return Fraction(-2) ** chi * Fraction(2) ** (nu.size // 2 - 2 * nu.m)
    raise ValueError(f"beta must be 1, 2 or 4, got {beta!r}")


def describe(nu, rho: RibbonPairing, beta: int | None = None) -> dict:
    """Summary used by the CLI enumeration output."""
    data = border_cycles(nu, rho)
    out = {
        "pairs": [list(p) for p in rho.pairs],
        "twist": rho.twist_mask,
        "f": data.f,
        "chi": data.chi,
        "surfaces": classify_surface(data),
        "trails": sorted(t.text() for t in (Trail(tr.steps) for tr in data.trails)),
    }
    if beta is not None:
        out["weight"] = str(weight(nu, rho, beta, chi=data.chi))
    return out
