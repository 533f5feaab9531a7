"""Topological expansions: moment polynomials, path-measure coefficients and trace words.

Each ribbon pairing contributes an :class:`ExpansionTerm`: its weight and one
cyclic word of factor slots per border cycle. Coefficient slots hold
``A(k, k')`` (possibly transposed, or adjointed over the quaternions) and edge
slots hold the holonomy of the path attached to a pair of half-edges, or its
adjoint. Words are bound to numbers only at evaluation time.
"""

from __future__ import annotations

import string
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, NamedTuple

import numpy as np

from . import algebra as alg
from .ribbon import (
    CCW, CW, Composition, RibbonPairing, Trail, as_composition, border_cycles,
    enumerate_pairings, weight,
)


class CoefSlot(NamedTuple):
    """``A(row, col)``, transposed (adjoint over the quaternions) when ``flip``."""

    row: int
    col: int
    flip: bool


class EdgeSlot(NamedTuple):
    """Holonomy of the path attached to ``pair``, adjointed when ``adjoint``."""

    pair: tuple[int, int]
    adjoint: bool


@dataclass(frozen=True)
class ExpansionTerm:
    pairing: RibbonPairing
    weight: Fraction
    f: int
    chi: int
    trails: tuple[Trail, ...]
    words: tuple[tuple, ...]

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return self.pairing.pairs


def trail_word(nu: Composition, trail: Trail) -> tuple:
    steps = trail.steps
    word = []
    for i, (k, s) in enumerate(steps):
        if s == CW:
            word.append(CoefSlot(k, nu.next_label(k), False))
        elif s == CCW:
            word.append(CoefSlot(nu.prev_label(k), k, True))
        else:
            k2 = steps[(i + 1) % len(steps)][0]
            word.append(EdgeSlot((min(k, k2), max(k, k2)), k > k2))
    return tuple(word)


def expansion_terms(nu, beta: int, allow_large: bool = False) -> list[ExpansionTerm]:
    """One term per ribbon pairing with non-zero weight. For ``beta=2`` only straight
    pairings survive and their words follow the oriented trails."""
    nu = as_composition(nu)
    alg.check_beta(beta)
    terms = []
    for rho in enumerate_pairings(nu, allow_large=allow_large):
        if beta == 2 and not rho.all_straight:
            continue
        data = border_cycles(nu, rho)
        w = weight(nu, rho, beta, chi=data.chi)
        if w == 0:
            continue
        words = tuple(trail_word(nu, t) for t in data.trails)
        terms.append(ExpansionTerm(rho, w, data.f, data.chi, data.trails, words))
    return terms


# ---------------------------------------------------------------------------
# polynomials in n


@dataclass(frozen=True)
class MomentPolynomial:
    coeffs: tuple[tuple[int, Fraction], ...]

    @classmethod
    def from_dict(cls, d: Mapping[int, Fraction]) -> "MomentPolynomial":
        return cls(tuple(sorted(((int(p), Fraction(c)) for p, c in d.items() if c != 0), reverse=True)))

    def as_dict(self) -> dict[int, Fraction]:
        return dict(self.coeffs)

    def __call__(self, n):
        if isinstance(n, int):
            return sum((c * n**p for p, c in self.coeffs), Fraction(0))
        return sum(float(c) * n**p for p, c in self.coeffs)

    @property
    def degree(self) -> int:
        return self.coeffs[0][0] if self.coeffs else -1

    def __add__(self, other: "MomentPolynomial") -> "MomentPolynomial":
        d = defaultdict(Fraction, self.as_dict())
        for p, c in other.coeffs:
            d[p] += c
        return MomentPolynomial.from_dict(d)

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        out = []
        for i, (p, c) in enumerate(self.coeffs):
            sign = "-" if c < 0 else "+"
            a = abs(c)
            mono = "" if p == 0 else ("n" if p == 1 else f"n^{p}")
            num = str(a) if (a != 1 or not mono) else ""
            body = f"{num} {mono}".strip() if num and mono else (num or mono)
            out.append(("-" if sign == "-" else "") + body if i == 0 else f" {sign} {body}")
        return "".join(out)


def polynomial(spec: Mapping[int, object]) -> MomentPolynomial:
    """``polynomial({3: "1/2", 1: 1})`` builds ``1/2 n^3 + n``."""
    return MomentPolynomial.from_dict({p: Fraction(c) for p, c in spec.items()})


def one_matrix_moment(nu, beta: int, allow_large: bool = False) -> MomentPolynomial:
    """``< prod_l Tr M^{nu_l} >`` for a G(O/U/S)E matrix, as a polynomial in ``n``."""
    nu = as_composition(nu)
    alg.check_beta(beta)
    if nu.size % 2:
        return MomentPolynomial(())
    d = defaultdict(Fraction)
    for term in expansion_terms(nu, beta, allow_large=allow_large):
        d[term.f] += term.weight
    return MomentPolynomial.from_dict(d)


def grouped_measure(nu, beta: int) -> dict[tuple[tuple[int, int], ...], MomentPolynomial]:
    """Coefficient polynomial of each product of path measures, keyed by pair partition."""
    groups: dict = defaultdict(lambda: defaultdict(Fraction))
    for term in expansion_terms(nu, beta):
        groups[term.pairs][term.f] += term.weight
    return {p: MomentPolynomial.from_dict(d) for p, d in groups.items()}


# ---------------------------------------------------------------------------
# numeric evaluation


def _fiber(m: np.ndarray, beta: int) -> np.ndarray:
    return alg.as_complex(np.asarray(m), beta)


def _fiber_dim(n: int, beta: int) -> int:
    return 2 * n if beta == 4 else n


def coef_fiber(A: Mapping | None, slot: CoefSlot, beta: int, n: int) -> np.ndarray:
    if A is None or (slot.row, slot.col) not in A:
        return np.eye(_fiber_dim(n, beta), dtype=complex)
    m = _fiber(A[(slot.row, slot.col)], beta)
    if not slot.flip:
        return m
    return m.conj().T if beta == 4 else m.T


def _finish(total, beta: int, nwords: int):
    if beta == 4:
        return float(np.real(total)) * 0.5**nwords
    if beta == 2:
        return complex(total)
    # real unless complex coefficients were supplied
    total = complex(total)
    return total.real if total.imag == 0 else total


class FiberBindings(NamedTuple):
    """Fiber matrices bound to coefficient and edge slots, ready for repeated evaluation."""

    dim: int
    coef: dict
    edges: dict


def bind_fibers(beta: int, n: int, A: Mapping | None = None, edges: Mapping | None = None,
                edges_are_fibers: bool = False) -> FiberBindings:
    """Precompute the fiber form of every ``A(k, k')`` (and its flip) and every holonomy
    (and its adjoint). Missing entries mean identity."""
    coef = {}
    for key, m in (A or {}).items():
        f = _fiber(m, beta)
        coef[(key, False)] = f
        coef[(key, True)] = f.conj().T if beta == 4 else f.T
    bound = {}
    for pair, m in (edges or {}).items():
        f = m if edges_are_fibers else _fiber(m, beta)
        bound[(pair, False)] = f
        bound[(pair, True)] = f.conj().T
    return FiberBindings(_fiber_dim(n, beta), coef, bound)


def evaluate_bound(term: ExpansionTerm, beta: int, bindings: FiberBindings):
    total = 1.0 + 0.0j
    dim = bindings.dim
    for word in term.words:
        prod = None
        for slot in word:
            if isinstance(slot, CoefSlot):
                m = bindings.coef.get(((slot.row, slot.col), slot.flip))
            else:
                m = bindings.edges.get((slot.pair, slot.adjoint))
            if m is None:
                continue
            if m.shape != (dim, dim):
                raise ValueError("matrix dimension does not match n")
            prod = m if prod is None else prod @ m
        total *= dim if prod is None else np.trace(prod)
    return _finish(total, beta, len(term.words))


def evaluate_trace_spec(term: ExpansionTerm, beta: int, n: int, A: Mapping | None = None,
                        edges: Mapping | None = None):
    """Product over the words of ``Tr`` (``Re Tr`` for quaternions) of the slot products,
    with concrete holonomy matrices ``edges[pair]`` (identity when absent)."""
    return evaluate_bound(term, beta, bind_fibers(beta, n, A, edges))


def pair_tensors(g_hh: np.ndarray, g_hc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reshape ``(d^2, d^2)`` blocks of the tensor Green's functions into
    ``T[p, q, r, s] = int hol_pq hol_rs`` and ``int hol_pq conj(hol_rs)``."""
    d = int(round(np.sqrt(g_hh.shape[0])))
    t_hh = g_hh.reshape(d, d, d, d).transpose(0, 2, 1, 3)
    t_hc = g_hc.reshape(d, d, d, d).transpose(0, 2, 1, 3)
    return t_hh, t_hc


def evaluate_integrated(term: ExpansionTerm, beta: int, n: int, A: Mapping | None,
                        tensors: Mapping[tuple[int, int], tuple[np.ndarray, np.ndarray]]):
    """Trace product with each path's two holonomy occurrences integrated jointly.

    ``tensors[pair] = (T_hh, T_hc)`` from :func:`pair_tensors`.
    """
    letters = iter(string.ascii_letters)
    ops, subs = [], []
    seen: dict[tuple[int, int], list] = defaultdict(list)
    for word in term.words:
        idx = [next(letters) for _ in word]
        for pos, slot in enumerate(word):
            a, b = idx[pos], idx[(pos + 1) % len(word)]
            if isinstance(slot, CoefSlot):
                ops.append(coef_fiber(A, slot, beta, n))
                subs.append(a + b)
            else:
                seen[slot.pair].append((slot.adjoint, a, b))
    for pair, occ in seen.items():
        if len(occ) != 2:
            raise ValueError(f"pair {pair} must appear exactly twice in the words")
        t_hh, t_hc = tensors[pair]
        (adj1, p, q), (adj2, r, s) = occ
        if not adj1 and not adj2:
            ops.append(t_hh)
            subs.append(p + q + r + s)
        elif not adj1 and adj2:
            ops.append(t_hc)
            subs.append(p + q + s + r)
        elif adj1 and not adj2:
            ops.append(t_hc)
            subs.append(r + s + q + p)
        else:
            ops.append(t_hh.conj())
            subs.append(q + p + s + r)
    total = np.einsum(",".join(subs) + "->", *ops, optimize="greedy")
    return _finish(total, beta, len(term.words))


# ---------------------------------------------------------------------------
# symbolic forms with identity holonomies


def _slot_text(slot: CoefSlot, beta: int) -> str:
    mark = ("^*" if beta == 4 else "^T") if slot.flip else ""
    return f"A({slot.row},{slot.col}){mark}"


def _canonical_coef_word(word: tuple, beta: int) -> tuple:
    coef = tuple(s for s in word if isinstance(s, CoefSlot))
    cands = [coef[i:] + coef[:i] for i in range(len(coef))]
    if beta != 2:
        rev = tuple(CoefSlot(s.row, s.col, not s.flip) for s in reversed(coef))
        cands += [rev[i:] + rev[:i] for i in range(len(rev))]
    return min(cands, key=lambda w: [(s.row, s.col, s.flip) for s in w]) if cands else ()


def word_text(word: tuple, beta: int) -> str:
    body = "".join(_slot_text(s, beta) for s in _canonical_coef_word(word, beta)) or "I"
    return f"ReTr({body})" if beta == 4 else f"Tr({body})"


def symbolic_measure(nu, beta: int) -> dict[tuple, dict[str, Fraction]]:
    """Coefficient of each path-measure product as a combination of trace monomials
    in the matrices ``A(k, k')``, with identity holonomies."""
    out: dict = defaultdict(lambda: defaultdict(Fraction))
    for term in expansion_terms(nu, beta):
        mono = " ".join(sorted(word_text(w, beta) for w in term.words))
        out[term.pairs][mono] += term.weight
    return {p: {m: c for m, c in d.items() if c != 0} for p, d in out.items()}


def format_pairs(pairs) -> str:
    return "{" + "|".join(f"{a}{b}" if max(a, b) < 10 else f"{a},{b}" for a, b in pairs) + "}"
