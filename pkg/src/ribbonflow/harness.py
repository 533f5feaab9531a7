"""End-to-end checks of the path-measure expansions of matrix free fields.

For a functional ``F(l) = exp(-sum_x t(x) l(x))`` of ``l = Tr(Phi^2)/2`` both
sides reduce to Gaussian data:

* left: ``<P(Phi) F> = Z_t/Z_0 * <P>_{kappa+t}``, where the shifted covariance is
  obtained by tilting the field covariance, ``(Sigma^{-1} + t)^{-1}``, and
  ``Z_t/Z_0 = det(I + t Sigma)^{-1/2}``;
* right: ``<F(Tr(Phi^2)/2 + sum_i L(gamma_i))>`` factors as ``<F>`` times
  ``prod_i exp(-<t, L(gamma_i)>)``, and the latter weight turns every path
  integral into a Green's function with killing ``kappa + t``. Paths carrying
  two holonomy factors are integrated with tensor product connections.

General functionals are handled by Monte Carlo on both sides.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import algebra as alg
from .expansion import (
    EdgeSlot, ExpansionTerm, bind_fibers, evaluate_bound, evaluate_integrated, evaluate_trace_spec, expansion_terms,
    pair_tensors,
)
from .fields import GaussianModel
from .gauge import (
    HOL_CONJ, HOL_HOL, Connection, FiberConnection, apply_gauge, fiber_holonomy, random_gauge, tensor_connection,
)
from .network import Network, PathSampler, green, holonomy_green, holonomy_precision
from .ribbon import Composition, as_composition, iter_pair_partitions
from .wick import isserlis, wick_oracle


@dataclass
class Experiment:
    net: Network
    beta: int
    n: int
    nu: Composition
    x: tuple[int, ...]
    A: dict | None = None
    connection: Connection | None = None
    shift: np.ndarray | None = None
    mode: str = "exact"
    samples: int = 20_000
    seed: int | None = None
    tolerance: float = 1e-8
    F: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    name: str = ""

    def __post_init__(self):
        self.nu = as_composition(self.nu)
        self.x = tuple(self.net.idx(v) for v in self.x)
        self.shift = self.net.shift_vector(self.shift)
        self.validate()

    def validate(self) -> None:
        alg.check_beta(self.beta)
        if self.nu.size % 2:
            raise ValueError("odd half-edge count")
        if len(self.x) != self.nu.size:
            raise ValueError(f"need {self.nu.size} vertices, got {len(self.x)}")
        if self.A is not None:
            for key, m in self.A.items():
                if np.shape(m)[:2] != (self.n, self.n):
                    raise ValueError(f"A{key} must be {self.n}x{self.n}")
        if self.connection is not None and (self.connection.beta, self.connection.n) != (self.beta, self.n):
            raise ValueError("connection does not match (beta, n)")
        if self.mode not in ("exact", "mc"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @classmethod
    def from_dict(cls, data: Mapping, base_dir: Path | str = ".") -> "Experiment":
        base = Path(base_dir)

        def load(obj):
            return json.loads((base / obj).read_text()) if isinstance(obj, str) else obj

        net = Network.from_dict(load(data["network"]))
        beta, n = int(data["beta"]), int(data["n"])
        conn = None
        if data.get("connection") is not None:
            conn = Connection.from_dict(net, load(data["connection"]), n)
        A = None
        if data.get("A"):
            A = {}
            for key, lit in data["A"].items():
                k1, k2 = (int(s) for s in str(key).split(","))
                A[(k1, k2)] = alg.parse_matrix_literal(lit, beta)
        nu = data["nu"]
        if isinstance(nu, str):
            nu = [int(s) for s in nu.split(",")]
        return cls(net, beta, n, Composition(nu), tuple(data["x"]), A, conn, data.get("shift"),
                   data.get("mode", "exact"), int(data.get("samples", 20_000)), data.get("seed"),
                   float(data.get("tolerance", 1e-8)), name=data.get("name", ""))

    @classmethod
    def load(cls, path) -> "Experiment":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), path.parent)

    @property
    def eigenvalue_mode(self) -> bool:
        """All coefficients are identities and each trace block sits at one vertex."""
        if self.A is not None:
            return False
        s = 0
        for p in self.nu.parts:
            if len(set(self.x[s:s + p])) != 1:
                return False
            s += p
        return True

    def label(self) -> str:
        if self.name:
            return self.name
        conn = "U" if self.connection is not None else "flat"
        return (f"V={self.net.size} beta={self.beta} n={self.n} nu={self.nu} {conn} "
                f"A={'rand' if self.A else 'I'} t={'0' if not self.shift.any() else 'rand'}")


def _as_number(v):
    v = complex(v)
    return v.real if v.imag == 0 else v


def _jsonable(v):
    v = complex(v)
    return v.real if abs(v.imag) == 0 else [v.real, v.imag]


# ---------------------------------------------------------------------------
# exact mode


def field_model(exp: Experiment, shift=None) -> GaussianModel:
    return GaussianModel.build(exp.net, exp.beta, exp.n, exp.connection, shift)


def tilted_covariance(cov: np.ndarray, tilt: np.ndarray) -> tuple[np.ndarray, float]:
    """``(Sigma^{-1} + diag(tilt))^{-1}`` and ``log det(I + diag(tilt) Sigma)``."""
    m = np.eye(len(tilt)) + tilt[:, None] * cov
    sign, logdet = np.linalg.slogdet(m)
    if sign <= 0:
        raise ValueError("tilted covariance is not positive definite")
    out = np.linalg.solve(m.T, cov.T).T
    return 0.5 * (out + out.T), float(logdet)


def lhs_exact(exp: Experiment):
    """``< prod_l Tr Pi_l(Phi, A) F(Tr(Phi^2)/2) >`` by Wick expansion under the tilted law."""
    model = field_model(exp)
    d = model.dim
    tilt = np.repeat(exp.shift, d)
    cov, logdet = tilted_covariance(model.covariance, tilt)
    idx = np.array(exp.x)
    flat = (idx[:, None] * d + np.arange(d)[None, :]).ravel()
    k = len(idx)
    sub = cov[np.ix_(flat, flat)].reshape(k, d, k, d)
    moment = wick_oracle(exp.nu.parts, exp.beta, exp.n, sub, exp.A)
    return _as_number(np.exp(-0.5 * logdet) * moment)


def partition_ratio(exp: Experiment) -> float:
    """``<F> = Z_{kappa+t} / Z_kappa`` from the two field covariances."""
    if not exp.shift.any():
        return 1.0
    d = alg.hermitian_dim(exp.beta, exp.n)
    if exp.connection is None:
        g0, gt = green(exp.net), green(exp.net, exp.shift)
        return float(np.exp(0.5 * d * (gt.logdet - g0.logdet)))
    m0, mt = field_model(exp), field_model(exp, exp.shift)
    return float(np.exp(0.5 * (mt.logdet_cov - m0.logdet_cov)))


def _pair_tensor_table(exp: Experiment, conn, pairs) -> dict:
    g_hh = holonomy_green(exp.net, tensor_connection(conn, HOL_HOL), exp.shift)
    g_hc = holonomy_green(exp.net, tensor_connection(conn, HOL_CONJ), exp.shift)
    out = {}
    for a, b in pairs:
        xa, xb = exp.x[a - 1], exp.x[b - 1]
        out[(a, b)] = pair_tensors(g_hh.block(xa, xb), g_hc.block(xa, xb))
    return out


def _identity_fiber(exp: Experiment) -> FiberConnection:
    d = 2 * exp.n if exp.beta == 4 else exp.n
    return FiberConnection({e: np.eye(d, dtype=complex) for e in exp.net.edges}, d)


def rhs_terms(exp: Experiment, force_tensor: bool = False) -> list[tuple[ExpansionTerm, object]]:
    """Each term of the expansion with its path-integrated trace value (weight excluded)."""
    terms = expansion_terms(exp.nu, exp.beta)
    out = []
    if exp.connection is None and not force_tensor:
        g = green(exp.net, exp.shift).G
        for term in terms:
            mass = np.prod([g[exp.x[a - 1], exp.x[b - 1]] for a, b in term.pairs])
            out.append((term, evaluate_trace_spec(term, exp.beta, exp.n, exp.A) * mass))
        return out
    conn = exp.connection if exp.connection is not None else _identity_fiber(exp)
    all_pairs = {p for term in terms for p in term.pairs}
    table = _pair_tensor_table(exp, conn, all_pairs)
    for term in terms:
        out.append((term, evaluate_integrated(term, exp.beta, exp.n, exp.A, table)))
    return out


def rhs_exact(exp: Experiment, force_tensor: bool = False):
    total = sum(float(term.weight) * v for term, v in rhs_terms(exp, force_tensor))
    return _as_number(partition_ratio(exp) * total)


def _report(check: str, lhs, rhs, tol: float, extra: dict | None = None, relative: bool = True) -> dict:
    gap = abs(complex(lhs) - complex(rhs))
    bound = tol * (1.0 + abs(complex(lhs))) if relative else tol
    out = {"check": check, "lhs": _jsonable(lhs), "rhs": _jsonable(rhs), "gap": gap,
           "tolerance": bound, "pass": bool(gap <= bound)}
    if extra:
        out.update(extra)
    return out


def verify_iso(exp: Experiment, rng: np.random.Generator | None = None) -> dict:
    """Compare both sides; exact mode by default, Monte Carlo when ``exp.mode == "mc"``."""
    if exp.mode == "mc":
        return verify_iso_mc(exp, rng)
    lhs = lhs_exact(exp)
    z = partition_ratio(exp)
    contributions = [(term, z * float(term.weight) * v) for term, v in rhs_terms(exp)]
    rhs = _as_number(sum(v for _, v in contributions))
    terms = [{"pairs": [list(p) for p in term.pairs], "twist": term.pairing.twist_mask,
              "weight": str(term.weight), "value": _jsonable(v)} for term, v in contributions]
    return _report(f"iso[{exp.label()}]", lhs, rhs, exp.tolerance, {"terms": terms})


# ---------------------------------------------------------------------------
# Monte Carlo mode


def exponential_functional(shift: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """``F(l) = exp(-<t, l>)`` acting on occupation arrays of shape ``(..., |V|)``."""
    return lambda occ: np.exp(-occ @ shift)


def _trace_products(exp: Experiment, fields: np.ndarray) -> np.ndarray:
    """``prod_l Tr Pi_l(Phi, A)`` (real traces for quaternions) for each field sample."""
    beta, n = exp.beta, exp.n
    dim = 2 * n if beta == 4 else n
    size = fields.shape[0]
    out = np.ones(size, dtype=complex)
    s = 0
    for p in exp.nu.parts:
        prod = np.broadcast_to(np.eye(dim, dtype=complex), (size, dim, dim))
        for pos in range(p):
            k, k2 = s + pos, s + (pos + 1) % p
            phi = np.array([alg.as_complex(f, beta) for f in fields[:, exp.x[k]]])
            if exp.A is not None and (k + 1, k2 + 1) in exp.A:
                a = alg.as_complex(exp.A[(k + 1, k2 + 1)], beta)
            else:
                a = np.eye(dim)
            prod = prod @ phi @ a
        tr = np.trace(prod, axis1=1, axis2=2)
        out *= 0.5 * tr.real if beta == 4 else tr
        s += p
    return out


def _eigen_products(exp: Experiment, fields: np.ndarray) -> np.ndarray:
    """``prod_l sum_i lambda_i(x_l)^{nu_l}`` for each field sample."""
    out = np.ones(fields.shape[0])
    s = 0
    for p in exp.nu.parts:
        x = exp.x[s]
        for i in range(fields.shape[0]):
            out[i] *= np.sum(alg.hermitian_eigenvalues(fields[i, x], exp.beta) ** p)
        s += p
    return out


def _field_occupation(coords: np.ndarray) -> np.ndarray:
    """``Tr(Phi(x)^2)/2`` from orthonormal coordinates of shape ``(size, |V|, D)``."""
    return 0.5 * np.sum(coords**2, axis=-1)


def _mean_se(vals: np.ndarray) -> tuple[object, float]:
    se = np.sqrt(np.var(vals.real, ddof=1) + np.var(np.imag(vals), ddof=1) + 0.0)
    return _as_number(np.mean(vals)), float(se / np.sqrt(len(vals)))


def mc_lhs(exp: Experiment, rng: np.random.Generator, F=None) -> tuple[object, float]:
    """Sample mean and standard error of ``P(Phi) F(Tr(Phi^2)/2)``."""
    from .fields import from_coordinates

    F = F or exp.F or exponential_functional(exp.shift)
    coords = field_model(exp).sample_coordinates(rng, exp.samples)
    fields = from_coordinates(coords, exp.beta, exp.n)
    p = _eigen_products(exp, fields) if exp.eigenvalue_mode else _trace_products(exp, fields)
    return _mean_se(p * F(_field_occupation(coords)))


def mc_rhs(exp: Experiment, rng: np.random.Generator, F=None) -> tuple[object, float]:
    """Sample mean and standard error of the path side.

    For every pair partition, one path per pair is drawn from the normalized path
    measure (killing ``kappa``) and reweighted by its mass; holonomies are taken
    along the drawn skeletons and ``F`` is evaluated at an independent field
    sample plus the occupation of the paths.
    """
    F = F or exp.F or exponential_functional(exp.shift)
    by_partition: dict = defaultdict(list)
    for term in expansion_terms(exp.nu, exp.beta):
        by_partition[term.pairs].append(term)
    samplers = {y: PathSampler(exp.net, y) for y in set(exp.x)}
    occ_field = _field_occupation(field_model(exp).sample_coordinates(rng, exp.samples))
    vals = np.zeros(exp.samples, dtype=complex)
    for s in range(exp.samples):
        for pairs, group in by_partition.items():
            occ = occ_field[s].copy()
            mass = 1.0
            hols = {}
            for a, b in pairs:
                xa, xb = exp.x[a - 1], exp.x[b - 1]
                sampler = samplers[xb]
                path = sampler.sample(xa, rng)
                mass *= sampler.mass(xa)
                occ += path.occupation(exp.net.size)
                if exp.connection is not None:
                    hols[(a, b)] = fiber_holonomy(exp.connection, path.skeleton)
            bound = bind_fibers(exp.beta, exp.n, exp.A, hols, edges_are_fibers=True)
            traces = sum(float(t.weight) * evaluate_bound(t, exp.beta, bound) for t in group)
            vals[s] += mass * F(occ) * traces
    return _mean_se(vals)


def verify_iso_mc(exp: Experiment, rng: np.random.Generator | None = None, sigmas: float = 4.0) -> dict:
    if rng is None:
        if exp.seed is None:
            raise ValueError("Monte Carlo mode needs a seed")
        rng = np.random.default_rng(exp.seed)
    lhs, se_l = mc_lhs(exp, rng)
    rhs, se_r = mc_rhs(exp, rng)
    se = float(np.hypot(se_l, se_r))
    return _report(f"iso-mc[{exp.label()}]", lhs, rhs, sigmas * se,
                   {"stderr_lhs": se_l, "stderr_rhs": se_r, "samples": exp.samples}, relative=False)


# ---------------------------------------------------------------------------
# vector fields twisted by a connection


def vector_fiber(net: Network, beta: int, n: int, connection: Connection | None):
    """Real fiber connection of the vector field: ``O(n)`` as is, ``U(n)`` realified
    to ``O(2n)``, identity when no connection is given."""
    if beta not in (1, 2):
        raise ValueError("vector fields are defined for beta in {1, 2}")
    d = n if beta == 1 else 2 * n
    if connection is None:
        return FiberConnection({e: np.eye(d) for e in net.edges}, d)
    if beta == 1:
        return FiberConnection({e: connection.fiber(*e) for e in net.edges}, d)
    return connection.realified()


def verify_vector_iso(net: Network, beta: int, n: int, x: Sequence, J: Sequence[int],
                      connection: Connection | None = None, shift=None, tolerance: float = 1e-8) -> dict:
    """Pair-partition isomorphism for the twisted vector field and ``F = exp(-<t, l>)``.

    Components ``J(k)`` index the real fiber (``0..2n-1`` in the complex case, real
    parts first).
    """
    if len(x) % 2 or len(x) != len(J):
        raise ValueError("need an even number of (vertex, component) factors")
    fiber = vector_fiber(net, beta, n, connection)
    d = fiber.fiber_dim
    t = net.shift_vector(shift)
    xs = [net.idx(v) for v in x]
    flat = [xk * d + int(j) for xk, j in zip(xs, J)]

    # left: Wick under the tilted covariance of the field itself
    q = holonomy_precision(net, fiber)
    cov = np.linalg.inv(np.real(q))
    tilted, logdet = tilted_covariance(0.5 * (cov + cov.T), np.repeat(t, d))
    lhs = float(np.exp(-0.5 * logdet) * isserlis(tilted, flat))

    # right: path masses with holonomy entries, one path per pair
    g0 = holonomy_green(net, fiber)
    gt = holonomy_green(net, fiber, t)
    zratio = float(np.exp(0.5 * (gt.logdet - g0.logdet)))
    gmat = np.real(gt.matrix)
    total = 0.0
    for pp in iter_pair_partitions(len(flat)):
        total += np.prod([gmat[flat[a - 1], flat[b - 1]] for a, b in pp])
    rhs = zratio * float(total)
    label = f"vector-iso[V={net.size} beta={beta} n={n} r={len(x) // 2} " \
            f"{'U' if connection is not None else 'I'}]"
    return _report(label, lhs, rhs, tolerance)


# ---------------------------------------------------------------------------
# Wilson loop decomposition


def path_numbering(pairs) -> dict[tuple[int, int], int]:
    """Paths numbered 1, 2, ... in increasing order of the larger label of their pair."""
    return {p: i + 1 for i, p in enumerate(sorted(pairs, key=lambda p: (p[1], p[0])))}


def loop_pattern(word, numbering) -> tuple[tuple[int, bool], ...]:
    """Edge slots of a word as ``(path number, reversed)``."""
    return tuple((numbering[s.pair], s.adjoint) for s in word if isinstance(s, EdgeSlot))


def pattern_text(pattern) -> str:
    return "".join(f"hol({'rev ' if rev else ''}g{i})" for i, rev in pattern)


def _cyclic_forms(pattern):
    k = len(pattern)
    return {pattern[i:] + pattern[:i] for i in range(k)}


def same_loop(p1, p2, allow_inverse: bool = True) -> bool:
    """Equality of loop patterns up to rerooting (and inversion when allowed)."""
    p1, p2 = tuple(p1), tuple(p2)
    if p2 in _cyclic_forms(p1):
        return True
    if allow_inverse:
        inv = tuple((i, not r) for i, r in reversed(p1))
        return p2 in _cyclic_forms(inv)
    return False


def wilson_decomposition(exp: Experiment) -> dict:
    if not exp.eigenvalue_mode:
        raise ValueError("Wilson decomposition needs identity coefficients and one vertex per trace")
    z = partition_ratio(exp)
    rows = []
    total = 0.0
    for term, v in rhs_terms(exp, force_tensor=True):
        numbering = path_numbering(term.pairs)
        loops = [pattern_text(loop_pattern(w, numbering)) for w in term.words]
        contrib = z * float(term.weight) * v
        total += contrib
        rows.append({"pairs": [list(p) for p in term.pairs], "twist": term.pairing.twist_mask,
                     "weight": str(term.weight), "loops": loops,
                     "paths": {f"g{i}": [exp.net.vertices[exp.x[a - 1]], exp.net.vertices[exp.x[b - 1]]]
                               for (a, b), i in numbering.items()},
                     "value": _jsonable(contrib)})
    rhs = rhs_exact(exp)
    return _report(f"wilson[{exp.label()}]", total, rhs, 1e-10, {"terms": rows})


# ---------------------------------------------------------------------------
# the fixed seeded suite

SUITE_NUS = ((2,), (1, 1), (4,), (2, 2), (3, 1), (2, 1, 1))
SUITE_SIZES = (1, 2, 3, 5)


def random_coefficients(nu: Composition, beta: int, n: int, rng: np.random.Generator) -> dict:
    out = {}
    for k in range(1, nu.size + 1):
        a = alg.random_matrix(n, beta, rng)
        out[(k, nu.next_label(k))] = a / np.sqrt(n)
    return out


def standard_suite(seed: int = 20240601, n: int = 2) -> list[Experiment]:
    """Grid over network size, beta, nu, connection, coefficients and shift."""
    rng = np.random.default_rng(seed)
    exps = []
    for nv in SUITE_SIZES:
        net = Network.random(nv, rng) if nv > 1 else Network.from_edges(["v0"], [], [1.0])
        for beta in (1, 2, 4):
            for nu in SUITE_NUS:
                nu = Composition(nu)
                for twisted in (False, True):
                    for rand_a in (False, True):
                        for shifted in (False, True):
                            conn = Connection.random(net, beta, n, rng) if twisted and net.edges else None
                            if twisted and conn is None:
                                continue
                            A = random_coefficients(nu, beta, n, rng) if rand_a else None
                            t = rng.uniform(0.1, 1.0, nv) if shifted else None
                            x = tuple(int(v) for v in rng.integers(nv, size=nu.size))
                            exps.append(Experiment(net, beta, n, nu, x, A, conn, t))
    return exps


def run_suite(exps: Sequence[Experiment]) -> list[dict]:
    return [verify_iso(e) for e in exps]


def flat_gauge_experiment(exp: Experiment, rng: np.random.Generator) -> tuple[Experiment, Experiment]:
    """A flat connection ``x -> g(x)^{-1} g(y)`` and the matching untwisted experiment whose
    coefficients are rotated by the gauge: ``A(k,k') -> g(x_k) A(k,k') g(x_k')^{-1}``."""

    beta, n = exp.beta, exp.n
    g = random_gauge(exp.net, beta, n, rng)
    flat = apply_gauge(Connection.identity(exp.net, beta, n), g)
    twisted = Experiment(exp.net, beta, n, exp.nu, exp.x, exp.A, flat, exp.shift)
    rotated = {}
    nu = exp.nu
    for k in range(1, nu.size + 1):
        k2 = nu.next_label(k)
        a = exp.A[(k, k2)] if exp.A and (k, k2) in exp.A else alg.identity(n, beta)
        gx, gy = g[exp.x[k - 1]], g[exp.x[k2 - 1]]
        m = alg.matmul(gx, a, beta)
        rotated[(k, k2)] = alg.matmul(m, alg.adjoint(gy, beta), beta)
    plain = Experiment(exp.net, beta, n, exp.nu, exp.x, rotated, None, exp.shift)
    return twisted, plain
