"""Electrical networks, Green's functions and the random walk path measure.

A network is a finite connected graph with symmetric conductances ``C`` and a
killing measure ``kappa``. The associated continuous time walk jumps from
``x`` to ``y`` at rate ``C(x,y)`` and is killed at rate ``kappa(x)``. Adding a
shift ``t >= 0`` to the killing turns every mass into a Laplace transform of
the occupation field, so exponential functionals never require trajectories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class Network:
    vertices: tuple[str, ...]
    conductance: np.ndarray
    kappa: np.ndarray
    index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = np.asarray(self.conductance, dtype=float)
        kappa = np.asarray(self.kappa, dtype=float)
        nv = len(self.vertices)
        if len(set(self.vertices)) != nv:
            raise ValueError("vertex names must be distinct")
        if c.shape != (nv, nv) or kappa.shape != (nv,):
            raise ValueError("conductance/killing shapes do not match the vertex set")
        if not np.allclose(c, c.T, rtol=0.0, atol=0.0):
            raise ValueError("conductances must be symmetric")
        if np.any(np.diag(c) != 0.0):
            raise ValueError("self-loops are not allowed")
        if np.any(c < 0.0):
            raise ValueError("conductances must be positive")
        if np.any(kappa < 0.0) or not np.any(kappa > 0.0):
            raise ValueError("killing must be non-negative and not identically zero")
        c.setflags(write=False)
        kappa.setflags(write=False)
        object.__setattr__(self, "conductance", c)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "index", {v: i for i, v in enumerate(self.vertices)})
        if not self._connected():
            raise ValueError("network must be connected")

    @classmethod
    def from_edges(cls, vertices: Sequence[str], edges, kappa) -> "Network":
        """``edges`` is an iterable of ``(u, v, c)``; ``kappa`` a mapping or sequence."""
        vertices = tuple(str(v) for v in vertices)
        idx = {v: i for i, v in enumerate(vertices)}
        c = np.zeros((len(vertices), len(vertices)))
        for u, v, w in edges:
            i, j = idx[str(u)], idx[str(v)]
            if i == j:
                raise ValueError(f"self-loop at {u!r}")
            if c[i, j] != 0.0:
                raise ValueError(f"multiple edges between {u!r} and {v!r}")
            if w <= 0:
                raise ValueError(f"conductance of {u!r}-{v!r} must be positive")
            c[i, j] = c[j, i] = float(w)
        if isinstance(kappa, Mapping):
            k = np.array([float(kappa.get(v, 0.0)) for v in vertices])
        else:
            k = np.asarray(kappa, dtype=float)
        return cls(vertices, c, k)

    @classmethod
    def from_dict(cls, data: Mapping) -> "Network":
        edges = [(e["u"], e["v"], e["c"]) for e in data.get("edges", [])]
        return cls.from_edges(data["vertices"], edges, data.get("kappa", {}))

    @classmethod
    def load(cls, path) -> "Network":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [{"u": self.vertices[i], "v": self.vertices[j], "c": float(self.conductance[i, j])}
                      for i, j in self.edges],
            "kappa": {v: float(k) for v, k in zip(self.vertices, self.kappa)},
        }

    @classmethod
    def random(cls, nv: int, rng: np.random.Generator, extra_edges: int | None = None) -> "Network":
        """Random connected network: a random spanning tree plus extra edges, so cycles
        appear once ``nv >= 3``."""
        names = [f"v{i}" for i in range(nv)]
        edges = set()
        for i in range(1, nv):
            edges.add((int(rng.integers(i)), i))
        extra = nv // 2 + 1 if extra_edges is None else extra_edges
        pairs = [(i, j) for i in range(nv) for j in range(i + 1, nv) if (i, j) not in edges]
        rng.shuffle(pairs)
        edges.update(pairs[:extra])
        weighted = [(names[i], names[j], float(rng.uniform(0.5, 2.0))) for i, j in sorted(edges)]
        kappa = rng.uniform(0.2, 1.5, size=nv)
        return cls.from_edges(names, weighted, kappa)

    @property
    def size(self) -> int:
        return len(self.vertices)

    @property
    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.conductance))
        return list(zip(i.tolist(), j.tolist()))

    def neighbors(self, x: int) -> np.ndarray:
        return np.nonzero(self.conductance[x])[0]

    def idx(self, v) -> int:
        """Vertex index from a name or an integer index."""
        if isinstance(v, (int, np.integer)):
            if not 0 <= v < self.size:
                raise KeyError(f"unknown vertex index {v}")
            return int(v)
        try:
            return self.index[str(v)]
        except KeyError:
            raise KeyError(f"unknown vertex {v!r}") from None

    def shift_vector(self, t) -> np.ndarray:
        """Normalize a shift given as ``None``, a scalar, a sequence or a name mapping."""
        if t is None:
            return np.zeros(self.size)
        if isinstance(t, Mapping):
            out = np.zeros(self.size)
            for k, v in t.items():
                out[self.idx(k)] = float(v)
        else:
            out = np.broadcast_to(np.asarray(t, dtype=float), (self.size,)).copy()
        if np.any(out < 0.0):
            raise ValueError("killing shift must be non-negative")
        return out

    def rates(self, t=None) -> np.ndarray:
        """Total jump-plus-killing rate ``lambda_t(x)``."""
        return self.kappa + self.shift_vector(t) + self.conductance.sum(axis=1)

    def precision(self, t=None) -> np.ndarray:
        return np.diag(self.rates(t)) - self.conductance

    def _connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for y in np.nonzero(self.conductance[x])[0]:
                if int(y) not in seen:
                    seen.add(int(y))
                    stack.append(int(y))
        return len(seen) == self.size


def _cholesky(q: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(q)
    except np.linalg.LinAlgError:
        raise ValueError(f"{what} is not positive definite") from None


@dataclass(frozen=True)
class GreenData:
    shift: np.ndarray
    G: np.ndarray
    precision: np.ndarray
    logdet: float

    @property
    def log_normalizer(self) -> float:
        """``0.5 * log det(2 pi G)`` for one scalar field; multiply by the fiber dimension
        for vector or matrix fields."""
        return 0.5 * (self.G.shape[0] * np.log(2 * np.pi) + self.logdet)


def green(net: Network, t=None) -> GreenData:
    t = net.shift_vector(t)
    q = net.precision(t)
    chol = _cholesky(q, "precision")
    g = np.linalg.inv(q)
    g = 0.5 * (g + g.T)
    logdet = -2.0 * float(np.sum(np.log(np.diag(chol))))
    return GreenData(t, g, q, logdet)


def path_measure_mass(net: Network, x, y, t=None) -> float:
    """``int exp(-<t, L>) mu^{x,y}(dgamma) = G_{kappa+t}(x, y)``."""
    return float(green(net, t).G[net.idx(x), net.idx(y)])


# ---------------------------------------------------------------------------
# path sampling


@dataclass(frozen=True)
class PathSample:
    skeleton: tuple[int, ...]
    holding_times: np.ndarray

    @property
    def lifetime(self) -> float:
        return float(self.holding_times.sum())

    def occupation(self, nv: int) -> np.ndarray:
        return np.bincount(self.skeleton, weights=self.holding_times, minlength=nv)

    def reversed(self) -> "PathSample":
        return PathSample(self.skeleton[::-1], self.holding_times[::-1].copy())


class PathSampler:
    """Exact sampler of the normalized measure ``exp(-<t,L>) mu^{x,y} / G_{kappa+t}(x,y)``.

    The skeleton is the Doob transform of the killed jump chain by
    ``h = G_{kappa+t}(., y)``; holding times are exponential with rate
    ``lambda_t`` at every visit, including the last one.
    """

    def __init__(self, net: Network, y, t=None):
        self.net = net
        self.y = net.idx(y)
        self.gd = green(net, t)
        self.lam = net.rates(t)
        h = self.gd.G[:, self.y]
        if np.any(h <= 0.0):
            raise ValueError("zero mass between some vertex and the target")
        self.h = h
        nv = net.size
        # column nv means "stop", only possible at y
        trans = np.zeros((nv, nv + 1))
        trans[:, :nv] = net.conductance * h[None, :] / (self.lam * h)[:, None]
        trans[self.y, nv] = 1.0 / (self.lam[self.y] * h[self.y])
        self.cumulative = np.cumsum(trans, axis=1)
        self.cumulative[:, -1] = 1.0

    def mass(self, x) -> float:
        return float(self.h[self.net.idx(x)])

    def sample(self, x, rng: np.random.Generator) -> PathSample:
        nv = self.net.size
        cur = self.net.idx(x)
        skel = [cur]
        while True:
            nxt = int(np.searchsorted(self.cumulative[cur], rng.random(), side="right"))
            if nxt >= nv:
                break
            cur = nxt
            skel.append(cur)
        rates = self.lam[np.asarray(skel)]
        return PathSample(tuple(skel), rng.exponential(1.0 / rates))

    def sample_occupations(self, x, size: int, rng: np.random.Generator) -> np.ndarray:
        """Occupation fields of ``size`` independent paths, shape ``(size, |V|)``;
        the chains are advanced in lockstep."""
        nv = self.net.size
        cur = np.full(size, self.net.idx(x))
        alive = np.ones(size, dtype=bool)
        occ = np.zeros((size, nv))
        rows = np.arange(size)
        while alive.any():
            idx = rows[alive]
            v = cur[idx]
            np.add.at(occ, (idx, v), rng.exponential(1.0 / self.lam[v]))
            u = rng.random(len(idx))
            nxt = (u[:, None] >= self.cumulative[v]).sum(axis=1)
            stop = nxt >= nv
            alive[idx[stop]] = False
            cur[idx[~stop]] = nxt[~stop]
        return occ


def sample_path(net: Network, x, y, t, rng: np.random.Generator) -> PathSample:
    return PathSampler(net, y, t).sample(x, rng)


# ---------------------------------------------------------------------------
# Green's functions twisted by a connection


@dataclass(frozen=True)
class HolonomyGreen:
    """Block matrix ``G^W`` of shape ``(|V| d, |V| d)``; block ``(x, y)`` is
    ``int hol^W(gamma) exp(-<t,L>) mu^{x,y}(dgamma)``."""

    matrix: np.ndarray
    fiber_dim: int
    logdet: float

    def block(self, x: int, y: int) -> np.ndarray:
        d = self.fiber_dim
        return self.matrix[x * d:(x + 1) * d, y * d:(y + 1) * d]

    def blocks(self) -> np.ndarray:
        """View of shape ``(|V|, |V|, d, d)``."""
        d = self.fiber_dim
        nv = self.matrix.shape[0] // d
        return self.matrix.reshape(nv, d, nv, d).transpose(0, 2, 1, 3)


def holonomy_precision(net: Network, conn, t=None) -> np.ndarray:
    """Block precision with diagonal ``lambda_t(x) I_d`` and off-diagonal ``-C(x,y) W(x,y)``.

    ``conn`` must provide ``fiber_dim`` and ``fiber(x, y)`` (vertex indices) returning
    the ``d x d`` matrix ``W(x, y)``.
    """
    d = conn.fiber_dim
    nv = net.size
    lam = net.rates(t)
    sample = conn.fiber(*net.edges[0]) if net.edges else np.eye(d)
    q = np.zeros((nv * d, nv * d), dtype=np.result_type(sample, float))
    for x in range(nv):
        q[x * d:(x + 1) * d, x * d:(x + 1) * d] = lam[x] * np.eye(d)
    for x, y in net.edges:
        w = conn.fiber(x, y)
        c = net.conductance[x, y]
        q[x * d:(x + 1) * d, y * d:(y + 1) * d] = -c * w
        q[y * d:(y + 1) * d, x * d:(x + 1) * d] = -c * w.conj().T
    return q


def holonomy_green(net: Network, conn, t=None) -> HolonomyGreen:
    q = holonomy_precision(net, conn, t)
    q = 0.5 * (q + q.conj().T)
    chol = _cholesky(q, "block precision")
    g = np.linalg.inv(q)
    g = 0.5 * (g + g.conj().T)
    logdet = -2.0 * float(np.sum(np.log(np.abs(np.diag(chol)))))
    return HolonomyGreen(g, conn.fiber_dim, logdet)
