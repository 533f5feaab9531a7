"""Connections with values in O(n), U(n) and U(n, H); holonomies and Wilson loops.

A connection stores one matrix ``U(u, v)`` per undirected edge ``u < v`` and
derives ``U(v, u) = U(u, v)*``. For numerical kernels every connection also
exposes its *fiber* matrices: the real or complex matrix acting on the fiber
(``n`` for real and complex, ``2n`` for quaternions through the complex
embedding).
"""

from __future__ import annotations

import json
from collections import deque
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import algebra as alg
from .network import Network

UNITARY_ATOL = 1e-10


def is_unitary(m: np.ndarray, beta: int, atol: float = UNITARY_ATOL) -> bool:
    n = m.shape[0]
    prod = alg.matmul(m, alg.adjoint(m, beta), beta)
    return bool(np.allclose(prod, alg.identity(n, beta), rtol=0.0, atol=atol))


def sample_haar(beta: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar distributed element of O(n), U(n) or U(n, H)."""
    alg.check_beta(beta)
    if beta in (1, 2):
        z = alg.random_matrix(n, beta, rng)
        q, r = np.linalg.qr(z)
        d = np.diag(r)
        phase = d / np.abs(d)
        return q * phase[None, :]
    # Gram-Schmidt over quaternionic columns, carried out on 2x2 column blocks
    # of the complex embedding so that each step stays in its image
    c = alg.embed_complex(rng.standard_normal((n, n, 4)))
    cols = []
    for j in range(n):
        v = c[:, 2 * j:2 * j + 2].copy()
        for w in cols:
            v -= w @ (w.conj().T @ v)
        norm = np.sqrt(np.real(np.trace(v.conj().T @ v)) / 2.0)
        cols.append(v / norm)
    return alg.unembed_complex(np.hstack(cols))


def fiber_matrix(m: np.ndarray, beta: int) -> np.ndarray:
    """Real matrix for ``beta=1``, complex for ``beta=2``, complex embedding for ``beta=4``."""
    if beta == 1:
        return np.asarray(m, dtype=float)
    return alg.as_complex(m, beta)


def realify(m: np.ndarray) -> np.ndarray:
    """Real ``2n x 2n`` form of a complex matrix acting on ``C^n = R^n + i R^n``."""
    return np.block([[m.real, -m.imag], [m.imag, m.real]])


class Connection:
    def __init__(self, net: Network, beta: int, n: int, edge_matrices: Mapping, check: bool = True):
        self.net = net
        self.beta = alg.check_beta(beta)
        self.n = int(n)
        mats = {}
        for (u, v), m in edge_matrices.items():
            x, y = net.idx(u), net.idx(v)
            if net.conductance[x, y] == 0.0:
                raise ValueError(f"{net.vertices[x]}-{net.vertices[y]} is not an edge")
            m = np.asarray(m, dtype=float if beta != 2 else complex)
            if m.shape[:2] != (self.n, self.n):
                raise ValueError("connection matrix has the wrong size")
            if check and not is_unitary(m, beta):
                raise ValueError(f"U({net.vertices[x]},{net.vertices[y]}) is not in the unitary group")
            if x > y:
                x, y, m = y, x, alg.adjoint(m, beta)
            mats[(x, y)] = m
        for e in net.edges:
            mats.setdefault(e, alg.identity(self.n, beta))
        self._mats = mats
        self._fibers: dict[tuple[int, int], np.ndarray] = {}

    # construction -----------------------------------------------------------

    @classmethod
    def identity(cls, net: Network, beta: int, n: int) -> "Connection":
        return cls(net, beta, n, {})

    @classmethod
    def random(cls, net: Network, beta: int, n: int, rng: np.random.Generator) -> "Connection":
        return cls(net, beta, n, {e: sample_haar(beta, n, rng) for e in net.edges})

    @classmethod
    def from_dict(cls, net: Network, data: Mapping, n: int | None = None) -> "Connection":
        beta = int(data["beta"])
        mats = {}
        for e in data.get("edges", []):
            mats[(e["u"], e["v"])] = alg.parse_matrix_literal(e["matrix"], beta)
        if n is None:
            if not mats:
                raise ValueError("cannot infer the matrix size from an empty connection")
            n = next(iter(mats.values())).shape[0]
        return cls(net, beta, n, mats)

    @classmethod
    def load(cls, net: Network, path, n: int | None = None) -> "Connection":
        return cls.from_dict(net, json.loads(Path(path).read_text()), n)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "edges": [
                {"u": self.net.vertices[x], "v": self.net.vertices[y],
                 "matrix": alg.format_matrix_literal(m, self.beta)}
                for (x, y), m in sorted(self._mats.items())
            ],
        }

    # access -----------------------------------------------------------------

    def matrix(self, u, v) -> np.ndarray:
        x, y = self.net.idx(u), self.net.idx(v)
        if x < y and (x, y) in self._mats:
            return self._mats[(x, y)]
        if (y, x) in self._mats:
            return alg.adjoint(self._mats[(y, x)], self.beta)
        raise ValueError(f"{self.net.vertices[x]}-{self.net.vertices[y]} is not an edge")

    @property
    def fiber_dim(self) -> int:
        return 2 * self.n if self.beta == 4 else self.n

    def fiber(self, x: int, y: int) -> np.ndarray:
        key = (x, y)
        if key not in self._fibers:
            self._fibers[key] = fiber_matrix(self.matrix(x, y), self.beta)
        return self._fibers[key]

    def realified(self) -> "FiberConnection":
        """O(2n) connection acting on ``C^n`` seen as ``R^{2n}`` (complex case only)."""
        if self.beta != 2:
            raise ValueError("realification is defined for complex connections")
        return FiberConnection({e: realify(self.fiber(*e)) for e in self.net.edges}, 2 * self.n)


class FiberConnection:
    """Connection given directly by fiber matrices ``W(x, y)`` for ``x < y``."""

    def __init__(self, mats: Mapping[tuple[int, int], np.ndarray], fiber_dim: int):
        self._mats = dict(mats)
        self.fiber_dim = fiber_dim

    def fiber(self, x: int, y: int) -> np.ndarray:
        if (x, y) in self._mats:
            return self._mats[(x, y)]
        return self._mats[(y, x)].conj().T


# ---------------------------------------------------------------------------
# holonomies


def _skeleton(U: Connection, skeleton) -> list[int]:
    return [U.net.idx(v) for v in skeleton]


def holonomy(U: Connection, skeleton: Sequence) -> np.ndarray:
    """Ordered product ``U(y1,y2) U(y2,y3) ... U(y_{j-1},y_j)``."""
    skel = _skeleton(U, skeleton)
    out = alg.identity(U.n, U.beta)
    for a, b in zip(skel[:-1], skel[1:]):
        if a == b or U.net.conductance[a, b] == 0.0:
            raise ValueError(f"{U.net.vertices[a]} and {U.net.vertices[b]} are not adjacent")
        out = alg.matmul(out, U.matrix(a, b), U.beta)
    return out


def fiber_holonomy(conn, skeleton: Sequence[int]) -> np.ndarray:
    """Holonomy of any object exposing ``fiber``; used with tensor connections."""
    out = np.eye(conn.fiber_dim, dtype=complex)
    for a, b in zip(skeleton[:-1], skeleton[1:]):
        out = out @ conn.fiber(a, b)
    return out


def wilson_loop(U: Connection, loop: Sequence):
    """``Tr hol`` around a closed skeleton: real for O(n), complex for U(n), and the
    real trace for U(n, H)."""
    skel = _skeleton(U, loop)
    if len(skel) < 1 or skel[0] != skel[-1]:
        raise ValueError("Wilson loops need a closed skeleton")
    h = holonomy(U, skel)
    if U.beta == 1:
        return float(np.trace(h))
    if U.beta == 2:
        return complex(np.trace(h))
    return alg.re_trace(h, 4)


def reroot(loop: Sequence, shift: int) -> list:
    """Same closed loop started ``shift`` steps later."""
    body = list(loop[:-1])
    shift %= len(body)
    body = body[shift:] + body[:shift]
    return body + body[:1]


# ---------------------------------------------------------------------------
# gauge transformations


def random_gauge(net: Network, beta: int, n: int, rng: np.random.Generator) -> list[np.ndarray]:
    return [sample_haar(beta, n, rng) for _ in range(net.size)]


def compose_gauge(g1, g2, beta: int) -> list[np.ndarray]:
    return [alg.matmul(a, b, beta) for a, b in zip(g1, g2)]


def inverse_gauge(g, beta: int) -> list[np.ndarray]:
    return [alg.adjoint(a, beta) for a in g]


def apply_gauge(U: Connection, g: Sequence[np.ndarray]) -> Connection:
    """Edgewise ``g(x)^{-1} U(x,y) g(y)``."""
    if len(g) != U.net.size:
        raise ValueError("one gauge matrix per vertex is required")
    if any(np.shape(m)[:2] != (U.n, U.n) for m in g):
        raise ValueError("gauge matrices do not match the connection size")
    beta = U.beta
    mats = {}
    for x, y in U.net.edges:
        m = alg.matmul(alg.adjoint(g[x], beta), U.matrix(x, y), beta)
        mats[(x, y)] = alg.matmul(m, g[y], beta)
    return Connection(U.net, beta, U.n, mats, check=False)


def cycle_basis(net: Network) -> list[list[int]]:
    """Fundamental cycles of a BFS spanning tree rooted at vertex 0, as closed skeletons."""
    parent = {0: None}
    order = deque([0])
    tree = set()
    while order:
        x = order.popleft()
        for y in net.neighbors(x):
            y = int(y)
            if y not in parent:
                parent[y] = x
                tree.add((min(x, y), max(x, y)))
                order.append(y)

    def to_root(v):
        out = [v]
        while parent[out[-1]] is not None:
            out.append(parent[out[-1]])
        return out

    loops = []
    for x, y in net.edges:
        if (x, y) in tree:
            continue
        up = to_root(x)[::-1]
        down = to_root(y)
        loops.append(up + down)
    return loops


def is_flat(U: Connection, cycles=None, atol: float = 1e-9) -> bool:
    cycles = cycle_basis(U.net) if cycles is None else cycles
    ident = alg.identity(U.n, U.beta)
    return all(np.allclose(holonomy(U, c), ident, rtol=0.0, atol=atol) for c in cycles)


# ---------------------------------------------------------------------------
# tensor product connections

HOL_HOL = "hol*hol"
HOL_CONJ = "hol*conj"


class TensorConnection:
    """Edgewise ``W (x) W`` or ``W (x) conj(W)`` of the fiber matrices.

    The holonomy of this connection along a path is the tensor product of the
    holonomies, so its Green's function integrates products of two holonomy
    entries against the path measure.
    """

    def __init__(self, base, mode: str = HOL_HOL):
        if mode not in (HOL_HOL, HOL_CONJ):
            raise ValueError(f"unknown tensor mode {mode!r}")
        self.base = base
        self.mode = mode
        self.fiber_dim = base.fiber_dim ** 2

    def fiber(self, x: int, y: int) -> np.ndarray:
        w = self.base.fiber(x, y)
        return np.kron(w, w if self.mode == HOL_HOL else w.conj())


def tensor_connection(U, mode: str = HOL_HOL) -> TensorConnection:
    return TensorConnection(U, mode)
