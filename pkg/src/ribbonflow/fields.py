"""Gaussian Hermitian matrices, matrix valued free fields and their twisted versions.

Fields are represented by real coordinates in an orthonormal basis
``E_1, ..., E_D`` of the Hermitian matrices (inner product ``Re Tr(M M')``).
Coordinate ``a`` at vertex ``x`` has flat index ``x * D + a``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import algebra as alg
from .gauge import Connection
from .network import Network

_UNITS = {
    1: [np.array([1.0, 0, 0, 0])],
    2: [np.array([1.0, 0, 0, 0]), np.array([0, 1.0, 0, 0])],
    4: [np.eye(4)[u] for u in range(4)],
}


@lru_cache(maxsize=None)
def _basis(beta: int, n: int) -> np.ndarray:
    mats = []
    for i in range(n):
        m = np.zeros((n, n, 4))
        m[i, i, 0] = 1.0
        mats.append(m)
    for i in range(n):
        for j in range(i + 1, n):
            for u in _UNITS[beta]:
                m = np.zeros((n, n, 4))
                m[i, j] = u / np.sqrt(2.0)
                m[j, i] = alg.qconj(u) / np.sqrt(2.0)
                mats.append(m)
    quat = np.array(mats)
    if beta == 4:
        out = quat
    elif beta == 1:
        out = quat[..., 0]
    else:
        out = quat[..., 0] + 1j * quat[..., 1]
    out.setflags(write=False)
    return out


def hermitian_basis(beta: int, n: int) -> np.ndarray:
    """Orthonormal basis of the Hermitian ``n x n`` matrices, stacked on axis 0."""
    return _basis(alg.check_beta(beta), int(n))


@lru_cache(maxsize=None)
def _complex_basis(beta: int, n: int) -> np.ndarray:
    b = hermitian_basis(beta, n)
    if beta == 4:
        out = np.array([alg.embed_complex(m) for m in b])
    else:
        out = b.astype(complex)
    out.setflags(write=False)
    return out


def complex_basis(beta: int, n: int) -> np.ndarray:
    """Basis matrices as complex arrays (complex embedding for quaternions)."""
    return _complex_basis(alg.check_beta(beta), int(n))


def from_coordinates(coords: np.ndarray, beta: int, n: int) -> np.ndarray:
    """Matrices from coordinates of shape ``(..., D)``."""
    b = hermitian_basis(beta, n)
    return np.tensordot(coords, b, axes=([-1], [0]))


def to_coordinates(m: np.ndarray, beta: int) -> np.ndarray:
    n = m.shape[0]
    b = hermitian_basis(beta, n)
    if beta == 4:
        return np.einsum("aijq,ijq->a", b, m)
    return np.real(np.einsum("aij,ij->a", b.conj(), m))


def sample_gbe(beta: int, n: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """G(O/U/S)E matrix with density proportional to ``exp(-Tr(M^2)/2)``."""
    d = alg.hermitian_dim(beta, n)
    shape = (d,) if size is None else (size, d)
    return from_coordinates(rng.standard_normal(shape), beta, n)


def conjugation_matrix(u: np.ndarray, beta: int) -> np.ndarray:
    """Matrix of ``M -> U M U*`` in the orthonormal basis: ``R[a, b] = Re Tr(E_a U E_b U*)``."""
    n = u.shape[0]
    cb = complex_basis(beta, n)
    w = gauge_fiber(u, beta)
    moved = np.einsum("ij,bjk,lk->bil", w, cb, w.conj())
    scale = 0.5 if beta == 4 else 1.0
    return scale * np.real(np.einsum("aij,bji->ab", cb, moved))


def gauge_fiber(u: np.ndarray, beta: int) -> np.ndarray:
    return alg.as_complex(u, beta)


@dataclass(frozen=True)
class GaussianModel:
    """Matrix valued free field on a network, optionally twisted by a connection,
    with killing ``kappa + shift``."""

    net: Network
    beta: int
    n: int
    connection: Connection | None
    shift: np.ndarray
    precision: np.ndarray
    covariance: np.ndarray
    chol: np.ndarray
    logdet_cov: float

    @classmethod
    def build(cls, net: Network, beta: int, n: int, connection: Connection | None = None,
              shift=None) -> "GaussianModel":
        alg.check_beta(beta)
        if connection is not None and (connection.beta != beta or connection.n != n):
            raise ValueError("connection does not match (beta, n)")
        t = net.shift_vector(shift)
        d = alg.hermitian_dim(beta, n)
        lam = net.rates(t)
        q = np.kron(np.diag(lam), np.eye(d))
        for x, y in net.edges:
            c = net.conductance[x, y]
            if connection is None:
                r = np.eye(d)
            else:
                r = conjugation_matrix(connection.matrix(x, y), beta)
            q[x * d:(x + 1) * d, y * d:(y + 1) * d] = -c * r
            q[y * d:(y + 1) * d, x * d:(x + 1) * d] = -c * r.T
        try:
            chol = np.linalg.cholesky(q)
        except np.linalg.LinAlgError:
            raise ValueError("field precision is not positive definite") from None
        cov = np.linalg.inv(q)
        cov = 0.5 * (cov + cov.T)
        logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
        return cls(net, beta, n, connection, t, q, cov, chol, -logdet)

    @property
    def dim(self) -> int:
        return alg.hermitian_dim(self.beta, self.n)

    @property
    def log_normalizer(self) -> float:
        """``log Z = 0.5 * log det(2 pi Cov)``."""
        return 0.5 * (self.covariance.shape[0] * np.log(2 * np.pi) + self.logdet_cov)

    def shifted(self, shift) -> "GaussianModel":
        return GaussianModel.build(self.net, self.beta, self.n, self.connection, shift)

    def coordinate_covariance(self, xs) -> np.ndarray:
        """``cov[k, a, l, b]`` between coordinate ``a`` of ``Phi(x_k)`` and ``b`` of ``Phi(x_l)``."""
        d = self.dim
        idx = np.array([self.net.idx(x) for x in xs])
        flat = (idx[:, None] * d + np.arange(d)[None, :]).ravel()
        k = len(idx)
        return self.covariance[np.ix_(flat, flat)].reshape(k, d, k, d)

    def sample_coordinates(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        """Coordinates of shape ``(size, |V|, D)``, drawn by solving against the
        Cholesky factor of the precision."""
        z = rng.standard_normal((self.precision.shape[0], size))
        x = np.linalg.solve(self.chol.T, z)
        return x.T.reshape(size, self.net.size, self.dim)

    def sample(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        """Field samples of shape ``(size, |V|, n, n[, 4])``."""
        return from_coordinates(self.sample_coordinates(rng, size), self.beta, self.n)

    def trace_covariance(self) -> np.ndarray:
        """Exact ``Cov(Tr Phi(x), Tr Phi(y))``."""
        tau = np.array([alg.re_trace(m, self.beta) for m in hermitian_basis(self.beta, self.n)])
        nv, d = self.net.size, self.dim
        c = self.covariance.reshape(nv, d, nv, d)
        return np.einsum("a,xayb,b->xy", tau, c, tau)


def sample_matrix_gff(model: GaussianModel, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    if model.connection is not None:
        raise ValueError("model is twisted; use sample_twisted_matrix_gff")
    return model.sample(rng, size)


def sample_twisted_matrix_gff(model: GaussianModel, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    return model.sample(rng, size)


def gauge_field(samples: np.ndarray, g, beta: int) -> np.ndarray:
    """``x -> g(x)^{-1} Phi(x) g(x)`` applied to samples of shape ``(size, |V|, ...)``."""
    out = np.empty_like(samples)
    for s in range(samples.shape[0]):
        for x, gx in enumerate(g):
            m = alg.matmul(alg.adjoint(gx, beta), samples[s, x], beta)
            out[s, x] = alg.matmul(m, gx, beta)
    return out


# ---------------------------------------------------------------------------
# quaternionic Gaussian moments


def quaternion_moment_targets(q1: np.ndarray, q2: np.ndarray) -> dict[str, float]:
    re = lambda q: float(q[0])
    return {
        "Re(xi q1 conj(xi) q2)": 4.0 * re(q1) * re(q2),
        "Re(xi q1 xi q2)": -2.0 * re(alg.qmul(q1, alg.qconj(q2))),
        "Re(xi q1) Re(conj(xi) q2)": re(alg.qmul(q1, q2)),
        "Re(xi q1) Re(xi q2)": re(alg.qmul(q1, alg.qconj(q2))),
    }


def quaternion_moment_samples(q1: np.ndarray, q2: np.ndarray, xi: np.ndarray) -> dict[str, np.ndarray]:
    """Per-sample values of the four products for standard quaternion Gaussians ``xi``."""
    xbar = alg.qconj(xi)
    a = alg.qmul(xi, q1)
    return {
        "Re(xi q1 conj(xi) q2)": alg.qmul(alg.qmul(a, xbar), q2)[:, 0],
        "Re(xi q1 xi q2)": alg.qmul(alg.qmul(a, xi), q2)[:, 0],
        "Re(xi q1) Re(conj(xi) q2)": a[:, 0] * alg.qmul(xbar, q2)[:, 0],
        "Re(xi q1) Re(xi q2)": a[:, 0] * alg.qmul(xi, q2)[:, 0],
    }


def quaternion_gaussian_moments_check(rng: np.random.Generator, samples: int = 100_000,
                                      q1=None, q2=None, sigmas: float = 4.0) -> list[dict]:
    q1 = rng.standard_normal(4) if q1 is None else np.asarray(q1, dtype=float)
    q2 = rng.standard_normal(4) if q2 is None else np.asarray(q2, dtype=float)
    xi = rng.standard_normal((samples, 4))
    vals = quaternion_moment_samples(q1, q2, xi)
    out = []
    for name, target in quaternion_moment_targets(q1, q2).items():
        v = vals[name]
        est = float(v.mean())
        se = float(v.std(ddof=1) / np.sqrt(samples))
        out.append({"moment": name, "estimate": est, "exact": target, "stderr": se,
                    "pass": abs(est - target) <= sigmas * se + 1e-12})
    return out
