"""Quaternions and dense matrices over the reals, complexes and quaternions.

Matrices are plain numpy arrays. The field is identified by the Dyson index
``beta``:

* ``beta=1``: real ``(n, n)`` arrays,
* ``beta=2``: complex ``(n, n)`` arrays,
* ``beta=4``: real ``(n, n, 4)`` arrays holding the ``(r, i, j, k)``
  components of each quaternionic entry.

Most numerical work on quaternionic matrices goes through the ``2n x 2n``
complex embedding, which is a ring morphism that turns the quaternion adjoint
into the complex adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BETAS = (1, 2, 4)

HERMITIAN_RTOL = 1e-9


def check_beta(beta: int) -> int:
    if beta not in BETAS:
        raise ValueError(f"beta must be one of {BETAS}, got {beta!r}")
    return beta


@dataclass(frozen=True)
class Quaternion:
    r: float = 0.0
    i: float = 0.0
    j: float = 0.0
    k: float = 0.0

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        r, i, j, k = (float(v) for v in a)
        return cls(r, i, j, k)

    def to_array(self) -> np.ndarray:
        return np.array([self.r, self.i, self.j, self.k])

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return quat_mul(self, other)
        return Quaternion(self.r * other, self.i * other, self.j * other, self.k * other)

    def __rmul__(self, other):
        # only reached for real scalars, which commute with quaternions
        return self.__mul__(other)

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.r + other.r, self.i + other.i, self.j + other.j, self.k + other.k)

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.r - other.r, self.i - other.i, self.j - other.j, self.k - other.k)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.r, -self.i, -self.j, -self.k)

    def conj(self) -> "Quaternion":
        return Quaternion(self.r, -self.i, -self.j, -self.k)

    def abs2(self) -> float:
        return self.r**2 + self.i**2 + self.j**2 + self.k**2

    def __abs__(self) -> float:
        return float(np.sqrt(self.abs2()))

    def isclose(self, other: "Quaternion", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.to_array(), other.to_array(), rtol=0.0, atol=atol))


ONE = Quaternion(1.0)
I = Quaternion(0.0, 1.0)
J = Quaternion(0.0, 0.0, 1.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    """Hamilton product ``a * b``."""
    return Quaternion.from_array(qmul(a.to_array(), b.to_array()))


def qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise Hamilton product of arrays whose last axis has length 4."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ar, ai, aj, ak = np.moveaxis(a, -1, 0)
    br, bi, bj, bk = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            ar * br - ai * bi - aj * bj - ak * bk,
            ar * bi + ai * br + aj * bk - ak * bj,
            ar * bj - ai * bk + aj * br + ak * bi,
            ar * bk + ai * bj - aj * bi + ak * br,
        ],
        axis=-1,
    )


def qconj(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out[..., 1:] *= -1.0
    return out


# ---------------------------------------------------------------------------
# matrices over R, C, H


def qmatmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of quaternionic matrices of shapes ``(n, m, 4)`` and ``(m, p, 4)``."""
    prods = qmul(a[:, :, None, :], b[None, :, :, :])
    return prods.sum(axis=1)


def matmul(a: np.ndarray, b: np.ndarray, beta: int) -> np.ndarray:
    if check_beta(beta) == 4:
        return qmatmul(a, b)
    return a @ b


def adjoint(m: np.ndarray, beta: int) -> np.ndarray:
    """``M*``: transpose for real, conjugate transpose otherwise."""
    if check_beta(beta) == 4:
        return qconj(np.swapaxes(m, 0, 1))
    if beta == 1:
        return m.T.copy()
    return m.conj().T


def transpose(m: np.ndarray, beta: int) -> np.ndarray:
    """Plain transpose, without conjugation of the entries."""
    if check_beta(beta) == 4:
        return np.swapaxes(m, 0, 1).copy()
    return m.T.copy()


def trace(m: np.ndarray, beta: int):
    """``Tr M``; a quaternion array of length 4 when ``beta=4``."""
    if check_beta(beta) == 4:
        return np.einsum("iiq->q", m)
    return np.trace(m)


def re_trace(m: np.ndarray, beta: int) -> float:
    """Real part of the trace."""
    if check_beta(beta) == 4:
        return float(np.einsum("ii", m[:, :, 0]))
    return float(np.real(np.trace(m)))


def identity(n: int, beta: int) -> np.ndarray:
    if check_beta(beta) == 4:
        out = np.zeros((n, n, 4))
        out[np.arange(n), np.arange(n), 0] = 1.0
        return out
    return np.eye(n, dtype=float if beta == 1 else complex)


def random_matrix(n: int, beta: int, rng: np.random.Generator) -> np.ndarray:
    """Dense matrix with i.i.d. standard normal real components."""
    if check_beta(beta) == 4:
        return rng.standard_normal((n, n, 4))
    if beta == 1:
        return rng.standard_normal((n, n))
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


# ---------------------------------------------------------------------------
# complex embedding


def embed_complex(m: np.ndarray) -> np.ndarray:
    """Replace each quaternion entry ``q`` of an ``(n, n, 4)`` array by the block

    ``[[r + i*1j, -j - k*1j], [j - k*1j, r - i*1j]]``.

    A single quaternion (shape ``(4,)``) maps to a ``2 x 2`` matrix; leading batch
    axes are kept.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim == 1:
        return embed_complex(m.reshape(1, 1, 4))
    *batch, n, p, _ = m.shape
    r, i, j, k = np.moveaxis(m, -1, 0)
    out = np.empty((*batch, n, 2, p, 2), dtype=complex)
    out[..., :, 0, :, 0] = r + 1j * i
    out[..., :, 0, :, 1] = -j - 1j * k
    out[..., :, 1, :, 0] = j - 1j * k
    out[..., :, 1, :, 1] = r - 1j * i
    return out.reshape(*batch, 2 * n, 2 * p)


def unembed_complex(c: np.ndarray) -> np.ndarray:
    """Inverse of :func:`embed_complex`; only reads the first column of each block."""
    c = np.asarray(c)
    n, p = c.shape[0] // 2, c.shape[1] // 2
    blocks = c.reshape(n, 2, p, 2)
    a = blocks[:, 0, :, 0]
    low = blocks[:, 1, :, 0]
    return np.stack([a.real, a.imag, low.real, -low.imag], axis=-1)


def as_complex(m: np.ndarray, beta: int) -> np.ndarray:
    """Matrix as a complex array: unchanged for ``beta<4``, embedded for ``beta=4``."""
    if check_beta(beta) == 4:
        return embed_complex(m)
    return np.asarray(m, dtype=complex)


def field_dim(beta: int) -> int:
    """Real dimension of the scalar field: 1, 2 or 4."""
    return check_beta(beta)


def hermitian_dim(beta: int, n: int) -> int:
    """Real dimension of the space of ``n x n`` Hermitian matrices over the field."""
    return n + check_beta(beta) * n * (n - 1) // 2


# ---------------------------------------------------------------------------
# Hermitian spectra


def _max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def is_hermitian(m: np.ndarray, beta: int, rtol: float = HERMITIAN_RTOL) -> bool:
    gap = _max_abs(m - adjoint(m, beta))
    return gap <= rtol * (1.0 + _max_abs(m))


def hermitian_eigenvalues(m: np.ndarray, beta: int, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, sorted in decreasing order.

    For ``beta=4`` the spectrum of the complex embedding is computed and each
    (doubly degenerate) eigenvalue is kept once.
    """
    if not is_hermitian(m, beta, rtol):
        raise ValueError("matrix is not Hermitian within tolerance")
    c = as_complex(m, beta)
    c = 0.5 * (c + c.conj().T)
    ev = np.linalg.eigvalsh(c)[::-1]
    if beta == 4:
        ev = 0.5 * (ev[0::2] + ev[1::2])
    return ev


# ---------------------------------------------------------------------------
# matrix literals: number, [re, im], [r, i, j, k]


def parse_matrix_literal(rows, beta: int) -> np.ndarray:
    """Matrix from nested lists. Real entries are numbers, complex entries
    ``[re, im]``, quaternion entries ``[r, i, j, k]``; plain numbers are
    accepted for any field."""
    check_beta(beta)
    n = len(rows)
    if any(len(row) != n for row in rows):
        raise ValueError("matrix literal must be square")
    width = {1: 1, 2: 2, 4: 4}[beta]
    comps = np.zeros((n, n, width))
    for a, row in enumerate(rows):
        for b, entry in enumerate(row):
            if isinstance(entry, (int, float)):
                comps[a, b, 0] = entry
                continue
            vals = [float(v) for v in entry]
            if len(vals) > width:
                raise ValueError(f"entry {entry!r} has too many components for beta={beta}")
            comps[a, b, : len(vals)] = vals
    if beta == 1:
        return comps[:, :, 0]
    if beta == 2:
        return comps[:, :, 0] + 1j * comps[:, :, 1]
    return comps


def format_matrix_literal(m: np.ndarray, beta: int) -> list:
    check_beta(beta)
    if beta == 1:
        return [[float(v) for v in row] for row in m]
    if beta == 2:
        return [[[float(v.real), float(v.imag)] for v in row] for row in m]
    return [[[float(c) for c in entry] for entry in row] for row in m]
