"""Gaussian moments of trace products by direct Wick expansion.

Nothing here uses ribbon graphs: every factor ``Phi(x_k)`` is written as a
real-linear combination of basis matrices, and the expectation of the product
of traces is a sum over pair partitions of the factors of contracted
second-moment tensors. This is the referee for the topological expansion.
"""

from __future__ import annotations

import string
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import algebra as alg
from .fields import complex_basis

MAX_FACTORS = 8
MAX_N = 4


def pair_partitions(items: Sequence) -> Iterator[list[tuple]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i, other in enumerate(rest):
        for tail in pair_partitions(rest[:i] + rest[i + 1:]):
            yield [(first, other)] + tail


def isserlis(cov: np.ndarray, idx: Sequence[int]):
    """``E[prod_k X_{idx[k]}]`` for a centered Gaussian vector with covariance ``cov``."""
    if len(idx) % 2:
        return 0.0
    total = 0.0
    for pp in pair_partitions(list(range(len(idx)))):
        total += np.prod([cov[idx[a], idx[b]] for a, b in pp])
    return total


def _blocks(parts: Sequence[int]):
    out, s = [], 0
    for p in parts:
        out.append(list(range(s, s + p)))
        s += p
    return out


def _coef(A, k: int, k2: int, n: int, beta: int) -> np.ndarray:
    """Fiber form of ``A(k, k2)`` (1-based labels); identity when absent."""
    dim = 2 * n if beta == 4 else n
    if A is None or (k, k2) not in A:
        return np.eye(dim, dtype=complex)
    return alg.as_complex(np.asarray(A[(k, k2)]), beta)


def wick_oracle(nu: Sequence[int], beta: int, n: int, cov: np.ndarray,
                A: Mapping | None = None, allow_large: bool = False):
    """``< prod_l Tr Pi_l(Phi, A) >`` (real trace for quaternions).

    ``cov[k, a, l, b]`` is the covariance of coordinate ``a`` of the ``k``-th factor
    with coordinate ``b`` of the ``l``-th, in the orthonormal Hermitian basis.
    """
    parts = [int(p) for p in nu]
    size = sum(parts)
    if (size > MAX_FACTORS or n > MAX_N) and not allow_large:
        raise ValueError(f"Wick oracle limited to |nu| <= {MAX_FACTORS} and n <= {MAX_N}")
    if size % 2:
        return 0.0
    cb = complex_basis(beta, n)
    letters = iter(string.ascii_letters)
    row = [next(letters) for _ in range(size)]
    col = [next(letters) for _ in range(size)]

    coef_ops, coef_subs = [], []
    for block in _blocks(parts):
        for pos, k in enumerate(block):
            k2 = block[(pos + 1) % len(block)]
            coef_ops.append(_coef(A, k + 1, k2 + 1, n, beta))
            coef_subs.append(col[k] + row[k2])

    total = 0.0 + 0.0j
    for pp in pair_partitions(list(range(size))):
        ops, subs = list(coef_ops), list(coef_subs)
        for k, l in pp:
            kt = np.einsum("ab,aij,bmn->ijmn", cov[k, :, l, :], cb, cb)
            ops.append(kt)
            subs.append(row[k] + col[k] + row[l] + col[l])
        expr = ",".join(subs) + "->"
        total += np.einsum(expr, *ops, optimize="greedy")
    if beta == 4:
        total *= 0.5 ** len(parts)
    if beta == 4:
        return float(total.real)
    if beta == 2 or any(np.iscomplexobj(m) and np.any(np.imag(m)) for m in (A or {}).values()):
        return complex(total)
    return float(total.real)
