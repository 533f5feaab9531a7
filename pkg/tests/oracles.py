"""Independent reference computations used by the tests.

None of these go through the code paths they referee: Green's functions are
summed over discrete paths, border counts come from a union-find on sides or
from the permutation model of maps, and Gaussian expectations come from 1D or 2D
quadrature.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate


# ---------------------------------------------------------------------------
# Green's functions as truncated sums over nearest-neighbour paths


def path_sum_green(net, fibers=None, d=1, t=None, steps=400):
    """``sum_{k <= steps} (P^W)^k D^{-1}`` where ``P^W(x,y) = C(x,y) W(x,y) / lambda(x)``.

    Returns ``(matrix, tail)``; ``tail`` bounds every entry of the remainder using
    the scalar chain, since ``|hol| <= 1`` entrywise for unitary ``W``.
    """
    nv = net.size
    t = np.zeros(nv) if t is None else np.asarray(t, dtype=float)
    lam = net.kappa + t + net.conductance.sum(axis=1)
    p = np.zeros((nv * d, nv * d), dtype=complex)
    for x in range(nv):
        for y in range(nv):
            c = net.conductance[x, y]
            if c == 0.0:
                continue
            w = np.eye(d) if fibers is None else fibers(x, y)
            p[x * d:(x + 1) * d, y * d:(y + 1) * d] = c / lam[x] * w
    dinv = np.kron(np.diag(1.0 / lam), np.eye(d))
    total = np.zeros_like(p)
    term = dinv.astype(complex)
    for _ in range(steps + 1):
        total += term
        term = p @ term
    # the scalar chain dominates every entry of the holonomy sum, so its exact
    # remainder bounds the truncation error
    ps = net.conductance / lam[:, None]
    exact = np.linalg.inv(np.eye(nv) - ps) / lam[None, :]
    partial = np.zeros((nv, nv))
    term_s = np.diag(1.0 / lam)
    for _ in range(steps + 1):
        partial += term_s
        term_s = ps @ term_s
    tail = float(np.max(exact - partial))
    return total, tail


# ---------------------------------------------------------------------------
# border components


def faces_by_permutation(nu, pairs):
    """Face count of a straight ribbon pairing as the cycle count of ``sigma o tau``,
    with ``sigma`` the cyclic order around vertices and ``tau`` the pairing."""
    size = sum(nu)
    sigma = {}
    s = 1
    for p in nu:
        for i in range(p):
            sigma[s + i] = s + (i + 1) % p
        s += p
    tau = {}
    for a, b in pairs:
        tau[a], tau[b] = b, a
    seen, faces = set(), 0
    for k in range(1, size + 1):
        if k in seen:
            continue
        faces += 1
        while k not in seen:
            seen.add(k)
            k = sigma[tau[k]]
    return faces


def faces_by_union_find(nu, pairs, twist):
    """Face count for straight or twisted pairings: every half-edge has two sides,
    ribbon corners and gluings join sides, and faces are the connected components."""
    size = sum(nu)
    parent = list(range(2 * size))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    def union(a, b):
        parent[find(a)] = find(b)

    def left(k):
        return 2 * (k - 1)

    def right(k):
        return 2 * (k - 1) + 1

    s = 1
    for p in nu:
        for i in range(p):
            k, k2 = s + i, s + (i + 1) % p
            union(right(k), left(k2))
        s += p
    for (a, b), tw in zip(pairs, twist):
        if tw:
            union(left(a), left(b))
            union(right(a), right(b))
        else:
            union(left(a), right(b))
            union(right(a), left(b))
    return len({find(v) for v in range(2 * size)})


# ---------------------------------------------------------------------------
# Gaussian integrals by quadrature


def single_vertex_moment(power, kappa, t):
    """``E[phi^power exp(-t phi^2 / 2)]`` for ``phi ~ N(0, 1/kappa)``."""
    dens = lambda u: math.sqrt(kappa / (2 * math.pi)) * math.exp(-kappa * u * u / 2)
    val, _ = integrate.quad(lambda u: u ** power * math.exp(-t * u * u / 2) * dens(u), -np.inf, np.inf)
    return val


def two_vertex_moment(q, t, fx, fy):
    """``E[fx(phi_0) fy(phi_1) exp(-<t, phi^2>/2)]`` for a 2D Gaussian with precision ``q``."""
    q = np.asarray(q, dtype=float)
    norm = math.sqrt(np.linalg.det(q)) / (2 * math.pi)

    def integrand(b, a):
        v = np.array([a, b])
        return fx(a) * fy(b) * math.exp(-0.5 * v @ q @ v - 0.5 * (t[0] * a * a + t[1] * b * b)) * norm

    val, _ = integrate.dblquad(integrand, -12, 12, -12, 12, epsabs=1e-11, epsrel=1e-11)
    return val


def gbe_dim(beta, n):
    return n + beta * n * (n - 1) // 2
