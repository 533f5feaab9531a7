import json

import numpy as np
import pytest

from ribbonflow import algebra as alg
from ribbonflow.gauge import (
    Connection, apply_gauge, compose_gauge, cycle_basis, fiber_holonomy, holonomy, inverse_gauge,
    is_flat, is_unitary, random_gauge, reroot, sample_haar, tensor_connection, wilson_loop,
)
from ribbonflow.network import Network

BETAS = [1, 2, 4]


def triangle():
    return Network.from_edges(["a", "b", "c"], [("a", "b", 1.0), ("b", "c", 1.0), ("c", "a", 1.0)], [1, 0, 0])


def random_walk(net, rng, start, length):
    walk = [start]
    for _ in range(length):
        walk.append(int(rng.choice(net.neighbors(walk[-1]))))
    return walk


@pytest.mark.parametrize("beta", BETAS)
def test_haar_is_unitary(beta):
    rng = np.random.default_rng(beta)
    for n in (1, 2, 4):
        u = sample_haar(beta, n, rng)
        assert np.allclose(alg.matmul(u, alg.adjoint(u, beta), beta), alg.identity(n, beta), atol=1e-12)
        if beta == 1:
            assert abs(abs(np.linalg.det(u)) - 1) < 1e-9


@pytest.mark.parametrize("beta", BETAS)
def test_haar_second_moment(beta):
    rng = np.random.default_rng(100 + beta)
    n, draws = 3, 10_000
    vals = np.empty(draws)
    for s in range(draws):
        u = sample_haar(beta, n, rng)
        vals[s] = np.sum(np.abs(u[0, 0]) ** 2)
    se = vals.std(ddof=1) / np.sqrt(draws)
    assert abs(vals.mean() - 1 / n) <= 4 * se


def test_haar_n1_real_is_sign():
    rng = np.random.default_rng(0)
    signs = [float(sample_haar(1, 1, rng)[0, 0]) for _ in range(2000)]
    assert set(np.round(signs, 12)) == {-1.0, 1.0}
    assert abs(np.mean(signs)) < 4 / np.sqrt(2000)


@pytest.mark.parametrize("beta", BETAS)
def test_holonomy_properties(beta):
    rng = np.random.default_rng(10 + beta)
    net = Network.random(5, rng)
    U = Connection.random(net, beta, 3, rng)
    ident = Connection.identity(net, beta, 3)
    walk = random_walk(net, rng, 0, 6)
    more = random_walk(net, rng, walk[-1], 4)
    h = holonomy(U, walk)
    assert np.allclose(holonomy(ident, walk), alg.identity(3, beta))
    assert np.allclose(holonomy(U, walk[::-1]), alg.adjoint(h, beta))
    assert np.allclose(holonomy(U, walk + more[1:]), alg.matmul(h, holonomy(U, more), beta))
    assert np.allclose(fiber_holonomy(U, walk), alg.as_complex(h, beta))
    with pytest.raises(ValueError):
        holonomy(U, [0, 0])


@pytest.mark.parametrize("beta", BETAS)
def test_wilson_loops(beta):
    rng = np.random.default_rng(20 + beta)
    net = triangle()
    U = Connection.random(net, beta, 2, rng)
    loop = [0, 1, 2, 0, 2, 1, 0, 1, 0]
    assert np.isclose(wilson_loop(Connection.identity(net, beta, 2), loop), 2)
    w = wilson_loop(U, loop)
    for s in range(1, len(loop) - 1):
        assert np.isclose(wilson_loop(U, reroot(loop, s)), w)
    g = random_gauge(net, beta, 2, rng)
    assert np.isclose(wilson_loop(apply_gauge(U, g), loop), w)
    with pytest.raises(ValueError):
        wilson_loop(U, [0, 1, 2])


@pytest.mark.parametrize("beta", BETAS)
def test_gauge_transformations(beta):
    rng = np.random.default_rng(30 + beta)
    net = Network.random(4, rng)
    n = 2
    U = Connection.random(net, beta, n, rng)
    ident = [alg.identity(n, beta) for _ in range(net.size)]
    same = apply_gauge(U, ident)
    assert all(np.allclose(same.matrix(*e), U.matrix(*e)) for e in net.edges)

    g1, g2 = random_gauge(net, beta, n, rng), random_gauge(net, beta, n, rng)
    twice = apply_gauge(apply_gauge(U, g1), g2)
    once = apply_gauge(U, compose_gauge(g1, g2, beta))
    assert all(np.allclose(twice.matrix(*e), once.matrix(*e)) for e in net.edges)
    back = apply_gauge(apply_gauge(U, g1), inverse_gauge(g1, beta))
    assert all(np.allclose(back.matrix(*e), U.matrix(*e)) for e in net.edges)

    flat = apply_gauge(Connection.identity(net, beta, n), g1)
    walk = random_walk(net, rng, 0, 7)
    want = alg.matmul(alg.adjoint(g1[walk[0]], beta), g1[walk[-1]], beta)
    assert np.allclose(holonomy(flat, walk), want)
    assert is_flat(flat) and is_flat(Connection.identity(net, beta, n))
    with pytest.raises(ValueError):
        apply_gauge(U, g1[:-1])


def test_non_flat_triangle():
    rng = np.random.default_rng(40)
    net = triangle()
    U = Connection.random(net, 2, 2, rng)
    assert cycle_basis(net) and not is_flat(U)
    cyc = cycle_basis(net)[0]
    assert not np.allclose(holonomy(U, cyc), np.eye(2))


def test_cycle_basis_size():
    rng = np.random.default_rng(41)
    for nv in (1, 2, 5, 7):
        net = Network.random(nv, rng) if nv > 1 else Network.from_edges(["a"], [], [1])
        loops = cycle_basis(net)
        assert len(loops) == len(net.edges) - nv + 1
        assert all(c[0] == c[-1] for c in loops)


def test_tensor_connection():
    rng = np.random.default_rng(50)
    net = Network.random(4, rng)
    U = Connection.random(net, 2, 2, rng)
    ident = tensor_connection(Connection.identity(net, 2, 2))
    assert np.allclose(ident.fiber(0, net.neighbors(0)[0]), np.eye(4))
    tc = tensor_connection(U, "hol*conj")
    x, y = net.edges[0]
    w, big = U.fiber(x, y), tc.fiber(x, y)
    for i, k, j, l in np.ndindex(2, 2, 2, 2):
        assert np.isclose(big[2 * i + k, 2 * j + l], w[i, j] * np.conj(w[k, l]))
    walk = random_walk(net, rng, 0, 5)
    h = fiber_holonomy(U, walk)
    assert np.allclose(fiber_holonomy(tc, walk), np.kron(h, h.conj()))
    assert np.allclose(fiber_holonomy(tensor_connection(U), walk), np.kron(h, h))
    with pytest.raises(ValueError):
        tensor_connection(U, "bogus")


@pytest.mark.parametrize("beta", BETAS)
def test_connection_io(tmp_path, beta):
    rng = np.random.default_rng(60 + beta)
    net = Network.random(4, rng)
    U = Connection.random(net, beta, 2, rng)
    path = tmp_path / "conn.json"
    path.write_text(json.dumps(U.to_dict()))
    again = Connection.load(net, path)
    assert all(np.allclose(again.matrix(*e), U.matrix(*e)) for e in net.edges)
    x, y = net.edges[0]
    assert np.allclose(U.matrix(y, x), alg.adjoint(U.matrix(x, y), beta))


def test_connection_validation():
    net = triangle()
    with pytest.raises(ValueError, match="unitary"):
        Connection(net, 1, 2, {("a", "b"): np.array([[2.0, 0], [0, 1]])})
    with pytest.raises(ValueError):
        Connection(Network.from_edges(["a", "b", "c"], [("a", "b", 1), ("b", "c", 1)], [1, 0, 0]),
                   1, 1, {("a", "c"): np.eye(1)})
    assert is_unitary(np.eye(2), 1)


def test_realified():
    rng = np.random.default_rng(70)
    net = triangle()
    U = Connection.random(net, 2, 2, rng)
    R = U.realified()
    x, y = net.edges[0]
    r = R.fiber(x, y)
    assert np.allclose(r.T @ r, np.eye(4))
    with pytest.raises(ValueError):
        Connection.random(net, 1, 2, rng).realified()
