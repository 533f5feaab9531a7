import numpy as np
import pytest

from ribbonflow import algebra as alg
from ribbonflow.expansion import one_matrix_moment
from ribbonflow.fields import (
    GaussianModel, complex_basis, conjugation_matrix, from_coordinates, gauge_field, hermitian_basis,
    quaternion_gaussian_moments_check, quaternion_moment_samples, quaternion_moment_targets,
    sample_gbe, sample_matrix_gff, sample_twisted_matrix_gff, to_coordinates,
)
from ribbonflow.gauge import Connection, apply_gauge, random_gauge
from ribbonflow.network import Network, green

from oracles import gbe_dim

BETAS = [1, 2, 4]


def _within(vals, target, sigmas=4.0):
    se = vals.std(ddof=1) / np.sqrt(len(vals))
    return abs(vals.mean() - target) <= sigmas * se + 1e-12


def _re_tr_power(samples, beta, k):
    c = alg.as_complex(samples, beta) if beta == 4 else samples
    p = np.linalg.matrix_power(c, k)
    return (0.5 if beta == 4 else 1.0) * np.real(np.trace(p, axis1=-2, axis2=-1))


@pytest.mark.parametrize("beta", BETAS)
def test_basis_is_orthonormal_and_hermitian(beta):
    for n in (1, 2, 3):
        b = hermitian_basis(beta, n)
        assert len(b) == gbe_dim(beta, n)
        gram = np.array([[alg.re_trace(alg.matmul(x, y, beta), beta) for y in b] for x in b])
        assert np.allclose(gram, np.eye(len(b)))
        assert all(alg.is_hermitian(x, beta) for x in b)
        cb = complex_basis(beta, n)
        assert np.allclose(cb, np.array([alg.as_complex(x, beta) for x in b]))


@pytest.mark.parametrize("beta", BETAS)
def test_coordinates_round_trip(beta):
    rng = np.random.default_rng(beta)
    c = rng.standard_normal(gbe_dim(beta, 3))
    m = from_coordinates(c, beta, 3)
    assert alg.is_hermitian(m, beta)
    assert np.allclose(to_coordinates(m, beta), c)


@pytest.mark.parametrize("beta", BETAS)
def test_gbe_moments(beta):
    rng = np.random.default_rng(10 + beta)
    n = 2
    m = sample_gbe(beta, n, rng, size=40_000)
    assert _within(_re_tr_power(m, beta, 2), gbe_dim(beta, n))
    entries = m.reshape(len(m), -1).real
    assert np.all(np.abs(entries.mean(axis=0)) <= 4 * entries.std(axis=0) / np.sqrt(len(m)) + 1e-12)
    if beta == 2:
        assert _within(_re_tr_power(m, beta, 4), 18)


@pytest.mark.parametrize("beta", BETAS)
def test_matrix_gff(beta):
    rng = np.random.default_rng(20 + beta)
    net = Network.random(4, rng)
    g = green(net).G
    model = GaussianModel.build(net, beta, 2)
    coords = model.sample_coordinates(rng, 30_000)
    for x in range(4):
        assert _within(coords[:, x, 0] ** 2, g[x, x])
    fields = sample_matrix_gff(model, rng, 30_000)
    scaled = fields[:, 1] / np.sqrt(g[1, 1])
    assert _within(_re_tr_power(scaled, beta, 2), gbe_dim(beta, 2))


def test_single_vertex_is_gbe():
    rng = np.random.default_rng(30)
    net = Network.from_edges(["x"], [], [1.0])
    for beta in BETAS:
        model = GaussianModel.build(net, beta, 3)
        assert np.allclose(model.covariance, np.eye(model.dim))
        fields = model.sample(rng, 20_000)[:, 0]
        assert _within(_re_tr_power(fields, beta, 4), float(one_matrix_moment((4,), beta)(3)))


@pytest.mark.parametrize("beta", BETAS)
def test_twisted_model(beta):
    rng = np.random.default_rng(40 + beta)
    net = Network.random(4, rng)
    n = 2
    plain = GaussianModel.build(net, beta, n)
    ident = GaussianModel.build(net, beta, n, Connection.identity(net, beta, n))
    assert np.allclose(plain.covariance, ident.covariance)
    with pytest.raises(ValueError):
        sample_matrix_gff(ident, rng)

    U = Connection.random(net, beta, n, rng)
    model = GaussianModel.build(net, beta, n, U)
    assert np.allclose(model.trace_covariance(), n * green(net).G, atol=1e-10)
    samples = sample_twisted_matrix_gff(model, rng, 20_000)
    tr = np.array([[alg.re_trace(m, beta) for m in s] for s in samples[:4000]])
    emp = np.cov(tr.T)
    assert np.max(np.abs(emp - n * green(net).G)) < 0.2 * np.max(n * green(net).G)

    # the field of a gauge-transformed connection is the gauge-transformed field
    g = random_gauge(net, beta, n, rng)
    moved = GaussianModel.build(net, beta, n, apply_gauge(U, g))
    d = model.dim
    r = np.zeros((4 * d, 4 * d))
    for x in range(4):
        r[x * d:(x + 1) * d, x * d:(x + 1) * d] = conjugation_matrix(alg.adjoint(g[x], beta), beta)
    assert np.allclose(r @ model.covariance @ r.T, moved.covariance, atol=1e-9)

    # and samples transform the same way
    base = model.sample(np.random.default_rng(0), 3)
    direct = gauge_field(base, g, beta)
    coords = model.sample_coordinates(np.random.default_rng(0), 3).reshape(3, -1) @ r.T
    assert np.allclose(direct, from_coordinates(coords.reshape(3, 4, d), beta, n))


def test_model_validation():
    rng = np.random.default_rng(50)
    net = Network.random(3, rng)
    with pytest.raises(ValueError):
        GaussianModel.build(net, 2, 2, Connection.random(net, 2, 3, rng))
    model = GaussianModel.build(net, 1, 2)
    shifted = model.shifted(np.ones(3))
    assert np.all(np.diag(shifted.covariance) < np.diag(model.covariance))
    assert model.coordinate_covariance([0, 2, 2]).shape == (3, model.dim, 3, model.dim)


def test_quaternion_gaussian_identities():
    rng = np.random.default_rng(60)
    one, i = np.array([1.0, 0, 0, 0]), np.array([0, 1.0, 0, 0])
    assert quaternion_moment_targets(one, one)["Re(xi q1 conj(xi) q2)"] == 4
    assert quaternion_moment_targets(one, i)["Re(xi q1) Re(xi q2)"] == 0
    xi = rng.standard_normal((100_000, 4))
    vals = quaternion_moment_samples(one, one, xi)["Re(xi q1 conj(xi) q2)"]
    assert _within(vals, 4.0)
    for _ in range(3):
        assert all(r["pass"] for r in quaternion_gaussian_moments_check(rng, 50_000))
