from pathlib import Path

import numpy as np
import pytest

from ribbonflow import algebra as alg
from ribbonflow.expansion import expansion_terms
from ribbonflow.gauge import Connection
from ribbonflow.harness import (
    Experiment, lhs_exact, loop_pattern, path_numbering, random_coefficients, rhs_exact, same_loop,
    flat_gauge_experiment, verify_iso, verify_vector_iso, wilson_decomposition,
)
from ribbonflow.network import Network, green

from oracles import single_vertex_moment, two_vertex_moment

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def single(kappa=1.0):
    return Network.from_edges(["x"], [], [kappa])


def pair():
    return Network.from_edges(["a", "b"], [("a", "b", 0.8)], [1.0, 0.5])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_single_vertex_second_moment(n):
    exp = Experiment(single(), 2, n, (2,), (0, 0))
    assert np.isclose(lhs_exact(exp), n**2)
    assert np.isclose(rhs_exact(exp), n**2)


def test_odd_half_edges_rejected():
    with pytest.raises(ValueError, match="odd"):
        Experiment(single(), 1, 1, (3,), (0, 0, 0))
    with pytest.raises(ValueError):
        Experiment(single(), 1, 1, (2,), (0,))
    with pytest.raises(ValueError):
        Experiment(single(), 1, 1, (2,), (0, 0), mode="fast")


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_trace_two_point_function(beta):
    net = Network.random(4, np.random.default_rng(beta))
    n = 3
    exp = Experiment(net, beta, n, (1, 1), (0, 2))
    assert np.isclose(lhs_exact(exp), n * green(net).G[0, 2])
    assert verify_iso(exp)["pass"]


@pytest.mark.parametrize("power", [2, 4, 6])
@pytest.mark.parametrize("t", [0.0, 0.4, 1.7])
def test_exponential_reduction_single_vertex(power, t):
    kappa = 1.3
    exp = Experiment(single(kappa), 1, 1, (power,), (0,) * power, shift=[t])
    want = single_vertex_moment(power, kappa, t)
    assert np.isclose(lhs_exact(exp), want, rtol=1e-9)
    assert np.isclose(rhs_exact(exp), want, rtol=1e-9)


@pytest.mark.parametrize("xy", [("a", "a"), ("a", "b"), ("b", "b")])
def test_exponential_reduction_two_vertices(xy):
    net = pair()
    t = np.array([0.3, 0.9])
    q = np.linalg.inv(green(net).G)
    want = two_vertex_moment(q, t, (lambda u: u) if xy[0] == "a" else (lambda u: 1.0),
                             (lambda u: u) if xy[1] == "b" else (lambda u: 1.0))
    if xy[0] == xy[1]:
        f = (lambda u: u * u)
        want = two_vertex_moment(q, t, f, lambda u: 1.0) if xy[0] == "a" else \
            two_vertex_moment(q, t, lambda u: 1.0, f)
    rep = verify_vector_iso(net, 1, 1, list(xy), [0, 0], shift=t)
    assert rep["pass"]
    assert np.isclose(rep["lhs"], want, rtol=1e-7)


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_identity_connection_is_untwisted(beta):
    rng = np.random.default_rng(10 + beta)
    net = Network.random(3, rng)
    nu = (2, 2)
    A = random_coefficients(Experiment(net, beta, 2, nu, (0, 1, 2, 0)).nu, beta, 2, rng)
    t = rng.uniform(0.1, 1, 3)
    plain = Experiment(net, beta, 2, nu, (0, 1, 2, 0), A, None, t)
    ident = Experiment(net, beta, 2, nu, (0, 1, 2, 0), A, Connection.identity(net, beta, 2), t)
    assert np.isclose(rhs_exact(plain), rhs_exact(ident))
    assert np.isclose(lhs_exact(plain), lhs_exact(ident))
    assert np.isclose(rhs_exact(plain), rhs_exact(plain, force_tensor=True))


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_flat_connection_is_a_gauge_rotation(beta):
    rng = np.random.default_rng(20 + beta)
    net = Network.random(4, rng)
    base = Experiment(net, beta, 2, (3, 1), (0, 3, 1, 2), shift=rng.uniform(0, 1, 4))
    twisted, plain = flat_gauge_experiment(base, rng)
    assert np.isclose(lhs_exact(twisted), lhs_exact(plain))
    assert np.isclose(rhs_exact(twisted), rhs_exact(plain))


def test_symplectic_twisted_instance():
    rng = np.random.default_rng(30)
    net = Network.random(3, rng)
    U = Connection.random(net, 4, 2, rng)
    probe = Experiment(net, 4, 2, (2, 2), (0, 1, 2, 1))
    A = random_coefficients(probe.nu, 4, 2, rng)
    exp = Experiment(net, 4, 2, (2, 2), (0, 1, 2, 1), A, U, rng.uniform(0.1, 1, 3))
    rep = verify_iso(exp)
    assert rep["pass"], rep["gap"]
    assert len(rep["terms"]) == len(expansion_terms((2, 2), 4))


def test_eigenvalue_mode():
    net = Network.random(3, np.random.default_rng(40))
    assert Experiment(net, 2, 2, (2, 1, 1), (0, 0, 1, 2)).eigenvalue_mode
    assert not Experiment(net, 2, 2, (2, 1, 1), (0, 1, 1, 2)).eigenvalue_mode
    A = {(1, 2): np.eye(2)}
    assert not Experiment(net, 2, 2, (2, 1, 1), (0, 0, 1, 2), A).eigenvalue_mode


def test_wilson_decomposition():
    exp = Experiment.load(CONFIGS / "wilson_beta4.json")
    rep = wilson_decomposition(exp)
    assert rep["pass"]
    assert np.isclose(rep["lhs"], rhs_exact(exp))
    pairs = ((1, 3), (2, 4), (5, 8), (6, 7))
    numbering = path_numbering(pairs)
    assert numbering == {(1, 3): 1, (2, 4): 2, (6, 7): 3, (5, 8): 4}
    (term,) = [t for t in expansion_terms(exp.nu, 4) if t.pairs == pairs and t.pairing.twist_mask == "0000"]
    got = [loop_pattern(w, numbering) for w in term.words]
    want = [((1, False), (2, False), (1, True), (2, True)),  # inverse of g2 g1 rev(g2) rev(g1)
            ((3, False), (4, False), (4, True)),
            ((3, True),)]
    assert len(got) == 3
    for w in want:
        assert any(same_loop(g, w) for g in got)
    assert not same_loop(want[0], ((2, False), (1, False), (2, True), (1, True)), allow_inverse=False)


def test_experiment_from_config():
    exp = Experiment.load(CONFIGS / "iso_beta2.json")
    assert exp.beta == 2 and exp.connection is not None and exp.A
    assert verify_iso(exp)["pass"]
    with pytest.raises(KeyError):
        Experiment.from_dict({"beta": 2})


@pytest.mark.slow
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_monte_carlo_mode(seed):
    rng = np.random.default_rng(seed)
    net = Network.random(3, rng)
    beta = (1, 2, 4)[seed - 1]
    U = Connection.random(net, beta, 2, rng)
    exp = Experiment(net, beta, 2, (2,), (0, 2), None, U, rng.uniform(0.1, 0.5, 3),
                     mode="mc", samples=4000, seed=seed)
    rep = verify_iso(exp)
    assert rep["pass"], rep
    assert rep["stderr_lhs"] > 0 and rep["stderr_rhs"] > 0


def test_monte_carlo_needs_seed():
    exp = Experiment(single(), 1, 1, (2,), (0, 0), mode="mc", samples=10)
    with pytest.raises(ValueError, match="seed"):
        verify_iso(exp)


@pytest.mark.parametrize("beta", [1, 2])
def test_vector_iso_examples(beta):
    rng = np.random.default_rng(50 + beta)
    net = Network.random(4, rng)
    U = Connection.random(net, beta, 2, rng)
    d = 2 if beta == 1 else 4
    J = [int(j) for j in rng.integers(d, size=4)]
    assert verify_vector_iso(net, beta, 2, [0, 1, 3, 1], J, U, rng.uniform(0, 1, 4))["pass"]
    with pytest.raises(ValueError):
        verify_vector_iso(net, beta, 2, [0, 1, 3], J[:3])
    with pytest.raises(ValueError):
        verify_vector_iso(net, 4, 2, [0, 1], [0, 0])
    # untwisted, one pair: every real component is a free field with covariance G
    rep = verify_vector_iso(net, beta, 1, [0, 2], [0, 0])
    assert np.isclose(rep["lhs"], green(net).G[0, 2])


def test_quaternion_coefficients_are_checked():
    net = single()
    with pytest.raises(ValueError):
        Experiment(net, 4, 2, (2,), (0, 0), {(1, 2): alg.identity(3, 4)})
