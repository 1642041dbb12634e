import math

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from tensorcf.model import (
    LatentModel,
    ObservationSet,
    count_sorted_triples,
    eigenfunction,
    eval_f,
    sample_latent_model,
    sample_observations,
    unrank_sorted_triples,
)

from _bruteforce import f_direct


def gram(basis, r, nodes=64):
    x, w = leggauss(nodes)
    theta, w = (x + 1) / 2, w / 2
    Q = np.stack([eigenfunction(basis, k, theta) for k in range(1, r + 1)])
    return (Q * w) @ Q.T


def test_legendre_known_values():
    assert eigenfunction("legendre", 1, 0.3) == 1.0
    assert eigenfunction("legendre", 2, 0.5) == 0.0
    assert eigenfunction("legendre", 2, 1.0) == pytest.approx(math.sqrt(3))


@pytest.mark.parametrize("basis", ["legendre", "cosine"])
def test_orthonormal_under_quadrature(basis):
    G = gram(basis, 5)
    assert np.max(np.abs(G - np.eye(5))) < 1e-8


def test_second_function_unit_norm():
    x, w = leggauss(64)
    q2 = eigenfunction("legendre", 2, (x + 1) / 2)
    assert abs(np.sum(w / 2 * q2**2) - 1.0) < 1e-9


def test_eigenfunction_range_check():
    with pytest.raises(ValueError):
        eigenfunction("legendre", 0, 0.2)
    with pytest.raises(ValueError):
        eigenfunction("legendre", 3, 0.2, r=2)
    with pytest.raises(ValueError):
        eigenfunction("fourier", 1, 0.2)


@pytest.mark.parametrize("basis", ["legendre", "cosine"])
def test_bound_B_holds(basis):
    m = sample_latent_model(10, 4, [1, 0.8, 0.5, 0.2], basis=basis)
    grid = np.linspace(0, 1, 2001)
    for k in range(1, 5):
        assert np.max(np.abs(eigenfunction(basis, k, grid))) <= m.B + 1e-12


def test_rank1_constant_model():
    m = sample_latent_model(4, 1, [1.0], seed=7)
    assert m.B == 1.0
    assert np.all((m.thetas >= 0) & (m.thetas <= 1))
    for u, v, w in [(0, 0, 0), (0, 1, 3), (3, 2, 1)]:
        assert eval_f(m, u, v, w) == 1.0


def test_sample_deterministic():
    a = sample_latent_model(50, 2, [1, 0.5], seed=3)
    b = sample_latent_model(50, 2, [1, 0.5], seed=3)
    c = sample_latent_model(50, 2, [1, 0.5], seed=4)
    assert a.thetas.tobytes() == b.thetas.tobytes()
    assert not np.array_equal(a.thetas, c.thetas)


def test_lambdas_sorted_and_scaled():
    m = sample_latent_model(10, 3, [0.2, -1.0, 0.5])
    assert list(m.lambdas) == [-1.0, 0.5, 0.2]
    assert m.scale == pytest.approx(1 / (1.7 * m.B**3))


def test_f_bounded_on_grid():
    m = sample_latent_model(100, 2, [1, 0.5], seed=1)
    th = m.thetas[np.linspace(0, 99, 50).astype(int)]
    Q = np.stack([eigenfunction("legendre", k, th) for k in (1, 2)])
    lam = m.eigenvalues
    F = np.einsum("k,ki,kj,kl->ijl", lam, Q, Q, Q)
    assert np.max(np.abs(F)) <= 1.0


def test_f_bounded_on_dense_theta_grid():
    m = sample_latent_model(5, 3, [1, -0.7, 0.4], seed=2)
    th = np.linspace(0, 1, 41)
    Q = np.stack([eigenfunction("legendre", k, th) for k in (1, 2, 3)])
    F = np.einsum("k,ki,kj,kl->ijl", m.eigenvalues, Q, Q, Q)
    assert np.max(np.abs(F)) <= 1.0


def test_f_symmetric_all_orderings():
    m = sample_latent_model(20, 2, [1, 0.5], seed=5)
    base = eval_f(m, 1, 7, 13)
    for perm in [(1, 13, 7), (7, 1, 13), (7, 13, 1), (13, 1, 7), (13, 7, 1)]:
        assert eval_f(m, *perm) == base


def test_f_matches_independent_summation():
    m = sample_latent_model(30, 2, [1, 0.5], seed=9)
    rng = np.random.default_rng(0)
    for u, v, w in rng.integers(0, 30, size=(10, 3)):
        assert abs(eval_f(m, u, v, w) - f_direct(m, u, v, w)) < 1e-12


def test_eval_f_index_check():
    m = sample_latent_model(5, 1, [1.0])
    with pytest.raises(IndexError):
        eval_f(m, 0, 1, 5)


@pytest.mark.parametrize(
    "kwargs",
    [dict(n=3, r=4, lambdas=[1, 1, 1, 1]), dict(n=5, r=1, lambdas=[]), dict(n=5, r=2, lambdas=[1, 0])],
)
def test_sample_latent_model_rejects(kwargs):
    with pytest.raises(ValueError):
        sample_latent_model(**kwargs)


def test_model_json_roundtrip():
    m = sample_latent_model(8, 2, [1, 0.5], seed=1)
    m2 = LatentModel.from_dict(m.to_dict())
    assert np.array_equal(m.thetas, m2.thetas) and m.scale == m2.scale


def test_unrank_enumerates_sorted_triples():
    n = 7
    expected = [(u, v, w) for u in range(n) for v in range(u, n) for w in range(v, n)]
    got = unrank_sorted_triples(n, np.arange(count_sorted_triples(n)))
    assert [tuple(x) for x in got.tolist()] == expected


def test_dense_noiseless_observes_everything_exactly():
    m = sample_latent_model(9, 2, [1, 0.5], seed=2)
    obs = sample_observations(m, 1.0, 0.0, seed=2)
    assert len(obs) == math.comb(9 + 2, 3)
    for (u, v, w), val in zip(obs.triples, obs.values):
        assert u <= v <= w
        assert val == eval_f(m, u, v, w)


def test_observed_count_binomial():
    m = sample_latent_model(20, 1, [1.0], seed=0)
    total = count_sorted_triples(20)
    obs = sample_observations(m, 0.5, 0.0, seed=11)
    assert abs(len(obs) - 0.5 * total) <= 4 * math.sqrt(total * 0.25)
    assert len({tuple(t) for t in obs.triples.tolist()}) == len(obs)


def test_noise_mean_clt():
    m = sample_latent_model(40, 2, [1, 0.5], seed=0)
    obs = sample_observations(m, 1.0, 0.1, seed=3)
    assert len(obs) >= 10_000
    F = m.values(obs.triples[:, 0], obs.triples[:, 1], obs.triples[:, 2])
    resid = obs.values - F
    assert abs(resid.mean()) < 3 * 0.1 / math.sqrt(len(obs))
    assert np.all(np.abs(obs.values) <= 1.0)
    # uniform noise of variance sigma^2 has support sigma*sqrt(3)
    assert np.max(np.abs(resid)) <= 0.1 * math.sqrt(3) + 1e-12


def test_values_clamped():
    m = sample_latent_model(10, 1, [1.0])
    obs = sample_observations(m, 1.0, 0.5, seed=1)
    assert obs.values.max() == 1.0 and obs.values.min() >= -1.0


def test_observation_parameter_validation():
    m = sample_latent_model(5, 1, [1.0])
    with pytest.raises(ValueError):
        sample_observations(m, 0.0, 0.1, 0)
    with pytest.raises(ValueError):
        sample_observations(m, 0.5, -1.0, 0)


def test_observation_json_roundtrip():
    m = sample_latent_model(6, 1, [1.0])
    obs = sample_observations(m, 0.5, 0.1, 4)
    back = ObservationSet.from_dict(obs.to_dict())
    assert np.array_equal(back.triples, obs.triples) and np.array_equal(back.values, obs.values)
