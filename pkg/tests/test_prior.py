import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mess.prior import GaussianPrior, PriorError, rotate_pair

from conftest import random_spd

finite = st.floats(-50, 50, allow_nan=False)


def vec(n):
    return st.lists(finite, min_size=n, max_size=n).map(np.array)


@pytest.fixture
def prior3(rng):
    return GaussianPrior(rng.normal(size=3), random_spd(rng, 3))


def test_factor_reconstructs_covariance(prior3):
    c = prior3.covariance
    err = np.linalg.norm(prior3.factor @ prior3.factor.T - c) / np.linalg.norm(c)
    assert err < 1e-10
    assert np.allclose(prior3.factor, np.tril(prior3.factor))


def test_sample_is_mean_plus_zero_mean_draw(prior3):
    centred = GaussianPrior(np.zeros(3), prior3.covariance)
    a = prior3.sample(np.random.default_rng(4))
    b = centred.sample(np.random.default_rng(4))
    assert np.array_equal(a, prior3.mean + b)


def test_sample_consumes_exactly_n_normals(prior3):
    r1, r2 = np.random.default_rng(9), np.random.default_rng(9)
    prior3.sample(r1)
    r2.standard_normal(3)
    assert r1.random() == r2.random()


def test_sample_deterministic_under_seed():
    p = GaussianPrior(np.zeros(2), np.eye(2))
    a = p.sample(np.random.default_rng(7))
    b = p.sample(np.random.default_rng(7))
    assert a.tobytes() == b.tobytes()


def test_sample_covariance_monte_carlo():
    p = GaussianPrior(np.zeros(2), np.diag([1.0, 4.0]))
    rng = np.random.default_rng(0)
    draws = np.array([p.sample(rng) for _ in range(100_000)])
    cov = np.cov(draws.T)
    assert abs(cov[0, 0] - 1.0) < 0.05
    assert abs(cov[1, 1] - 4.0) < 0.2
    assert abs(cov[0, 1]) < 0.05


def test_log_density_standard_values():
    assert math.isclose(GaussianPrior([0.0], [[1.0]]).log_density([0.0]), -0.5 * math.log(2 * math.pi))
    p2 = GaussianPrior(np.zeros(2), np.eye(2))
    assert math.isclose(p2.log_density([1.0, 1.0]), -math.log(2 * math.pi) - 1.0)


def test_log_density_matches_explicit_inverse(rng):
    n = 5
    mean = rng.normal(size=n)
    cov = random_spd(rng, n)
    p = GaussianPrior(mean, cov)
    x = rng.normal(size=n)
    r = x - mean
    expect = -0.5 * (n * math.log(2 * math.pi) + math.log(np.linalg.det(cov)) + r @ np.linalg.inv(cov) @ r)
    assert math.isclose(p.log_density(x), expect, rel_tol=1e-10)


def test_log_density_dimension_mismatch(prior3):
    with pytest.raises(PriorError):
        prior3.log_density(np.zeros(4))


@pytest.mark.parametrize(
    "mean, cov",
    [
        (np.zeros(2), np.array([[1.0, 0.2], [0.3, 1.0]])),  # asymmetric
        (np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]])),  # indefinite
        (np.zeros(3), np.eye(2)),  # size mismatch
        (np.zeros(2), np.diag([1.0, 1e-22])),  # factor diagonal ratio 1e-11
    ],
)
def test_invalid_priors_rejected(mean, cov):
    with pytest.raises(PriorError):
        GaussianPrior(mean, cov)


def test_rotate_pair_special_angles(rng):
    x, nu, mu = rng.normal(size=(3, 4))
    assert np.allclose(rotate_pair(x, nu, 0.0, mu), (x, nu))
    xa, na = rotate_pair(x, nu, math.pi, mu)
    assert np.allclose(xa, 2 * mu - x) and np.allclose(na, 2 * mu - nu)
    xq, nq = rotate_pair(x, nu, math.pi / 2, mu)
    assert np.allclose(xq, nu) and np.allclose(nq, 2 * mu - x)


def test_rotate_pair_dimension_mismatch():
    with pytest.raises(ValueError):
        rotate_pair(np.zeros(2), np.zeros(3), 0.1)


@given(vec(3), vec(3), st.floats(-10, 10))
def test_rotation_preserves_joint_prior_density(x, nu, angle):
    p = GaussianPrior(np.array([0.5, -1.0, 2.0]), np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.2], [0.0, 0.2, 0.5]]))
    xr, nr = rotate_pair(x, nu, angle, p.mean)
    before = p.log_density(x) + p.log_density(nu)
    after = p.log_density(xr) + p.log_density(nr)
    assert abs(before - after) <= 1e-8 * max(1.0, abs(before))


@given(vec(4), vec(4), vec(4), st.floats(-10, 10))
def test_rotation_inverse(x, nu, mu, angle):
    xr, nr = rotate_pair(x, nu, angle, mu)
    xb, nb = rotate_pair(xr, nr, -angle, mu)
    scale = 1 + np.max(np.abs(np.concatenate([x, nu, mu])))
    assert np.max(np.abs(xb - x)) <= 1e-12 * scale * 10
    assert np.max(np.abs(nb - nu)) <= 1e-12 * scale * 10


def test_condition_independent_coordinates():
    p = GaussianPrior(np.zeros(2), np.eye(2))
    c = p.condition_on_exact([0], [5.0])
    assert c.prior.dim == 1
    assert np.allclose(c.prior.mean, [0.0]) and np.allclose(c.prior.covariance, [[1.0]])
    assert np.array_equal(c.expand(np.array([2.5])), [5.0, 2.5])


def test_condition_correlated_pair():
    p = GaussianPrior(np.zeros(2), np.array([[1.0, 0.5], [0.5, 1.0]]))
    c = p.condition_on_exact([0], [1.0])
    assert math.isclose(c.prior.mean[0], 0.5, abs_tol=1e-12)
    assert math.isclose(c.prior.covariance[0, 0], 0.75, abs_tol=1e-12)


def test_condition_all_coordinates():
    p = GaussianPrior(np.zeros(3), np.eye(3))
    c = p.condition_on_exact([2, 0, 1], [3.0, 1.0, 2.0])
    assert c.prior.dim == 0
    assert np.array_equal(c.expand(np.zeros(0)), [1.0, 2.0, 3.0])


def test_condition_matches_schur_complement(rng):
    n = 6
    cov = random_spd(rng, n)
    mean = rng.normal(size=n)
    idx = [1, 4]
    vals = rng.normal(size=2)
    c = GaussianPrior(mean, cov).condition_on_exact(idx, vals)
    free = [0, 2, 3, 5]
    s_ff, s_fi, s_ii = cov[np.ix_(free, free)], cov[np.ix_(free, idx)], cov[np.ix_(idx, idx)]
    gain = s_fi @ np.linalg.inv(s_ii)
    assert np.allclose(c.prior.mean, mean[free] + gain @ (vals - mean[idx]))
    assert np.allclose(c.prior.covariance, s_ff - gain @ s_fi.T)
    full = c.expand(c.prior.mean)
    assert np.array_equal(c.reduce(full), c.prior.mean)


@pytest.mark.parametrize("idx, vals", [([0, 0], [1.0, 1.0]), ([5], [1.0]), ([0], [1.0, 2.0])])
def test_condition_bad_arguments(idx, vals):
    with pytest.raises(PriorError):
        GaussianPrior(np.zeros(3), np.eye(3)).condition_on_exact(idx, vals)
