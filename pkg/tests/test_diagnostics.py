import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mess import SamplerSpec, run_chain
from mess.diagnostics import (
    DiagnosticsError,
    autocovariance,
    effective_sample_size,
    export_histogram,
    msjd,
    summarize,
)
from mess.models import make_conjugate_problem


def ar1(rng, rho, n):
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0] / np.sqrt(1 - rho**2)
    for t in range(1, n):
        x[t] = rho * x[t - 1] + e[t]
    return x


def test_autocovariance_matches_direct(rng):
    x = rng.normal(size=50)
    c = autocovariance(x)
    xc = x - x.mean()
    for lag in (0, 1, 7, 49):
        assert c[lag] == pytest.approx(np.sum(xc[: 50 - lag] * xc[lag:]) / 50)


def test_ess_iid():
    x = np.random.default_rng(0).standard_normal(10_000)
    assert 8_000 <= effective_sample_size(x) <= 12_000


def test_ess_ar1():
    n, rho = 100_000, 0.9
    x = ar1(np.random.default_rng(1), rho, n)
    expect = n * (1 - rho) / (1 + rho)
    assert abs(effective_sample_size(x) - expect) <= 0.25 * expect


def test_ess_errors():
    with pytest.raises(DiagnosticsError):
        effective_sample_size(np.ones(100))
    with pytest.raises(DiagnosticsError):
        effective_sample_size(np.arange(9.0))


@given(arrays(np.float64, st.integers(10, 200), elements=st.floats(-1e3, 1e3)))
def test_ess_range(x):
    if np.ptp(x) == 0 or np.var(x) == 0:
        return
    e = effective_sample_size(x)
    assert 0 < e <= x.size


def test_ess_of_thinned_ar1_approaches_length():
    x = ar1(np.random.default_rng(2), 0.95, 200_000)
    ratios = []
    for tau in (1, 4, 16, 64):
        y = x[::tau]
        ratios.append(effective_sample_size(y) / y.size)
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] > 0.8


def test_msjd_examples():
    assert msjd([0.0, 1.0, 0.0, 1.0]) == 1.0
    assert msjd(np.ones((5, 3))) == 0.0
    a, b = np.zeros(2), np.array([3.0, 0.0])
    assert msjd([a, b, a, b]) == pytest.approx(9.0)
    with pytest.raises(DiagnosticsError):
        msjd([1.0])


@given(arrays(np.float64, (20, 3), elements=st.floats(-100, 100)))
def test_msjd_time_reversal(x):
    assert msjd(x) == pytest.approx(msjd(x[::-1]), rel=1e-12, abs=1e-12)
    assert msjd(x) >= 0


def test_histogram():
    counts, edges = export_histogram(np.full(20, 3.0), bins=5)
    assert np.count_nonzero(counts) == 1 and counts.sum() == 20
    x = np.random.default_rng(0).normal(size=1000)
    counts, edges = export_histogram(x, bins=17)
    assert counts.sum() == 1000 and edges[0] == x.min() and edges[-1] == x.max()
    assert np.allclose(np.diff(edges), np.diff(edges)[0])
    with pytest.raises(DiagnosticsError):
        export_histogram([])


@pytest.fixture(scope="module")
def chain():
    model = make_conjugate_problem(dim=3, seed=0)
    return run_chain(SamplerSpec("mess", M=4, distance="angular"), model, 2000, seed=1)


def test_summary_full_chain(chain):
    s = summarize(chain, 0)
    assert s.n_samples == 2000 and s.n_steps == 2000
    assert s.ess.shape == (3,) and np.all((s.ess > 0) & (s.ess <= 2000))
    assert s.msjd == pytest.approx(msjd(chain.samples))
    assert s.mean_likelihood_evaluations == pytest.approx(4 * s.mean_shrink_iterations)
    assert s.acceptance_rate is None


def test_summary_reconciles_with_step_stats(chain):
    s = summarize(chain, 500, components=[1])
    assert s.n_steps == 1500 and s.ess.shape == (1,)
    assert s.mean_shrink_iterations * 1500 == pytest.approx(chain.shrink_iterations[500:].sum())
    assert s.mean_likelihood_evaluations * 1500 == pytest.approx(chain.likelihood_evaluations[500:].sum())
    assert s.ess[0] == pytest.approx(effective_sample_size(chain.samples[500:, 1]))


def test_summary_with_thinning():
    model = make_conjugate_problem(dim=2, seed=0)
    r = run_chain(SamplerSpec("mess", M=2), model, 1000, seed=1, thinning=10)
    s = summarize(r, 100)
    assert s.n_samples == 90


def test_summary_burn_in_errors(chain):
    with pytest.raises(DiagnosticsError):
        summarize(chain, 2000)
    with pytest.raises(DiagnosticsError):
        summarize(chain, -1)


def test_summary_mh_acceptance():
    model = make_conjugate_problem(dim=2, seed=0)
    r = run_chain(SamplerSpec("mh", mh_scale=0.5), model, 500, seed=0)
    s = summarize(r, 50, acceptance=True)
    assert s.acceptance_rate == pytest.approx(np.mean(r.accepted[50:]))
