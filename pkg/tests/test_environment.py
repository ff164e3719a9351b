import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dmfsim.environment import (
    DisorderLaw,
    environment_from_values,
    environment_statistics,
    exp_moment_estimate,
    sample_environment,
    scaled_partial_sums,
)
from dmfsim.errors import ParameterError

# E exp(|Z|) for Z ~ N(0,1), by adaptive quadrature of exp(|z|) phi(z) over [-40, 40]
GAUSS_ABS_EXP_MOMENT = 2.77428595767001

LAWS = [DisorderLaw.rademacher(), DisorderLaw.uniform(3.0), DisorderLaw.laplace(0.5), DisorderLaw.gaussian(2.0)]
laws = st.sampled_from(LAWS)


def test_sigma2_closed_forms():
    assert DisorderLaw.rademacher().sigma2 == 1.0
    assert DisorderLaw.uniform(3.0).sigma2 == pytest.approx(3.0)
    assert DisorderLaw.laplace(0.5).sigma2 == pytest.approx(0.5)
    assert DisorderLaw.gaussian(2.0).sigma2 == pytest.approx(4.0)


@pytest.mark.parametrize("text", ["uniform:0", "laplace:-1", "gaussian:0"])
def test_bad_parameters_rejected(text):
    with pytest.raises(ParameterError):
        DisorderLaw.parse(text)


def test_heavy_tails_rejected():
    with pytest.raises(ParameterError, match="exponential moment"):
        DisorderLaw.parse("cauchy")


@given(laws, st.integers(1, 300), st.integers(0, 2**63))
def test_prefix_property(law, n, seed):
    short = sample_environment(law, n, seed).values
    long = sample_environment(law, n + 17, seed).values
    assert np.array_equal(short, long[:n])


def test_rademacher_support():
    assert set(sample_environment(DisorderLaw.rademacher(), 4, 3).values.tolist()) <= {-1.0, 1.0}


@pytest.mark.parametrize("law", LAWS, ids=lambda l: l.kind)
def test_centering_and_variance(law):
    v = sample_environment(law, 10**6, 99).values
    assert abs(v.mean()) < 5 * law.sigma / 1e3
    assert v.var() == pytest.approx(law.sigma2, rel=0.02)


def test_exp_moment_alpha_stable_under_doubling():
    for law in LAWS:
        a = law.exp_moment_alpha
        m1 = np.mean(np.exp(a * np.abs(sample_environment(law, 50_000, 1).values)))
        m2 = np.mean(np.exp(a * np.abs(sample_environment(law, 100_000, 2).values)))
        assert math.isfinite(m1) and abs(m1 - m2) < 0.05 * m1


def test_partial_sums_hand_cases():
    d = environment_from_values(DisorderLaw.rademacher(), [1, -1, 1, 1])
    s = scaled_partial_sums(d)
    assert s[-1] == 1.0
    assert np.allclose(s * np.sqrt(np.arange(1, 5)), np.cumsum(d.values))
    assert scaled_partial_sums(environment_from_values(DisorderLaw.gaussian(1.0), [0.3]))[0] == 0.3


def test_statistics_hand_cases():
    st2 = environment_statistics(environment_from_values(DisorderLaw.rademacher(), [1, -1]))
    assert st2.var_gap == 0.0
    assert st2.abs3_term == pytest.approx(1 / math.sqrt(2), rel=1e-15)
    assert st2.lil_envelope is None
    z = environment_statistics(environment_from_values(DisorderLaw.uniform(3.0), [0, 0, 0]))
    assert z.s_n == 0 and z.abs3_term == 0 and z.var_gap == pytest.approx(3.0)
    assert z.lil_envelope == pytest.approx(2 * math.sqrt(math.log(math.log(3))))


def test_epsilon_ingredients_decay():
    law = DisorderLaw.uniform(1.0)
    small = [environment_statistics(sample_environment(law, 256, s)) for s in range(60)]
    big = [environment_statistics(sample_environment(law, 4096, s)) for s in range(60)]
    assert np.median([x.abs3_term for x in big]) < np.median([x.abs3_term for x in small])
    assert np.median([x.var_gap for x in big]) < np.median([x.var_gap for x in small])


def test_lil_envelope_holds_mostly():
    law = DisorderLaw.rademacher()
    hits = [abs(st_.s_n) <= st_.lil_envelope for st_ in
            (environment_statistics(sample_environment(law, 2**16, s)) for s in range(120))]
    assert np.mean(hits) > 0.95


def test_exp_moment_gaussian_oracle():
    est = exp_moment_estimate(DisorderLaw.gaussian(1.0), 1.0, 32, 20_000, seed=5)
    assert abs(est.mean - GAUSS_ABS_EXP_MOMENT) < 3 * est.ci / 1.96
    assert not est.saturated


def test_exp_moment_small_gamma():
    est = exp_moment_estimate(DisorderLaw.rademacher(), 1e-9, 64, 200, seed=1)
    assert est.mean == pytest.approx(1.0, abs=1e-7)


def test_exp_moment_bounded_across_n():
    means = [exp_moment_estimate(DisorderLaw.rademacher(), 1.0, n, 2000, seed=n).mean for n in (16, 64, 256, 1024, 4096)]
    assert max(means) < 1.5 * min(means)


def test_exp_moment_saturates_with_flag():
    est = exp_moment_estimate(DisorderLaw.gaussian(1.0), 800.0, 4, 100, seed=2)
    assert est.saturated and math.isfinite(est.mean)


def test_exp_moment_needs_replicates():
    with pytest.raises(ParameterError):
        exp_moment_estimate(DisorderLaw.rademacher(), 1.0, 4, 10, seed=0)
