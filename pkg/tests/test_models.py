import math

import numpy as np
import pytest
from scipy import stats

from edgekit.models import (
    ChainModel,
    LatticeDistribution,
    MarkovChainSpec,
    PiecewisePolyDistribution,
    builtin_model,
    builtin_model_names,
    ellipticity_check,
    enumerate_distribution,
    exact_distribution,
    iid_sum,
    load_chain_spec,
    monte_carlo_ecdf,
    psi_mixing_coefficient,
    save_chain_spec,
    variance_decomposition,
    variance_profile,
)


# -- lattice basics ----------------------------------------------------------


def test_lattice_moments_and_cdf():
    d = LatticeDistribution(offset=-1.0, step=1.0, masses=[0.25, 0.5, 0.25])
    assert d.mean == pytest.approx(0.0, abs=1e-15)
    assert d.variance == pytest.approx(0.5, abs=1e-15)
    assert d.cdf(0.0) == pytest.approx(0.75)
    assert d.cdf_left(0.0) == pytest.approx(0.25)
    assert d.quantile(0.5) == pytest.approx(0.0)
    assert d.abs_moment(1) == pytest.approx(0.5)


def test_lattice_convolution_is_binomial():
    d = LatticeDistribution(offset=0.0, step=1.0, masses=[0.5, 0.5])
    acc = d
    for _ in range(5):
        acc = acc.convolve(d)
    assert np.allclose(acc.masses, stats.binom.pmf(np.arange(7), 6, 0.5), atol=1e-15)


# -- chain DP vs path enumeration -------------------------------------------


def _random_chain(seed, n=5, states=3):
    rng = np.random.Generator(np.random.Philox(key=seed))
    initial = rng.random(states)
    initial /= initial.sum()
    kernels = []
    observables = []
    for _ in range(n):
        k = rng.random((states, states)) + 0.1
        k /= k.sum(axis=1, keepdims=True)
        kernels.append(k)
        observables.append(np.rint(rng.integers(-2, 3, size=(states, states))).astype(float))
    means = MarkovChainSpec(initial, tuple(kernels), tuple(observables)).step_means()
    observables = [f - mu for f, mu in zip(observables, means)]
    return MarkovChainSpec(initial, tuple(kernels), tuple(observables), name="random")


@pytest.mark.parametrize("seed", [11, 12, 13])
def test_dp_matches_enumeration(seed):
    spec = _random_chain(seed)
    d = exact_distribution(spec)
    pairs = enumerate_distribution(spec)
    live = d.masses > 1e-15
    vals = d.support[live]
    masses = d.masses[live]
    assert len(pairs) == vals.size
    for (v, p), dv, dp_ in zip(pairs, vals, masses):
        assert dv == pytest.approx(v, abs=1e-9)
        assert dp_ == pytest.approx(p, abs=1e-12)


def test_dp_total_mass_and_mean():
    spec = _random_chain(21, n=7)
    d = exact_distribution(spec)
    assert d.total_mass == pytest.approx(1.0, abs=1e-12)
    assert abs(d.mean) < 1e-10


# -- builtin models, frozen values -------------------------------------------


def test_rademacher_matches_binomial():
    m = builtin_model("rademacher")
    d = m.distribution(8)
    # S_8 = 2*Binom(8, 1/2) - 8
    assert d.step == pytest.approx(2.0)
    assert np.allclose(d.masses, stats.binom.pmf(np.arange(9), 8, 0.5), atol=1e-14)
    assert m.sigma2(8) == pytest.approx(8.0)
    assert m.cumulant(8, 4) == pytest.approx(-16.0)


def test_uniform_small_n_closed_forms():
    m = builtin_model("uniform")
    # n=2: triangular on [-2, 2], density 1/2 at 0
    d2 = m.distribution(2)
    assert d2.density(0.0) == pytest.approx(0.5, abs=1e-14)
    assert d2.density(1.0) == pytest.approx(0.25, abs=1e-14)
    # n=3: symmetric, CDF(0) = 1/2
    assert m.distribution(3).cdf(0.0) == pytest.approx(0.5, abs=1e-13)
    # n=4: variance 4/3 via two routes
    d4 = m.distribution(4)
    assert d4.variance == pytest.approx(4.0 / 3.0, abs=1e-12)
    assert m.sigma2(4) == pytest.approx(4.0 / 3.0, abs=1e-14)
    d4.validate()


def test_uniform_cumulant_rates():
    m = builtin_model("uniform")
    kap = m.base_cumulants(6)
    assert kap[1] == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert kap[3] == pytest.approx(-2.0 / 15.0, abs=1e-15)
    assert kap[5] == pytest.approx(16.0 / 63.0, abs=1e-14)


def test_elliptic2_against_enumeration():
    m = builtin_model("elliptic2")
    d = m.distribution(7)
    pairs = enumerate_distribution(m.spec(7))
    live = d.masses > 1e-15
    assert np.allclose(d.support[live], [p[0] for p in pairs], atol=1e-9)
    assert np.allclose(d.masses[live], [p[1] for p in pairs], atol=1e-12)


def test_symmetric2_is_symmetric_with_shrinking_step():
    m = builtin_model("symmetric2")
    d = m.distribution(24)
    assert abs(d.mean) < 1e-12
    # swap symmetry of the kernel and sign observable kills odd moments
    assert abs(d.moment(3)) < 1e-10
    assert m.step(24) == pytest.approx(0.5)
    assert m.step(70) == pytest.approx(0.25)


def test_builtin_registry():
    names = builtin_model_names()
    assert "rademacher" in names and "uniform" in names
    with pytest.raises(ValueError):
        builtin_model("no-such-model")
    with pytest.raises(ValueError):
        builtin_model("decay:0.7")
    d = builtin_model("decay:0.3")
    assert d.distribution(6).total_mass == pytest.approx(1.0, abs=1e-12)


# -- variance profile and blocking ------------------------------------------


def test_variance_profile_monotone():
    m = builtin_model("elliptic2")
    prof = variance_profile(m.spec(12))
    assert len(prof) == 13  # Var(S_k) for k = 0..12
    assert prof[-1] == pytest.approx(m.sigma2(12), abs=1e-12)
    assert all(b >= a - 1e-12 for a, b in zip(prof, prof[1:]))


def test_blocking_rademacher_quarters():
    m = builtin_model("rademacher")
    rep = m.blocking(16)
    # steps have unit variance; target 4*1+1 = 5 makes length-5 blocks
    assert rep.target == pytest.approx(5.0)
    rep4 = variance_decomposition(m.spec(16), target=4.0)
    # iid unit-variance steps: greedy blocks are exactly 4 steps long
    assert rep4.blocks[0] == (0, 3)
    assert np.allclose(rep4.a, 4.0 * (np.arange(17) // 4), atol=1e-12)
    assert rep4.a[16] + rep4.b[16] == pytest.approx(16.0, abs=1e-12)
    assert rep4.a_monotone


def test_blocking_block_variances_within_band():
    m = builtin_model("elliptic2")
    rep = m.blocking(40)
    for v in rep.block_variances[:-1]:
        assert rep.target - 1e-9 <= v <= 2.0 * rep.target + rep.overshoot + 1e-9
    assert rep.sigma2[-1] == pytest.approx(m.sigma2(40), rel=1e-12)


# -- ellipticity and mixing --------------------------------------------------


def test_ellipticity_uniform_kernel():
    m = builtin_model("rademacher")
    rep = ellipticity_check(m.spec(6))
    # kernel rows are the uniform measure: two-step density is exactly 1
    assert rep.min_two_step == pytest.approx(1.0, abs=1e-12)
    assert rep.elliptic
    assert rep.eps == pytest.approx(1.0, abs=1e-12)


def test_ellipticity_detects_bad_kernel():
    initial = np.array([0.5, 0.5])
    k = np.array([[1.0, 0.0], [0.0, 1.0]])
    f = np.array([[1.0, -1.0], [1.0, -1.0]])
    spec = MarkovChainSpec(initial, (k,) * 4, (f - f.mean(),) * 4)
    rep = ellipticity_check(spec)
    assert rep.min_two_step == pytest.approx(0.0, abs=1e-12)
    assert not rep.elliptic


def test_psi_mixing_identity_vs_uniform():
    initial = np.array([0.5, 0.5])
    f = np.array([[1.0, -1.0], [1.0, -1.0]])
    ident = MarkovChainSpec(initial, (np.eye(2),) * 4, (f,) * 4)
    unif = MarkovChainSpec(initial, (np.full((2, 2), 0.5),) * 4, (f,) * 4)
    r_ident = psi_mixing_coefficient(ident, 1)
    r_unif = psi_mixing_coefficient(unif, 1)
    # deterministic coupling: P(A and B) = 1/2 while P(A)P(B) = 1/4
    assert r_ident.value == pytest.approx(1.0, abs=1e-12)
    assert r_unif.value == pytest.approx(0.0, abs=1e-12)


def test_psi_mixing_decays_with_gap():
    m = builtin_model("elliptic2")
    spec = m.spec(8)
    vals = [psi_mixing_coefficient(spec, 2, gap=g).value for g in (1, 2, 3)]
    assert vals[0] > vals[1] > vals[2] > 0.0
    # second-eigenvalue 1/2 drives the decay
    assert vals[1] / vals[0] == pytest.approx(0.5, abs=0.1)


# -- monte carlo -------------------------------------------------------------

def test_monte_carlo_seeded_and_close_to_exact():
    m = builtin_model("elliptic2")
    e1 = monte_carlo_ecdf(m.spec(12), samples=4000, seed=7)
    e2 = monte_carlo_ecdf(m.spec(12), samples=4000, seed=7)
    assert np.array_equal(e1.values, e2.values)
    d = m.distribution(12)
    grid = d.support
    gap = np.max(np.abs(e1.cdf(grid) - d.cdf(grid)))
    assert gap <= e1.halfwidth  # DKW band at delta=0.01


# -- chain file round trip ---------------------------------------------------


def test_chain_file_roundtrip(tmp_path):
    spec = builtin_model("flip2").spec(6)
    path = tmp_path / "flip2.chain"
    save_chain_spec(spec, path)
    back = load_chain_spec(path)
    assert back.n_steps == 6
    assert np.allclose(back.initial, spec.initial)
    for a, b in zip(back.kernels, spec.kernels):
        assert np.allclose(a, b, atol=0, rtol=0)
    for a, b in zip(back.observables, spec.observables):
        assert np.allclose(a, b, atol=0, rtol=0)
    d1 = exact_distribution(spec)
    d2 = exact_distribution(back)
    assert np.allclose(d1.masses, d2.masses, atol=1e-15)


# -- piecewise engine --------------------------------------------------------


def test_piecewise_uniform_basics():
    u = PiecewisePolyDistribution.uniform(-1.0, 1.0)
    assert u.total_mass == pytest.approx(1.0, abs=1e-15)
    assert u.moment(2) == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert u.abs_moment(1) == pytest.approx(0.5, abs=1e-15)
    assert u.cdf(0.5) == pytest.approx(0.75, abs=1e-15)
    assert u.quantile(0.75) == pytest.approx(0.5, abs=1e-9)


def test_iid_sum_matches_analytic_triangle():
    u = PiecewisePolyDistribution.uniform(-1.0, 1.0)
    d2 = iid_sum(u, 2)
    xs = np.linspace(-1.9, 1.9, 21)
    assert np.allclose(d2.density(xs), (2.0 - np.abs(xs)) / 4.0, atol=1e-13)


def test_iid_sum_moments_match_cumulant_route():
    u = PiecewisePolyDistribution.uniform(-1.0, 1.0)
    d = iid_sum(u, 6)
    assert d.total_mass == pytest.approx(1.0, abs=1e-12)
    assert d.moment(2) == pytest.approx(2.0, abs=1e-12)
    # kappa4 additivity: m4 = 3 sigma^4 + n kappa4
    assert d.moment(4) == pytest.approx(3.0 * 4.0 + 6.0 * (-2.0 / 15.0), abs=1e-11)
    d.validate()


def test_iid_sum_charfn_deriv_matches_closed_form():
    u = PiecewisePolyDistribution.uniform(-1.0, 1.0)
    d3 = iid_sum(u, 3)
    t = np.array([0.3, 1.7, 4.0])
    sinc = np.sin(t) / t
    assert np.allclose(d3.charfn_deriv(t, 0), sinc**3, atol=1e-12)
    # d/dt of sinc^3 (real for a symmetric density)
    dsinc = (t * np.cos(t) - np.sin(t)) / t**2
    assert np.allclose(d3.charfn_deriv(t, 1), 3.0 * sinc**2 * dsinc, atol=1e-11)


def test_iid_sum_cap():
    u = PiecewisePolyDistribution.uniform(-1.0, 1.0)
    with pytest.raises(ValueError):
        iid_sum(u, 65)


def test_piecewise_deep_convolution_stays_clean():
    u = PiecewisePolyDistribution.uniform(-1.0, 1.0)
    d = iid_sum(u, 32)
    assert d.total_mass == pytest.approx(1.0, abs=1e-10)
    d.validate()
    assert d.moment(2) == pytest.approx(32.0 / 3.0, rel=1e-12)
    # near-Gaussian center value
    sigma = math.sqrt(32.0 / 3.0)
    assert d.density(0.0) * sigma == pytest.approx(1.0 / math.sqrt(2 * math.pi), rel=5e-3)
