import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catforge.errors import (
    DegenerateNormalizationError,
    DimensionError,
    ParameterError,
    UnsupportedPhaseError,
    ZeroNormError,
)
from catforge.fock import (
    CatParams,
    FockDensity,
    FockVector,
    SCParams,
    annihilate,
    bernoulli_matrix,
    coherent,
    db_to_r,
    fock_state,
    loss_channel,
    loss_kraus,
    mean_photon_number,
    odd_cat,
    overlap,
    parity_of,
    photon_distribution,
    quadrature_operator,
    r_to_db,
    rotate,
    sc_state,
    sc_state_closed_form,
    squeeze,
    squeeze_generator,
    squeeze_matrix,
    squeezed_vacuum,
    state_fidelity,
    trace_distance,
    vacuum,
)

import oracles

R_3DB = math.log(10**0.15)


def random_density(dim, seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return FockDensity(rho / np.trace(rho).real)


# ---------------------------------------------------------------- types


def test_vector_rejects_tiny_dim():
    with pytest.raises(DimensionError):
        FockVector(np.array([1.0]))


def test_density_check_passes_for_valid_state():
    random_density(6, 1).check()


def test_density_check_flags_non_hermitian():
    rho = np.eye(3, dtype=complex) / 3
    rho[0, 1] = 0.1
    with pytest.raises(Exception):
        FockDensity(rho).check()


def test_vector_roundtrip_dict():
    v = odd_cat(1.06, 12)
    back = FockVector.from_dict(v.to_dict())
    np.testing.assert_array_equal(back.amps, v.amps)


def test_density_roundtrip_dict():
    rho = random_density(5, 3)
    back = FockDensity.from_dict(rho.to_dict())
    np.testing.assert_array_equal(back.rho, rho.rho)


def test_cat_params_norm():
    assert CatParams(1.06).norm_minus == pytest.approx(2 - 2 * math.exp(-2 * 1.06**2))


def test_sc_params_validation():
    with pytest.raises(ParameterError):
        SCParams(1.0, -0.1)
    with pytest.raises(ParameterError):
        SCParams(1.0, 0.1, 2 * math.pi)
    assert SCParams(1.0, 0.1, 0.0).kind == "psc"
    assert SCParams(1.0, 0.1, math.pi).kind == "xsc"


# ---------------------------------------------------------------- coherent / cat


def test_coherent_zero_is_vacuum():
    np.testing.assert_array_equal(coherent(0, 20).amps, vacuum(20).amps)


def test_coherent_mean_photon_number():
    assert mean_photon_number(coherent(1.06, 30)) == pytest.approx(1.06**2, abs=1e-6)


def test_cat_overlap_law():
    a = 1.06
    val = abs(overlap(coherent(a, 30), coherent(-a, 30))) ** 2
    assert val == pytest.approx(oracles.cat_overlap_squared(a), abs=1e-8)
    assert val == pytest.approx(0.0111707, abs=1e-6)


def test_coherent_large_dim_does_not_overflow():
    v = coherent(3.0, 60)
    assert np.all(np.isfinite(v.amps))
    assert v.norm == pytest.approx(1.0, abs=1e-12)


def test_odd_cat_parity_exact():
    v = odd_cat(1.06, 30)
    assert np.all(v.amps[0::2] == 0)
    assert parity_of(v) == "odd"


def test_odd_cat_mean_n_closed_form():
    assert mean_photon_number(odd_cat(1.06, 30)) == pytest.approx(oracles.odd_cat_mean_n(1.06), abs=1e-8)


def test_odd_cat_small_alpha_tends_to_single_photon():
    ratios = [abs(odd_cat(a, 10).amps[3] / odd_cat(a, 10).amps[1]) for a in (0.3, 0.1, 0.01)]
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[2] < 1e-4


def test_odd_cat_matches_coherent_difference():
    a = 1.3
    diff = coherent(a, 40).amps - coherent(-a, 40).amps
    ref = FockVector(diff).normalized()
    assert state_fidelity(ref, odd_cat(a, 40)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.0, -0.5])
def test_odd_cat_degenerate(alpha):
    with pytest.raises(DegenerateNormalizationError):
        odd_cat(alpha, 10)


def test_even_cat_is_stubbed():
    with pytest.raises(NotImplementedError):
        odd_cat(CatParams(1.0, "even"), 10)


# ---------------------------------------------------------------- squeezing


def test_squeeze_matrix_zero_is_identity():
    np.testing.assert_array_equal(squeeze_matrix(0.0, 0.0, 8), np.eye(8))


def test_squeeze_matrix_vacuum_element():
    s = squeeze_matrix(0.345, 0.0, 30)
    assert abs(s[0, 0]) == pytest.approx(math.cosh(0.345) ** -0.5, abs=1e-8)
    assert s[1, 0] == 0


@pytest.mark.parametrize("r", [0.1, 0.5, 1.0])
def test_squeeze_matrix_retained_block_converged(r):
    ref = squeeze_matrix(r, 0.7, 30, pad=400)
    np.testing.assert_allclose(squeeze_matrix(r, 0.7, 30), ref, atol=1e-10)


def test_squeeze_matrix_unitary_on_low_levels():
    s = squeeze_matrix(0.5, 0.7, 60)
    np.testing.assert_allclose((s.conj().T @ s)[:10, :10], np.eye(10), atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(
    r=st.floats(0.0, 1.0),
    theta=st.floats(0.0, 2 * math.pi, exclude_max=True),
    dim=st.integers(2, 25),
)
def test_squeeze_parity_selection(r, theta, dim):
    s = squeeze_matrix(r, theta, dim)
    m, n = np.indices(s.shape)
    assert np.all(s[(m + n) % 2 == 1] == 0)


def test_squeeze_generator_only_two_photon_terms():
    g = squeeze_generator(0.3, 1.1, 12)
    m, n = np.nonzero(g)
    assert set(np.abs(m - n)) == {2}
    np.testing.assert_allclose(g, -g.conj().T, atol=1e-15)


def test_squeezed_vacuum_zero():
    np.testing.assert_allclose(squeezed_vacuum(0.0, dim=10).amps, vacuum(10).amps)


def test_db_convention():
    assert db_to_r(-3.0) == pytest.approx(R_3DB, abs=1e-12)
    assert db_to_r(-3.0) == pytest.approx(0.3454, abs=1e-4)
    assert r_to_db(R_3DB) == pytest.approx(-3.0, abs=1e-12)


def test_squeezed_vacuum_variances():
    # theta = pi squeezes x, theta = 0 squeezes p
    vx = squeezed_vacuum(R_3DB, math.pi, 40).density().rho
    vp = squeezed_vacuum(R_3DB, 0.0, 40).density().rho
    assert oracles.quadrature_moment(vx, 0.0, 2) == pytest.approx(math.exp(-2 * R_3DB) / 2, abs=1e-6)
    assert oracles.quadrature_moment(vp, math.pi / 2, 2) == pytest.approx(math.exp(-2 * R_3DB) / 2, abs=1e-6)
    assert oracles.quadrature_moment(vp, 0.0, 2) == pytest.approx(math.exp(2 * R_3DB) / 2, abs=1e-6)


@pytest.mark.parametrize("theta", [0.0, 0.4, math.pi])
def test_squeezed_vacuum_two_photon_ratio(theta):
    r = 0.3
    v = squeezed_vacuum(r, theta, 30).amps
    # with zeta = -r e^{i theta} the leading coefficient is +e^{i theta} tanh r / sqrt 2
    assert v[2] / v[0] == pytest.approx(np.exp(1j * theta) * math.tanh(r) / math.sqrt(2), abs=1e-8)


def test_squeezed_vacuum_even_support():
    assert parity_of(squeezed_vacuum(0.3, dim=30)) == "even"


def test_squeeze_density_matches_vector():
    v = odd_cat(1.0, 20)
    a = squeeze(v, 0.3, 0.0).density().rho
    b = squeeze(v.density(), 0.3, 0.0).rho
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_rotate_quarter_turn_maps_x_to_p():
    rho = coherent(1.0, 30).density()
    rot = rotate(rho, math.pi / 2)
    assert oracles.quadrature_moment(rot.rho, math.pi / 2, 1) == pytest.approx(
        oracles.quadrature_moment(rho.rho, 0.0, 1), abs=1e-10
    )


# ---------------------------------------------------------------- closed forms


@pytest.mark.parametrize("theta", [0.0, math.pi])
def test_closed_form_matches_operator(theta):
    p = SCParams(1.0, 0.3, theta)
    ref = FockVector(squeeze_matrix(0.3, theta, 50) @ odd_cat(1.0, 50).amps).normalized()
    assert state_fidelity(ref, sc_state_closed_form(p, 40)) >= 1 - 1e-6


@pytest.mark.parametrize("theta", [0.0, math.pi])
def test_closed_form_small_r_limit(theta):
    v = sc_state_closed_form(SCParams(1.0, 1e-3, theta), 30)
    assert state_fidelity(v, odd_cat(1.0, 30)) >= 1 - 1e-4


def test_closed_form_parity():
    v = sc_state_closed_form(SCParams(1.4, 0.3, 0.0), 30)
    assert np.all(v.amps[0::2] == 0)
    assert parity_of(v) == "odd"


def test_closed_form_errors():
    with pytest.raises(ParameterError):
        sc_state_closed_form(SCParams(1.0, 0.0, 0.0), 20)
    with pytest.raises(UnsupportedPhaseError):
        sc_state_closed_form(SCParams(1.0, 0.2, 1.0), 20)
    with pytest.raises(DegenerateNormalizationError):
        sc_state_closed_form(SCParams(0.0, 0.2, 0.0), 20)


def test_sc_state_dispatches_r_zero_to_cat():
    np.testing.assert_array_equal(sc_state(SCParams(1.1, 0.0), 20).amps, odd_cat(1.1, 20).amps)


def test_closed_form_large_dim_finite():
    v = sc_state_closed_form(SCParams(2.0, 0.6, math.pi), 80)
    assert np.all(np.isfinite(v.amps))


def test_psc_boosts_odd_levels_against_measured_cat():
    # the comparison is with the cat the squeezer acts on (alpha = 1.06)
    sc = photon_distribution(sc_state(SCParams(1.40, 0.30, 0.0), 30))
    cat = photon_distribution(odd_cat(1.06, 30))
    assert sc[3] > cat[3]
    assert sc[5] > cat[5]


@pytest.mark.xfail(strict=True, reason="at equal alpha the p-SC moves weight from n=3 up to n>=5")
def test_psc_boosts_level_three_at_equal_alpha():
    sc = photon_distribution(sc_state(SCParams(1.40, 0.30, 0.0), 30))
    cat = photon_distribution(odd_cat(1.40, 30))
    assert sc[3] > cat[3]


@settings(max_examples=20, deadline=None)
@given(alpha=st.floats(0.3, 1.5), r=st.floats(0.01, 0.2), theta=st.sampled_from([0.0, math.pi]))
def test_truncation_convergence(alpha, r, theta):
    p = SCParams(alpha, r, theta)
    a, b = sc_state(p, 30), sc_state(p, 40)
    assert abs(mean_photon_number(a) - mean_photon_number(b)) < 1e-8
    assert abs(state_fidelity(b.density(), a) - 1.0) < 1e-8
    assert abs(mean_photon_number(odd_cat(alpha, 30)) - mean_photon_number(odd_cat(alpha, 40))) < 1e-8


@pytest.mark.xfail(strict=True, reason="p-SC at alpha=1.5, r=0.5 keeps ~1e-3 amplitude above level 30")
def test_truncation_convergence_strong_squeezing():
    p = SCParams(1.5, 0.5, 0.0)
    assert abs(mean_photon_number(sc_state(p, 30)) - mean_photon_number(sc_state(p, 40))) < 1e-8


# ---------------------------------------------------------------- annihilation


def test_annihilate_single_photon():
    out, w = annihilate(fock_state(1, 5))
    np.testing.assert_allclose(out.amps, vacuum(5).amps)
    assert w == pytest.approx(1.0)


def test_annihilate_vacuum_fails():
    with pytest.raises(ZeroNormError):
        annihilate(vacuum(5))


def test_subtracted_squeezed_vacuum_is_near_cat():
    sub, _ = annihilate(squeezed_vacuum(R_3DB, 0.0, 40))
    grid = np.linspace(0.01, 2.0, 200)
    best = max(state_fidelity(sub, odd_cat(a, 40)) for a in grid)
    assert best > 0.99


@pytest.mark.parametrize("r", [0.1, R_3DB, 0.6])
def test_single_photon_identity(r):
    sub, _ = annihilate(squeezed_vacuum(r, 0.0, 50))
    back = FockVector(squeeze_matrix(r, math.pi, 50) @ sub.amps)
    assert state_fidelity(back, fock_state(1, 50)) >= 1 - 1e-6


# ---------------------------------------------------------------- loss


def test_bernoulli_matrix_rows_sum_to_one():
    b = bernoulli_matrix(0.7, 12)
    np.testing.assert_allclose((b**2).sum(axis=1), 1.0, atol=1e-12)


def test_loss_identity_and_total():
    rho = random_density(6, 2)
    assert loss_channel(rho, 1.0) is rho
    out = loss_channel(rho, 0.0).rho
    ref = np.zeros((6, 6))
    ref[0, 0] = 1
    np.testing.assert_allclose(out, ref, atol=1e-12)


def test_loss_single_photon():
    out = loss_channel(fock_state(1, 4).density(), 0.8).rho
    assert out[1, 1] == pytest.approx(0.8, abs=1e-12)
    assert out[0, 0] == pytest.approx(0.2, abs=1e-12)


@pytest.mark.parametrize("eta", [0.3, 0.8, 0.95])
def test_loss_matches_beam_splitter(eta):
    rho = random_density(6, 11)
    ref = oracles.beam_splitter_loss(rho.rho, eta)
    np.testing.assert_allclose(loss_channel(rho, eta).rho, ref, atol=1e-10)


def test_loss_matches_kraus():
    rho = random_density(7, 5)
    ref = sum(k @ rho.rho @ k.T for k in loss_kraus(0.6, 7))
    np.testing.assert_allclose(loss_channel(rho, 0.6).rho, ref, atol=1e-12)


def test_loss_rejects_bad_eta():
    with pytest.raises(ParameterError):
        loss_channel(random_density(3, 0), 1.2)


@settings(max_examples=25, deadline=None)
@given(e1=st.floats(0.0, 1.0), e2=st.floats(0.0, 1.0), seed=st.integers(0, 1000))
def test_loss_composition(e1, e2, seed):
    rho = random_density(8, seed)
    both = loss_channel(loss_channel(rho, e2), e1).rho
    np.testing.assert_allclose(both, loss_channel(rho, e1 * e2).rho, atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(eta=st.floats(0.0, 1.0), seed=st.integers(0, 1000))
def test_loss_is_cptp(eta, seed):
    out = loss_channel(random_density(8, seed), eta)
    assert abs(out.trace - 1) < 1e-9
    out.check()


def test_lossy_cat_parity_is_mixed():
    out = loss_channel(odd_cat(1.06, 30).density(), 0.8)
    assert parity_of(out) == "mixed"
    assert photon_distribution(out)[0] > 0


# ---------------------------------------------------------------- diagnostics


def test_photon_distribution_vacuum():
    np.testing.assert_array_equal(photon_distribution(vacuum(5).density()), [1, 0, 0, 0, 0])


def test_photon_distribution_sums_to_one():
    pn = photon_distribution(odd_cat(1.06, 30))
    assert pn.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(pn[0::2] == 0)


def test_trace_distance_orthogonal():
    assert trace_distance(fock_state(0, 4), fock_state(1, 4)) == pytest.approx(1.0)


def test_trace_distance_pads_dimensions():
    assert trace_distance(vacuum(4), vacuum(9)) == pytest.approx(0.0, abs=1e-15)


def test_quadrature_operator_hermitian():
    x = quadrature_operator(0.3, 10)
    np.testing.assert_allclose(x, x.conj().T)
