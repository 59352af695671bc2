import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from hill4bp import model, utils
from hill4bp.exceptions import DomainError, SingularityError
from hill4bp.symmetry import random_phase_states

mus = st.floats(min_value=0.0, max_value=0.5, allow_nan=False)


def test_parameters_hill_limit():
    p = model.derive_parameters(0.0)
    assert p.d == 1.0
    assert p.lambda1 == 0.0
    assert p.lambda2 == 3.0
    assert p.a == -1.0
    assert p.b == 0.5


def test_parameters_equal_masses():
    p = model.derive_parameters(0.5)
    assert_allclose([p.d, p.lambda1, p.lambda2, p.a, p.b], [0.5, 0.75, 2.25, -0.625, 0.125], atol=1e-15)


def test_parameters_sun_jupiter():
    p = model.derive_parameters(0.00095)
    assert_allclose(p.d, 0.99857534, rtol=1e-7)
    assert_allclose(p.lambda1, 0.00213699, rtol=1e-5)
    assert_allclose(p.lambda2, 2.99786301, rtol=1e-8)


@pytest.mark.parametrize("mu", [0.00095, 0.00547, 0.2, 0.5])
def test_parameters_match_extended_precision(mu):
    p = model.derive_parameters(mu)
    extended = model.derive_parameters_extended(mu)
    for key in ["d", "lambda1", "lambda2", "a", "b"]:
        assert_allclose(getattr(p, key), float(extended[key]), rtol=1e-14)


def test_small_mu_keeps_lambda1_precision():
    mu = 1e-12
    p = model.derive_parameters(mu)
    extended = model.derive_parameters_extended(mu, digits=60)
    assert_allclose(p.lambda1, float(extended["lambda1"]), rtol=1e-14)


@given(mus)
@settings(max_examples=200, deadline=None)
def test_parameter_identities(mu):
    p = model.derive_parameters(mu)
    assert abs(p.lambda1 + p.lambda2 - 3.0) <= 1e-14
    assert abs(p.a + p.b + 0.5) <= 1e-14
    assert_allclose(p.lambda1 * p.lambda2, 27.0 * mu * (1.0 - mu) / 4.0, rtol=1e-13, atol=1e-300)
    slack = 1e-12
    assert 0.5 - slack <= p.d <= 1.0
    assert 0.0 <= p.lambda1 <= 0.75 + slack
    assert 2.25 - slack <= p.lambda2 <= 3.0
    assert -1.0 <= p.a <= -0.625 + slack
    assert 0.125 - slack <= p.b <= 0.5
    assert p.lambda1 < p.lambda2


@given(st.floats(min_value=0.0, max_value=0.49, allow_nan=False))
@settings(max_examples=50, deadline=None)
def test_mass_ratio_symmetry_is_folded(mu):
    # d(mu) = d(1 - mu), the model only accepts the folded value.
    d_mirror = np.sqrt(1.0 - 3.0 * (1.0 - mu) + 3.0 * (1.0 - mu) ** 2)
    assert_allclose(model.derive_parameters(mu).d, d_mirror, rtol=1e-12)
    with pytest.raises(DomainError):
        model.derive_parameters(1.0 - mu)


@pytest.mark.parametrize("mu", [-0.1, 0.6, np.nan, np.inf])
def test_mu_outside_domain(mu):
    with pytest.raises(DomainError):
        model.derive_parameters(mu)


def test_resolve_mu_presets():
    assert model.resolve_mu("sun_jupiter") == 0.00095
    assert model.resolve_mu("0.2") == 0.2
    assert model.resolve_mu(0.5) == 0.5
    with pytest.raises(DomainError):
        model.resolve_mu("saturn")


def test_parameter_table():
    table = model.parameter_table(np.linspace(0.0, 0.5, 101))
    assert table.shape == (101, 6)
    assert list(table.columns) == ["mu", "d", "lambda1", "lambda2", "a", "b"]
    assert np.all(np.diff(table["lambda1"]) > 0)
    assert_allclose(table["lambda1"] + table["lambda2"], 3.0, atol=1e-14)


def test_hamiltonian_examples(hill):
    assert_allclose(model.hamiltonian(hill, [0.5, 0, 0, 0, 0, 0]), -2.25, rtol=1e-15)
    assert_allclose(model.hamiltonian_rotating_form(hill, [1, 0, 0, 0, 1, 0]), -2.5, rtol=1e-15)
    assert_allclose(model.jacobi_constant(hill, [1, 0, 0, 0, 1, 0]), 5.0, rtol=1e-15)


def test_hamiltonian_forms_agree(params, rng):
    states = random_phase_states(1000, rng)
    assert_allclose(
        model.hamiltonian(params, states), model.hamiltonian_rotating_form(params, states), rtol=1e-12, atol=1e-12
    )


def test_hamiltonian_at_origin_raises(intermediate):
    with pytest.raises(SingularityError):
        model.hamiltonian(intermediate, np.zeros(6))
    with pytest.raises(SingularityError):
        model.effective_potential(intermediate, [0.0, 0.0, 0.0])


def test_effective_potential_on_sphere(intermediate):
    radius = intermediate.r_l12
    assert_allclose(
        model.effective_potential_spherical(intermediate, radius, 0.0, np.pi / 2), intermediate.h12, rtol=1e-14
    )
    assert_allclose(intermediate.h12, -1.5 * intermediate.lambda2 ** (1.0 / 3.0), rtol=1e-15)


def test_effective_potential_spherical_matches_cartesian(params, rng):
    rho = rng.uniform(0.05, 3.0, 500)
    theta = rng.uniform(0.0, 2.0 * np.pi, 500)
    phi = rng.uniform(0.0, np.pi, 500)
    cartesian = model.effective_potential(params, model.spherical_to_position(rho, theta, phi))
    assert_allclose(model.effective_potential_spherical(params, rho, theta, phi), cartesian, rtol=1e-12)
    assert_allclose(
        model.effective_potential_spherical(params, rho, theta + 2.0 * np.pi, phi), cartesian, rtol=1e-12
    )


def _numeric_gradient(function, states, h=1e-6):
    gradient = np.zeros_like(states)
    for i in range(states.shape[1]):
        shift = np.zeros(states.shape[1])
        shift[i] = h
        gradient[:, i] = (function(states + shift) - function(states - shift)) / (2.0 * h)
    return gradient


def test_vector_field_is_hamiltonian(params, rng):
    states = random_phase_states(300, rng, r_range=(0.3, 3.0))
    gradient = _numeric_gradient(lambda s: model.hamiltonian(params, s), states)
    expected = np.concatenate([gradient[:, 3:], -gradient[:, :3]], axis=1)
    field = model.vector_field(params, states)
    assert np.all(np.abs(field - expected) <= 1e-6 * (1.0 + np.abs(field)))


def test_potential_derivatives(params, rng):
    positions = random_phase_states(300, rng, r_range=(0.3, 3.0))[:, :3]
    gradient = model.potential_gradient(params, positions)
    numeric = _numeric_gradient(lambda q: model.effective_potential(params, q), positions)
    assert np.all(np.abs(gradient - numeric) <= 1e-6 * (1.0 + np.abs(gradient)))
    hessian = model.potential_hessian(params, positions)
    assert_allclose(hessian, np.swapaxes(hessian, -1, -2), rtol=1e-14)
    numeric_row = _numeric_gradient(lambda q: model.potential_gradient(params, q)[:, 0], positions)
    assert np.all(np.abs(hessian[:, 0] - numeric_row) <= 1e-5 * (1.0 + np.abs(hessian[:, 0])))


def test_second_order_form_matches_first_order(params, rng):
    states = random_phase_states(500, rng)
    field = model.vector_field(params, states)
    velocity = model.state_velocity(states)
    # d/dt (p_x + y, p_y - x, p_z)
    acceleration = np.stack(
        [field[:, 3] + field[:, 1], field[:, 4] - field[:, 0], field[:, 5]], axis=1
    )
    assert_allclose(
        model.second_order_acceleration(params, states[:, :3], velocity),
        acceleration,
        rtol=1e-12,
        atol=1e-12 * np.max(np.abs(acceleration)),
    )


def test_z_axis_is_invariant(intermediate):
    field = model.vector_field(intermediate, [0.0, 0.0, 0.7, 0.0, 0.0, 0.3])
    assert np.all(field[[0, 1, 3, 4]] == 0.0)


def test_fix_sigma_is_invariant(intermediate, rng):
    states = random_phase_states(100, rng, planar=True)
    field = model.vector_field(intermediate, states)
    assert np.all(field[:, 2] == 0.0)
    assert np.all(field[:, 5] == 0.0)


@pytest.mark.parametrize("mu", [0.0, 0.5])
def test_rotation_eigenvalue_examples(mu):
    expected = {0.0: (-1.0, 0.5), 0.5: (-0.625, 0.125)}[mu]
    assert_allclose(model.rotation_diagonalization_check(mu), expected, atol=1e-12)


def test_rotation_diagonalizes_tidal_term(rng):
    for mu in np.linspace(0.0, 0.5, 101):
        p = model.derive_parameters(mu)
        low, high = model.rotation_diagonalization_check(mu)
        assert abs(low - p.a) <= 1e-12
        assert abs(high - p.b) <= 1e-12
    states = random_phase_states(200, rng)
    for mu in [0.0, 0.00095, 0.2, 0.5]:
        p = model.derive_parameters(mu)
        rotation = model.rotation_matrix(mu)
        assert_allclose(np.linalg.det(rotation), 1.0, rtol=1e-14)
        assert_allclose(
            model.hamiltonian_unrotated(mu, model.rotate_state(mu, states)),
            model.hamiltonian(p, states),
            rtol=1e-12,
            atol=1e-12,
        )


@given(
    st.floats(min_value=1e-3, max_value=10.0),
    st.floats(min_value=0.0, max_value=2.0 * np.pi, exclude_max=True),
    st.floats(min_value=1e-3, max_value=np.pi - 1e-3),
)
def test_spherical_round_trip(rho, theta, phi):
    back = utils.cart2sph(*utils.sph2cart(rho, theta, phi))
    assert_allclose(back[0], rho, rtol=1e-12)
    angle_error = np.angle(np.exp(1j * (back[1] - theta)))
    assert abs(angle_error) <= 1e-9
    assert_allclose(back[2], phi, atol=1e-9)
