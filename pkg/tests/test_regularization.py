import numpy as np
import pytest
from conftest import SERIAL, h12
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from hill4bp import contact, model, regularization, symmetry
from hill4bp.exceptions import DomainError, NorthPoleError, RootFindError
from hill4bp.symmetry import random_phase_states

coordinates = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)


def _north_pole_state(eta_tangent):
    return regularization.regularized_state([1.0, 0.0, 0.0, 0.0], np.concatenate([[0.0], eta_tangent]))


def test_switch_map():
    assert_allclose(regularization.switch_map([1, 0, 0, 0, 2, 0]), [0, -2, 0, 1, 0, 0])
    assert symmetry.symplectic_signature(regularization.switch_matrix()) == 1
    state = np.array([0.3, -0.2, 0.1, 1.0, 2.0, -0.5])
    assert_allclose(regularization.switch_map(regularization.switch_map(state)), -state)
    assert_allclose(regularization.unswitch_map(regularization.switch_map(state)), state)
    assert_allclose(regularization.switch_map(state), regularization.switch_matrix() @ state)


def test_k_c(hill):
    state = np.array([0.5, 0, 0, 0, 0, 0])
    energy = model.hamiltonian(hill, state)
    assert_allclose(regularization.k_c(hill, energy - 1.0, state), 0.5)
    assert regularization.k_c(hill, energy + 1.0, state) < 0
    assert regularization.k_c(hill, energy, state) == 0.0
    switched = regularization.switch_map(state)
    assert_allclose(regularization.k_tilde_switched(hill, energy - 1.0, switched), 0.5)


def test_stereographic_examples():
    r = regularization.regularized_state([0, 1, 0, 0], [0, 0, 1, 0])
    assert_allclose(regularization.sphere_to_stereo(r), [1, 0, 0, 0, 1, 0], atol=1e-15)
    assert_allclose(regularization.stereo_to_sphere([1, 0, 0, 0, 1, 0]), r, atol=1e-15)
    south = regularization.stereo_to_sphere([0, 0, 0, 0.3, -0.1, 0.2])
    assert_allclose(south[:4], [-1, 0, 0, 0])


def test_north_pole_raises():
    with pytest.raises(NorthPoleError):
        regularization.sphere_to_stereo(_north_pole_state([1.0, 0.0, 0.0]))


@given(st.tuples(*[coordinates] * 6))
@settings(max_examples=300, deadline=None)
def test_stereographic_round_trip(values):
    state = np.array(values)
    r = regularization.stereo_to_sphere(state)
    xi_defect, orthogonality = regularization.constraint_defect(r)
    scale = 1.0 + np.max(np.abs(state)) ** 3
    assert xi_defect <= 1e-12
    assert orthogonality <= 1e-12 * scale
    back = regularization.sphere_to_stereo(r)
    assert np.all(np.abs(back - state) <= 1e-12 * scale)


def test_round_trip_on_many_states(rng):
    states = random_phase_states(10000, rng)
    back = regularization.regularized_to_phase(regularization.phase_to_regularized(states))
    assert np.all(np.abs(back - states) <= 1e-12 * (1.0 + np.abs(states)) * 10.0)
    images = regularization.stereo_to_sphere(states)
    relation = np.linalg.norm(images[:, 4:], axis=1) * (1.0 - images[:, 0])
    assert_allclose(relation, np.linalg.norm(states[:, 3:], axis=1), rtol=1e-12, atol=1e-14)


def test_physical_position_is_g(rng):
    states = random_phase_states(100, rng)
    r = regularization.phase_to_regularized(states)
    assert_allclose(regularization.g_components(r), states[:, :3], rtol=1e-12, atol=1e-13)


def test_north_pole_fiber_values(intermediate):
    c = h12(intermediate) - 0.1
    r = _north_pole_state([0.6, 0.0, 0.8])
    assert regularization.f_factor(intermediate, c, r) == 1.0
    assert_allclose(regularization.g_components(r), 0.0)
    assert_allclose(regularization.k_tilde(intermediate, c, r), 0.0, atol=1e-15)
    assert_allclose(regularization.q_hamiltonian(intermediate, c, r), 0.5)
    assert_allclose(regularization.natural_liouville_pairing(intermediate, c, r), 1.0)


def test_transformed_hamiltonian_matches_k_c(params, rng):
    states = random_phase_states(500, rng, r_range=(0.1, 2.0))
    c = h12(params) - 0.3
    r = regularization.phase_to_regularized(states)
    expected = regularization.k_c(params, c, states)
    assert np.all(np.abs(regularization.k_tilde(params, c, r) - expected) <= 1e-9 * (1.0 + np.abs(expected)))


def test_level_set_maps_to_q_level(params):
    c = h12(params) - 0.1
    states = contact.sample_level_set(params, c, 1000, rng_seed=5)
    r = regularization.phase_to_regularized(states)
    assert np.max(np.abs(regularization.q_hamiltonian(params, c, r) - 0.5)) < 1e-10
    assert np.max(np.abs(regularization.k_tilde(params, c, r))) < 1e-10


def test_pairings_agree_on_level_set(params):
    c = h12(params) - 0.1
    states = contact.sample_level_set(params, c, 1000, rng_seed=6)
    r = regularization.phase_to_regularized(states)
    radius = np.linalg.norm(states[:, :3], axis=1)
    assert_allclose(
        regularization.natural_liouville_pairing(params, c, r),
        radius * contact.liouville_pairing(params, states),
        rtol=1e-8,
        atol=1e-10,
    )


def test_natural_pairing_is_fiber_derivative(intermediate, rng):
    c = h12(intermediate) - 0.2
    r = regularization.phase_to_regularized(random_phase_states(200, rng, r_range=(0.1, 2.0)))
    h = 1e-6

    def scaled(factor):
        scaled_r = r.copy()
        scaled_r[:, 4:] *= factor
        return regularization.q_hamiltonian(intermediate, c, scaled_r)

    numeric = (scaled(1.0 + h) - scaled(1.0 - h)) / (2.0 * h)
    pairing = regularization.natural_liouville_pairing(intermediate, c, r)
    assert np.all(np.abs(pairing - numeric) <= 1e-6 * (1.0 + np.abs(pairing)))


def test_q_gradient(equal_masses, rng):
    c = h12(equal_masses) - 0.2
    r = rng.standard_normal((100, 8))
    h = 1e-6
    numeric = np.zeros_like(r)
    for i in range(8):
        shift = np.zeros(8)
        shift[i] = h
        numeric[:, i] = (
            regularization.q_hamiltonian(equal_masses, c, r + shift)
            - regularization.q_hamiltonian(equal_masses, c, r - shift)
        ) / (2.0 * h)
    gradient = regularization.q_gradient(equal_masses, c, r)
    assert np.all(np.abs(gradient - numeric) <= 1e-5 * (1.0 + np.abs(gradient)))


def test_vector_field_is_tangent(intermediate, rng):
    c = h12(intermediate) - 0.1
    r = regularization.phase_to_regularized(contact.sample_level_set(intermediate, c, 200, rng_seed=9))
    field = regularization.regularized_vector_field(intermediate, c, r)
    xi, eta = r[:, :4], r[:, 4:]
    xi_dot, eta_dot = field[:, :4], field[:, 4:]
    scale = 1.0 + np.linalg.norm(field, axis=1)
    assert np.all(np.abs(np.sum(xi * xi_dot, axis=1)) <= 1e-12 * scale)
    assert np.all(np.abs(np.sum(xi_dot * eta + xi * eta_dot, axis=1)) <= 1e-12 * scale * (1.0 + np.linalg.norm(eta, axis=1)))
    q_rate = np.sum(regularization.q_gradient(intermediate, c, r) * field, axis=1)
    assert np.all(np.abs(q_rate) <= 1e-10 * scale**2)


def test_vector_field_is_reparametrized_physical_flow(intermediate, rng):
    c = h12(intermediate) - 0.1
    states = contact.sample_level_set(intermediate, c, 100, rng_seed=10)
    states = states[np.linalg.norm(states[:, :3], axis=1) > 0.05]
    r = regularization.phase_to_regularized(states)
    field = regularization.regularized_vector_field(intermediate, c, r)
    h = 1e-7
    numeric = (
        regularization.regularized_to_phase(r + h * field) - regularization.regularized_to_phase(r - h * field)
    ) / (2.0 * h)
    radius = np.linalg.norm(states[:, :3], axis=1)
    expected = radius[:, None] * model.vector_field(intermediate, states)
    assert np.all(np.abs(numeric - expected) <= 1e-5 * (1.0 + np.abs(expected)))


def test_canonical_one_forms_agree(rng):
    r = regularization.phase_to_regularized(random_phase_states(100, rng))
    directions = rng.standard_normal((100, 8))
    defect = regularization.liouville_form_defect(r, directions)
    assert np.all(defect <= 1e-6 * (1.0 + np.linalg.norm(r[:, 4:], axis=1)))


def test_fiber_radius_at_north_pole(intermediate, rng):
    c = h12(intermediate) - 0.1
    xi = np.array([1.0, 0.0, 0.0, 0.0])
    for _ in range(20):
        eta_hat = regularization.random_unit_tangent(xi, rng)
        assert abs(eta_hat[0]) < 1e-15
        assert_allclose(regularization.solve_fiber_radius(intermediate, c, xi, eta_hat), 1.0, rtol=1e-12)


def test_fiber_radius_without_root(intermediate):
    xi = np.array([1.0, 0.0, 0.0, 0.0])
    with pytest.raises(RootFindError):
        regularization.solve_fiber_radius(intermediate, h12(intermediate) - 0.1, xi, [0, 1, 0, 0], bracket=(2.0, 10.0))


def _near_pole_points(rng, m, s_max=0.05):
    s = s_max * (1.0 - rng.uniform(size=m))
    direction = rng.standard_normal((m, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    xi = np.column_stack([1.0 - s, np.sqrt(s * (2.0 - s))[:, None] * direction])
    return xi, regularization.random_unit_tangent(xi, rng)


def test_fiber_radius_away_from_north_pole(intermediate, rng):
    c = h12(intermediate) - 0.1
    xi, eta_hat = _near_pole_points(rng, 20)
    for point, direction in zip(xi, eta_hat):
        radius = regularization.solve_fiber_radius(intermediate, c, point, direction)
        r = regularization.regularized_state(point, radius * direction)
        assert radius * regularization.f_factor(intermediate, c, r) == pytest.approx(1.0, abs=1e-13)
        cubic = regularization._fiber_polynomial(intermediate, c, point, direction)
        roots = np.roots(cubic)
        positive = roots[(np.abs(roots.imag) < 1e-12) & (roots.real > 0)].real
        assert radius == pytest.approx(np.min(positive), rel=1e-9)


def test_vectorized_fiber_radii_match_scalar(intermediate, rng):
    c = h12(intermediate) - 0.1
    xi, eta_hat = _near_pole_points(rng, 200)
    radii = regularization.solve_fiber_radii(intermediate, c, xi, eta_hat)
    assert radii.shape == (200,)
    scalar = [regularization.solve_fiber_radius(intermediate, c, x, e) for x, e in zip(xi, eta_hat)]
    assert_allclose(radii, scalar, rtol=1e-13)
    missing = regularization.solve_fiber_radii(intermediate, c, xi[:3], eta_hat[:3], bracket=(1e-6, 1e-3))
    assert np.all(np.isnan(missing))


def test_near_collision_samples(intermediate):
    c = h12(intermediate) - 0.1
    samples, n_skipped = regularization.sample_q_level_near_collision(intermediate, c, 0.04, 500, rng_seed=1)
    assert samples.shape == (500, 8)
    assert n_skipped == 0
    assert np.max(np.abs(regularization.q_hamiltonian(intermediate, c, samples) - 0.5)) < 1e-12
    momentum = np.linalg.norm(samples[:, 4:], axis=1) * (1.0 - samples[:, 0])
    assert np.all(momentum < 0.04)
    xi_defect, orthogonality = regularization.constraint_defect(samples)
    assert np.max(xi_defect) < 1e-12
    assert np.max(orthogonality) < 1e-12
    again, _ = regularization.sample_q_level_near_collision(intermediate, c, 0.04, 500, rng_seed=1)
    assert np.array_equal(samples, again)
    batched, _ = regularization.sample_q_level_near_collision(
        intermediate, c, 0.04, 500, rng_seed=1, regularization_properties={"sample_batch": 64}
    )
    assert batched.shape == (500, 8)
    assert np.max(np.abs(regularization.q_hamiltonian(intermediate, c, batched) - 0.5)) < 1e-12


def test_near_collision_sampler_domain(intermediate):
    with pytest.raises(DomainError):
        regularization.sample_q_level_near_collision(intermediate, h12(intermediate) + 0.1, 0.04, 10)
    with pytest.raises(ValueError):
        regularization.sample_q_level_near_collision(intermediate, h12(intermediate) - 0.1, 0.0, 10)


def test_bound_constant(intermediate):
    constant, eps_max = regularization.estimate_bound_constant(intermediate, h12(intermediate) - 0.1, n=2000)
    assert constant >= 0.0
    assert_allclose(eps_max, 0.5 / (1.0 + constant))
    assert 1.0 - 2.0 * eps_max * (1.0 + constant) >= -1e-15


@pytest.mark.parametrize("mu, offset", [(0.0, 0.2), (0.5, 0.01), (0.2, 0.1)])
def test_regularized_transversality_scan(mu, offset):
    p = model.derive_parameters(mu)
    report = regularization.regularized_transversality_scan(
        p, h12(p) - offset, n=5000, rng_seed=2, scan_properties=SERIAL, regularization_properties={"n_estimate": 5000}
    )
    assert report.passed
    assert report.min_value > 0.0
    assert all(count == 0 for count in report.extra["violations"].values())
    assert report.extra["max_eta_norm"] <= 2.0
    assert report.extra["min_f"] >= 0.5
    assert report.extra["lower_bound"] > 0.0


def test_regularized_scan_clamps_eps(intermediate):
    scan = regularization.RegularizedTransversalityScan(
        intermediate, h12(intermediate) - 0.1, eps=10.0, scan_properties=SERIAL, regularization_properties={"n_estimate": 2000}
    )
    assert scan.eps <= 0.05
    assert scan.eps <= 0.9 * scan.eps_max
    report = scan.run(1000, rng_seed=3)
    assert report.passed
    frame = scan.samples_dataframe()
    assert list(frame.columns[:8]) == regularization._regularized_labels
    assert np.max(np.abs(frame["Q"] - 0.5)) < 1e-12
