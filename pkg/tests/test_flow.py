import numpy as np
import pytest
from conftest import h12, retrograde_state
from numpy.testing import assert_allclose

from hill4bp import flow, model, regularization, symmetry
from hill4bp.exceptions import CollisionStop, DomainError, NonConvergence


def test_energy_is_conserved(intermediate):
    trajectory = flow.integrate_physical(intermediate, retrograde_state(), 10.0, tol=1e-11)
    assert trajectory.times[-1] == pytest.approx(10.0)
    assert trajectory.drift(intermediate) < 1e-8


def test_fix_sigma_is_invariant(intermediate):
    trajectory = flow.integrate_physical(intermediate, retrograde_state(radius=0.5), 5.0)
    assert np.all(trajectory.states[:, 2] == 0.0)
    assert np.all(trajectory.states[:, 5] == 0.0)


def test_z_axis_is_invariant(intermediate):
    trajectory = flow.integrate_physical(intermediate, [0.0, 0.0, 1.0, 0.0, 0.0, 0.5], 0.2)
    assert np.all(trajectory.states[:, [0, 1, 3, 4]] == 0.0)


def test_collision_stops_the_physical_flow(hill):
    with pytest.raises(CollisionStop) as error:
        flow.integrate_physical(hill, [0.0, 0.0, 0.5, 0.0, 0.0, 0.0], 5.0)
    if error.value.trajectory is not None:
        assert np.linalg.norm(error.value.trajectory.final_state[:3]) < 1e-5


def test_tolerance_range(intermediate):
    with pytest.raises(ValueError):
        flow.integrate_physical(intermediate, retrograde_state(), 1.0, tol=1e-3)
    with pytest.raises(ValueError):
        flow.integrate_physical(intermediate, retrograde_state(), 1.0, tol=1e-15)


def test_dense_output(intermediate):
    trajectory = flow.integrate_physical(intermediate, retrograde_state(), 2.0)
    assert_allclose(trajectory.at([0.0])[0], retrograde_state(), atol=1e-12)
    assert_allclose(trajectory.at(trajectory.times[-1])[0], trajectory.final_state, atol=1e-12)
    with pytest.raises(ValueError):
        trajectory.at([3.0])
    frame = trajectory.to_dataframe(intermediate)
    assert list(frame.columns) == ["t"] + model._state_labels + ["H"]


def test_integrate_batch(intermediate):
    states = np.array([retrograde_state(0.3), retrograde_state(0.4)])
    trajectories = flow.integrate_batch(intermediate, states, 1.0, number_worker=1)
    assert len(trajectories) == 2
    assert_allclose(trajectories[1].states[0], states[1])


def test_time_reversal(intermediate):
    state = retrograde_state(radius=0.3, z=0.05, pz=0.02)
    for name in ["rho1", "rho2", "rho3", "rho4"]:
        reversor = symmetry.involution_by_name(name)
        assert flow.time_reversal_defect(intermediate, state, reversor, 3.0) < 1e-8
    with pytest.raises(DomainError):
        flow.time_reversal_defect(intermediate, state, symmetry.involution_by_name("sigma"), 1.0)


def test_collision_orbit_state(hill):
    c = h12(hill) - 0.2
    state = flow.collision_orbit_state(hill, c)
    assert_allclose(model.hamiltonian(hill, state), c, rtol=1e-12)
    assert np.all(state[[0, 1, 3, 4, 5]] == 0.0)
    r0 = regularization.phase_to_regularized(state)
    assert_allclose(regularization.q_hamiltonian(hill, c, r0), 0.5, rtol=1e-12)


def test_regularized_flow_crosses_collision(hill):
    c = h12(hill) - 0.2
    r0 = regularization.phase_to_regularized(flow.collision_orbit_state(hill, c))
    trajectory = flow.integrate_regularized(hill, c, r0, 10.0)
    assert trajectory.drift(hill, c) < 1e-8
    assert trajectory.closest_north_pole_distance() < 1e-6
    assert np.all(np.diff(trajectory.physical_time) >= 0.0)
    xi_defect, orthogonality = regularization.constraint_defect(trajectory.states)
    assert np.max(xi_defect) < 1e-8
    assert np.max(orthogonality) < 1e-8
    frame = trajectory.to_dataframe(hill, c)
    assert list(frame.columns) == ["s"] + regularization._regularized_labels + ["Q", "t"]


def test_regularized_flow_requires_q_level(hill):
    r0 = regularization.phase_to_regularized(flow.collision_orbit_state(hill, h12(hill) - 0.2))
    with pytest.raises(DomainError):
        flow.integrate_regularized(hill, h12(hill) - 0.3, r0, 1.0)


def test_physical_and_regularized_flows_agree(intermediate):
    state = retrograde_state(radius=0.3, z=0.05, pz=0.02)
    c = float(model.hamiltonian(intermediate, state))
    r0 = regularization.phase_to_regularized(state)
    trajectory = flow.integrate_regularized(intermediate, c, r0, 2.0, tol=1e-12)
    assert flow.physical_regularized_mismatch(intermediate, c, trajectory) < 1e-6


def test_symmetric_periodic_orbit(hill):
    c = -4.0
    orbit = flow.symmetric_shooting(hill, c, symmetry.involution_by_name("rho_x"), guess=(0.115, -2.9))
    assert orbit.residual < 1e-9
    assert orbit.reversor == "rho_x"
    assert_allclose(model.hamiltonian(hill, orbit.initial_state), c, rtol=1e-10)
    radius = orbit.initial_state[0]
    kepler_period = 2.0 * np.pi / (radius ** (-1.5) + 1.0)
    assert orbit.period == pytest.approx(kepler_period, rel=0.05)
    trajectory = flow.integrate_physical(hill, orbit.initial_state, orbit.period, tol=1e-12)
    assert np.linalg.norm(trajectory.final_state - orbit.initial_state) < 1e-6
    assert orbit.to_dict()["iterations"] == orbit.iterations


def test_symmetric_shooting_accepts_spatial_reversor(hill):
    orbit = flow.symmetric_shooting(hill, -4.0, symmetry.involution_by_name("rho1"), guess=(0.115, -2.9))
    assert orbit.reversor == "rho_x"


def test_symmetric_shooting_failure(hill):
    with pytest.raises(NonConvergence):
        flow.symmetric_shooting(
            hill, -4.0, symmetry.involution_by_name("rho_x"), guess=(0.13, -2.9), max_iterations=1
        )
    with pytest.raises(DomainError):
        flow.symmetric_shooting(hill, -4.0, symmetry.involution_by_name("sigma"), guess=(0.115, -2.9))
