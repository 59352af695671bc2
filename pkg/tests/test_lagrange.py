import numpy as np
import pytest
from numpy.testing import assert_allclose

from hill4bp import lagrange, model, symmetry
from hill4bp.exceptions import DegenerateError, DomainError


def test_lagrange_points_hill_limit(hill):
    assert_allclose(lagrange.lagrange_point(hill, "L1"), [0.6933612744, 0.0, 0.0], rtol=1e-9)
    assert_allclose(lagrange.lagrange_point(hill, "L2"), [-0.6933612744, 0.0, 0.0], rtol=1e-9)
    assert sorted(lagrange.lagrange_points(hill)) == ["L1", "L2"]
    with pytest.raises(DegenerateError):
        lagrange.lagrange_point(hill, "L3")
    with pytest.raises(DegenerateError):
        lagrange.lagrange_points(hill, names=["L4"])


def test_lagrange_points_intermediate(intermediate):
    assert_allclose(lagrange.lagrange_point(intermediate, "L1")[0], 0.7289538201, rtol=1e-9)
    assert_allclose(lagrange.lagrange_point(intermediate, "L3")[1], 1.3370841233, rtol=1e-9)
    assert sorted(lagrange.lagrange_points(intermediate)) == ["L1", "L2", "L3", "L4"]


def test_unknown_point(intermediate):
    with pytest.raises(ValueError):
        lagrange.lagrange_point(intermediate, "L5")


def test_critical_values_examples(hill, equal_masses):
    h12, h34 = lagrange.critical_values(hill)
    assert_allclose(h12, -2.1633743555, rtol=1e-9)
    assert h34 is None
    h12, h34 = lagrange.critical_values(equal_masses)
    assert_allclose(h12, -1.9655560457, rtol=1e-9)
    assert_allclose(h34, -1.3628404446, rtol=1e-9)


def test_critical_points_across_mass_ratios():
    for mu in np.linspace(0.0, 0.5, 101)[1:]:
        p = model.derive_parameters(mu)
        points = lagrange.lagrange_points(p)
        gradient = model.potential_gradient(p, np.array(list(points.values())))
        assert np.max(np.linalg.norm(gradient, axis=1)) < 1e-10
        h12, h34 = lagrange.critical_values(p)
        assert h12 < -1.5
        assert h12 < h34 < 0.0


def test_l3_recedes_as_mu_decreases():
    distances = [
        lagrange.lagrange_point(model.derive_parameters(mu), "L3")[1]
        for mu in [0.5, 0.2, 0.05, 0.00095, 1e-6]
    ]
    assert np.all(np.diff(distances) > 0)


def test_lifted_points_are_equilibria(params):
    h12, h34 = lagrange.critical_values(params)
    for name, position in lagrange.lagrange_points(params).items():
        lifted = lagrange.lift_to_phase(position)
        assert_allclose(lifted, [position[0], position[1], 0.0, -position[1], position[0], 0.0])
        assert np.linalg.norm(model.vector_field(params, lifted)) < 1e-12
        expected = h12 if name in ("L1", "L2") else h34
        assert_allclose(model.hamiltonian(params, lifted), expected, rtol=1e-12)


def test_lift_requires_planar_point():
    with pytest.raises(DomainError):
        lagrange.lift_to_phase([0.5, 0.0, 0.1])


def test_reversors_exchange_lagrange_points(intermediate):
    points = {name: lagrange.lift_to_phase(q) for name, q in lagrange.lagrange_points(intermediate).items()}
    rho_x = symmetry.involution_by_name("rho_x")
    rho_y = symmetry.involution_by_name("rho_y")
    assert_allclose(rho_y.apply(points["L1"]), points["L2"], atol=0.0)
    assert_allclose(rho_x.apply(points["L1"]), points["L1"], atol=0.0)
    assert_allclose(rho_x.apply(points["L3"]), points["L4"], atol=0.0)
    assert_allclose(rho_y.apply(points["L3"]), points["L3"], atol=0.0)


def test_check_energy_below_h12(intermediate):
    h12, _ = lagrange.critical_values(intermediate)
    lagrange.check_energy_below_h12(intermediate, h12 - 1e-9)
    with pytest.raises(DomainError):
        lagrange.check_energy_below_h12(intermediate, h12)
    with pytest.raises(DomainError):
        lagrange.check_energy_below_h12(intermediate, np.nan)


@pytest.mark.parametrize("mu, n_points", [(0.0, 2), (0.2, 4), (0.5, 4)])
def test_newton_oracle_matches_closed_form(mu, n_points):
    p = model.derive_parameters(mu)
    points, failures = lagrange.find_critical_points_numeric(p, return_failures=True)
    assert len(points) == n_points
    matched, unmatched = lagrange.match_to_closed_form(p, points)
    assert unmatched == 0
    assert sorted(matched) == sorted(lagrange.lagrange_points(p))
    assert all(distance < 1e-9 for distance in matched.values())
    assert all(failure["error"] == "NonConvergence" for failure in failures)


def test_newton_from_perturbed_seed(intermediate):
    l1 = lagrange.lagrange_point(intermediate, "L1")
    points = lagrange.find_critical_points_numeric(intermediate, seed_grid=[l1 + [1e-3, 1e-3, 0.0]])
    assert_allclose(points, [l1], atol=1e-10)


def test_newton_rejects_seed_at_origin(intermediate):
    with pytest.raises(DomainError):
        lagrange.find_critical_points_numeric(intermediate, seed_grid=[[0.0, 0.0]])


def test_lagrange_summary(intermediate):
    summary = lagrange.lagrange_summary(intermediate)
    assert set(summary["points"]) == {"L1", "L2", "L3", "L4"}
    assert summary["h12"] < summary["h34"]
    assert max(summary["gradient_norm"].values()) < 1e-10
