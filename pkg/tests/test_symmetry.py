import numpy as np
import pytest

from hill4bp import model, symmetry
from hill4bp.exceptions import DomainError


def _signed_permutation(pairs, size=6):
    matrix = np.zeros((size, size), dtype=int)
    for i, j in pairs:
        matrix[i, j] = 1
    return matrix


def test_builtin_involutions():
    spatial = symmetry.builtin_involutions()
    planar = symmetry.builtin_involutions(planar=True)
    assert len(spatial) == 8
    assert len(planar) == 4
    assert all(inv.is_involution() for inv in spatial + planar)
    kinds = {inv.name: inv.kind for inv in spatial + planar}
    for name in ["id", "-id", "sigma", "-sigma"]:
        assert kinds[name] == "symplectic"
    for name in ["rho1", "rho2", "rho3", "rho4", "rho_x", "rho_y"]:
        assert kinds[name] == "anti-symplectic"


def _signature_of(name):
    return symmetry.symplectic_signature(symmetry.involution_by_name(name).matrix)


def test_symplectic_signature():
    assert _signature_of("sigma") == 1
    assert _signature_of("rho2") == -1
    assert symmetry.symplectic_signature(np.diag([1, 1, 1, -1, 1, 1])) == 0


def test_involution_by_name():
    assert symmetry.involution_by_name("rho_x").planar
    with pytest.raises(ValueError):
        symmetry.involution_by_name("rho5")


def test_compositions():
    rho1 = symmetry.involution_by_name("rho1")
    rho2 = symmetry.involution_by_name("rho2")
    sigma = symmetry.involution_by_name("sigma")
    assert np.array_equal(rho1.compose(rho2), sigma.matrix)
    assert np.array_equal(rho1.compose(rho1), np.eye(6, dtype=int))


@pytest.mark.parametrize("planar", [False, True])
def test_hamiltonian_invariance(params, planar):
    for inv in symmetry.builtin_involutions(planar=planar):
        report = symmetry.verify_hamiltonian_invariance(params, inv, n_samples=1000)
        assert report.passed, inv.name
        assert report.min_value >= -1e-12


def test_exchange_of_axes_is_not_a_symmetry(intermediate):
    # (x, y, z, px, py, pz) -> (y, x, z, py, px, pz) breaks a x^2 + b y^2 since a != b.
    matrix = _signed_permutation([(0, 1), (1, 0), (2, 2), (3, 4), (4, 3), (5, 5)])
    swap = symmetry.Involution(name="swap_xy", matrix=matrix, kind="symplectic")
    assert swap.is_involution()
    report = symmetry.verify_hamiltonian_invariance(intermediate, swap, n_samples=100)
    assert not report.passed
    assert report.min_value < -1e-3


def test_group_is_elementary_abelian():
    table = symmetry.group_closure_table()
    assert table.shape == (8, 8)
    assert symmetry.is_elementary_abelian(table)
    assert table.loc["rho1", "rho2"] == "sigma"
    assert table.loc["rho1", "rho3"] == "-sigma"
    assert table.loc["sigma", "-sigma"] == "-id"


def test_restriction_to_fix_sigma():
    projection = symmetry.projection_table()
    assert projection["rho1"] == projection["rho2"] == "rho_x"
    assert projection["rho3"] == projection["rho4"] == "rho_y"
    assert projection["id"] == projection["sigma"] == "id"
    assert projection["-id"] == projection["-sigma"] == "-id"
    assert set(projection.values()) == {"id", "-id", "rho_x", "rho_y"}


def test_restriction_requires_invariant_plane():
    matrix = _signed_permutation([(0, 2), (2, 0), (1, 1), (3, 5), (5, 3), (4, 4)])
    exchange = symmetry.Involution(name="swap_xz", matrix=matrix, kind="symplectic")
    with pytest.raises(DomainError):
        symmetry.restrict_to_planar(exchange)


def test_extension_of_planar_symmetries():
    assert symmetry.extend_planar(symmetry.involution_by_name("rho_x")).name == "rho1"
    assert symmetry.extend_planar(symmetry.involution_by_name("rho_y")).name == "rho3"
    assert symmetry.extend_planar(symmetry.involution_by_name("-id", planar=True)).name == "-sigma"
    assert symmetry.extend_planar(symmetry.involution_by_name("id", planar=True)).name == "id"
    with pytest.raises(DomainError):
        symmetry.extend_planar(symmetry.involution_by_name("-id"))
    with pytest.raises(DomainError):
        symmetry.extend_planar(symmetry.involution_by_name("rho1"))


def test_lookup_of_shared_names():
    for name in ["id", "-id"]:
        assert not symmetry.involution_by_name(name).planar
        assert not symmetry.involution_by_name(name, planar=False).planar
        planar = symmetry.involution_by_name(name, planar=True)
        assert planar.planar
        assert planar.matrix.shape == (4, 4)
    assert symmetry.involution_by_name("rho_x", planar=True).planar
    with pytest.raises(ValueError):
        symmetry.involution_by_name("rho_x", planar=False)
    with pytest.raises(ValueError):
        symmetry.involution_by_name("rho1", planar=True)


def test_planar_involutions_act_on_fix_sigma(rng):
    states = symmetry.random_phase_states(50, rng, planar=True)
    image = symmetry.involution_by_name("rho_x").apply(states)
    assert np.all(image[:, 2] == 0.0)
    assert np.all(image[:, 5] == 0.0)
    assert np.array_equal(image[:, 1], -states[:, 1])


@pytest.mark.parametrize("mu", [0.0, 0.2, 0.5])
def test_signed_permutation_search_finds_the_group(mu):
    found = symmetry.search_signed_permutation_symmetries(model.derive_parameters(mu))
    assert sorted(inv.name for inv in found) == sorted(symmetry._spatial_signs)
