import itertools
from dataclasses import dataclass

import numpy as np
import pandas as pd

from hill4bp import model
from hill4bp.exceptions import DomainError
from hill4bp.reports import ScanReport, verdict_from
from hill4bp.utils import create_log

log = create_log()

_available_kinds = ["symplectic", "anti-symplectic"]

# Signs on (x, y, z, px, py, pz).
_spatial_signs = {
    "id": (1, 1, 1, 1, 1, 1),
    "-id": (-1, -1, -1, -1, -1, -1),
    "sigma": (1, 1, -1, 1, 1, -1),
    "-sigma": (-1, -1, 1, -1, -1, 1),
    "rho1": (1, -1, -1, -1, 1, 1),
    "rho2": (1, -1, 1, -1, 1, -1),
    "rho3": (-1, 1, -1, 1, -1, 1),
    "rho4": (-1, 1, 1, 1, -1, -1),
}

# Signs on (x, y, px, py), the coordinates of Fix(sigma).
_planar_signs = {
    "id": (1, 1, 1, 1),
    "-id": (-1, -1, -1, -1),
    "rho_x": (1, -1, -1, 1),
    "rho_y": (-1, 1, 1, -1),
}

_planar_indices = [0, 1, 3, 4]


def symplectic_matrix(dimension):
    """Standard symplectic matrix on (q, p) coordinates of the given even dimension."""
    n = dimension // 2
    return np.block(
        [
            [np.zeros((n, n), dtype=int), np.eye(n, dtype=int)],
            [-np.eye(n, dtype=int), np.zeros((n, n), dtype=int)],
        ]
    )


def symplectic_signature(matrix):
    """
    Returns +1 if M^T J M = J, -1 if M^T J M = -J and 0 otherwise.
    """
    matrix = np.asarray(matrix)
    J = symplectic_matrix(matrix.shape[0])
    pulled_back = matrix.T @ J @ matrix
    if np.array_equal(pulled_back, J):
        return 1
    if np.array_equal(pulled_back, -J):
        return -1
    return 0


@dataclass(frozen=True, eq=False)
class Involution:
    """Linear (anti-)symplectic involution, stored as an exact integer matrix."""

    name: str
    matrix: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in _available_kinds:
            raise ValueError(f"Kind {self.kind} not available, choose in {_available_kinds}")

    @classmethod
    def init_from_signs(cls, name, signs):
        matrix = np.diag(np.array(signs, dtype=int))
        signature = symplectic_signature(matrix)
        if signature == 0:
            raise DomainError(f"{name} is neither symplectic nor anti-symplectic")
        kind = "symplectic" if signature == 1 else "anti-symplectic"
        return cls(name=name, matrix=matrix, kind=kind)

    @property
    def planar(self):
        return self.matrix.shape[0] == 4

    @property
    def phase_matrix(self):
        """The 6x6 matrix acting on phase states; planar ones act trivially on z, p_z."""
        if not self.planar:
            return self.matrix
        matrix = np.eye(6, dtype=int)
        matrix[np.ix_(_planar_indices, _planar_indices)] = self.matrix
        return matrix

    def apply(self, state):
        return np.asarray(state, dtype=float) @ self.phase_matrix.T

    def compose(self, other):
        """Matrix of self o other."""
        return self.matrix @ other.matrix

    def is_involution(self):
        return np.array_equal(self.matrix @ self.matrix, np.eye(self.matrix.shape[0], dtype=int))

    def __eq__(self, other):
        return isinstance(other, Involution) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())

    def __repr__(self):
        return f"Involution({self.name}, {self.kind}, diag={np.diag(self.matrix).tolist()})"


def builtin_involutions(planar=False):
    """
    The builtin_involutions function returns the linear symmetries of the
    Hamiltonian: +-id, +-sigma and rho1..rho4 in space, +-id, rho_x and rho_y
    on Fix(sigma).

    Args:
        planar: Return the planar symmetries acting on (x, y, px, py)

    Returns:
        A list of Involution
    """
    signs = _planar_signs if planar else _spatial_signs
    return [Involution.init_from_signs(name, s) for name, s in signs.items()]


def involution_by_name(name, planar=None):
    """
    The involution_by_name function looks an involution up by name. The names
    "id" and "-id" exist in both groups; without planar the spatial one is
    returned.

    Args:
        name: Name of the involution
        planar: Search only the planar (True) or spatial (False) group, both if None
    """
    groups = (False, True) if planar is None else (bool(planar),)
    for group in groups:
        for inv in builtin_involutions(planar=group):
            if inv.name == name:
                return inv
    available = [
        key for group in groups for key in (_planar_signs if group else _spatial_signs)
    ]
    raise ValueError(f"Involution {name} is not available, choose in {available}")


def _find_by_matrix(matrix, planar):
    for inv in builtin_involutions(planar=planar):
        if np.array_equal(inv.matrix, matrix):
            return inv
    return None


def random_phase_states(n_samples, rng, r_range=(0.05, 3.0), momentum_scale=1.0, planar=False):
    """Phase states with |position| uniform in r_range and gaussian momenta."""
    directions = rng.standard_normal((n_samples, 3))
    if planar:
        directions[:, 2] = 0.0
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    radii = rng.uniform(r_range[0], r_range[1], n_samples)
    momenta = momentum_scale * rng.standard_normal((n_samples, 3))
    if planar:
        momenta[:, 2] = 0.0
    return np.concatenate([directions * radii[:, None], momenta], axis=1)


def verify_hamiltonian_invariance(p, inv, n_samples=1000, rng_seed=0, tolerance=1e-12):
    """
    The verify_hamiltonian_invariance function evaluates H(inv(s)) - H(s) on
    random states. Planar involutions are checked on states of Fix(sigma).

    Args:
        p: ParameterSet
        inv: Involution
        n_samples: Number of random states
        rng_seed: Seed of the generator
        tolerance: Relative tolerance of the verdict

    Returns:
        A ScanReport whose min_value is minus the largest relative deviation
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(rng_seed)
    states = random_phase_states(n_samples, rng, planar=inv.planar)
    energy = model.hamiltonian(p, states)
    energy_image = model.hamiltonian(p, inv.apply(states))
    deviation = np.abs(energy_image - energy) / np.maximum(1.0, np.abs(energy))
    index = int(np.argmax(deviation))
    report = ScanReport(
        verdict=verdict_from(deviation[index] < tolerance),
        min_value=-float(deviation[index]),
        argmin=states[index].tolist(),
        n_samples=n_samples,
        rng_seed=rng_seed,
        parameters={"mu": p.mu},
        bound_kind=f"hamiltonian_invariance:{inv.name}",
        extra={"max_relative_deviation": float(deviation[index]), "tolerance": tolerance},
    )
    log.add(f"Invariance of H under {inv.name}: {report.verdict}", level="debug")
    return report


def group_closure_table():
    """
    The group_closure_table function tabulates the products of the spatial
    linear symmetries.

    Returns:
        A pandas DataFrame whose entry (g, h) is the name of g o h

    Raises:
        DomainError: a product leaves the set of symmetries
    """
    elements = builtin_involutions()
    table = {}
    for g in elements:
        row = {}
        for h in elements:
            product = _find_by_matrix(g.compose(h), planar=False)
            if product is None:
                raise DomainError(f"{g.name} o {h.name} is not a linear symmetry")
            row[h.name] = product.name
        table[g.name] = row
    return pd.DataFrame.from_dict(table, orient="index")


def is_elementary_abelian(table):
    """True if the table is abelian, every element squares to id and the order is 8."""
    names = list(table.index)
    abelian = all(table.loc[g, h] == table.loc[h, g] for g in names for h in names)
    self_inverse = all(table.loc[g, g] == "id" for g in names)
    return abelian and self_inverse and len(names) == 8


def restrict_to_planar(inv):
    """
    The restrict_to_planar function restricts a spatial symmetry to Fix(sigma).

    Args:
        inv: Spatial Involution

    Returns:
        The planar Involution acting on (x, y, px, py)

    Raises:
        DomainError: inv does not preserve the planar subspace
    """
    if inv.planar:
        return inv
    out_of_plane = [2, 5]
    leak = inv.matrix[np.ix_(out_of_plane, _planar_indices)]
    if np.any(leak != 0):
        raise DomainError(f"{inv.name} does not preserve Fix(sigma)")
    matrix = inv.matrix[np.ix_(_planar_indices, _planar_indices)]
    known = _find_by_matrix(matrix, planar=True)
    if known is not None:
        return known
    signature = symplectic_signature(matrix)
    if signature == 0:
        raise DomainError(f"The restriction of {inv.name} is not (anti-)symplectic")
    kind = "symplectic" if signature == 1 else "anti-symplectic"
    return Involution(name=f"{inv.name}|planar", matrix=matrix, kind=kind)


def extend_planar(inv):
    """
    Spatial extension of a planar symmetry: z, p_z are kept for symplectic
    ones, z -> -z and p_z -> p_z for anti-symplectic ones.
    """
    if not inv.planar:
        raise DomainError(f"{inv.name} is already spatial")
    signs = np.diag(inv.matrix)
    z_signs = (1, 1) if inv.kind == "symplectic" else (-1, 1)
    spatial = (signs[0], signs[1], z_signs[0], signs[2], signs[3], z_signs[1])
    known = _find_by_matrix(np.diag(np.array(spatial, dtype=int)), planar=False)
    return known


def projection_table():
    """Name of the planar restriction of every spatial symmetry."""
    return {inv.name: restrict_to_planar(inv).name for inv in builtin_involutions()}


def search_signed_permutation_symmetries(p, n_samples=64, rng_seed=0, tolerance=1e-10):
    """
    The search_signed_permutation_symmetries function enumerates every signed
    6x6 permutation matrix which is an involution, symplectic or
    anti-symplectic, and leaves H invariant on random states.

    Args:
        p: ParameterSet
        n_samples: Number of random states used for the invariance test
        rng_seed: Seed of the generator
        tolerance: Relative tolerance of the invariance test

    Returns:
        The list of Involution found
    """
    rng = np.random.default_rng(rng_seed)
    states = random_phase_states(n_samples, rng)
    energy = model.hamiltonian(p, states)
    identity = np.eye(6, dtype=int)
    found = []
    n_candidates = 0
    for permutation in itertools.permutations(range(6)):
        if any(permutation[permutation[i]] != i for i in range(6)):
            continue
        for signs in itertools.product((1, -1), repeat=6):
            matrix = np.zeros((6, 6), dtype=int)
            matrix[np.arange(6), permutation] = signs
            if not np.array_equal(matrix @ matrix, identity):
                continue
            signature = symplectic_signature(matrix)
            if signature == 0:
                continue
            n_candidates += 1
            image = states @ matrix.T
            if np.any(np.linalg.norm(image[:, :3], axis=1) < 1e-12):
                continue
            deviation = np.abs(model.hamiltonian(p, image) - energy)
            if np.all(deviation < tolerance * np.maximum(1.0, np.abs(energy))):
                known = _find_by_matrix(matrix, planar=False)
                kind = "symplectic" if signature == 1 else "anti-symplectic"
                found.append(
                    known
                    if known is not None
                    else Involution(name="unlisted", matrix=matrix, kind=kind)
                )
    log.add(
        f"Signed permutation search at mu={p.mu}: {n_candidates} (anti-)symplectic "
        f"involutions tested, {len(found)} symmetries found"
    )
    return found
