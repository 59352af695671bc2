from dataclasses import dataclass

import numpy as np
import pandas as pd
import sympy as sy

from hill4bp.exceptions import DomainError, SingularityError
from hill4bp.utils import _R_MIN_, create_log, sph2cart

log = create_log()

_state_labels = ["x", "y", "z", "px", "py", "pz"]
_parameter_labels = ["mu", "d", "lambda1", "lambda2", "a", "b"]

# Mass ratios quoted for this system, mu folded into [0, 1/2].
MU_PRESETS = {
    "hill": 0.0,
    "sun_jupiter": 0.00095,
    "hd28185": 0.00547,
    "intermediate": 0.2,
    "equal": 0.5,
}


def resolve_mu(value):
    """
    The resolve_mu function accepts either a float (or a string holding one)
    or the name of a preset in MU_PRESETS and returns the mass ratio.
    """
    if isinstance(value, str):
        if value in MU_PRESETS:
            return MU_PRESETS[value]
        try:
            return float(value)
        except ValueError:
            raise DomainError(
                f"Unknown mass ratio {value!r}, give a number or one of {list(MU_PRESETS)}"
            )
    return float(value)


def check_mu(mu):
    if not np.isfinite(mu) or mu < 0.0 or mu > 0.5:
        raise DomainError(
            f"The mass ratio mu={mu} is outside [0, 1/2]. "
            "Fold mu -> 1 - mu before calling, the model is symmetric under it."
        )


@dataclass(frozen=True)
class ParameterSet:
    """Mass ratio mu and the constants of the rotated Hill four-body Hamiltonian."""

    mu: float
    d: float
    lambda1: float
    lambda2: float
    a: float
    b: float

    @classmethod
    def init_from_mu(cls, mu):
        """
        The init_from_mu function derives d, lambda1, lambda2, a and b from mu.
        1 - d is evaluated as 3 mu (1 - mu) / (1 + d) so that lambda1 keeps its
        relative precision when mu goes to 0.

        Args:
            mu: Mass ratio in [0, 1/2]

        Returns:
            A ParameterSet

        Raises:
            DomainError: mu is not in [0, 1/2]
        """
        mu = float(mu)
        check_mu(mu)
        d = np.sqrt(1.0 - 3.0 * mu + 3.0 * mu**2)
        one_minus_d = 3.0 * mu * (1.0 - mu) / (1.0 + d)
        lambda1 = 1.5 * one_minus_d
        lambda2 = 1.5 * (1.0 + d)
        a = 0.5 * (1.0 - lambda2)
        b = 0.5 * (1.0 - lambda1)
        return cls(mu=mu, d=d, lambda1=lambda1, lambda2=lambda2, a=a, b=b)

    @property
    def r_l12(self):
        """Distance from L1/L2 to the origin, lambda2^(-1/3)."""
        return self.lambda2 ** (-1.0 / 3.0)

    @property
    def h12(self):
        """Critical value H(L1) = H(L2)."""
        return -1.5 * np.cbrt(self.lambda2)

    def to_dict(self):
        return {label: float(getattr(self, label)) for label in _parameter_labels}


def derive_parameters(mu):
    """Alias of ParameterSet.init_from_mu."""
    return ParameterSet.init_from_mu(mu)


def derive_parameters_extended(mu, digits=40):
    """
    The derive_parameters_extended function evaluates the closed forms of the
    parameters with sympy in arbitrary precision. The double given as mu is
    taken at its exact binary value.

    Args:
        mu: Mass ratio in [0, 1/2]
        digits: Number of significant digits

    Returns:
        A dictionary of sympy Floats keyed like ParameterSet fields

    """
    check_mu(float(mu))
    m = sy.Float(float(mu), digits)
    d = sy.sqrt(1 - 3 * m + 3 * m**2).evalf(digits)
    lambda1 = (sy.Rational(3, 2) * (1 - d)).evalf(digits)
    lambda2 = (sy.Rational(3, 2) * (1 + d)).evalf(digits)
    a = ((1 - lambda2) / 2).evalf(digits)
    b = ((1 - lambda1) / 2).evalf(digits)
    return {"mu": m, "d": d, "lambda1": lambda1, "lambda2": lambda2, "a": a, "b": b}


def parameter_table(mu_values):
    """
    The parameter_table function tabulates d, lambda1, lambda2, a and b over
    a list of mass ratios.

    Args:
        mu_values: Iterable of mass ratios in [0, 1/2]

    Returns:
        A pandas DataFrame with columns mu, d, lambda1, lambda2, a, b

    """
    rows = [ParameterSet.init_from_mu(mu).to_dict() for mu in mu_values]
    return pd.DataFrame(rows, columns=_parameter_labels)


def phase_state(x, y, z, px, py, pz):
    return np.stack(np.broadcast_arrays(x, y, z, px, py, pz), axis=-1).astype(float)


def _split_state(state):
    state = np.asarray(state, dtype=float)
    if state.shape[-1] != 6:
        raise ValueError(f"A phase state has 6 components, got shape {state.shape}")
    return [state[..., i] for i in range(6)]


def _radius(x, y, z):
    r = np.sqrt(x**2 + y**2 + z**2)
    if np.any(r < _R_MIN_):
        raise SingularityError(f"Evaluation closer than r_min={_R_MIN_} to the origin")
    return r


def hamiltonian(p, state):
    """
    The hamiltonian function evaluates
    1/2 |P|^2 + p_x y - p_y x - 1/r + a x^2 + b y^2 + z^2 / 2.

    Args:
        p: ParameterSet
        state: Array of phase states, last axis (x, y, z, px, py, pz)

    Returns:
        The energy

    Raises:
        SingularityError: a position is at the origin
    """
    x, y, z, px, py, pz = _split_state(state)
    r = _radius(x, y, z)
    return (
        0.5 * (px**2 + py**2 + pz**2)
        + px * y
        - py * x
        - 1.0 / r
        + p.a * x**2
        + p.b * y**2
        + 0.5 * z**2
    )


def hamiltonian_rotating_form(p, state):
    """
    The hamiltonian_rotating_form function evaluates the same energy as
    1/2 ((p_x + y)^2 + (p_y - x)^2 + p_z^2) + U(x, y, z).
    """
    x, y, z, px, py, pz = _split_state(state)
    kinetic = 0.5 * ((px + y) ** 2 + (py - x) ** 2 + pz**2)
    return kinetic + effective_potential(p, np.stack([x, y, z], axis=-1))


def jacobi_constant(p, state):
    return -2.0 * hamiltonian(p, state)


def effective_potential(p, position):
    """
    The effective_potential function evaluates
    U = -1/r - 1/2 (lambda2 x^2 + lambda1 y^2 - z^2).

    Args:
        p: ParameterSet
        position: Array of positions, last axis (x, y, z)

    Returns:
        The effective potential
    """
    position = np.asarray(position, dtype=float)
    x, y, z = position[..., 0], position[..., 1], position[..., 2]
    r = _radius(x, y, z)
    return -1.0 / r - 0.5 * (p.lambda2 * x**2 + p.lambda1 * y**2 - z**2)


def effective_potential_spherical(p, rho, theta, phi):
    """
    Effective potential in spherical coordinates,
    -1/rho - rho^2 / 2 (lambda2 cos^2 theta sin^2 phi + lambda1 sin^2 theta sin^2 phi - cos^2 phi).
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < _R_MIN_):
        raise SingularityError(f"Evaluation closer than r_min={_R_MIN_} to the origin")
    sin_phi2 = np.sin(phi) ** 2
    angular = (
        p.lambda2 * np.cos(theta) ** 2 * sin_phi2
        + p.lambda1 * np.sin(theta) ** 2 * sin_phi2
        - np.cos(phi) ** 2
    )
    return -1.0 / rho - 0.5 * rho**2 * angular


def spherical_to_position(rho, theta, phi):
    return np.stack(np.broadcast_arrays(*sph2cart(rho, theta, phi)), axis=-1)


def potential_gradient(p, position):
    """Gradient of the effective potential, last axis (dU/dx, dU/dy, dU/dz)."""
    position = np.asarray(position, dtype=float)
    x, y, z = position[..., 0], position[..., 1], position[..., 2]
    r3 = _radius(x, y, z) ** 3
    return np.stack(
        [x / r3 - p.lambda2 * x, y / r3 - p.lambda1 * y, z / r3 + z], axis=-1
    )


def potential_hessian(p, position):
    """Hessian of the effective potential, shape (..., 3, 3)."""
    position = np.asarray(position, dtype=float)
    r = _radius(position[..., 0], position[..., 1], position[..., 2])
    outer = position[..., :, None] * position[..., None, :]
    hess = -3.0 * outer / r[..., None, None] ** 5
    hess += np.eye(3) / r[..., None, None] ** 3
    hess -= np.diag([p.lambda2, p.lambda1, -1.0])
    return hess


def vector_field(p, state):
    """
    The vector_field function returns Hamilton's equations of the rotated
    Hamiltonian,
    (p_x + y, p_y - x, p_z, p_y - 2 a x - x/r^3, -p_x - 2 b y - y/r^3, -z - z/r^3).

    Args:
        p: ParameterSet
        state: Array of phase states

    Returns:
        The time derivative of the state, same shape as state
    """
    x, y, z, px, py, pz = _split_state(state)
    r3 = _radius(x, y, z) ** 3
    return np.stack(
        [
            px + y,
            py - x,
            pz,
            py - 2.0 * p.a * x - x / r3,
            -px - 2.0 * p.b * y - y / r3,
            -z - z / r3,
        ],
        axis=-1,
    )


def second_order_acceleration(p, position, velocity):
    """
    Newtonian form of the equations of motion,
    x'' = 2 y' + (lambda2 - 1/r^3) x, y'' = -2 x' + (lambda1 - 1/r^3) y,
    z'' = -(1 + 1/r^3) z.
    """
    position = np.asarray(position, dtype=float)
    velocity = np.asarray(velocity, dtype=float)
    x, y, z = position[..., 0], position[..., 1], position[..., 2]
    r3 = _radius(x, y, z) ** 3
    return np.stack(
        [
            2.0 * velocity[..., 1] + (p.lambda2 - 1.0 / r3) * x,
            -2.0 * velocity[..., 0] + (p.lambda1 - 1.0 / r3) * y,
            -(1.0 + 1.0 / r3) * z,
        ],
        axis=-1,
    )


def state_velocity(state):
    """Velocity (x', y', z') of a phase state, p_x + y, p_y - x, p_z."""
    x, y, z, px, py, pz = _split_state(state)
    return np.stack([px + y, py - x, pz], axis=-1)


def unrotated_quadratic_matrix(mu):
    """
    Symmetric matrix of the xy-part of the quadratic tidal term before the
    rotation, x^2/8 - (3 sqrt(3)/4)(1 - 2 mu) x y - 5 y^2/8.
    """
    check_mu(mu)
    off_diagonal = -(3.0 * np.sqrt(3.0) / 8.0) * (1.0 - 2.0 * mu)
    return np.array([[1.0 / 8.0, off_diagonal], [off_diagonal, -5.0 / 8.0]])


def rotation_diagonalization_check(mu):
    """
    The rotation_diagonalization_check function returns the eigenvalues of
    the unrotated quadratic form, in increasing order. They coincide with
    (a, b) of derive_parameters.

    Args:
        mu: Mass ratio in [0, 1/2]

    Returns:
        (eig_low, eig_high)
    """
    eigenvalues = np.linalg.eigvalsh(unrotated_quadratic_matrix(mu))
    return float(eigenvalues[0]), float(eigenvalues[1])


def rotation_matrix(mu):
    """
    Proper rotation V of the xy-plane with V^T M V = diag(a, b), M the
    unrotated quadratic matrix.
    """
    _, eigenvectors = np.linalg.eigh(unrotated_quadratic_matrix(mu))
    if np.linalg.det(eigenvectors) < 0:
        eigenvectors[:, 1] *= -1.0
    return eigenvectors


def rotate_state(mu, state):
    """
    Lift of rotation_matrix to phase space: positions and momenta in the
    xy-plane are both rotated, z and p_z are left unchanged.
    """
    rotation = rotation_matrix(mu)
    state = np.array(state, dtype=float)
    state[..., 0:2] = state[..., 0:2] @ rotation.T
    state[..., 3:5] = state[..., 3:5] @ rotation.T
    return state


def hamiltonian_unrotated(mu, state):
    """
    Hill four-body Hamiltonian before the diagonalizing rotation,
    1/2 |P|^2 + p_x y - p_y x - 1/r + x^2/8 - (3 sqrt(3)/4)(1 - 2 mu) x y - 5 y^2/8 + z^2/2.
    """
    check_mu(mu)
    x, y, z, px, py, pz = _split_state(state)
    r = _radius(x, y, z)
    return (
        0.5 * (px**2 + py**2 + pz**2)
        + px * y
        - py * x
        - 1.0 / r
        + x**2 / 8.0
        - (3.0 * np.sqrt(3.0) / 4.0) * (1.0 - 2.0 * mu) * x * y
        - 5.0 * y**2 / 8.0
        + 0.5 * z**2
    )
