import multiprocessing as mp
from contextlib import nullcontext
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp

from hill4bp import model, regularization
from hill4bp.exceptions import (
    CollisionStop,
    DomainError,
    DriftError,
    NonConvergence,
    SingularityError,
    StepFailure,
)
from hill4bp.symmetry import restrict_to_planar
from hill4bp.utils import create_log, get_number_worker

log = create_log()

_default_integration_properties = {
    "method": "DOP853",
    "collision_radius": 1e-6,
    "max_step": np.inf,
    "projection_step": 0.05,
    "atol_factor": 1e-2,
}

_q_level_tolerance = 1e-10
_drift_tolerance = 1e-6
_available_kinds = ["physical", "regularized"]


@dataclass
class Trajectory:
    """
    Sampled solution of the physical flow (states of 6 components, time t) or of
    the regularized flow (states of 8 components, time s, physical time kept
    in physical_time).
    """

    kind: str
    times: np.ndarray
    states: np.ndarray
    parameters: dict = field(default_factory=dict)
    physical_time: object = None
    solutions: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.kind not in _available_kinds:
            raise ValueError(f"Trajectory kind {self.kind} not available, choose in {_available_kinds}")

    @property
    def final_state(self):
        return self.states[-1]

    def conserved_quantity(self, p, c=None):
        """H along a physical trajectory, Q along a regularized one."""
        if self.kind == "physical":
            return model.hamiltonian(p, self.states)
        return regularization.q_hamiltonian(p, c, self.states)

    def drift(self, p, c=None):
        values = self.conserved_quantity(p, c)
        reference = values[0] if self.kind == "physical" else 0.5
        return float(np.max(np.abs(values - reference)))

    def at(self, times):
        """Dense evaluation of the state at the given times, within the integrated span."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        out = np.full((len(times), self.states.shape[1]), np.nan)
        done = np.zeros(len(times), dtype=bool)
        for solution in self.solutions:
            low, high = sorted((solution.t[0], solution.t[-1]))
            inside = ~done & (times >= low - 1e-14) & (times <= high + 1e-14)
            if np.any(inside):
                out[inside] = solution.sol(times[inside]).T[:, : self.states.shape[1]]
                done |= inside
        if not np.all(done):
            raise ValueError(f"Times {times[~done]} outside of the integrated span")
        return out

    def closest_north_pole_distance(self, n_per_segment=2001):
        """Smallest 1 - xi0 along the dense output of a regularized trajectory."""
        if self.kind != "regularized":
            raise ValueError("Only regularized trajectories approach the North pole fiber")
        closest = np.inf
        for solution in self.solutions:
            xi0 = solution.sol(np.linspace(solution.t[0], solution.t[-1], n_per_segment))[0]
            closest = min(closest, float(np.min(1.0 - xi0)))
        return closest

    def to_dataframe(self, p, c=None):
        """
        Physical trajectories give columns t, x, y, z, px, py, pz, H and
        regularized ones s, xi0..xi3, eta0..eta3, Q, t.
        """
        if self.kind == "physical":
            frame = pd.DataFrame(self.states, columns=model._state_labels)
            frame.insert(0, "t", self.times)
            frame["H"] = self.conserved_quantity(p)
            return frame
        frame = pd.DataFrame(self.states, columns=regularization._regularized_labels)
        frame.insert(0, "s", self.times)
        frame["Q"] = self.conserved_quantity(p, c)
        frame["t"] = self.physical_time
        return frame


def _check_tolerance(tol):
    if not 1e-13 <= tol <= 1e-6:
        raise ValueError(f"The tolerance tol={tol} must lie in [1e-13, 1e-6]")


def _physical_rhs(p):
    def rhs(t, state):
        try:
            return model.vector_field(p, state)
        except SingularityError:
            raise CollisionStop(f"Stage evaluation at the collision at t={t}")

    return rhs


def _collision_event(collision_radius):
    def event(t, state):
        return np.linalg.norm(state[:3]) - collision_radius

    event.terminal = True
    event.direction = -1
    return event


def integrate_physical(p, s0, t_final, tol=1e-10, integration_properties=None):
    """
    The integrate_physical function integrates Hamilton's equations of H with
    an adaptive embedded Runge-Kutta scheme (DOP853 by default) and stops at
    the collision radius. Negative t_final integrates backward.

    Args:
        p: ParameterSet
        s0: Initial phase state off the singularity
        t_final: Final time
        tol: Relative tolerance in [1e-13, 1e-6]
        integration_properties: Overrides of _default_integration_properties

    Returns:
        A Trajectory with dense output

    Raises:
        CollisionStop: the trajectory reached the collision radius, the partial trajectory is attached
        StepFailure: the integrator could not complete a step
    """
    _check_tolerance(tol)
    props = {**_default_integration_properties, **(integration_properties or {})}
    s0 = np.asarray(s0, dtype=float)
    model._radius(*s0[:3])
    solution = solve_ivp(
        _physical_rhs(p),
        (0.0, t_final),
        s0,
        method=props["method"],
        rtol=tol,
        atol=tol * props["atol_factor"],
        max_step=props["max_step"],
        events=_collision_event(props["collision_radius"]),
        dense_output=True,
    )
    if solution.status == -1:
        raise StepFailure(solution.message)
    trajectory = Trajectory(
        kind="physical",
        times=solution.t,
        states=solution.y.T,
        parameters={"mu": p.mu, "tol": tol},
        solutions=[solution],
    )
    if solution.status == 1:
        log.add(f"Collision radius reached at t={solution.t[-1]}", level="warning")
        raise CollisionStop(f"Collision radius reached at t={solution.t[-1]}", trajectory)
    log.add(
        f"Physical flow to t={t_final}: {len(solution.t)} steps, energy drift "
        f"{trajectory.drift(p)}",
        level="debug",
    )
    return trajectory


def integrate_batch(p, initial_states, t_final, tol=1e-10, number_worker=None):
    """Physical integrations of several initial states on a process pool, in input order."""
    initial_states = np.atleast_2d(initial_states)
    number_worker = min(get_number_worker(number_worker), len(initial_states))
    tasks = [(p, s0, t_final, tol) for s0 in initial_states]
    with mp.Pool(number_worker) if number_worker != 1 else nullcontext() as pool:
        if pool is None:
            return [integrate_physical(*task) for task in tasks]
        return pool.starmap(integrate_physical, tasks)


def _regularized_rhs(p, c):
    def rhs(s, augmented):
        r = augmented[:8]
        field = regularization.regularized_vector_field(p, c, r)
        time_rate = np.linalg.norm(r[4:]) * (1.0 - r[0])
        return np.concatenate([field, [time_rate]])

    return rhs


def integrate_regularized(p, c, r0, s_final, tol=1e-10, integration_properties=None):
    """
    The integrate_regularized function integrates the flow of Q on T*S^3 in
    the regularized time s, together with the physical time dt/ds = |eta| (1 - xi0).
    The span is cut in segments of length projection_step, after each of which
    |xi| = 1 and <xi, eta> = 0 are restored. The flow crosses the North pole
    fiber, where the physical trajectory collides and bounces back.

    Args:
        p: ParameterSet
        c: Energy
        r0: Regularized state with Q = 1/2
        s_final: Final regularized time
        tol: Relative tolerance in [1e-13, 1e-6]
        integration_properties: Overrides of _default_integration_properties

    Returns:
        A regularized Trajectory

    Raises:
        DomainError: r0 is not on the level Q = 1/2
        DriftError: Q left the level by more than 1e-6
    """
    _check_tolerance(tol)
    props = {**_default_integration_properties, **(integration_properties or {})}
    r0 = np.asarray(r0, dtype=float)
    if abs(regularization.q_hamiltonian(p, c, r0) - 0.5) > _q_level_tolerance:
        raise DomainError("The initial regularized state is not on the level Q = 1/2")
    rhs = _regularized_rhs(p, c)
    direction = np.sign(s_final) if s_final != 0 else 1.0
    n_segments = max(int(np.ceil(abs(s_final) / props["projection_step"])), 1)
    boundaries = np.linspace(0.0, s_final, n_segments + 1)

    augmented = np.concatenate([regularization.project_regularized(r0), [0.0]])
    times, states, solutions = [np.array([0.0])], [augmented[None, :]], []
    for start, stop in zip(boundaries[:-1], boundaries[1:]):
        solution = solve_ivp(
            rhs,
            (start, stop),
            augmented,
            method=props["method"],
            rtol=tol,
            atol=tol * props["atol_factor"],
            max_step=props["max_step"],
            dense_output=True,
        )
        if solution.status == -1:
            raise StepFailure(solution.message)
        augmented = solution.y[:, -1].copy()
        augmented[:8] = regularization.project_regularized(augmented[:8])
        drift = abs(regularization.q_hamiltonian(p, c, augmented[:8]) - 0.5)
        if drift > _drift_tolerance:
            raise DriftError(f"Q drifted by {drift} at s={stop}")
        times.append(solution.t[1:])
        states.append(solution.y[:, 1:].T)
        solutions.append(solution)

    states = np.concatenate(states)
    trajectory = Trajectory(
        kind="regularized",
        times=np.concatenate(times),
        states=states[:, :8],
        parameters={"mu": p.mu, "c": c, "tol": tol, "direction": direction},
        physical_time=states[:, 8],
        solutions=solutions,
    )
    log.add(
        f"Regularized flow to s={s_final}: {len(trajectory.times)} steps, Q drift "
        f"{trajectory.drift(p, c)}, closest approach 1 - xi0 = {np.min(1.0 - states[:, 0])}",
        level="debug",
    )
    return trajectory


def collision_orbit_state(p, c):
    """
    Rest state on the positive z-axis at energy c, -1/z + z^2/2 = c, the start
    of a collision orbit along the z-axis.
    """
    roots = np.roots([0.5, 0.0, -c, -1.0])
    positive = sorted(root.real for root in roots if abs(root.imag) < 1e-12 and root.real > 0)
    if not positive:
        raise DomainError(f"No rest point on the z-axis at energy c={c}")
    return model.phase_state(0.0, 0.0, positive[0], 0.0, 0.0, 0.0)


def physical_regularized_mismatch(p, c, regularized, tol=1e-12, min_distance=1e-2):
    """
    Largest distance between the physical image of a regularized trajectory
    and the physical flow started from the same state, compared at matched
    physical times while 1 - xi0 stays above min_distance.
    """
    far = 1.0 - regularized.states[:, 0] > min_distance
    # Matching only up to the first approach of the North pole fiber.
    last = np.argmin(far) if not np.all(far) else len(far)
    if last < 2:
        raise ValueError("The regularized trajectory starts too close to the collision")
    images = regularization.regularized_to_phase(regularized.states[:last])
    times = regularized.physical_time[:last]
    physical = integrate_physical(p, images[0], times[-1], tol=tol)
    return float(np.max(np.linalg.norm(physical.at(times) - images, axis=1)))


def time_reversal_defect(p, s0, reversor, t, tol=1e-12):
    """
    The time_reversal_defect function checks that reversor(x(-tau)) is again a
    trajectory: x is integrated backward from s0 over [0, t], the reflected
    curve is compared to the forward integration from reversor(s0).

    Args:
        p: ParameterSet
        s0: Initial phase state
        reversor: Anti-symplectic Involution
        t: Time span
        tol: Integration tolerance

    Returns:
        The largest distance between the two curves on 101 points of [0, t]
    """
    if reversor.kind != "anti-symplectic":
        raise DomainError(f"{reversor.name} is not a reversor")
    backward = integrate_physical(p, s0, -t, tol=tol)
    forward = integrate_physical(p, reversor.apply(s0), t, tol=tol)
    taus = np.linspace(0.0, t, 101)
    reflected = reversor.apply(backward.at(-taus))
    return float(np.max(np.linalg.norm(forward.at(taus) - reflected, axis=1)))


@dataclass
class SymmetricOrbit:
    initial_state: np.ndarray
    period: float
    residual: float
    iterations: int
    reversor: str

    def to_dict(self):
        return {
            "initial_state": self.initial_state.tolist(),
            "period": self.period,
            "residual": self.residual,
            "iterations": self.iterations,
            "reversor": self.reversor,
        }


def _reversor_coordinates(reversor):
    """Free position, free momentum, section and residual indices of a planar reversor in 6D."""
    signs = np.diag(reversor.matrix)
    planar_to_phase = [0, 1, 3, 4]
    plus = [planar_to_phase[i] for i in range(4) if signs[i] == 1]
    minus = [planar_to_phase[i] for i in range(4) if signs[i] == -1]
    if len(plus) != 2 or len(minus) != 2:
        raise DomainError(f"{reversor.name} does not fix a position and a momentum")
    return plus[0], plus[1], minus[0], minus[1]


def _state_on_fixed_set(p, c, free_position, position_index, momentum_index, momentum_guess):
    """Point of Fix(reversor) with the momentum coordinate solved from H = c."""
    state = np.zeros(6)
    state[position_index] = free_position
    h0 = model.hamiltonian(p, state)
    state[momentum_index] = 1.0
    beta = model.hamiltonian(p, state) - h0 - 0.5
    discriminant = beta**2 - 2.0 * (h0 - c)
    if discriminant < 0:
        raise NonConvergence(f"No momentum reaches the energy c={c} at {free_position}")
    roots = -beta + np.array([-1.0, 1.0]) * np.sqrt(discriminant)
    state[momentum_index] = roots[np.argmin(np.abs(roots - momentum_guess))]
    return state


def _half_return(p, state, section_index, residual_index, t_max, tol):
    initial_rate = model.vector_field(p, state)[section_index]

    def section(t, y):
        return y[section_index]

    section.terminal = True
    section.direction = -np.sign(initial_rate)
    solution = solve_ivp(
        _physical_rhs(p), (0.0, t_max), state, method="DOP853", rtol=tol, atol=tol, events=section
    )
    if solution.status != 1 or len(solution.t_events[0]) == 0:
        raise NonConvergence("No return to the fixed set of the reversor")
    return solution.y_events[0][0][residual_index], solution.t_events[0][0]


def symmetric_shooting(
    p, c, reversor, guess, max_iterations=30, tolerance=1e-9, t_max=50.0, integration_tol=1e-12
):
    """
    The symmetric_shooting function looks for a periodic orbit x(t) = reversor(x(-t))
    of the planar problem. The orbit starts on Fix(reversor) at energy c and
    must hit Fix(reversor) again after half a period; Newton iterations on
    the free position coordinate, with finite-difference derivatives, cancel
    the remaining momentum coordinate at the return.

    Args:
        p: ParameterSet
        c: Energy
        reversor: Anti-symplectic Involution, rho_x or rho_y or a spatial one restricting to them
        guess: (free position, free momentum) of the initial guess
        max_iterations: Newton iterations before giving up
        tolerance: Target residual
        t_max: Longest half period searched
        integration_tol: Tolerance of the integrations

    Returns:
        A SymmetricOrbit

    Raises:
        NonConvergence: no convergence after max_iterations
    """
    planar = restrict_to_planar(reversor)
    if planar.kind != "anti-symplectic":
        raise DomainError(f"{reversor.name} is not a reversor")
    position_index, momentum_index, section_index, residual_index = _reversor_coordinates(planar)
    free_position, momentum_guess = float(guess[0]), float(guess[1])

    def residual(position):
        state = _state_on_fixed_set(p, c, position, position_index, momentum_index, momentum_guess)
        value, half_period = _half_return(p, state, section_index, residual_index, t_max, integration_tol)
        return value, half_period, state

    for iteration in range(1, max_iterations + 1):
        value, half_period, state = residual(free_position)
        log.add(f"Shooting iteration {iteration}: residual {value}", level="debug")
        if abs(value) < tolerance:
            orbit = SymmetricOrbit(
                initial_state=state,
                period=2.0 * half_period,
                residual=abs(value),
                iterations=iteration,
                reversor=planar.name,
            )
            log.add(f"Symmetric orbit found, period {orbit.period}")
            return orbit
        step = 1e-7 * (1.0 + abs(free_position))
        shifted, _, _ = residual(free_position + step)
        derivative = (shifted - value) / step
        if derivative == 0:
            break
        free_position -= value / derivative
        momentum_guess = state[momentum_index]
    raise NonConvergence(f"Symmetric shooting did not converge in {max_iterations} iterations")
