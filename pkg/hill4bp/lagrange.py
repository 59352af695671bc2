import numpy as np

from hill4bp import model
from hill4bp.exceptions import DegenerateError, DomainError, NonConvergence
from hill4bp.utils import _R_MIN_, create_log

log = create_log()

_available_points = ["L1", "L2", "L3", "L4"]

_default_newton_properties = {
    "max_iterations": 50,
    "gradient_tolerance": 1e-11,
    "escape_radius": 100.0,
    "max_halvings": 30,
    "merge_tolerance": 1e-8,
}


def lagrange_point(p, name):
    """
    The lagrange_point function returns one critical point of the effective
    potential, L1 = (lambda2^(-1/3), 0, 0), L2 = -L1,
    L3 = (0, lambda1^(-1/3), 0) and L4 = -L3.

    Args:
        p: ParameterSet
        name: "L1", "L2", "L3" or "L4"

    Returns:
        The position as an array of 3 components

    Raises:
        DegenerateError: L3 or L4 requested at mu = 0, where they are sent to infinity
    """
    if name not in _available_points:
        raise ValueError(f"Lagrange point {name} not available, choose in {_available_points}")
    if name in ("L1", "L2"):
        sign = 1.0 if name == "L1" else -1.0
        return np.array([sign * p.lambda2 ** (-1.0 / 3.0), 0.0, 0.0])
    if p.lambda1 == 0.0:
        raise DegenerateError(f"{name} does not exist at mu=0 (lambda1 = 0)")
    sign = 1.0 if name == "L3" else -1.0
    return np.array([0.0, sign * p.lambda1 ** (-1.0 / 3.0), 0.0])


def lagrange_points(p, names=None):
    """
    The lagrange_points function returns the closed-form Lagrange points.
    By default all the points which exist for this mass ratio are returned,
    only L1 and L2 at mu = 0. Naming L3 or L4 explicitly at mu = 0 raises.

    Args:
        p: ParameterSet
        names: Points to return, default all existing ones

    Returns:
        A dictionary name -> position
    """
    if names is None:
        names = _available_points if p.lambda1 > 0.0 else ["L1", "L2"]
    return {name: lagrange_point(p, name) for name in names}


def lift_to_phase(position):
    """
    The lift_to_phase function returns the unique phase-space critical point
    of H above a planar critical point of U, (x, y, 0, -y, x, 0).

    Raises:
        DomainError: the position is not in the plane z = 0
    """
    position = np.asarray(position, dtype=float)
    x, y, z = position[..., 0], position[..., 1], position[..., 2]
    if np.any(z != 0.0):
        raise DomainError("Only planar critical points z = 0 can be lifted")
    return model.phase_state(x, y, 0.0, -y, x, 0.0)


def critical_values(p):
    """
    The critical_values function returns h12 = H(L1) = H(L2) = -3/2 lambda2^(1/3)
    and h34 = H(L3) = H(L4) = -3/2 lambda1^(1/3), None at mu = 0.
    """
    h12 = -1.5 * np.cbrt(p.lambda2)
    h34 = -1.5 * np.cbrt(p.lambda1) if p.lambda1 > 0.0 else None
    return float(h12), (None if h34 is None else float(h34))


def check_energy_below_h12(p, c):
    h12, _ = critical_values(p)
    if not np.isfinite(c) or c >= h12:
        raise DomainError(f"The energy c={c} must be below H(L1)={h12} for mu={p.mu}")


def default_seed_grid(n_per_axis=40, half_width=2.0, exclusion=0.05):
    """Planar seed grid on [-half_width, half_width]^2 minus the disc of radius exclusion."""
    axis = np.linspace(-half_width, half_width, n_per_axis)
    x, y = np.meshgrid(axis, axis, indexing="ij")
    seeds = np.stack([x.ravel(), y.ravel(), np.zeros(x.size)], axis=-1)
    return seeds[np.linalg.norm(seeds, axis=1) > exclusion]


def _gradient_norm_or_inf(p, positions):
    norms = np.full(len(positions), np.inf)
    radius = np.linalg.norm(positions, axis=1)
    safe = radius > 1e3 * _R_MIN_
    if np.any(safe):
        norms[safe] = np.linalg.norm(model.potential_gradient(p, positions[safe]), axis=1)
    return norms


def find_critical_points_numeric(p, seed_grid=None, newton_properties=None, return_failures=False):
    """
    The find_critical_points_numeric function runs a damped Newton iteration
    on the gradient of U from every seed, vectorized over the seeds, and
    merges the limits. The step is halved while it increases the gradient
    norm. Seeds which escape, approach the origin or exhaust the iterations
    are reported, not raised.

    Args:
        p: ParameterSet
        seed_grid: Array of seed positions (n, 3) or (n, 2), default_seed_grid() if None
        newton_properties: Overrides of _default_newton_properties
        return_failures: Also return the list of failed seeds

    Returns:
        The distinct critical points found, sorted lexicographically, and the
        failures if return_failures is True
    """
    props = {**_default_newton_properties, **(newton_properties or {})}
    seeds = default_seed_grid() if seed_grid is None else np.asarray(seed_grid, dtype=float)
    if seeds.shape[-1] == 2:
        seeds = np.concatenate([seeds, np.zeros((len(seeds), 1))], axis=1)
    if np.any(np.linalg.norm(seeds, axis=1) <= 1e3 * _R_MIN_):
        raise DomainError("The seed grid must avoid the origin")

    positions = seeds.copy()
    norms = _gradient_norm_or_inf(p, positions)
    active = np.isfinite(norms) & (norms >= props["gradient_tolerance"])
    failed_reason = np.full(len(seeds), "", dtype=object)

    for _ in range(props["max_iterations"]):
        if not np.any(active):
            break
        current = positions[active]
        gradient = model.potential_gradient(p, current)
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(model.potential_hessian(p, current)), gradient)
        damping = np.ones(len(current))
        trial = current + step
        trial_norms = _gradient_norm_or_inf(p, trial)
        for _ in range(props["max_halvings"]):
            worse = trial_norms > norms[active]
            if not np.any(worse):
                break
            damping[worse] *= 0.5
            trial[worse] = current[worse] + damping[worse, None] * step[worse]
            trial_norms[worse] = _gradient_norm_or_inf(p, trial[worse])
        positions[active] = trial
        norms[active] = trial_norms

        escaped = np.linalg.norm(positions, axis=1) > props["escape_radius"]
        failed_reason[active & escaped] = "escaped"
        active &= ~escaped
        active &= norms >= props["gradient_tolerance"]

    converged = np.isfinite(norms) & (norms < props["gradient_tolerance"]) & (failed_reason == "")
    failed_reason[~converged & (failed_reason == "")] = "max_iterations"
    # Two undamped steps take converged points down to rounding level.
    for _ in range(2):
        current = positions[converged]
        if len(current) == 0:
            break
        gradient = model.potential_gradient(p, current)
        hessian_inverse = np.linalg.pinv(model.potential_hessian(p, current))
        positions[converged] = current - np.einsum("nij,nj->ni", hessian_inverse, gradient)

    points = []
    for position in positions[converged]:
        if not any(np.linalg.norm(position - q) < props["merge_tolerance"] for q in points):
            points.append(position)
    points = sorted(points, key=lambda q: tuple(np.round(q, 9)))
    points = np.array(points).reshape(-1, 3)

    failures = [
        {"seed": seeds[i].tolist(), "error": NonConvergence.__name__, "reason": failed_reason[i]}
        for i in np.flatnonzero(~converged)
    ]
    log.add(
        f"Newton search at mu={p.mu}: {len(seeds)} seeds, {int(converged.sum())} converged, "
        f"{len(points)} distinct critical points"
    )
    if failures:
        log.add(f"{len(failures)} seeds did not converge", level="debug")
    if return_failures:
        return points, failures
    return points


def match_to_closed_form(p, points, tolerance=1e-9):
    """
    Pairs numerical critical points with the closed-form Lagrange points.

    Returns:
        A dictionary name -> distance, and the number of numerical points left unmatched
    """
    closed_form = lagrange_points(p)
    distances = {}
    unmatched = 0
    for point in np.asarray(points).reshape(-1, 3):
        name, distance = min(
            ((name, np.linalg.norm(point - q)) for name, q in closed_form.items()),
            key=lambda item: item[1],
        )
        if distance < tolerance and name not in distances:
            distances[name] = float(distance)
        else:
            unmatched += 1
    return distances, unmatched


def lagrange_summary(p):
    """Closed-form points, their lifts and the critical values, as a dictionary."""
    h12, h34 = critical_values(p)
    points = lagrange_points(p)
    return {
        "mu": p.mu,
        "points": {name: q.tolist() for name, q in points.items()},
        "lifted": {name: lift_to_phase(q).tolist() for name, q in points.items()},
        "gradient_norm": {
            name: float(np.linalg.norm(model.potential_gradient(p, q))) for name, q in points.items()
        },
        "h12": h12,
        "h34": h34,
    }
