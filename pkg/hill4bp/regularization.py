import numpy as np
import pandas as pd

from hill4bp import lagrange, model
from hill4bp.contact import ScanRunner
from hill4bp.exceptions import EmptyRegion, NorthPoleError, RootFindError
from hill4bp.reports import ScanReport, verdict_from
from hill4bp.utils import create_log

log = create_log()

_regularized_labels = ["xi0", "xi1", "xi2", "xi3", "eta0", "eta1", "eta2", "eta3"]
_north_pole_tolerance = 1e-14

_default_regularization_properties = {
    "delta": 0.05,
    "bracket": (1e-6, 10.0),
    "n_bracket": 200,
    "eps_safety": 0.9,
    "a_inflation": 1.1,
    "n_estimate": 20000,
    "sample_batch": 10000,
}


def switch_matrix():
    """Matrix of (X, P) -> (-P, X) on (x, y, z, px, py, pz)."""
    identity = np.eye(3, dtype=int)
    zeros = np.zeros((3, 3), dtype=int)
    return np.block([[zeros, -identity], [identity, zeros]])


def switch_map(state):
    """(X, P) -> (-P, X), the exchange of positions and momenta."""
    state = np.asarray(state, dtype=float)
    return np.concatenate([-state[..., 3:], state[..., :3]], axis=-1)


def unswitch_map(state):
    """Inverse of switch_map, (x, p) -> (p, -x)."""
    state = np.asarray(state, dtype=float)
    return np.concatenate([state[..., 3:], -state[..., :3]], axis=-1)


def regularized_state(xi, eta):
    return np.concatenate(np.broadcast_arrays(np.asarray(xi, float), np.asarray(eta, float)), axis=-1)


def split_regularized(r):
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != 8:
        raise ValueError(f"A regularized state has 8 components (xi, eta), got shape {r.shape}")
    return r[..., :4], r[..., 4:]


def project_regularized(r):
    """Renormalize |xi| = 1 and remove the component of eta along xi."""
    xi, eta = split_regularized(r)
    xi = xi / np.linalg.norm(xi, axis=-1, keepdims=True)
    eta = eta - np.sum(xi * eta, axis=-1, keepdims=True) * xi
    return regularized_state(xi, eta)


def constraint_defect(r):
    """(||xi| - 1|, |<xi, eta>|)."""
    xi, eta = split_regularized(r)
    return np.abs(np.linalg.norm(xi, axis=-1) - 1.0), np.abs(np.sum(xi * eta, axis=-1))


def k_c(p, c, state):
    """
    The k_c function evaluates K_c = |X| (H - c), whose zero level is the
    energy level H = c and whose flow is the flow of H in the time ds = dt / |X|.

    Raises:
        SingularityError: a position is at the origin
    """
    x, y, z = (np.asarray(state, dtype=float)[..., i] for i in range(3))
    return model._radius(x, y, z) * (model.hamiltonian(p, state) - c)


def k_tilde_switched(p, c, state_switched):
    """K_c written in switched coordinates (x, p) = (-P, X)."""
    return k_c(p, c, unswitch_map(state_switched))


def sphere_to_stereo(r):
    """
    The sphere_to_stereo function maps (xi, eta) in T*S^3 to switched
    coordinates (x, p) by stereographic projection from the North pole,
    x_k = xi_k / (1 - xi_0), p_k = eta_k (1 - xi_0) + xi_k eta_0.

    Args:
        r: Array of regularized states (xi0..xi3, eta0..eta3)

    Returns:
        Array of switched phase states

    Raises:
        NorthPoleError: 1 - xi_0 < 1e-14
    """
    xi, eta = split_regularized(r)
    s = 1.0 - xi[..., 0]
    if np.any(s < _north_pole_tolerance):
        raise NorthPoleError("Stereographic projection evaluated on the North pole fiber")
    position = xi[..., 1:] / s[..., None]
    momentum = eta[..., 1:] * s[..., None] + xi[..., 1:] * eta[..., 0:1]
    return np.concatenate([position, momentum], axis=-1)


def stereo_to_sphere(state_switched):
    """
    The stereo_to_sphere function is the inverse stereographic map,
    xi_0 = (|x|^2 - 1) / (|x|^2 + 1), xi_k = 2 x_k / (|x|^2 + 1),
    eta_0 = <x, p>, eta_k = (|x|^2 + 1) p_k / 2 - <x, p> x_k.

    Args:
        state_switched: Array of switched phase states (x, p)

    Returns:
        Array of regularized states
    """
    state_switched = np.asarray(state_switched, dtype=float)
    x, p = state_switched[..., :3], state_switched[..., 3:]
    x2 = np.sum(x**2, axis=-1)
    xp = np.sum(x * p, axis=-1)
    xi = np.concatenate([((x2 - 1.0) / (x2 + 1.0))[..., None], 2.0 * x / (x2 + 1.0)[..., None]], axis=-1)
    eta = np.concatenate([xp[..., None], 0.5 * (x2 + 1.0)[..., None] * p - xp[..., None] * x], axis=-1)
    return regularized_state(xi, eta)


def phase_to_regularized(state):
    """Physical phase state to T*S^3: switch, then inverse stereographic projection."""
    return stereo_to_sphere(switch_map(state))


def regularized_to_phase(r):
    """Regularized state off the North pole fiber to the physical phase state."""
    return unswitch_map(sphere_to_stereo(r))


def g_components(r):
    """g_k = eta_k (1 - xi_0) + xi_k eta_0, the physical position of the state."""
    xi, eta = split_regularized(r)
    s = 1.0 - xi[..., 0]
    return eta[..., 1:] * s[..., None] + xi[..., 1:] * eta[..., 0:1]


def _angular_term(r):
    xi, eta = split_regularized(r)
    return eta[..., 1] * xi[..., 2] - eta[..., 2] * xi[..., 1]


def _tidal_term(p, g):
    return p.a * g[..., 0] ** 2 + p.b * g[..., 1] ** 2 + 0.5 * g[..., 2] ** 2


def tidal_bound_term(p, r):
    """2 a g1^2 + 2 b g2^2 + g3^2, the term bounded by the constant A."""
    g = g_components(r)
    return 2.0 * p.a * g[..., 0] ** 2 + 2.0 * p.b * g[..., 1] ** 2 + g[..., 2] ** 2


def f_factor(p, c, r):
    """
    The f_factor function evaluates
    f = 1 + (eta1 xi2 - eta2 xi1)(1 - xi0) + (a g1^2 + b g2^2 + g3^2 / 2)(1 - xi0) - (c + 1/2)(1 - xi0),
    so that the transformed Hamiltonian is |eta| f - 1. f = 1 on the North pole fiber.
    """
    xi, _ = split_regularized(r)
    s = 1.0 - xi[..., 0]
    return 1.0 + s * (_angular_term(r) + _tidal_term(p, g_components(r)) - (c + 0.5))


def k_tilde(p, c, r):
    """K_c on T*S^3, |eta| f - 1."""
    _, eta = split_regularized(r)
    return np.linalg.norm(eta, axis=-1) * f_factor(p, c, r) - 1.0


def q_hamiltonian(p, c, r):
    """Q = |eta|^2 f^2 / 2 = (K_c + 1)^2 / 2, regular on the North pole fiber."""
    _, eta = split_regularized(r)
    return 0.5 * np.sum(eta**2, axis=-1) * f_factor(p, c, r) ** 2


def natural_liouville_pairing(p, c, r):
    """
    The natural_liouville_pairing function evaluates dQ applied to the fiber
    radial field eta d/deta,
    dQ(X) = 2 Q + |eta|^2 f (1 - xi0)(eta1 xi2 - eta2 xi1 + 2 a g1^2 + 2 b g2^2 + g3^2).

    Args:
        p: ParameterSet
        c: Energy
        r: Array of regularized states

    Returns:
        dQ(X)
    """
    xi, eta = split_regularized(r)
    s = 1.0 - xi[..., 0]
    eta2 = np.sum(eta**2, axis=-1)
    f = f_factor(p, c, r)
    return eta2 * f**2 + eta2 * f * s * (_angular_term(r) + tidal_bound_term(p, r))


def f_gradient(p, c, r):
    """Gradient of f in R^8, ordered (d/dxi0..d/dxi3, d/deta0..d/deta3)."""
    xi, eta = split_regularized(r)
    s = 1.0 - xi[..., 0]
    g = g_components(r)
    g1, g2, g3 = g[..., 0], g[..., 1], g[..., 2]
    a, b = p.a, p.b
    d_xi = np.stack(
        [
            -_angular_term(r)
            - _tidal_term(p, g)
            + (c + 0.5)
            - s * (2 * a * g1 * eta[..., 1] + 2 * b * g2 * eta[..., 2] + g3 * eta[..., 3]),
            -eta[..., 2] * s + 2 * a * g1 * eta[..., 0] * s,
            eta[..., 1] * s + 2 * b * g2 * eta[..., 0] * s,
            g3 * eta[..., 0] * s,
        ],
        axis=-1,
    )
    d_eta = np.stack(
        [
            s * (2 * a * g1 * xi[..., 1] + 2 * b * g2 * xi[..., 2] + g3 * xi[..., 3]),
            xi[..., 2] * s + 2 * a * g1 * s**2,
            -xi[..., 1] * s + 2 * b * g2 * s**2,
            g3 * s**2,
        ],
        axis=-1,
    )
    return np.concatenate([d_xi, d_eta], axis=-1)


def q_gradient(p, c, r):
    """Gradient of Q in R^8, f^2 (0, eta) + |eta|^2 f grad f."""
    _, eta = split_regularized(r)
    f = f_factor(p, c, r)[..., None]
    eta2 = np.sum(eta**2, axis=-1, keepdims=True)
    gradient = eta2 * f * f_gradient(p, c, r)
    gradient[..., 4:] += f**2 * eta
    return gradient


def regularized_vector_field(p, c, r):
    """
    The regularized_vector_field function returns the Hamiltonian field of Q
    on T*S^3 embedded in T*R^4 with the constraints |xi| = 1 and <xi, eta> = 0:
    xi' = Q_eta - xi <xi, Q_eta>,
    eta' = -Q_xi - xi (<eta, Q_eta> - <xi, Q_xi>) + eta <xi, Q_eta>.

    Args:
        p: ParameterSet
        c: Energy
        r: Array of regularized states

    Returns:
        The derivative of the state with respect to the regularized time
    """
    xi, eta = split_regularized(r)
    gradient = q_gradient(p, c, r)
    q_xi, q_eta = gradient[..., :4], gradient[..., 4:]
    xi_q_eta = np.sum(xi * q_eta, axis=-1, keepdims=True)
    xi_dot = q_eta - xi * xi_q_eta
    eta_dot = (
        -q_xi
        - xi * (np.sum(eta * q_eta, axis=-1, keepdims=True) - np.sum(xi * q_xi, axis=-1, keepdims=True))
        + eta * xi_q_eta
    )
    return np.concatenate([xi_dot, eta_dot], axis=-1)


def liouville_form_defect(r, direction, h=1e-6):
    """
    The liouville_form_defect function compares eta . dxi with p . dx, the
    canonical 1-forms of T*S^3 and of the switched chart, along the curve
    tau -> project(r + tau direction) at tau = 0, by central differences.

    Args:
        r: Regularized state off the North pole fiber
        direction: Vector of R^8
        h: Finite-difference step

    Returns:
        |eta . dxi - p . dx|
    """
    r = project_regularized(r)
    direction = np.asarray(direction, dtype=float)
    plus = project_regularized(r + h * direction)
    minus = project_regularized(r - h * direction)
    xi, eta = split_regularized(r)
    d_xi = (plus[..., :4] - minus[..., :4]) / (2.0 * h)
    stereo = sphere_to_stereo(r)
    d_x = (sphere_to_stereo(plus)[..., :3] - sphere_to_stereo(minus)[..., :3]) / (2.0 * h)
    return np.abs(np.sum(eta * d_xi, axis=-1) - np.sum(stereo[..., 3:] * d_x, axis=-1))


def _fiber_polynomial(p, c, xi, eta_hat):
    """Coefficients (t^3, t^2, t, 1) of t f(xi, t eta_hat) - 1, along the last axis."""
    s = 1.0 - xi[..., 0]
    r = regularized_state(xi, eta_hat)
    unit_tidal = _tidal_term(p, g_components(r))
    return np.stack([s * unit_tidal, s * _angular_term(r), 1.0 - (c + 0.5) * s, -np.ones_like(s)], axis=-1)


def _cubic(coefficients, t):
    return ((coefficients[..., 0] * t + coefficients[..., 1]) * t + coefficients[..., 2]) * t + coefficients[..., 3]


def _cubic_derivative(coefficients, t):
    return (3.0 * coefficients[..., 0] * t + 2.0 * coefficients[..., 1]) * t + coefficients[..., 2]


def solve_fiber_radii(p, c, xi, eta_hat, bracket=(1e-6, 10.0), n_bracket=200, max_iterations=100):
    """
    The solve_fiber_radii function is the vectorized fiber root-find. For each
    row it locates the first sign change of t f(xi, t eta_hat) - 1 on a
    logarithmic grid of the bracket, then runs a Newton iteration safeguarded
    by bisection inside that cell.

    Args:
        p: ParameterSet
        c: Energy
        xi: Points of S^3, shape (m, 4)
        eta_hat: Unit tangent directions, shape (m, 4)
        bracket: Search interval of the radius
        n_bracket: Number of grid points in the bracket
        max_iterations: Bound on the safeguarded Newton iterations

    Returns:
        Radii of shape (m,), NaN where the bracket holds no sign change
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    eta_hat = np.atleast_2d(np.asarray(eta_hat, dtype=float))
    coefficients = _fiber_polynomial(p, c, xi, eta_hat)
    grid = np.geomspace(bracket[0], bracket[1], n_bracket)
    values = _cubic(coefficients[:, None, :], grid)
    change = np.sign(values[:, :-1]) * np.sign(values[:, 1:]) <= 0
    found = change.any(axis=1)
    first = np.argmax(change, axis=1)
    low, high = grid[first], grid[first + 1]
    f_low = values[np.arange(len(first)), first]
    root = 0.5 * (low + high)
    tolerance = 4.0 * np.finfo(float).eps
    for _ in range(max_iterations):
        value = _cubic(coefficients, root)
        same = np.sign(value) == np.sign(f_low)
        low, f_low = np.where(same, root, low), np.where(same, value, f_low)
        high = np.where(same, high, root)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = root - value / _cubic_derivative(coefficients, root)
        inside = np.isfinite(step) & (step > low) & (step < high)
        update = np.where(value == 0.0, root, np.where(inside, step, 0.5 * (low + high)))
        converged = np.abs(update - root) <= tolerance * np.abs(root)
        root = update
        if np.all(converged | ~found):
            break
    derivative = _cubic_derivative(coefficients, root)
    polish = derivative != 0.0
    root = np.where(polish, root - _cubic(coefficients, root) / np.where(polish, derivative, 1.0), root)
    return np.where(found, root, np.nan)


def solve_fiber_radius(p, c, xi, eta_hat, bracket=(1e-6, 10.0), n_bracket=200):
    """
    The solve_fiber_radius function finds the smallest positive t with
    t f(xi, t eta_hat) = 1, so that (xi, t eta_hat) lies on Q = 1/2 on the
    positive branch K_c = 0.

    Raises:
        RootFindError: no sign change in the bracket
    """
    root = solve_fiber_radii(p, c, xi, eta_hat, bracket=bracket, n_bracket=n_bracket)[0]
    if np.isnan(root):
        raise RootFindError(f"No positive root of the fiber equation in {bracket}")
    return float(root)


def random_unit_tangent(xi, rng):
    """Uniform unit vectors of R^4 orthogonal to xi, one per row of xi."""
    xi = np.asarray(xi, dtype=float)
    direction = rng.standard_normal(xi.shape)
    direction -= np.sum(direction * xi, axis=-1, keepdims=True) * xi
    return direction / np.linalg.norm(direction, axis=-1, keepdims=True)


def sample_q_level_near_collision(
    p, c, eps, n, rng_seed=0, delta=None, regularization_properties=None, rng=None
):
    """
    The sample_q_level_near_collision function samples the level Q = 1/2 close
    to the North pole fiber: 1 - xi0 uniform in (0, delta), the rest of xi
    uniform on the corresponding 2-sphere, a uniform unit tangent direction
    eta_hat and |eta| the smallest positive root of |eta| f = 1. Samples with
    |P| = |eta| (1 - xi0) >= eps are discarded, as are directions with no root
    in the bracket. Draws are made in batches of at most sample_batch.

    Args:
        p: ParameterSet
        c: Energy below h12
        eps: Bound on |P|
        n: Number of samples
        rng_seed: Seed of the generator, ignored if rng is given
        delta: Bound on 1 - xi0, eps if None
        regularization_properties: Overrides of _default_regularization_properties
        rng: numpy Generator

    Returns:
        Array of regularized states of shape (n, 8), and the number of skipped root-finds

    Raises:
        DomainError: c >= h12
        EmptyRegion: no sample is accepted after 100 n draws
    """
    lagrange.check_energy_below_h12(p, c)
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    props = {**_default_regularization_properties, **(regularization_properties or {})}
    delta = eps if delta is None else delta
    rng = np.random.default_rng(rng_seed) if rng is None else rng
    samples = []
    n_accepted = 0
    n_skipped = 0
    n_draws = 0
    while n_accepted < n:
        if n_draws > 100 * n + 1000:
            raise EmptyRegion(f"Only {n_accepted} of {n} near-collision samples accepted")
        m = int(min(max(2 * (n - n_accepted), 64), props["sample_batch"]))
        n_draws += m
        s = delta * (1.0 - rng.uniform(size=m))
        direction = rng.standard_normal((m, 3))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        xi = np.column_stack([1.0 - s, np.sqrt(s * (2.0 - s))[:, None] * direction])
        eta_hat = random_unit_tangent(xi, rng)
        radius = solve_fiber_radii(p, c, xi, eta_hat, bracket=props["bracket"], n_bracket=props["n_bracket"])
        missing = np.isnan(radius)
        n_skipped += int(np.sum(missing))
        accepted = np.flatnonzero(~missing & (radius * s < eps))[: n - n_accepted]
        samples.append(regularized_state(xi[accepted], radius[accepted, None] * eta_hat[accepted]))
        n_accepted += len(accepted)
    if n_skipped:
        log.add(f"{n_skipped} near-collision directions without root skipped", level="warning")
    return np.concatenate(samples), n_skipped


def estimate_bound_constant(p, c, region=None, n=None, rng_seed=0, regularization_properties=None):
    """
    The estimate_bound_constant function estimates
    A = max |2 a g1^2 + 2 b g2^2 + g3^2| over the near-collision part
    {1 - xi0 < region} of Q = 1/2, as the sampled maximum inflated by 10%,
    and returns eps_max = 1 / (2 (1 + A)) for which 1 - 2 eps (1 + A) >= 0.

    Returns:
        (A, eps_max)
    """
    props = {**_default_regularization_properties, **(regularization_properties or {})}
    region = props["delta"] if region is None else region
    n = props["n_estimate"] if n is None else n
    samples, _ = sample_q_level_near_collision(
        p, c, eps=np.inf, n=n, rng_seed=rng_seed, delta=region, regularization_properties=props
    )
    constant = props["a_inflation"] * float(np.max(np.abs(tidal_bound_term(p, samples))))
    eps_max = 0.5 / (1.0 + constant)
    log.add(f"Bound constant at mu={p.mu}, c={c}: A = {constant}, eps_max = {eps_max}", level="debug")
    return constant, eps_max


class RegularizedTransversalityScan(ScanRunner):
    """Evaluation of dQ(X) and of the intermediate bounds on near-collision samples of Q = 1/2."""

    def __init__(self, p, c, eps=None, scan_properties=None, regularization_properties=None):
        super(RegularizedTransversalityScan, self).__init__(p, c, scan_properties=scan_properties)
        self.regularization_properties = {
            **_default_regularization_properties,
            **(regularization_properties or {}),
        }
        delta = self.regularization_properties["delta"]
        self.bound_constant, self.eps_max = estimate_bound_constant(
            p, c, region=delta, regularization_properties=self.regularization_properties
        )
        eps_allowed = min(self.regularization_properties["eps_safety"] * self.eps_max, delta)
        if eps is None:
            eps = eps_allowed
        elif eps > eps_allowed:
            log.add(f"eps={eps} clamped to {eps_allowed}", level="warning")
            eps = eps_allowed
        self.eps = float(eps)

    def evaluate_batch(self, task):
        n_samples, seed_sequence = task
        rng = np.random.default_rng(seed_sequence)
        states, n_skipped = sample_q_level_near_collision(
            self.p,
            self.c,
            self.eps,
            n_samples,
            regularization_properties=self.regularization_properties,
            rng=rng,
        )
        _, eta = split_regularized(states)
        return {
            "states": states,
            "pairing": natural_liouville_pairing(self.p, self.c, states),
            "f": f_factor(self.p, self.c, states),
            "eta_norm": np.linalg.norm(eta, axis=-1),
            "q_error": np.abs(q_hamiltonian(self.p, self.c, states) - 0.5),
            "tidal": np.abs(tidal_bound_term(self.p, states)),
            "momentum_norm": np.linalg.norm(eta, axis=-1) * (1.0 - states[:, 0]),
            "n_skipped": np.array([n_skipped]),
        }

    def build_report(self, merged, n, rng_seed):
        pairing = merged["pairing"]
        realized_constant = float(np.max(merged["tidal"]))
        constant = max(self.bound_constant, realized_constant)
        lower_bound = 1.0 - 2.0 * self.eps * (1.0 + constant)
        slack = self.scan_properties["bound_slack"]
        checks = {
            "f_at_least_half": int(np.count_nonzero(np.abs(merged["f"]) < 0.5)),
            "eta_at_most_two": int(np.count_nonzero(merged["eta_norm"] > 2.0)),
            "pairing_above_bound": int(np.count_nonzero(pairing < lower_bound - slack)),
            "on_level_set": int(np.count_nonzero(merged["q_error"] >= 1e-12)),
            "momentum_below_eps": int(np.count_nonzero(merged["momentum_norm"] >= self.eps)),
        }
        index = int(np.argmin(pairing))
        passed = pairing[index] > 0 and all(count == 0 for count in checks.values())
        log.add_array_statistics(pairing, "dQ(X)")
        report = ScanReport(
            verdict=verdict_from(passed),
            min_value=float(pairing[index]),
            argmin=merged["states"][index].tolist(),
            n_samples=n,
            rng_seed=rng_seed,
            parameters={"mu": self.p.mu, "c": self.c, "eps": self.eps},
            bound_kind="natural_liouville_pairing",
            extra={
                "bound_constant_estimate": self.bound_constant,
                "bound_constant_realized": realized_constant,
                "eps_max": self.eps_max,
                "lower_bound": lower_bound,
                "violations": checks,
                "min_f": float(np.min(merged["f"])),
                "max_eta_norm": float(np.max(merged["eta_norm"])),
                "max_q_error": float(np.max(merged["q_error"])),
                "skipped_root_finds": int(np.sum(merged["n_skipped"])),
            },
        )
        log.add(
            f"Regularized transversality at mu={self.p.mu}, c={self.c}, eps={self.eps}: "
            f"{report.verdict}, min dQ(X) = {report.min_value}"
        )
        self.samples = merged
        return report

    def samples_dataframe(self):
        """Per-sample table of the last run: xi, eta, Q, dQ(X) and the bound terms."""
        frame = pd.DataFrame(self.samples["states"], columns=_regularized_labels)
        frame["Q"] = q_hamiltonian(self.p, self.c, self.samples["states"])
        frame["pairing"] = self.samples["pairing"]
        frame["f"] = self.samples["f"]
        frame["eta_norm"] = self.samples["eta_norm"]
        frame["tidal"] = self.samples["tidal"]
        return frame


def regularized_transversality_scan(
    p, c, eps=None, n=10000, rng_seed=0, scan_properties=None, regularization_properties=None
):
    """
    The regularized_transversality_scan function certifies numerically that
    the fiber radial field is transverse to Q = 1/2 near the North pole fiber:
    dQ(X) > 0 on every sample, with |f| >= 1/2, |eta| <= 2 and
    dQ(X) >= 1 - 2 eps (1 + A) checked per sample. A is the larger of the
    estimate and the maximum realized on the samples.

    Args:
        p: ParameterSet
        c: Energy below h12
        eps: Bound on |P|, 0.9 eps_max if None; larger values are clamped
        n: Number of samples
        rng_seed: Seed of the generator
        scan_properties: Overrides of ScanRunner._default_scan_properties
        regularization_properties: Overrides of _default_regularization_properties

    Returns:
        A ScanReport
    """
    scan = RegularizedTransversalityScan(
        p,
        c,
        eps=eps,
        scan_properties=scan_properties,
        regularization_properties=regularization_properties,
    )
    return scan.run(n, rng_seed)
