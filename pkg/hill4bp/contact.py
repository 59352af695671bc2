import abc
import multiprocessing as mp
from contextlib import nullcontext

import iminuit
import numpy as np
import pandas as pd
from scipy import ndimage

from hill4bp import hill_region, lagrange, model
from hill4bp.exceptions import DomainError, EmptyRegion
from hill4bp.reports import ScanReport, verdict_from
from hill4bp.utils import create_log, get_number_worker

log = create_log()

__all__ = [
    "ScanReport",
    "ScanRunner",
    "LevelSetSampler",
    "TransversalityScan",
    "liouville_pairing",
    "position_bound",
    "radial_potential_derivative",
    "lemma1_check",
    "lemma2_scan",
    "lemma3_scan",
    "sample_level_set",
    "transversality_scan",
    "pairing_ladder",
]


def liouville_pairing(p, state):
    """
    The liouville_pairing function evaluates dH applied to the radial Liouville
    field X = x d/dx + y d/dy + z d/dz,
    dH(X) = p_x y - p_y x + 2 a x^2 + 2 b y^2 + z^2 + 1/r.

    Args:
        p: ParameterSet
        state: Array of phase states

    Returns:
        dH(X)

    Raises:
        SingularityError: a position is at the origin
    """
    x, y, z, px, py, pz = model._split_state(state)
    r = model._radius(x, y, z)
    return px * y - py * x + 2.0 * p.a * x**2 + 2.0 * p.b * y**2 + z**2 + 1.0 / r


def radial_potential_derivative(p, position):
    """rho dU/drho = 1/r - lambda2 x^2 - lambda1 y^2 + z^2."""
    position = np.asarray(position, dtype=float)
    x, y, z = position[..., 0], position[..., 1], position[..., 2]
    r = model._radius(x, y, z)
    return 1.0 / r - p.lambda2 * x**2 - p.lambda1 * y**2 + z**2


def position_bound(p, c, position):
    """
    The position_bound function evaluates the momentum-free lower bound of
    dH(X) on the level set H = c obtained with Cauchy-Schwarz,
    rho (dU/drho - sin(phi) sqrt(2 (c - U))).

    Args:
        p: ParameterSet
        c: Energy
        position: Array of positions with U <= c

    Returns:
        The lower bound
    """
    position = np.asarray(position, dtype=float)
    kinetic = np.maximum(c - model.effective_potential(p, position), 0.0)
    planar_radius = np.hypot(position[..., 0], position[..., 1])
    return radial_potential_derivative(p, position) - planar_radius * np.sqrt(2.0 * kinetic)


def _angular_potential_gradient(p, rho, theta, phi):
    angular = p.lambda2 * np.cos(theta) ** 2 + p.lambda1 * np.sin(theta) ** 2
    d_theta = rho**2 * (p.lambda2 - p.lambda1) * np.cos(theta) * np.sin(theta) * np.sin(phi) ** 2
    d_phi = -(rho**2) * np.sin(phi) * np.cos(phi) * (angular + 1.0)
    return np.array([d_theta, d_phi])


def _angular_potential_hessian(p, rho, theta, phi):
    angular = p.lambda2 * np.cos(theta) ** 2 + p.lambda1 * np.sin(theta) ** 2
    d_theta_theta = rho**2 * (p.lambda2 - p.lambda1) * np.sin(phi) ** 2 * np.cos(2.0 * theta)
    d_phi_phi = -(rho**2) * (angular + 1.0) * np.cos(2.0 * phi)
    d_theta_phi = rho**2 * (p.lambda2 - p.lambda1) * np.sin(2.0 * theta) * np.sin(2.0 * phi) / 2.0
    return np.array([[d_theta_theta, d_theta_phi], [d_theta_phi, d_phi_phi]])


def lemma1_check(p, rho, n_grid=181):
    """
    The lemma1_check function studies U restricted to the sphere of radius rho,
    as a function of (theta, phi). It checks that the angular gradient
    vanishes at (0, 0), (0, pi/2), (pi/2, 0) and (pi/2, pi/2), that the
    Hessian at (0, pi/2) is diag(rho^2 (lambda2 - lambda1), rho^2 (lambda2 + 1))
    and positive definite, and that the minimum over a grid of [0, pi]^2 is
    U(rho, 0, pi/2) = -1/rho - rho^2 lambda2 / 2. The grid minimum is polished
    with Minuit.

    Args:
        p: ParameterSet
        rho: Radius in (0, 1)
        n_grid: Grid points per angle, odd so that pi/2 is on the grid

    Returns:
        A ScanReport whose min_value is the smallest Hessian eigenvalue at (0, pi/2)

    Raises:
        DomainError: rho is not in (0, 1)
    """
    if not 0.0 < rho < 1.0:
        raise DomainError(f"The radius rho={rho} must lie in (0, 1)")
    if n_grid % 2 == 0:
        n_grid += 1
    scale = rho**2 * (p.lambda2 + 1.0)
    critical_points = [(0.0, 0.0), (0.0, np.pi / 2), (np.pi / 2, 0.0), (np.pi / 2, np.pi / 2)]
    gradients = {
        f"{theta:.6f},{phi:.6f}": float(np.max(np.abs(_angular_potential_gradient(p, rho, theta, phi))))
        for theta, phi in critical_points
    }
    gradient_ok = all(value <= 1e-14 * scale for value in gradients.values())

    hessian = _angular_potential_hessian(p, rho, 0.0, np.pi / 2)
    expected = np.diag([rho**2 * (p.lambda2 - p.lambda1), rho**2 * (p.lambda2 + 1.0)])
    hessian_ok = np.allclose(hessian, expected, rtol=1e-12, atol=1e-14 * scale)
    eigenvalues = np.linalg.eigvalsh(hessian)

    angles = np.linspace(0.0, np.pi, n_grid)
    theta_grid, phi_grid = np.meshgrid(angles, angles, indexing="ij")
    potential = model.effective_potential_spherical(p, rho, theta_grid, phi_grid)
    index = np.unravel_index(np.argmin(potential), potential.shape)
    grid_minimum = float(potential[index])
    grid_argmin = (float(theta_grid[index]), float(phi_grid[index]))
    expected_minimum = -1.0 / rho - 0.5 * rho**2 * p.lambda2
    minimum_ok = abs(grid_minimum - expected_minimum) <= 1e-12 * (1.0 + abs(expected_minimum))

    def restricted_potential(angles):
        return float(model.effective_potential_spherical(p, rho, angles[0], angles[1]))

    minuit = iminuit.Minuit(restricted_potential, list(grid_argmin), name=["theta", "phi"])
    minuit.errordef = 1.0
    minuit.errors["theta"] = minuit.errors["phi"] = 1e-2
    minuit.tol = 1e-6
    minuit.migrad()
    polished = np.array([minuit.values["theta"], minuit.values["phi"]])
    # (0, pi/2) and (pi, pi/2) are the same minimum.
    theta_offset = np.mod(polished[0] + np.pi / 2, np.pi) - np.pi / 2
    polished_distance = float(np.hypot(theta_offset, polished[1] - np.pi / 2))
    location_ok = polished_distance < 1e-4

    passed = gradient_ok and hessian_ok and eigenvalues[0] > 0 and minimum_ok and location_ok
    report = ScanReport(
        verdict=verdict_from(passed),
        min_value=float(eigenvalues[0]),
        argmin=[rho, grid_argmin[0], grid_argmin[1]],
        n_samples=int(potential.size),
        parameters={"mu": p.mu, "rho": rho},
        bound_kind="lemma1_angular_minimum",
        extra={
            "critical_point_gradients": gradients,
            "hessian": hessian,
            "expected_hessian": expected,
            "grid_minimum": grid_minimum,
            "expected_minimum": expected_minimum,
            "polished_argmin": polished,
            "polished_minimum": float(minuit.fval),
            "polished_distance": polished_distance,
        },
    )
    log.add(f"Angular minimum at mu={p.mu}, rho={rho}: {report.verdict}", level="debug")
    return report


def _spherical_grid(p, n_grid, rho_min, endpoint):
    n_rho, n_theta, n_phi = (n_grid,) * 3 if np.isscalar(n_grid) else n_grid
    rho = np.linspace(rho_min, p.r_l12, n_rho, endpoint=endpoint)
    theta = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    phi = np.linspace(0.0, np.pi, n_phi)
    return np.meshgrid(rho, theta, phi, indexing="ij")


def lemma2_scan(p, n_grid=64, rho_min=1e-3):
    """
    The lemma2_scan function evaluates
    dU/drho = 1/rho^2 - rho (lambda2 cos^2 theta sin^2 phi + lambda1 sin^2 theta sin^2 phi - cos^2 phi)
    on a grid of rho in [rho_min, r), r = lambda2^(-1/3), and checks it is
    positive, together with the bound dU/drho >= 1/rho^2 - lambda2 rho.

    Args:
        p: ParameterSet
        n_grid: Points per axis, or a tuple (n_rho, n_theta, n_phi)
        rho_min: Smallest radius of the grid

    Returns:
        A ScanReport whose min_value is the minimum of dU/drho
    """
    rho, theta, phi = _spherical_grid(p, n_grid, rho_min, endpoint=False)
    sin_phi2 = np.sin(phi) ** 2
    angular = (
        p.lambda2 * np.cos(theta) ** 2 * sin_phi2
        + p.lambda1 * np.sin(theta) ** 2 * sin_phi2
        - np.cos(phi) ** 2
    )
    derivative = 1.0 / rho**2 - rho * angular
    lower_bound = 1.0 / rho**2 - p.lambda2 * rho
    violations = np.count_nonzero(derivative < lower_bound - 1e-12 * (1.0 + np.abs(lower_bound)))
    index = np.unravel_index(np.argmin(derivative), derivative.shape)
    minimum = float(derivative[index])
    report = ScanReport(
        verdict=verdict_from(minimum > 0 and violations == 0),
        min_value=minimum,
        argmin=[float(rho[index]), float(theta[index]), float(phi[index])],
        n_samples=int(derivative.size),
        parameters={"mu": p.mu, "rho_min": rho_min},
        bound_kind="lemma2_radial_derivative",
        extra={"lower_bound_violations": int(violations), "radius": p.r_l12},
    )
    log.add(f"Radial derivative scan at mu={p.mu}: {report.verdict}, min {minimum}")
    return report


def lemma3_scan(p, n_grid=64, rho_min=1e-3):
    """
    The lemma3_scan function evaluates d^2U/drho^2 + sin^2 phi, with
    d^2U/drho^2 = -2/rho^3 + cos^2 phi - sin^2 phi (lambda2 cos^2 theta + lambda1 sin^2 theta),
    on a grid of rho in [rho_min, r] and checks it is non-positive. It also
    checks -2/r^3 + 1 = -2 lambda2 + 1 <= -3.

    Returns:
        A ScanReport whose min_value is minus the maximum of the quantity
    """
    rho, theta, phi = _spherical_grid(p, n_grid, rho_min, endpoint=True)
    sin_phi2 = np.sin(phi) ** 2
    second = (
        -2.0 / rho**3
        + np.cos(phi) ** 2
        - sin_phi2 * (p.lambda2 * np.cos(theta) ** 2 + p.lambda1 * np.sin(theta) ** 2)
    )
    quantity = second + sin_phi2
    index = np.unravel_index(np.argmax(quantity), quantity.shape)
    maximum = float(quantity[index])
    chain_value = -2.0 / p.r_l12**3 + 1.0
    chain_ok = chain_value <= -3.0 and np.isclose(chain_value, -2.0 * p.lambda2 + 1.0, rtol=1e-12)
    report = ScanReport(
        verdict=verdict_from(maximum <= 1e-12 and chain_ok),
        min_value=-maximum,
        argmin=[float(rho[index]), float(theta[index]), float(phi[index])],
        n_samples=int(quantity.size),
        parameters={"mu": p.mu, "rho_min": rho_min},
        bound_kind="lemma3_second_radial_derivative",
        extra={"maximum": maximum, "chain_value": chain_value},
    )
    log.add(f"Second radial derivative scan at mu={p.mu}: {report.verdict}, max {maximum}")
    return report


class LevelSetSampler(object):
    """
    Uniform sampler of the bounded component of the Hill region, lifted to
    the energy level H = c.

    By radial monotonicity of U inside B_r(0), K_c^b is exactly the set of
    positions with |pos| < r and U <= c. Candidate cells are the census cells
    of the component next to the origin, grown by one cell, and jittered
    points are accepted on that exact criterion.
    """

    def __init__(self, p, c, planar=False, resolution=64, rho_min=1e-3, max_rejections=10**6):
        lagrange.check_energy_below_h12(p, c)
        self.p = p
        self.c = float(c)
        self.planar = planar
        self.rho_min = rho_min
        self.max_rejections = int(max_rejections)
        self.radius = p.r_l12
        self.grid_spec = hill_region.GridSpec(
            half_width=1.05 * self.radius, resolution=resolution, planar=planar
        )
        census = hill_region.component_census(p, c, self.grid_spec)
        structure = ndimage.generate_binary_structure(self.grid_spec.ndim, 1)
        candidates = ndimage.binary_dilation(census.origin_mask, structure=structure)
        positions = self.grid_spec.positions()
        # The origin is in the closure of K_c^b even when no cell center is allowed.
        candidates |= np.linalg.norm(positions, axis=-1) < self.grid_spec.cell_size
        self.cell_centers = positions[candidates]
        log.add(
            f"Level set sampler at mu={p.mu}, c={c}: {len(self.cell_centers)} candidate cells",
            level="debug",
        )

    def sample_positions(self, n, rng):
        """Uniform positions in K_c^b minus the ball of radius rho_min."""
        n_dim = 2 if self.planar else 3
        accepted = []
        n_accepted = 0
        n_tries = 0
        while n_accepted < n:
            n_draw = max(2 * (n - n_accepted), 16)
            cells = self.cell_centers[rng.integers(len(self.cell_centers), size=n_draw)]
            jitter = rng.uniform(-0.5, 0.5, size=(n_draw, n_dim)) * self.grid_spec.cell_size
            positions = cells.copy()
            positions[:, :n_dim] += jitter
            radius = np.linalg.norm(positions, axis=1)
            keep = (radius > self.rho_min) & (radius < self.radius)
            keep[keep] = model.effective_potential(self.p, positions[keep]) <= self.c
            accepted.append(positions[keep])
            n_accepted += int(keep.sum())
            n_tries += n_draw
            if n_accepted < n and n_tries > self.max_rejections:
                raise EmptyRegion(
                    f"Only {n_accepted} of {n} positions accepted after {n_tries} draws "
                    f"at mu={self.p.mu}, c={self.c}"
                )
        return np.concatenate(accepted)[:n]

    def lift(self, positions, rng):
        """
        Momenta on the sphere of radius sqrt(2 (c - U)) centered at (-y, x, 0),
        a circle in the plane for planar samples.
        """
        n_dim = 2 if self.planar else 3
        directions = np.zeros((len(positions), 3))
        directions[:, :n_dim] = rng.standard_normal((len(positions), n_dim))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        speed = np.sqrt(2.0 * np.maximum(self.c - model.effective_potential(self.p, positions), 0.0))
        states = self._momenta_from_speed(positions, directions, speed)
        # One Newton step on 1/2 speed^2 = c - U, evaluated with H itself.
        residual = model.hamiltonian(self.p, states) - self.c
        corrected = np.where(speed > 0.0, speed - residual / np.where(speed > 0.0, speed, 1.0), speed)
        return self._momenta_from_speed(positions, directions, corrected)

    @staticmethod
    def _momenta_from_speed(positions, directions, speed):
        momenta = speed[:, None] * directions
        momenta[:, 0] -= positions[:, 1]
        momenta[:, 1] += positions[:, 0]
        return np.concatenate([positions, momenta], axis=1)

    def sample(self, n, rng):
        if n < 1:
            raise ValueError("n must be at least 1")
        return self.lift(self.sample_positions(n, rng), rng)


def sample_level_set(p, c, n, rng_seed=0, planar=False, resolution=64):
    """
    The sample_level_set function draws n phase states on the bounded
    component of the energy level H = c, positions uniform in K_c^b and
    momenta uniform on the sphere allowed by the energy.

    Args:
        p: ParameterSet
        c: Energy below h12
        n: Number of samples
        rng_seed: Seed of the generator
        planar: Sample in Fix(sigma), z = p_z = 0
        resolution: Cells per axis of the census grid

    Returns:
        An array of shape (n, 6)

    Raises:
        DomainError: c >= h12
        EmptyRegion: the rejection sampler is exhausted
    """
    sampler = LevelSetSampler(p, c, planar=planar, resolution=resolution)
    return sampler.sample(n, np.random.default_rng(rng_seed))


class ScanRunner(abc.ABC):
    """
    Batched scan over random samples. Batch i draws from the i-th child of
    SeedSequence(rng_seed), batches run on a process pool and are merged in
    order, so the result does not depend on the number of workers.
    """

    _default_scan_properties = {
        "batch_size": 10000,
        "number_worker": None,
        "rho_min": 1e-3,
        "sampling_resolution": 64,
        "max_rejections": 10**6,
        "bound_slack": 1e-10,
    }

    def __init__(self, p, c, scan_properties=None):
        lagrange.check_energy_below_h12(p, c)
        self.p = p
        self.c = float(c)
        if scan_properties is None:
            scan_properties = {}
        self.scan_properties = {**self._default_scan_properties, **scan_properties}

    @abc.abstractmethod
    def evaluate_batch(self, task):
        """Evaluate one batch given (n_samples, seed_sequence); returns a dictionary of arrays."""
        pass

    @abc.abstractmethod
    def build_report(self, merged, n, rng_seed):
        pass

    def batches(self, n, rng_seed):
        batch_size = int(self.scan_properties["batch_size"])
        sizes = [batch_size] * (n // batch_size)
        if n % batch_size:
            sizes.append(n % batch_size)
        children = np.random.SeedSequence(rng_seed).spawn(len(sizes))
        return list(zip(sizes, children))

    def run(self, n, rng_seed=0):
        if n < 1:
            raise ValueError("n must be at least 1")
        tasks = self.batches(n, rng_seed)
        number_worker = min(get_number_worker(self.scan_properties["number_worker"]), len(tasks))
        log.add(
            f"{type(self).__name__}: {n} samples in {len(tasks)} batches on {number_worker} workers"
        )
        with mp.Pool(number_worker) if number_worker != 1 else nullcontext() as pool:
            if pool is None:
                results = [self.evaluate_batch(task) for task in tasks]
            else:
                results = pool.map(self.evaluate_batch, tasks)
        merged = {key: np.concatenate([result[key] for result in results]) for key in results[0]}
        return self.build_report(merged, n, rng_seed)


class TransversalityScan(ScanRunner):
    """Evaluation of dH(X) and of its position-only lower bound on samples of the level set."""

    def __init__(self, p, c, planar=False, scan_properties=None):
        super(TransversalityScan, self).__init__(p, c, scan_properties=scan_properties)
        self.planar = planar
        self.sampler = LevelSetSampler(
            p,
            c,
            planar=planar,
            resolution=self.scan_properties["sampling_resolution"],
            rho_min=self.scan_properties["rho_min"],
            max_rejections=self.scan_properties["max_rejections"],
        )

    def evaluate_batch(self, task):
        n_samples, seed_sequence = task
        rng = np.random.default_rng(seed_sequence)
        states = self.sampler.sample(n_samples, rng)
        return {
            "states": states,
            "pairing": liouville_pairing(self.p, states),
            "bound": position_bound(self.p, self.c, states[:, :3]),
            "energy_error": np.abs(model.hamiltonian(self.p, states) - self.c),
        }

    def build_report(self, merged, n, rng_seed):
        pairing, bound = merged["pairing"], merged["bound"]
        slack = self.scan_properties["bound_slack"] * (1.0 + np.abs(bound))
        chain_violations = int(np.count_nonzero(pairing < bound - slack))
        index = int(np.argmin(pairing))
        bound_index = int(np.argmin(bound))
        passed = pairing[index] > 0 and bound[bound_index] > 0 and chain_violations == 0
        log.add_array_statistics(pairing, "dH(X)")
        report = ScanReport(
            verdict=verdict_from(passed),
            min_value=float(pairing[index]),
            argmin=merged["states"][index].tolist(),
            n_samples=n,
            rng_seed=rng_seed,
            parameters={"mu": self.p.mu, "c": self.c, "planar": self.planar},
            bound_kind="liouville_pairing",
            extra={
                "min_position_bound": float(bound[bound_index]),
                "argmin_position_bound": merged["states"][bound_index, :3].tolist(),
                "chain_violations": chain_violations,
                "max_energy_error": float(np.max(merged["energy_error"])),
            },
        )
        log.add(
            f"Transversality at mu={self.p.mu}, c={self.c}: {report.verdict}, "
            f"min dH(X) = {report.min_value}"
        )
        self.samples = merged
        return report

    def samples_dataframe(self):
        """Per-sample table of the last run: state, dH(X) and the position bound."""
        frame = pd.DataFrame(self.samples["states"], columns=model._state_labels)
        frame["pairing"] = self.samples["pairing"]
        frame["bound"] = self.samples["bound"]
        return frame


def transversality_scan(p, c, n, rng_seed=0, planar=False, scan_properties=None):
    """
    The transversality_scan function certifies numerically that X is transverse
    to the bounded component of H = c: the minimum of dH(X) over n samples is
    positive, the momentum-free Cauchy-Schwarz bound is positive, and
    dH(X) >= bound holds on every sample up to a relative slack.

    Args:
        p: ParameterSet
        c: Energy below h12
        n: Number of samples
        rng_seed: Seed of the generator
        planar: Restrict to Fix(sigma)
        scan_properties: Overrides of ScanRunner._default_scan_properties

    Returns:
        A ScanReport
    """
    return TransversalityScan(p, c, planar=planar, scan_properties=scan_properties).run(n, rng_seed)


def pairing_ladder(p, c_offsets, n=10000, rng_seed=0, planar=False, scan_properties=None):
    """
    Minimum of dH(X) for c = h12 - offset over a list of offsets. The minimum
    is expected to decrease toward 0 as the offset goes to 0.

    Returns:
        A pandas DataFrame with columns c_offset, c, min_pairing, verdict
    """
    h12, _ = lagrange.critical_values(p)
    rows = []
    for offset in sorted(c_offsets, reverse=True):
        report = transversality_scan(
            p, h12 - offset, n, rng_seed=rng_seed, planar=planar, scan_properties=scan_properties
        )
        rows.append(
            {
                "c_offset": offset,
                "c": h12 - offset,
                "min_pairing": report.min_value,
                "verdict": report.verdict,
            }
        )
    ladder = pd.DataFrame(rows)
    decreasing = bool(np.all(np.diff(ladder["min_pairing"].to_numpy()) <= 0))
    log.add(f"Pairing ladder at mu={p.mu}: minimum decreasing toward h12 is {decreasing}")
    return ladder
