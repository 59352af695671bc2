import warnings
from dataclasses import dataclass, field

import contourpy
import numpy as np
import pandas as pd
from scipy import ndimage

from hill4bp import lagrange, model
from hill4bp.exceptions import ResolutionWarning
from hill4bp.reports import ScanReport, verdict_from
from hill4bp.utils import create_log

log = create_log()

ALLOWED = "allowed"
FORBIDDEN = "forbidden"

_avail_slice_axes = ["x", "y", "z"]
_axis_index = {"x": 0, "y": 1, "z": 2}

# Cells closer than this to the origin are allowed whatever c, U -> -infinity there.
_origin_cell_radius = 1e-3
_min_component_cells = 4


@dataclass(frozen=True)
class GridSpec:
    """
    Cell-centered grid on the box [-half_width, half_width]^n. A planar grid
    is the slice {slice_axis = slice_value} of configuration space.
    """

    half_width: float = 3.0
    resolution: int = 256
    planar: bool = True
    slice_axis: str = "z"
    slice_value: float = 0.0

    def __post_init__(self):
        if self.slice_axis not in _avail_slice_axes:
            raise ValueError(
                f"Slice axis {self.slice_axis} not available, choose in {_avail_slice_axes}"
            )
        if self.resolution < 2 or self.half_width <= 0:
            raise ValueError("A grid needs a positive half width and at least 2 cells per axis")

    @property
    def cell_size(self):
        return 2.0 * self.half_width / self.resolution

    @property
    def ndim(self):
        return 2 if self.planar else 3

    def axis(self):
        edges = np.linspace(-self.half_width, self.half_width, self.resolution + 1)
        return 0.5 * (edges[1:] + edges[:-1])

    def in_plane_axes(self):
        """Indices of the two cartesian coordinates spanning the slice."""
        return [i for i in range(3) if i != _axis_index[self.slice_axis]]

    def positions(self):
        """Cell centers as an array of shape (resolution,) * ndim + (3,)."""
        axis = self.axis()
        if not self.planar:
            return np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1)
        u, v = np.meshgrid(axis, axis, indexing="ij")
        positions = np.empty(u.shape + (3,))
        first, second = self.in_plane_axes()
        positions[..., first] = u
        positions[..., second] = v
        positions[..., _axis_index[self.slice_axis]] = self.slice_value
        return positions

    def to_dict(self):
        return {
            "half_width": self.half_width,
            "resolution": self.resolution,
            "planar": self.planar,
            "slice_axis": self.slice_axis,
            "slice_value": self.slice_value,
        }


@dataclass
class RegionCensus:
    """Connected components of the Hill region {U <= c} on a grid."""

    mu: float
    c: float
    grid_spec: GridSpec
    labels: np.ndarray
    n_bounded: int
    n_unbounded: int
    bounded_label: object = None
    origin_label: object = None
    component_sizes: dict = field(default_factory=dict)

    @property
    def bounded_mask(self):
        """Cells of the bounded component containing the origin in its closure, K_c^b."""
        if self.bounded_label is None:
            return np.zeros(self.labels.shape, dtype=bool)
        return self.labels == self.bounded_label

    @property
    def origin_mask(self):
        """Cells of the component next to the origin, bounded or not."""
        if self.origin_label is None:
            return np.zeros(self.labels.shape, dtype=bool)
        return self.labels == self.origin_label

    @property
    def max_radius_bounded(self):
        mask = self.bounded_mask
        if not np.any(mask):
            return None
        return float(np.max(np.linalg.norm(self.grid_spec.positions()[mask], axis=-1)))

    def to_dict(self):
        return {
            "mu": self.mu,
            "c": self.c,
            "n_bounded": self.n_bounded,
            "n_unbounded": self.n_unbounded,
            "max_radius_bounded": self.max_radius_bounded,
            "grid": self.grid_spec.to_dict(),
        }


def classify(p, c, position):
    """
    The classify function tells whether a position belongs to the Hill
    region of energy c, U(position) <= c.

    Args:
        p: ParameterSet
        c: Energy
        position: Array of positions, last axis (x, y, z)

    Returns:
        "allowed" or "forbidden", an array of them for several positions

    Raises:
        SingularityError: a position is at the origin
    """
    allowed = model.effective_potential(p, position) <= c
    if np.ndim(allowed) == 0:
        return ALLOWED if allowed else FORBIDDEN
    return np.where(allowed, ALLOWED, FORBIDDEN)


def potential_on_grid(p, grid_spec, origin_value=-np.inf):
    """
    Effective potential at the cell centers. Cells within 1e-3 of the origin
    get origin_value instead of raising.
    """
    positions = grid_spec.positions()
    radius = np.linalg.norm(positions, axis=-1)
    near_origin = radius < _origin_cell_radius
    positions[near_origin] = _origin_cell_radius
    potential = model.effective_potential(p, positions)
    potential[near_origin] = origin_value
    return potential


def allowed_mask(p, c, grid_spec):
    return potential_on_grid(p, grid_spec) <= c


def _origin_cell_index(grid_spec):
    radius = np.linalg.norm(grid_spec.positions(), axis=-1)
    return np.unravel_index(np.argmin(radius), radius.shape)


def component_census(p, c, grid_spec=None):
    """
    The component_census function labels the allowed cells with a flood fill,
    4-connected on a slice and 6-connected in space. A component touching the
    boundary of the box is counted as unbounded, which is a proxy: U goes to
    -infinity quadratically in x so every far cell is allowed.

    Args:
        p: ParameterSet
        c: Energy
        grid_spec: GridSpec, default the z=0 slice of [-3, 3]^2 with 256 cells per axis

    Returns:
        A RegionCensus

    Warns:
        ResolutionWarning: a component has at most 4 cells
    """
    grid_spec = GridSpec() if grid_spec is None else grid_spec
    mask = allowed_mask(p, c, grid_spec)
    structure = ndimage.generate_binary_structure(grid_spec.ndim, 1)
    labels, n_components = ndimage.label(mask, structure=structure)

    boundary = np.zeros(mask.shape, dtype=bool)
    for axis in range(grid_spec.ndim):
        index = [slice(None)] * grid_spec.ndim
        index[axis] = 0
        boundary[tuple(index)] = True
        index[axis] = -1
        boundary[tuple(index)] = True
    touching = set(np.unique(labels[boundary & mask]).tolist())

    sizes = np.bincount(labels.ravel(), minlength=n_components + 1)
    component_sizes = {label: int(sizes[label]) for label in range(1, n_components + 1)}
    small = [label for label, size in component_sizes.items() if size <= _min_component_cells]
    if small:
        warnings.warn(
            f"{len(small)} components of the Hill region at c={c} have at most "
            f"{_min_component_cells} cells, refine the grid",
            ResolutionWarning,
        )

    origin_label = int(labels[_origin_cell_index(grid_spec)]) or None
    bounded_label = origin_label if origin_label not in touching else None
    n_unbounded = len(touching)
    census = RegionCensus(
        mu=p.mu,
        c=float(c),
        grid_spec=grid_spec,
        labels=labels,
        n_bounded=n_components - n_unbounded,
        n_unbounded=n_unbounded,
        bounded_label=bounded_label,
        origin_label=origin_label,
        component_sizes=component_sizes,
    )
    log.add(
        f"Census mu={p.mu}, c={c}: {census.n_bounded} bounded and "
        f"{census.n_unbounded} unbounded components",
        level="debug",
    )
    return census


def census_refinement_check(p, c, resolutions=(256, 512), half_width=3.0, planar=True):
    """Component counts at every resolution and whether they agree."""
    counts = []
    for resolution in resolutions:
        census = component_census(
            p, c, GridSpec(half_width=half_width, resolution=resolution, planar=planar)
        )
        counts.append((census.n_bounded, census.n_unbounded))
    return {"resolutions": list(resolutions), "counts": counts, "stable": len(set(counts)) == 1}


def expected_unbounded_count(p, c, grid_spec=None):
    """
    The expected_unbounded_count function gives the number of unbounded
    components a census of the z = 0 slice should report. The two regions
    beyond L1 and L2 join across the y-axis where U(0, y, 0) <= c, which
    happens inside the box only when the outermost cell center of the y-axis
    is allowed. At mu = 0 the y-axis is never allowed.

    Args:
        p: ParameterSet
        c: Energy below h12
        grid_spec: GridSpec of the census

    Returns:
        1 or 2
    """
    grid_spec = GridSpec() if grid_spec is None else grid_spec
    edge = grid_spec.half_width * (1.0 - 1.0 / grid_spec.resolution)
    joined = model.effective_potential(p, [0.0, edge, 0.0]) <= c
    return 1 if joined else 2


def sphere_grid_minimum(p, radius, n_theta=361, n_phi=181):
    """Minimum of U on the sphere of given radius over a (theta, phi) grid, and its location."""
    theta = np.linspace(0.0, 2.0 * np.pi, n_theta)
    phi = np.linspace(0.0, np.pi, n_phi)
    theta_grid, phi_grid = np.meshgrid(theta, phi, indexing="ij")
    potential = model.effective_potential_spherical(p, radius, theta_grid, phi_grid)
    index = np.unravel_index(np.argmin(potential), potential.shape)
    return float(potential[index]), (float(theta_grid[index]), float(phi_grid[index]))


def bounded_radius_check(p, c, grid_spec=None):
    """
    The bounded_radius_check function verifies that the bounded component
    K_c^b lies in the ball of radius r = lambda2^(-1/3): every cell of K_c^b is
    closer than r to the origin, and U >= h12 > c on the sphere of radius r.

    Args:
        p: ParameterSet
        c: Energy below h12
        grid_spec: GridSpec of the census

    Returns:
        A ScanReport whose min_value is r minus the largest radius in K_c^b
    """
    lagrange.check_energy_below_h12(p, c)
    h12, _ = lagrange.critical_values(p)
    radius = p.r_l12
    census = component_census(p, c, grid_spec)
    max_radius = census.max_radius_bounded
    sphere_min, sphere_argmin = sphere_grid_minimum(p, radius)
    sphere_ok = sphere_min >= h12 - 1e-12 * (1.0 + abs(h12))
    if max_radius is None:
        margin = -np.inf
        argmin = None
    else:
        margin = radius - max_radius
        positions = census.grid_spec.positions()[census.bounded_mask]
        argmin = positions[np.argmax(np.linalg.norm(positions, axis=-1))].tolist()
    report = ScanReport(
        verdict=verdict_from(margin > 0 and sphere_ok),
        min_value=float(margin),
        argmin=argmin,
        n_samples=int(census.bounded_mask.sum()),
        parameters={"mu": p.mu, "c": float(c)},
        bound_kind="bounded_radius",
        extra={
            "radius": radius,
            "max_radius_bounded": max_radius,
            "sphere_minimum": sphere_min,
            "sphere_argmin": list(sphere_argmin),
            "h12": h12,
            "census": census.to_dict(),
        },
    )
    log.add(f"K_c^b in B_r(0) at mu={p.mu}, c={c}: {report.verdict}, margin {margin}")
    return report


def monotonicity_check(p, c1, c2, grid_spec=None):
    """
    Cellwise inclusion of the allowed set at c1 in the allowed set at c2, c1 < c2.
    """
    if c1 >= c2:
        raise ValueError(f"Expected c1 < c2, got c1={c1} and c2={c2}")
    grid_spec = GridSpec() if grid_spec is None else grid_spec
    potential = potential_on_grid(p, grid_spec)
    violations = np.count_nonzero((potential <= c1) & (potential > c2))
    return ScanReport(
        verdict=verdict_from(violations == 0),
        min_value=-float(violations),
        argmin=None,
        n_samples=int(potential.size),
        parameters={"mu": p.mu, "c1": float(c1), "c2": float(c2)},
        bound_kind="hill_region_monotonicity",
    )


def _refine_vertices(p, vertices, grid_spec, c):
    """One Newton step on U - c along the in-plane gradient for every vertex."""
    first, second = grid_spec.in_plane_axes()
    positions = np.zeros((len(vertices), 3))
    positions[:, first] = vertices[:, 0]
    positions[:, second] = vertices[:, 1]
    positions[:, _axis_index[grid_spec.slice_axis]] = grid_spec.slice_value
    gradient = model.potential_gradient(p, positions)[:, [first, second]]
    residual = model.effective_potential(p, positions) - c
    squared = np.sum(gradient**2, axis=1)
    step = np.where(squared > 0, residual / np.where(squared > 0, squared, 1.0), 0.0)
    return vertices - step[:, None] * gradient


def zero_velocity_contour(p, c, grid_spec=None, refine=True):
    """
    The zero_velocity_contour function extracts the curves {U = c} on a
    planar slice with marching squares, then moves every vertex by one
    Newton step onto the level.

    Args:
        p: ParameterSet
        c: Energy
        grid_spec: Planar GridSpec, default the z=0 slice of [-3, 3]^2
        refine: Apply the Newton refinement

    Returns:
        A list of arrays of shape (n_vertices, 2), the in-plane coordinates of each curve
    """
    grid_spec = GridSpec() if grid_spec is None else grid_spec
    if not grid_spec.planar:
        raise ValueError("Contours are extracted on planar slices only")
    axis = grid_spec.axis()
    # Finite stand-in at the origin, far below any level of interest.
    potential = potential_on_grid(p, grid_spec, origin_value=-1.0 / _origin_cell_radius)
    generator = contourpy.contour_generator(
        axis, axis, potential.T, line_type=contourpy.LineType.Separate
    )
    curves = [np.asarray(line, dtype=float) for line in generator.lines(c) if len(line) > 1]
    if refine:
        curves = [_refine_vertices(p, curve, grid_spec, c) for curve in curves]
    log.add(f"{len(curves)} zero velocity curves at mu={p.mu}, c={c}", level="debug")
    return curves


def contour_dataframe(curves):
    """Curves as a table with columns curve_id, x, y (in-plane coordinates)."""
    frames = [
        pd.DataFrame({"curve_id": curve_id, "x": curve[:, 0], "y": curve[:, 1]})
        for curve_id, curve in enumerate(curves)
    ]
    if not frames:
        return pd.DataFrame(columns=["curve_id", "x", "y"])
    return pd.concat(frames, ignore_index=True)


def contour_residual(p, c, curves, grid_spec=None):
    """Largest |U - c| over the vertices of the curves."""
    grid_spec = GridSpec() if grid_spec is None else grid_spec
    if not curves:
        return 0.0
    first, second = grid_spec.in_plane_axes()
    vertices = np.concatenate(curves)
    positions = np.zeros((len(vertices), 3))
    positions[:, first] = vertices[:, 0]
    positions[:, second] = vertices[:, 1]
    positions[:, _axis_index[grid_spec.slice_axis]] = grid_spec.slice_value
    return float(np.max(np.abs(model.effective_potential(p, positions) - c)))
