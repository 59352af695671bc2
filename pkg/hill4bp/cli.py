import argparse
import sys

import numpy as np

from hill4bp import (
    __version__,
    contact,
    flow,
    hill_region,
    lagrange,
    model,
    regularization,
    reports,
    symmetry,
)
from hill4bp.exceptions import Hill4bpError
from hill4bp.utils import create_log

log = create_log()

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _float_list(text):
    try:
        return [float(value) for value in text.split(",") if value.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected comma separated numbers, got {text!r}")


def _slice(text):
    try:
        axis, value = text.split("=")
        return axis.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected a slice like z=0, got {text!r}")


def _add_energy_arguments(parser):
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--c", type=float, default=None, help="Energy level")
    group.add_argument(
        "--c-offset",
        type=float,
        default=None,
        help="Energy level given as H(L1) - offset (default offset 0.1)",
    )


def _add_output_argument(parser):
    parser.add_argument("--output", "-o", default=None, help="Output file, standard output if absent")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hill4bp",
        description="Spatial Hill four-body problem: parameters, Hill regions and contact-type scans.",
    )
    parser.add_argument("--version", action="version", version=f"hill4bp {__version__}")
    parser.add_argument(
        "--log-level",
        default=None,
        choices=["info", "debug", "warning", "error"],
        help="Logging level, HILL4BP_LOG_LEVEL or info by default",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    params = subparsers.add_parser("params", help="Derived parameters of a mass ratio")
    params.add_argument("--mu", default="hill", help="Mass ratio in [0, 1/2] or a preset name")
    params.add_argument("--table", action="store_true", help="CSV table over [0, 1/2]")
    params.add_argument("--mu-steps", type=int, default=101)
    _add_output_argument(params)

    lag = subparsers.add_parser("lagrange", help="Lagrange points and critical values")
    lag.add_argument("--mu", required=True)
    lag.add_argument("--seeds", type=int, default=40, help="Seeds per axis of the Newton oracle")
    _add_output_argument(lag)

    region = subparsers.add_parser("hill-region", help="Hill region census and contours")
    region.add_argument("--mu", required=True)
    _add_energy_arguments(region)
    region.add_argument("--grid", type=int, default=256)
    region.add_argument("--half-width", type=float, default=3.0)
    region.add_argument("--slice", type=_slice, default=("z", 0.0))
    region.add_argument("--spatial", action="store_true", help="3D census instead of a slice")
    region.add_argument("--contour", default=None, help="CSV file of the zero velocity curves")
    _add_output_argument(region)

    scan = subparsers.add_parser("scan-contact", help="Transversality of the radial Liouville field")
    scan.add_argument("--mu", required=True)
    _add_energy_arguments(scan)
    scan.add_argument("--n", type=int, default=100000)
    scan.add_argument("--seed", type=int, default=0)
    scan.add_argument("--planar", action="store_true")
    scan.add_argument("--samples-csv", default=None)
    _add_output_argument(scan)

    regularized = subparsers.add_parser(
        "scan-regularized", help="Transversality near collision in the regularized picture"
    )
    regularized.add_argument("--mu", required=True)
    _add_energy_arguments(regularized)
    regularized.add_argument("--n", type=int, default=100000)
    regularized.add_argument("--seed", type=int, default=0)
    regularized.add_argument("--eps", type=float, default=None)
    regularized.add_argument("--samples-csv", default=None)
    _add_output_argument(regularized)

    sym = subparsers.add_parser("symmetry", help="Linear symmetries and their group")
    sym.add_argument("--mu", required=True)
    sym.add_argument("--n", type=int, default=1000)
    sym.add_argument("--seed", type=int, default=0)
    _add_output_argument(sym)

    integ = subparsers.add_parser("integrate", help="Trajectory in the physical or regularized chart")
    integ.add_argument("--mu", required=True)
    integ.add_argument("--state", type=float, nargs=6, required=True)
    integ.add_argument("--t", type=float, required=True, help="Final time, regularized time with --regularized")
    integ.add_argument("--tol", type=float, default=1e-10)
    integ.add_argument("--regularized", action="store_true")
    integ.add_argument("--c", type=float, default=None, help="Energy of the regularized flow, H(state) by default")
    _add_output_argument(integ)

    verify = subparsers.add_parser("verify-all", help="Full acceptance run")
    verify.add_argument("--mu-list", type=_float_list, default=[0.0, 0.00095, 0.2, 0.5])
    verify.add_argument("--c-offsets", type=_float_list, default=[0.01, 0.1, 0.5])
    verify.add_argument("--n", type=int, default=100000)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--lemma-grid", type=int, default=64)
    verify.add_argument("--census-grid", type=int, default=256)
    _add_output_argument(verify)
    return parser


def _energy(args, p):
    if getattr(args, "c", None) is not None:
        return args.c
    offset = 0.1 if args.c_offset is None else args.c_offset
    return lagrange.critical_values(p)[0] - offset


def _provenance(argv, args, mu=None, c=None):
    return reports.provenance(__version__, argv, seed=getattr(args, "seed", None), mu=mu, c=c)


def run_params(args, argv):
    if args.table:
        if args.mu_steps < 2:
            raise ValueError("--mu-steps must be at least 2")
        table = model.parameter_table(np.linspace(0.0, 0.5, args.mu_steps))
        reports.dump_csv(table, args.output)
        return EXIT_PASS
    mu = model.resolve_mu(args.mu)
    p = model.derive_parameters(mu)
    low, high = model.rotation_diagonalization_check(mu)
    extended = model.derive_parameters_extended(mu)
    payload = {
        "provenance": _provenance(argv, args, mu=mu),
        "parameters": p.to_dict(),
        "extended_precision": {key: str(value) for key, value in extended.items()},
        "rotation_eigenvalues": [low, high],
        "jacobi_constant_l1": float(
            model.jacobi_constant(p, lagrange.lift_to_phase(lagrange.lagrange_point(p, "L1")))
        ),
    }
    reports.dump_json(payload, args.output)
    return EXIT_PASS


def run_lagrange(args, argv):
    mu = model.resolve_mu(args.mu)
    p = model.derive_parameters(mu)
    summary = lagrange.lagrange_summary(p)
    points, failures = lagrange.find_critical_points_numeric(
        p, lagrange.default_seed_grid(args.seeds), return_failures=True
    )
    matched, unmatched = lagrange.match_to_closed_form(p, points)
    summary["numeric"] = {
        "points": points,
        "matched": matched,
        "unmatched": unmatched,
        "n_failed_seeds": len(failures),
    }
    summary["provenance"] = _provenance(argv, args, mu=mu)
    reports.dump_json(summary, args.output)
    return EXIT_PASS


def run_hill_region(args, argv):
    mu = model.resolve_mu(args.mu)
    p = model.derive_parameters(mu)
    c = _energy(args, p)
    axis, value = args.slice
    grid_spec = hill_region.GridSpec(
        half_width=args.half_width,
        resolution=args.grid,
        planar=not args.spatial,
        slice_axis=axis,
        slice_value=value,
    )
    census = hill_region.component_census(p, c, grid_spec)
    payload = {"provenance": _provenance(argv, args, mu=mu, c=c), "census": census.to_dict()}
    exit_code = EXIT_PASS
    if c < lagrange.critical_values(p)[0]:
        radius_report = hill_region.bounded_radius_check(p, c, grid_spec)
        payload["bounded_radius"] = radius_report.to_dict()
        exit_code = EXIT_PASS if radius_report.passed else EXIT_FAIL
    if args.contour is not None:
        curves = hill_region.zero_velocity_contour(p, c, grid_spec)
        reports.dump_csv(hill_region.contour_dataframe(curves), args.contour)
        payload["contour"] = {"n_curves": len(curves), "file": args.contour}
    reports.dump_json(payload, args.output)
    return exit_code


def run_scan_contact(args, argv):
    mu = model.resolve_mu(args.mu)
    p = model.derive_parameters(mu)
    c = _energy(args, p)
    scan = contact.TransversalityScan(p, c, planar=args.planar)
    report = scan.run(args.n, args.seed)
    if args.samples_csv is not None:
        reports.dump_csv(scan.samples_dataframe(), args.samples_csv)
    reports.dump_json(
        {"provenance": _provenance(argv, args, mu=mu, c=c), "report": report.to_dict()}, args.output
    )
    return EXIT_PASS if report.passed else EXIT_FAIL


def run_scan_regularized(args, argv):
    mu = model.resolve_mu(args.mu)
    p = model.derive_parameters(mu)
    c = _energy(args, p)
    scan = regularization.RegularizedTransversalityScan(p, c, eps=args.eps)
    report = scan.run(args.n, args.seed)
    if args.samples_csv is not None:
        reports.dump_csv(scan.samples_dataframe(), args.samples_csv)
    reports.dump_json(
        {"provenance": _provenance(argv, args, mu=mu, c=c), "report": report.to_dict()}, args.output
    )
    return EXIT_PASS if report.passed else EXIT_FAIL


def symmetry_payload(p, n, seed):
    invariance = {}
    for planar in (False, True):
        for inv in symmetry.builtin_involutions(planar=planar):
            key = f"{'planar' if planar else 'spatial'}:{inv.name}"
            invariance[key] = symmetry.verify_hamiltonian_invariance(
                p, inv, n_samples=n, rng_seed=seed
            ).to_dict()
    table = symmetry.group_closure_table()
    found = symmetry.search_signed_permutation_symmetries(p, rng_seed=seed)
    payload = {
        "invariance": invariance,
        "kinds": {inv.name: inv.kind for inv in symmetry.builtin_involutions()},
        "group_table": table.to_dict(orient="index"),
        "elementary_abelian": symmetry.is_elementary_abelian(table),
        "planar_projection": symmetry.projection_table(),
        "signed_permutation_symmetries": sorted(inv.name for inv in found),
    }
    passed = (
        all(report["verdict"] == "pass" for report in invariance.values())
        and payload["elementary_abelian"]
        and set(payload["signed_permutation_symmetries"]) == set(payload["kinds"])
    )
    return payload, passed


def run_symmetry(args, argv):
    mu = model.resolve_mu(args.mu)
    p = model.derive_parameters(mu)
    payload, passed = symmetry_payload(p, args.n, args.seed)
    payload["provenance"] = _provenance(argv, args, mu=mu)
    reports.dump_json(payload, args.output)
    return EXIT_PASS if passed else EXIT_FAIL


def run_integrate(args, argv):
    mu = model.resolve_mu(args.mu)
    p = model.derive_parameters(mu)
    state = np.array(args.state)
    if not args.regularized:
        try:
            trajectory = flow.integrate_physical(p, state, args.t, tol=args.tol)
        except Hill4bpError as error:
            if getattr(error, "trajectory", None) is None:
                raise
            trajectory = error.trajectory
            log.add(str(error), level="warning")
        reports.dump_csv(trajectory.to_dataframe(p), args.output)
        return EXIT_PASS
    c = float(model.hamiltonian(p, state)) if args.c is None else args.c
    r0 = regularization.phase_to_regularized(state)
    trajectory = flow.integrate_regularized(p, c, r0, args.t, tol=args.tol)
    reports.dump_csv(trajectory.to_dataframe(p, c), args.output)
    return EXIT_PASS


def _flow_checks(p, c, seed, n_attempts=5):
    """
    Energy drift along a physical orbit of the level c, drift of Q and passage
    through the North pole fiber along the regularized collision orbit, and
    agreement of the physical and regularized flows away from collision. Level
    samples ending in a collision are replaced by the next ones; when all of
    them collide the drift check is reported as skipped and fails.
    """
    drift = None
    status = "skipped"
    for sample in contact.sample_level_set(p, c, n_attempts, rng_seed=seed):
        try:
            drift = flow.integrate_physical(p, sample, 10.0, tol=1e-10).drift(p)
        except Hill4bpError as error:
            log.add(f"Energy drift sample discarded: {error}", level="warning")
            continue
        status = "checked"
        break
    if drift is None:
        log.add(f"Energy drift check skipped, none of {n_attempts} level samples could be integrated", level="warning")

    transit = flow.integrate_regularized(
        p, c, regularization.phase_to_regularized(flow.collision_orbit_state(p, c)), 10.0
    )
    q_drift = transit.drift(p, c)
    closest = transit.closest_north_pole_distance()

    state = model.phase_state(0.3, 0.0, 0.05, 0.0, -1.0 / np.sqrt(0.3), 0.02)
    level = float(model.hamiltonian(p, state))
    regularized = flow.integrate_regularized(p, level, regularization.phase_to_regularized(state), 2.0, tol=1e-12)
    mismatch = flow.physical_regularized_mismatch(p, level, regularized)
    return {
        "energy_drift": drift,
        "energy_drift_status": status,
        "q_drift": q_drift,
        "closest_north_pole_distance": closest,
        "physical_regularized_mismatch": mismatch,
        "passed": status == "checked"
        and drift < 1e-8
        and q_drift < 1e-8
        and closest < 1e-6
        and mismatch < 1e-6,
    }


def _verify_mu(p, offsets, n, seed, lemma_grid, census_grid):
    h12, h34 = lagrange.critical_values(p)
    checks = {}

    extended = model.derive_parameters_extended(p.mu)
    relative = {
        key: abs(float(extended[key]) - value) / max(abs(float(extended[key])), 1e-300)
        for key, value in p.to_dict().items()
        if key != "mu" and float(extended[key]) != 0.0
    }
    checks["parameters"] = {
        "relative_errors": relative,
        "passed": max(relative.values()) <= 1e-14
        and abs(p.lambda1 + p.lambda2 - 3.0) <= 1e-14
        and abs(p.a + p.b + 0.5) <= 1e-14,
    }

    low, high = model.rotation_diagonalization_check(p.mu)
    checks["rotation"] = {
        "eigenvalues": [low, high],
        "passed": abs(low - p.a) <= 1e-12 and abs(high - p.b) <= 1e-12,
    }

    summary = lagrange.lagrange_summary(p)
    points = lagrange.find_critical_points_numeric(p)
    matched, unmatched = lagrange.match_to_closed_form(p, points)
    lifted_energy = {
        name: float(model.hamiltonian(p, lagrange.lift_to_phase(q)))
        for name, q in lagrange.lagrange_points(p).items()
    }
    expected_energy = {"L1": h12, "L2": h12, "L3": h34, "L4": h34}
    checks["lagrange"] = {
        "summary": summary,
        "numeric_matched": sorted(matched),
        "passed": max(summary["gradient_norm"].values()) < 1e-10
        and unmatched == 0
        and len(matched) == len(summary["points"])
        and all(
            abs(value - expected_energy[name]) <= 1e-12 * abs(expected_energy[name])
            for name, value in lifted_energy.items()
        )
        and h12 < -1.5
        and (h34 is None or h12 < h34 < 0.0),
    }

    lemmas = {
        "lemma1": contact.lemma1_check(p, 0.5),
        "lemma2": contact.lemma2_scan(p, lemma_grid),
        "lemma3": contact.lemma3_scan(p, lemma_grid),
    }
    checks["lemmas"] = {
        "reports": {key: report.to_dict() for key, report in lemmas.items()},
        "passed": all(report.passed for report in lemmas.values()),
    }

    symmetry_report, symmetry_passed = symmetry_payload(p, 1000, seed)
    checks["symmetry"] = {"elementary_abelian": symmetry_report["elementary_abelian"], "passed": symmetry_passed}

    rng = np.random.default_rng(seed)
    states = symmetry.random_phase_states(10000, rng)
    round_trip = regularization.sphere_to_stereo(regularization.stereo_to_sphere(states))
    images = regularization.stereo_to_sphere(states)
    relation = np.abs(
        np.linalg.norm(images[:, 4:], axis=1) * (1.0 - images[:, 0])
        - np.linalg.norm(states[:, 3:], axis=1)
    )
    round_trip_error = float(np.max(np.abs(round_trip - states) / (1.0 + np.abs(states))))
    checks["regularization_maps"] = {
        "round_trip_error": round_trip_error,
        "momentum_relation_error": float(np.max(relation / (1.0 + np.linalg.norm(states[:, 3:], axis=1)))),
        "passed": round_trip_error <= 1e-12 and np.max(relation) <= 1e-12 * (1.0 + np.max(np.abs(states))),
    }

    energy_checks = {}
    for offset in offsets:
        c = h12 - offset
        entry = {"c": c}
        census = hill_region.component_census(p, c, hill_region.GridSpec(resolution=census_grid))
        radius_report = hill_region.bounded_radius_check(
            p, c, hill_region.GridSpec(resolution=census_grid)
        )
        entry["census"] = census.to_dict()
        expected_unbounded = hill_region.expected_unbounded_count(
            p, c, hill_region.GridSpec(resolution=census_grid)
        )
        refinement = hill_region.census_refinement_check(p, c, resolutions=(census_grid, 2 * census_grid))
        entry["expected_unbounded"] = expected_unbounded
        entry["census_refinement"] = refinement
        entry["census_passed"] = (
            census.n_bounded == 1
            and census.bounded_label is not None
            and census.n_unbounded == expected_unbounded
            and refinement["stable"]
        )
        entry["bounded_radius"] = radius_report.to_dict()

        level_samples = contact.sample_level_set(p, c, 1000, rng_seed=seed)
        q_error = np.abs(
            regularization.q_hamiltonian(p, c, regularization.phase_to_regularized(level_samples)) - 0.5
        )
        entry["level_to_q_error"] = float(np.max(q_error))

        scans = {
            "contact": contact.transversality_scan(p, c, n, rng_seed=seed),
            "contact_planar": contact.transversality_scan(p, c, n, rng_seed=seed, planar=True),
            "regularized": regularization.regularized_transversality_scan(p, c, n=n, rng_seed=seed),
        }
        entry["scans"] = {key: report.to_dict() for key, report in scans.items()}
        entry["passed"] = (
            entry["census_passed"]
            and radius_report.passed
            and entry["level_to_q_error"] <= 1e-10
            and all(report.passed for report in scans.values())
        )
        energy_checks[f"{offset!r}"] = entry
    checks["energies"] = energy_checks

    if h34 is not None:
        merged = hill_region.component_census(
            p, 0.5 * (h12 + h34), hill_region.GridSpec(resolution=census_grid)
        )
        checks["merged_region"] = {
            "census": merged.to_dict(),
            "passed": merged.bounded_label is None,
        }

    checks["flow"] = _flow_checks(p, h12 - offsets[0], seed)
    passed = all(entry["passed"] for entry in checks["energies"].values()) and all(
        check["passed"] for key, check in checks.items() if key != "energies"
    )
    return checks, passed


def run_verify_all(args, argv):
    results = {}
    all_passed = True
    for mu in args.mu_list:
        p = model.derive_parameters(mu)
        log.add(f"Verification at mu={mu}")
        checks, passed = _verify_mu(p, args.c_offsets, args.n, args.seed, args.lemma_grid, args.census_grid)
        results[f"{mu!r}"] = {"checks": checks, "passed": passed}
        all_passed &= passed
    payload = {
        "provenance": _provenance(argv, args),
        "mu_list": args.mu_list,
        "c_offsets": args.c_offsets,
        "results": results,
        "passed": all_passed,
    }
    reports.dump_json(payload, args.output)
    return EXIT_PASS if all_passed else EXIT_FAIL


_commands = {
    "params": run_params,
    "lagrange": run_lagrange,
    "hill-region": run_hill_region,
    "scan-contact": run_scan_contact,
    "scan-regularized": run_scan_regularized,
    "symmetry": run_symmetry,
    "integrate": run_integrate,
    "verify-all": run_verify_all,
}


def main(argv=None):
    """
    Entry point of the hill4bp command. Returns 0 when every check passes,
    1 when an inequality scan failed (the report is still written) and 2 on
    usage or domain errors.
    """
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit:
        return EXIT_PASS if exit.code == 0 else EXIT_USAGE
    if args.log_level is not None:
        create_log(args.log_level)
    try:
        return _commands[args.command](args, argv)
    except (Hill4bpError, ValueError) as error:
        print(f"hill4bp {args.command}: {error}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
