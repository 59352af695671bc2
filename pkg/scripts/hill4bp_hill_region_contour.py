from hill4bp import hill_region, lagrange, model, reports

mu = 0.2
c_offset = 0.01  # The energy is c = h12 - c_offset

grid_spec = hill_region.GridSpec(
    half_width=3.0,
    resolution=512,
    planar=True,
    slice_axis="z",
    slice_value=0.0,
)

save_path = "./hill4bp_contour.csv"

### Census of the Hill region
p = model.derive_parameters(mu)
h12, h34 = lagrange.critical_values(p)
c = h12 - c_offset

census = hill_region.component_census(p, c, grid_spec)
radius_report = hill_region.bounded_radius_check(p, c, grid_spec)

### Zero velocity curves
curves = hill_region.zero_velocity_contour(p, c, grid_spec)
residual = hill_region.contour_residual(p, c, curves, grid_spec)

reports.dump_csv(hill_region.contour_dataframe(curves), save_path)
reports.dump_json(
    {
        "census": census.to_dict(),
        "bounded_radius": radius_report.to_dict(),
        "n_curves": len(curves),
        "contour_residual": residual,
    }
)
