from hill4bp import flow, model, reports, symmetry

mu = 0.0
c = -4.0

# Retrograde orbit around the origin, symmetric under y -> -y, p_x -> -p_x.
reversor_name = "rho_x"
guess = (0.115, -2.9)  # (x, p_y) on the fixed set of the reversor

save_path = "./hill4bp_symmetric_orbit.csv"

p = model.derive_parameters(mu)

### Shooting
orbit = flow.symmetric_shooting(
    p,
    c,
    symmetry.involution_by_name(reversor_name),
    guess=guess,
)

### One full period
trajectory = flow.integrate_physical(p, orbit.initial_state, orbit.period, tol=1e-12)

reports.dump_csv(trajectory.to_dataframe(p), save_path)
reports.dump_json({"orbit": orbit.to_dict(), "energy_drift": trajectory.drift(p)})
