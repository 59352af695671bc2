from hill4bp import contact, lagrange, model, regularization, reports

mu = 0.5
c_offsets = [0.5, 0.1, 0.01, 0.001]
n_samples = 100_000
rng_seed = 0

# A pool of number_worker processes evaluates batches of batch_size samples.
scan_properties = {
    "batch_size": 10_000,
    "number_worker": 8,
}

save_path = "./hill4bp_ladder.csv"

p = model.derive_parameters(mu)
h12, _ = lagrange.critical_values(p)

### Radial Liouville field on the bounded component of the energy level
ladder = contact.pairing_ladder(
    p,
    c_offsets,
    n=n_samples,
    rng_seed=rng_seed,
    scan_properties=scan_properties,
)

### Natural Liouville field near collision, in the regularized picture
regularized_minimum = []
for offset in ladder["c_offset"]:
    report = regularization.regularized_transversality_scan(
        p,
        h12 - offset,
        n=n_samples,
        rng_seed=rng_seed,
        scan_properties=scan_properties,
    )
    regularized_minimum.append(report.min_value)
ladder["min_regularized_pairing"] = regularized_minimum

reports.dump_csv(ladder, save_path)
