import numpy as np

from hill4bp import lagrange, model, reports

### Mass ratios
mu_values = np.linspace(0.0, 0.5, 101)
save_path = "./hill4bp_parameters.csv"  # If None, the table is printed

### Derived parameters and critical values
table = model.parameter_table(mu_values)

h12_values, h34_values = [], []
for mu in mu_values:
    h12, h34 = lagrange.critical_values(model.derive_parameters(mu))
    h12_values.append(h12)
    h34_values.append(np.nan if h34 is None else h34)

table["h12"] = h12_values
table["h34"] = h34_values

reports.dump_csv(table, save_path)
