import json, time
import numpy as np
from nlscn import drivers
from nlscn.config import run_config_from_dict

# --- criterion 5: section-5.2 ground state + short evolution at h=0.025
cfg5 = {
  "method": "cn-fem",
  "domain": {"bounds": [-5,5,-5,5], "bc": "dirichlet", "nx": 400, "ny": 400},
  "tau": 2.0**-6, "t_final": 0.25,
  "nonlinearity": {"type": "saturated", "kappa": 1.0, "alpha": 1.0},
  "potential": {"type": "harmonic", "nu_x": 2.0, "nu_y": 3.0},
  "initial_data": {"type": "ground-state", "potential": {"type": "harmonic", "nu_x": 1.0, "nu_y": 1.0}},
  "solver": {"fp_tol": 1e-13}
}
t0 = time.time()
rep5 = drivers.run_evolve(cfg5, "/root/pkg/.calib/crit5_out")
d5 = rep5.to_dict()
print("C5:", json.dumps({"E0": d5["initial"]["energy"], "diff": d5["initial"]["energy"]-3.86874,
  "mass_drift": d5["mass_drift"], "energy_drift": d5["energy_drift"],
  "gs": d5["groundstate"], "secs": time.time()-t0}))

# --- criterion 7: comparison at desk scale, T=0.25
base = {
  "method": "cn-fem",
  "domain": {"bounds": [-5,5,-5,5], "bc": "periodic", "nx": 128, "ny": 128},
  "tau": 2.0**-6, "t_final": 0.25,
  "nonlinearity": {"type": "saturated", "kappa": 10.0, "alpha": 1.0},
  "potential": {"type": "harmonic-barrier", "nu_x": 1.0, "nu_y": 3.0, "height": 100.0, "half_width": 1.0},
  "initial_data": {"type": "ground-state", "potential": {"type": "harmonic", "nu_x": 1.0, "nu_y": 1.0}},
  "solver": {"fp_tol": 1e-12}
}
doc = {
  "base": base,
  "cn": [{"nx": 128, "tau": 2.0**-6}, {"nx": 256, "tau": 2.0**-7}],
  "sp2": [{"n": 128, "tau": 2.0**-9}, {"n": 128, "tau": 2.0**-10}],
  "reference": {"nx": 256, "tau": 2.0**-9},
}
t0 = time.time()
rep7 = drivers.run_compare(doc, "/root/pkg/.calib/crit7_out")
print("C7 total secs:", time.time()-t0)
print("C7 reference E0:", rep7["reference"]["initial_energy"])
for r in rep7["rows"]:
    print("C7 row:", json.dumps(r))
