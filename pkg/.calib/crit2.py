import json, time
from nlscn import drivers

base = {
  "method": "cn-fem",
  "domain": {"bounds": [-5,5,-5,5], "bc": "dirichlet", "nx": 200, "ny": 200},
  "tau": 0.03125, "t_final": 1.0,
  "nonlinearity": {"type": "saturated", "kappa": 1.0, "alpha": 1.0},
  "potential": {"type": "harmonic", "nu_x": 2.0, "nu_y": 3.0},
  "initial_data": {"type": "ground-state", "potential": {"type": "harmonic", "nu_x": 1.0, "nu_y": 1.0}},
  "solver": {"fp_tol": 1e-12}
}
doc = {
  "base": base,
  "sweep": {"h": [0.05], "tau": [2.0**-5, 2.0**-6, 2.0**-7, 2.0**-8]},
  "reference": {"h": 0.05, "tau": 2.0**-11},
}
t0 = time.time()
rep = drivers.run_convergence(doc, "/root/pkg/.calib/crit2_out")
print("TOTAL", time.time()-t0)
print(json.dumps(rep["orders"], indent=2))
for r in rep["rows"]:
    print(r["h"], r["tau"], r["l2"], r["h1_semi"], r["l1_density"])
