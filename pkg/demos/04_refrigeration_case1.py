"""Case I: direct load control of a coupled refrigeration fleet.

Twenty evaporator units in two 10-unit blocks share heat with their
neighbors.  Every 15 minutes an aggregator picks the ON set to minimize the
comfort-band penalty while keeping total draw under the grid operator's cap
(50% of installed power, 55% during steps 9-16).  The cap binds, so the fleet
alternates which rooms get cooled -- and every slot's decision carries a
suboptimality certificate, checked here against the exhaustive optimum.

The same run is available from the command line:

    combidyn optimize --scenario scenarios/case1_m20.yaml --grid 201 \
        --scheme rk4 --out case1.csv
    combidyn oracle   --scenario scenarios/case1_m20.yaml --grid 201 \
        --scheme rk4 --format report
"""

import numpy as np

from combidyn import default_scenario, run_receding_horizon

scenario = default_scenario(20, seed=7)
print(f"fleet: m = {scenario.params.m}, slot = {scenario.step_minutes} min, "
      f"steps = {scenario.num_steps}")
print(f"power caps (kW): off-peak {scenario.case.y_hi[0]:.0f}, "
      f"peak {scenario.case.y_hi[8]:.0f} of {scenario.params.c.sum():.0f} installed")
print()

results = run_receding_horizon(
    scenario, kind="standard", solver="tu", grid_points=201, scheme="rk4",
    with_oracle=True,
)

print("step  on  power_kw   payoff     rho_post  oracle_ratio   temp range")
for res in results:
    lo, hi = res.temperatures_end.min(), res.temperatures_end.max()
    print(
        f" {res.step:3d}  {int(res.alpha.sum()):2d}   {res.power_kw:6.0f}"
        f"  {res.payoff:9.3f}   {res.rho_post:6.3f}     {res.oracle_ratio:6.3f}"
        f"     [{lo:5.2f}, {hi:5.2f}]"
    )

ratios = [r.oracle_ratio for r in results]
rhos = [r.rho_post for r in results]
print()
print(f"certified rho_post: min {min(rhos):.3f}, mean {np.mean(rhos):.3f}")
print(f"achieved/optimal gain ratio: min {min(ratios):.3f}, mean {np.mean(ratios):.3f}")
print("every step satisfies  rho_post x (best gain) <= achieved gain.")
print()
print("unit 1 ON/OFF pattern over the day:",
      "".join(str(int(r.alpha[0])) for r in results))
print("unit 2 ON/OFF pattern over the day:",
      "".join(str(int(r.alpha[1])) for r in results))
