"""Exact power of scaled and unscaled max-type tests on three variables.

When one variable has a much smaller spread than the others, scaling by
the standard deviation lets a shift in that variable be seen; when it has
the larger spread, scaling hides it.
"""

import numpy as np

from markdev.toypower import TOY_CASES, ToySpec1, power_curve, toy1_critical_value, toy1_power_mc

mu3 = np.arange(0, 3.01, 0.5)
for example in (1, 2):
    for case in ("a", "b"):
        print(f"example {example}, case {case}: {TOY_CASES[(example, case)]}")
        grid = mu3 if example == 1 else mu3 / 5
        for m, pu, ps in power_curve(example, case, grid):
            print(f"  mu3={m:5.2f}  unscaled {pu:.3f}  scaled {ps:.3f}")

spec = ToySpec1((0, 0, 0.5), TOY_CASES[(1, "a")]["sds"])
print("\ncritical values, case 1(a):", round(toy1_critical_value(spec, False), 4), round(toy1_critical_value(spec, True), 4))
print("Monte Carlo check at mu3=0.5:", toy1_power_mc(spec, False, rng=1), toy1_power_mc(spec, True, rng=2))
