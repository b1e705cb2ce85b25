"""Writes the synthetic stand-in trial used by the calibration tests.

376 patients, 57 baseline covariates (RACE, HAMD24 and 55 others), a
randomized arm and the FinalHAMD outcome.
"""
import numpy as np

rng = np.random.default_rng(20240301)
n = 376
race = rng.binomial(1, 0.3, n).astype(float)
hamd24 = np.round(rng.normal(24.0, 4.0, n), 1)
others = []
names = []
for j in range(55):
    if j % 5 == 0:
        others.append(rng.binomial(1, 0.5, n).astype(float))
    else:
        others.append(np.round(rng.normal(0.0, 1.0, n), 4))
    names.append(f"X{j + 1}")
arm = rng.permutation(np.repeat([0.0, 1.0], n // 2))
final = 30.0 - 1.5 * arm + 1.2 * race - 0.9 * hamd24 + rng.normal(0.0, 1.0, n)
final = np.round(final, 3)

columns = ["FinalHAMD", "arm", "RACE", "HAMD24"] + names
data = np.column_stack([final, arm, race, hamd24] + others)
with open("pseudo_trial.csv", "w") as out:
    out.write(",".join(columns) + "\n")
    for row in data:
        out.write(",".join(repr(float(v)) if not float(v).is_integer() else str(int(v)) for v in row) + "\n")
