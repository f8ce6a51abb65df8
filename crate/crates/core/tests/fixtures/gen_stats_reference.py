# Regenerates stats_reference.json with scipy as the reference implementation.
import json

import numpy as np
from scipy import stats

rng = np.random.default_rng(20240611)
rank_sum = []
for i in range(20):
    if i < 8:
        n, m = rng.integers(3, 11, size=2)
        x = rng.normal(0, 1, n).round(6)
        y = rng.normal(rng.uniform(-1.5, 1.5), 1, m).round(6)
        method = "exact"
    else:
        n, m = rng.integers(11, 26, size=2)
        x = rng.normal(0, 1, n).round(1)
        y = rng.normal(rng.uniform(-1, 1), 1, m).round(1)
        method = "asymptotic"
    r = stats.mannwhitneyu(x, y, alternative="two-sided", method=method, use_continuity=True)
    rank_sum.append({"x": x.tolist(), "y": y.tolist(), "u": float(r.statistic), "p": float(r.pvalue), "exact": method == "exact"})

x20 = rng.normal(10, 2, 20).round(3)
y20 = rng.normal(11, 2, 20).round(3)
r = stats.mannwhitneyu(x20, y20, alternative="two-sided", method="asymptotic", use_continuity=True)
rank_sum.append({"x": x20.tolist(), "y": y20.tolist(), "u": float(r.statistic), "p": float(r.pvalue), "exact": False})

anova = []
for i in range(20):
    k = int(rng.integers(2, 6))
    groups = [rng.normal(rng.uniform(0, 3), rng.uniform(0.5, 2), int(rng.integers(2, 12))).round(4).tolist() for _ in range(k)]
    r = stats.f_oneway(*groups)
    anova.append({"groups": groups, "f": float(r.statistic), "p": float(r.pvalue)})

with open("stats_reference.json", "w") as f:
    json.dump({"rank_sum": rank_sum, "anova": anova}, f, indent=1)
    f.write("\n")
