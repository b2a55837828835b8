"""Generates welch_reference.json with scipy's Welch t-test on 200 random sample pairs.

Run: python3 welch_oracle.py > welch_reference.json
"""
import json

import numpy as np
from scipy import stats

rng = np.random.default_rng(20241015)
cases = []
for _ in range(200):
    na, nb = rng.integers(2, 40, size=2)
    a = rng.normal(rng.uniform(-1, 1), rng.uniform(0.05, 2.0), size=na)
    b = rng.normal(rng.uniform(-1, 1), rng.uniform(0.05, 2.0), size=nb)
    res = stats.ttest_ind(a, b, equal_var=False)
    va, vb = a.var(ddof=1) / na, b.var(ddof=1) / nb
    df = (va + vb) ** 2 / (va ** 2 / (na - 1) + vb ** 2 / (nb - 1))
    cases.append({
        "a": [float(x) for x in a],
        "b": [float(x) for x in b],
        "t": float(res.statistic),
        "df": float(df),
        "p": float(res.pvalue),
    })
json.dump(cases, __import__("sys").stdout, indent=None)
