# %% [markdown]
# Factoring kernels of Pilipovic and flat classes.

# %%
import numpy as np

from hermkern import WeightSpec, compose_all, fit_class
from hermkern.factorization import (
    factor_beurling, factor_diagonal_sqrt, factor_flat_beurling, factor_flat_roumieu, factor_roumieu,
)
from hermkern.generators import gen_random_class, gen_semigroup

K = gen_random_class(WeightSpec.exponential(0.5, 2.0), 1, 1, 16, seed=42, signed=True)
est = fit_class(K)
print("fitted class:", est.label, "rate", round(est.rate, 4))

# %%
res = factor_roumieu(K, 0.5)
K2, K1 = res.factors
print("roumieu: r =", res.params["r"], "residual", res.residual)
print("K1 diagonal head:", np.round(np.diag(K1.entries)[:6], 5))
print("sup bounds:", res.bounds)

# %%
B = gen_random_class(WeightSpec.exponential(0.25, 0.5), 1, 1, 12, seed=1)
res = factor_beurling(B, 0.5)
plan = res.partitions["columns"]
print("beurling blocks:", [b.tolist() for b in plan.blocks], "residual", res.residual)

# %%
F = gen_random_class(WeightSpec.flat(1.0, 2.0), 1, 1, 14, seed=3, signed=True)
res = factor_flat_roumieu(F, 1.0)
print("flat roumieu: R =", res.params["R"], "residual", res.residual, "bounds", res.bounds)
res = factor_flat_beurling(gen_random_class(WeightSpec.flat(1.0, 100.0), 1, 1, 12, seed=3), 1.0)
print("flat beurling residual", res.residual, "bounds", res.bounds)

# %%
res = factor_diagonal_sqrt(gen_semigroup(1, 0.5, 20), 1.0)
print("diagonal square root:", res.bounds)
print("three-factor product check:", np.abs(compose_all(*factor_flat_roumieu(F, 1.0).factors).entries - F.entries).max())
