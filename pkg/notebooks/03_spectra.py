# %% [markdown]
# Singular values: decay laws, Schmidt expansion, fractional powers.

# %%
import numpy as np

from hermkern.factorization import fractional_power
from hermkern.generators import gen_schwartz, gen_semigroup
from hermkern.kernel_ops import frobenius_relative
from hermkern.spectral import (
    binomial_bridge, fit_decay, oscillator_norm_sequence, schatten_norm, schmidt_expansion, singular_values,
)

spec = singular_values(gen_semigroup(1, 0.5, 40))
print(spec.to_csv().splitlines()[:6])
fit = fit_decay(spec, 1, "exp", s=0.5)
print("exp law: c =", fit.rate, "residual", fit.residual)
print("Schatten p=1, 2, inf:", [schatten_norm(spec, p) for p in (1, 2, np.inf)])

# %%
# Schwartz kernels decay much faster than k^{-N}; a log-log line fits poorly
S = singular_values(gen_schwartz(1, 1, 40, 6))
v = S.above_floor()
print("log ratios:", np.round(np.log(v[1:] / v[:-1]), 2))
print(fit_decay(S, 1, "poly"))

# %%
ex = schmidt_expansion(gen_semigroup(1, 0.5, 10))
print("lambda_j:", np.round(ex.lambdas[:5], 6))
print("orthogonality defects:", ex.orthogonality())

# %%
K = gen_semigroup(1, 0.5, 20)
print("K^(1/2) vs semigroup(t/2):", frobenius_relative(fractional_power(K, 0.5), gen_semigroup(1, 0.25, 20)))

# %%
seq = oscillator_norm_sequence(K, 12)
print("||H^N K||:", np.array2string(seq.norms, precision=3))
print("binomial bridge violations:", binomial_bridge(K, 10))
