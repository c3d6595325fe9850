# %% [markdown]
# Hermite functions, quadrature and the oscillator semigroup.
# Run with `python3 notebooks/01_hermite_basics.py` or open as a percent-format notebook.

# %%
import numpy as np

from hermkern.hermite import analyze, gauss_hermite, hermite_table
from hermkern.generators import gen_mehler_closed_form, gen_semigroup

x = np.linspace(-6, 6, 2001)
H = hermite_table(10, x)
gram = H @ H.T * (x[1] - x[0])
print("Riemann-sum Gram matrix of h_0..h_10, max deviation from I:", np.abs(gram - np.eye(11)).max())

# %%
rule = gauss_hermite(40)
print("nodes", rule.nodes.size, "sum of weights", rule.weights.sum(), "vs sqrt(pi)", np.sqrt(np.pi))

# %%
# a Gaussian analyzed in the Hermite basis: only even modes survive
c = analyze(lambda x: np.exp(-x**2), 1, 12)
print(np.round(c.values, 6))

# %%
# Mehler kernel, analyzed by quadrature, against the exact diagonal e^{-t(2n+1)}
K = gen_mehler_closed_form(0.5, 12, 48)
S = gen_semigroup(1, 0.5, 12)
print("diagonal error", np.abs(np.diag(K.entries) - np.diag(S.entries)).max())
print("off-diagonal mass", np.linalg.norm(K.entries - np.diag(np.diag(K.entries))))
