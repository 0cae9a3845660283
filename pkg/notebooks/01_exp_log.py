# %% [markdown]
# # Matrix exponential and principal logarithm
#
# The observers need exp and the principal log of small dense matrices.
# Both are computed by scaling: exp by scaling and squaring, log by
# repeated square roots until the argument is close to the identity.

# %%
import numpy as np
import scipy.linalg as sla

from lieobs import mat_exp, mat_log_principal, spectrum_report
from lieobs.exceptions import BranchCutViolation

rng = np.random.default_rng(0)
A = rng.standard_normal((3, 3))
print("exp vs scipy:", np.abs(mat_exp(A) - sla.expm(A)).max())
print("log(exp A) - A:", np.abs(mat_log_principal(mat_exp(A)) - A).max())

# %% [markdown]
# The principal log exists only when no eigenvalue lies on the closed
# negative real axis.  A half turn has eigenvalues {1, -1, -1}.

# %%
half_turn = np.diag([-1.0, -1.0, 1.0])
print(spectrum_report(half_turn).pairs)
try:
    mat_log_principal(half_turn)
except BranchCutViolation as exc:
    print("refused:", exc)

# %% [markdown]
# Everything works on stacks, which is how the simulation engine pushes
# whole seed batches through one call.

# %%
stack = mat_exp(0.5 * rng.standard_normal((1000, 3, 3)))
print("batched roundtrip:", np.abs(mat_exp(mat_log_principal(stack)) - stack).max())
