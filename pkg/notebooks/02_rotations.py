# %% [markdown]
# # Rotations: Rodrigues, the closed-form log, and the printed initial data

# %%
import numpy as np

from lieobs import exp_so3, log_so3_closed_form, mat_log_principal, rotation_angle, skew3
from lieobs.linalg import operator_norm
from lieobs.scenario import R0_KINEMATIC, SO3

R = exp_so3(skew3([0.3, -1.1, 0.8]))
print("closed form vs general log:", np.abs(log_so3_closed_form(R) - mat_log_principal(R)).max())

# %% [markdown]
# The kinematic example starts from a rotation printed with four decimals.
# It is orthogonal only to about 1e-4, so it is snapped onto SO(3) before
# simulation.  The initial error norm ||R(0)^-1 - I|| uses the induced
# 2-norm; the Frobenius norm would give a different number.

# %%
R0 = R0_KINEMATIC
print("orthogonality defect:", operator_norm(R0 @ R0.T - np.eye(3)))
R0 = SO3.reproject(R0)
print("angle:", rotation_angle(R0))
print("||R0^-1 - I||_2 =", operator_norm(R0.T - np.eye(3)))
print("||R0^-1 - I||_F =", np.linalg.norm(R0.T - np.eye(3)))
