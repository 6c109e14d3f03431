"""Wald-test rejection rates over instrument strength and endogeneity.

Run with ``python notebooks/01_rejection_contours.py``. Each ``# %%`` block is
a cell; the script prints small tables instead of drawing figures.
"""
# %%
import numpy as np

from justiv import DesignPoint, RejectionQuery, rejection_rate
from justiv.rejection import endogeneity_cutoff, worst_case_rejection

# %% [markdown]
# A design point is just (E[F], rho). The nominal 5% Wald test rejects at
# rate R_W(E[F], rho); screening on pi_hat > 0 gives the conditional rate.

# %%
efs = [1.0, 2.0, 5.0, 10.0, 50.0, 1e3]
rhos = [0.0, 0.3, 0.6, 0.8, 0.9, 0.99]

print("unconditional rejection rate, alpha = 0.05")
print("E[F]    " + "".join(f"{r:>8.2f}" for r in rhos))
for ef in efs:
    row = [rejection_rate(RejectionQuery(DesignPoint(ef, r))) for r in rhos]
    print(f"{ef:<8g}" + "".join(f"{v:8.4f}" for v in row))

# %% [markdown]
# Sign screening barely moves the rates.

# %%
for ef, rho in [(2.0, 0.8), (5.0, 0.9), (10.0, 0.99)]:
    d = DesignPoint(ef, rho)
    u = rejection_rate(RejectionQuery(d))
    c = rejection_rate(RejectionQuery(d, screen=0.0))
    print(f"E[F]={ef:<5g} rho={rho:<5g} unconditional {u:.4f}  screened {c:.4f}")

# %% [markdown]
# For a fixed rho the worst instrument strength is somewhere in the middle:
# very weak instruments make the test conservative, strong ones make it exact.

# %%
for rho in (0.5, 0.76, 0.9):
    rate, ef = worst_case_rejection(rho)
    print(f"rho={rho:<5g} worst-case rate {rate:.4f} at E[F] = {ef:.2f}")

# %% [markdown]
# The largest |rho| keeping the worst case under a target rate.

# %%
for target, screen in [(0.10, -np.inf), (0.05, -np.inf), (0.10, 0.0)]:
    rho_star = endogeneity_cutoff(target, screen=screen)
    label = "screened" if screen == 0 else "unconditional"
    print(f"{label:<14} target {target:.2f}: |rho| <= {rho_star:.3f}")
