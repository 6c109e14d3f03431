"""Calibrating endogeneity from published regression output."""
# %%
from justiv.endogeneity import (
    StudySummary,
    calibrate,
    rho_bound_measurement_error,
    rho_bound_over_beta_range,
    rho_ovb_approx,
)

# %% [markdown]
# OLS omitted-variables bias times the ratio of standard deviations gives an
# approximate endogeneity.

# %%
print("OVB-based rho:", round(rho_ovb_approx(sd_d=0.022, sd_y=1.0, beta_ols=3.42, beta=0.0), 4))

# %% [markdown]
# If the causal effect is only known to lie in a range, rho is bounded by the
# largest OVB over that range.

# %%
print("range bound:", round(rho_bound_over_beta_range(5.2, 0.08, 0.0, 0.16), 3))
print("range bound:", round(rho_bound_over_beta_range(1.0, -0.18, -0.57, 0.0), 3))

# %% [markdown]
# When IV only fixes classical measurement error, reliability bounds rho.

# %%
for r2p in (0.0, 0.2, 0.4):
    print(f"reliability 0.65, R2_p {r2p}: |rho| <= {rho_bound_measurement_error(0.65, r2p):.4f}")

# %% [markdown]
# A full report for one study. Missing inputs leave NaN and a note.

# %%
study = StudySummary(
    beta_iv=0.08, se_iv=0.02, pi_hat=0.1, sd_pi=0.02, sd_delta=0.002,
    beta_ols=0.075, sd_d=0.5, sd_y=0.7, n=1000, r2p=0.4, reliability=0.65, name="example",
)
for key, value in calibrate(study).items():
    print(f"{key:>13}: {value}")
