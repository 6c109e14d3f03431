"""Median bias of IV and of the sign-unbiased estimator.

Bias is measured relative to the omitted-variables bias of OLS, so a value of
1 means "as biased as OLS".
"""
# %%
import math

from justiv import BiasQuery, DesignPoint, median_bias_exact
from justiv.bias import (
    betau_mean_bias,
    bias_band,
    bias_ratio_conditional_to_unconditional,
    iv_median_bias_bound,
)

# %% [markdown]
# Closed-form worst cases over rho, with and without screening on the sign
# of the first stage.

# %%
print("E[F]   lambda   unconditional   screened   ratio")
for ef in (1.5, 2.0, 3.0, 5.0, 10.0, 20.0):
    lam = math.sqrt(ef - 1)
    u, c = iv_median_bias_bound(lam), iv_median_bias_bound(lam, screened=True)
    print(f"{ef:<6g} {lam:6.3f}   {u:13.4f}   {c:8.4f}   {bias_ratio_conditional_to_unconditional(lam):.3f}")

# %% [markdown]
# The exact median bias at a grid of rho stays inside the bound, and
# approaches it as rho shrinks.

# %%
lam = math.sqrt(4.0)
for screened in (False, True):
    lo, hi, _ = bias_band(lam, screened)
    print(f"E[F]=5 screened={screened}: |median bias| in [{lo:.4f}, {hi:.4f}], "
          f"bound {iv_median_bias_bound(lam, screened):.4f}")

# %% [markdown]
# Given a right-signed first stage, the sign-unbiased estimator is more
# biased than IV: its mean bias is positive and its median bias is larger.

# %%
for ef in (2.0, 5.0, 10.0):
    d = DesignPoint(ef, 0.5)
    iv = median_bias_exact(BiasQuery(d, "iv", "screened"))
    u = median_bias_exact(BiasQuery(d, "u", "screened"))
    mean_u = betau_mean_bias(math.sqrt(ef - 1), "positive")
    print(f"E[F]={ef:<4g} median IV {iv:.4f}  median U {u:.4f}  ratio {u / iv:6.2f}  mean U {mean_u:.4f}")
