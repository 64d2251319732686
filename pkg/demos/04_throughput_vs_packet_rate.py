# %% [markdown]
# # Throughput against packet rate
#
# Sweeping the Poisson arrival rate shows the linear rise at light load
# and the saturation plateau. The same sweep is available from the shell:
#
#     dcfmodel sweep --axis lambda --grid 0.1,1,10,100,1000 --set z0_db=24

# %%
import numpy as np

from dcfmodel import solve_fixed_point
from dcfmodel.config import Scenario

lams = np.logspace(-1, 3, 17)
for z0 in (6.0, 24.0):
    print(f"z0 = {z0} dB")
    for n in (5, 10, 20):
        curve = []
        for lam in lams:
            mac, ch, tr, cfg = Scenario().replace(z0_db=z0, n_stations=n, lambda_pkt_s=lam)
            curve.append(solve_fixed_point(mac, ch, tr, cfg).throughput)
        print(f"  N={n:2d} " + " ".join(f"{s:.3f}" for s in curve))

# %% [markdown]
# At z0 = 24 dB the curves overshoot before settling, and the overshoot
# grows with N. A realistic SNR lowers every curve by the frame error rate.

# %%
for snr in (40.0, 50.0, float("inf")):
    mac, ch, tr, cfg = Scenario().replace(snr_db=snr, lambda_pkt_s=1000)
    s = solve_fixed_point(mac, ch, tr, cfg)
    print(f"SNR {snr} dB: P_e={s.p_e:.4f}  S={s.throughput:.4f}")
