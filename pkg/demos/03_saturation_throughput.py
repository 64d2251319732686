# %% [markdown]
# # Saturation throughput
#
# With every queue always full, no channel errors and no capture, the
# model reduces to the classic saturated analysis. Throughput falls
# slowly with the number of stations as collisions become more common.

# %%
import math

from dcfmodel import solve_fixed_point
from dcfmodel.config import ChannelParams, MacParams, TrafficParams

mac = MacParams()
for n in (1, 2, 5, 10, 20, 50):
    s = solve_fixed_point(mac, ChannelParams(z0_db=math.inf), TrafficParams(n_stations=n, saturated=True))
    print(f"N={n:3d}  tau={s.tau:.6f}  P_col={s.p_col:.4f}  S={s.throughput:.4f}")

# %% [markdown]
# Capture lets one frame out of a collision survive. A low capture
# threshold (6 dB) makes it likely, so throughput hardly depends on N.

# %%
for z0 in (6.0, 24.0, math.inf):
    row = [solve_fixed_point(mac, ChannelParams(z0_db=z0), TrafficParams(n_stations=n, saturated=True)).throughput
           for n in (5, 10, 20)]
    print(f"z0={z0:>4} dB  " + "  ".join(f"{v:.4f}" for v in row))
