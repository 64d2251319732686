# %% [markdown]
# # Checking the model against the simulator
#
# The simulator plays out every slot: arrivals, backoff, collisions,
# capture and frame errors. Runs are seeded, so the numbers below are
# reproducible. Each point simulates 1000 s of channel time.

# %%
from dcfmodel import sim, solve_fixed_point
from dcfmodel.config import Scenario

for n, lam in [(5, 1.0), (10, 10.0), (10, 100.0), (20, 100.0)]:
    mac, ch, tr, cfg = Scenario().replace(n_stations=n, lambda_pkt_s=lam, snr_db=45.0)
    model = solve_fixed_point(mac, ch, tr, cfg)
    rep = sim.run(mac, ch, tr, seed=1, horizon_us=1e9)
    print(f"N={n:2d} lambda={lam:6.1f}  model {model.throughput:.4f}  "
          f"sim {rep.throughput:.4f} +/- {rep.ci95_halfwidth:.4f}  slots {rep.total_slots}")

# %% [markdown]
# Capture frequency. The simulator's stations attempt a little more often
# than the model predicts, because the model subtracts an unconditional
# capture probability from a per-station collision probability. The
# capture formula itself matches once it is fed the measured tau.

# %%
from dcfmodel import capture

mac, ch, tr, cfg = Scenario().replace(n_stations=10, saturated=True, z0_db=6.0)
rep = sim.run(mac, ch, tr, seed=1, n_slots=2_000_000, batches=20)
model = solve_fixed_point(mac, ch, tr, cfg)
cp = capture.CaptureParams.from_channel(ch)
print("captures per slot  ", round(rep.capture_rate, 5))
print("formula at sim tau ", round(capture.p_cap(cp, 10, rep.tau_hat), 5))
print("formula at model tau", round(model.p_cap, 5))
print("throughput model/sim", round(model.throughput, 4), round(rep.throughput, 4))
