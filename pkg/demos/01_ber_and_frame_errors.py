# %% [markdown]
# # Bit and frame errors over Rayleigh fading
#
# The PHY layer turns a mean SNR into a frame error rate. The bit error
# rate comes from a finite-range integral evaluated by Gauss-Legendre
# quadrature; for DBPSK it should agree with the textbook closed form.

# %%
import math

import numpy as np

from dcfmodel import phy
from dcfmodel.config import ChannelParams, MacParams

for gamma in (0.1, 1.0, 10.0, 100.0):
    quad = phy.ber_rayleigh("DBPSK", gamma)
    closed = 0.5 * (1 - math.sqrt(gamma / (1 + gamma)))
    print(f"gamma={gamma:7.1f}  quadrature={quad:.12f}  closed form={closed:.12f}")

# %% [markdown]
# Frames are long (8 * 1064 bits with the default sizes), so the frame
# error rate stays at 1 until the mean SNR is very high. Below roughly
# 30 dB almost no frame survives a Rayleigh channel.

# %%
mac = MacParams()
for snr_db, ber, fer in phy.ber_table(mac, ChannelParams(), np.arange(0, 61, 5)):
    print(f"{snr_db:5.1f} dB   BER {ber:.3e}   FER {fer:.4f}")

# %% [markdown]
# Shorter payloads help, since FER grows with the number of bits.

# %%
for payload in (64, 256, 1024, 2048):
    print(payload, "bytes:", round(phy.fer(MacParams(payload_bytes=payload), ChannelParams(snr_db=40)), 4))
