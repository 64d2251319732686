"""Frame capture probabilities for power-controlled stations in Rayleigh fading."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import ChannelParams, db_to_linear


@dataclass(frozen=True)
class CaptureParams:
    z0_linear: float
    g_sf: float

    def __post_init__(self):
        if not self.z0_linear > 0:
            raise ValueError("z0_linear must be > 0")
        if not self.g_sf > 0:
            raise ValueError("g_sf must be > 0")

    @classmethod
    def from_db(cls, z0_db: float, spreading_factor: int = 11) -> "CaptureParams":
        return cls(db_to_linear(z0_db), processing_gain_inverse(spreading_factor))

    @classmethod
    def from_channel(cls, ch: ChannelParams) -> "CaptureParams":
        return cls.from_db(ch.z0_db, ch.spreading_factor)

    @property
    def disabled(self) -> bool:
        return self.z0_linear == math.inf


def processing_gain_inverse(spreading_factor: int) -> float:
    """Inverse processing gain 2/(3 S_f) of a DSSS correlation receiver."""
    if spreading_factor < 1:
        raise ValueError("spreading_factor must be >= 1")
    return 2.0 / (3.0 * spreading_factor)


def capture_given_i(cp: CaptureParams, i: int) -> float:
    """Probability one frame survives ``i`` simultaneous interferers."""
    if i < 0:
        raise ValueError("i must be >= 0")
    if i == 0:
        return 1.0
    return (1.0 + cp.z0_linear * cp.g_sf) ** (-i)


def _log_binom(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def p_cap(cp: CaptureParams, n: int, tau: float) -> float:
    """Probability that a slot holds 2+ transmissions and one is captured.

    Terms are built in log space so large ``n`` does not overflow and
    summed smallest-first with ``math.fsum``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    if n == 1 or tau == 0.0 or cp.disabled:
        return 0.0
    if tau == 1.0:
        return capture_given_i(cp, n - 1)
    log_tau, log_idle = math.log(tau), math.log1p(-tau)
    log_keep = -math.log1p(cp.z0_linear * cp.g_sf)
    terms = [
        math.exp(_log_binom(n, i + 1) + (i + 1) * log_tau
                 + (n - i - 1) * log_idle + i * log_keep)
        for i in range(1, n)
    ]
    return math.fsum(sorted(terms))


def p_multi(n: int, tau: float) -> float:
    """Probability that two or more of ``n`` stations transmit together."""
    if n < 2:
        return 0.0
    return max(0.0, 1.0 - (1.0 - tau) ** n - n * tau * (1.0 - tau) ** (n - 1))
