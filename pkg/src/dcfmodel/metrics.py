"""Slot durations, per-slot event probabilities, expected slot time and throughput."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import MacParams

_PS_SLACK = 1e-12


@dataclass(frozen=True)
class SlotDurations:
    sigma_us: float
    t_s_us: float
    t_c_us: float
    t_e_us: float


@dataclass(frozen=True)
class SlotProbabilities:
    p_t: float
    p_s: float


def airtime_us(n_bytes: int, rate_bps: float) -> float:
    return 8.0 * n_bytes / rate_bps * 1e6


def payload_airtime_us(mac: MacParams) -> float:
    return airtime_us(mac.payload_bytes, mac.data_rate_bps)


def slot_durations(mac: MacParams) -> SlotDurations:
    """Busy-channel durations for basic access (DATA then ACK).

    Success: DATA + SIFS + ACK + DIFS. Collision: DATA + ACK timeout. An
    errored frame draws no ACK either, so it costs the same as a collision.
    Propagation delay is not added.
    """
    frame = (airtime_us(mac.phy_header_bytes, mac.ctrl_rate_bps)
             + airtime_us(mac.mac_header_bytes + mac.payload_bytes, mac.data_rate_bps))
    ack = (airtime_us(mac.phy_header_bytes, mac.ctrl_rate_bps)
           + airtime_us(mac.ack_bytes, mac.ctrl_rate_bps))
    t_s = frame + mac.sifs_us + ack + mac.difs_us
    t_c = frame + mac.ack_timeout_us
    return SlotDurations(sigma_us=mac.slot_time_us, t_s_us=t_s, t_c_us=t_c, t_e_us=t_c)


def p_t(n: int, tau: float) -> float:
    """Probability that at least one of ``n`` stations transmits."""
    if n == 0:
        return 0.0
    if tau >= 1.0:
        return 1.0
    return -math.expm1(n * math.log1p(-tau))


class NoTransmission(ZeroDivisionError):
    """P_s is undefined in a slot where nobody transmits."""


def p_s(n: int, tau: float, p_cap: float) -> float:
    """Probability a busy slot carries a successful (possibly captured) frame."""
    pt = p_t(n, tau)
    if pt <= 0.0:
        raise NoTransmission("p_t is zero")
    value = (n * tau * (1.0 - tau) ** (n - 1) + p_cap) / pt
    if value > 1.0 + _PS_SLACK:
        raise ValueError(f"p_s = {value!r} exceeds 1; p_cap too large for tau")
    return min(value, 1.0)


def slot_probabilities(n: int, tau: float, p_cap: float) -> SlotProbabilities:
    pt = p_t(n, tau)
    # p_s is irrelevant when pt == 0; every weight it touches is zero
    ps = p_s(n, tau, p_cap) if pt > 0.0 else 0.0
    return SlotProbabilities(p_t=pt, p_s=ps)


def expected_slot(sd: SlotDurations, sp: SlotProbabilities, p_e: float) -> float:
    """Mean real time of one chain slot, in microseconds."""
    return ((1.0 - sp.p_t) * sd.sigma_us
            + sp.p_t * (1.0 - sp.p_s) * sd.t_c_us
            + sp.p_t * sp.p_s * p_e * sd.t_e_us
            + sp.p_t * sp.p_s * (1.0 - p_e) * sd.t_s_us)


def throughput(sd: SlotDurations, sp: SlotProbabilities, p_e: float,
               payload_airtime: float) -> float:
    """Fraction of channel time spent on successfully delivered payload."""
    useful = sp.p_t * sp.p_s * (1.0 - p_e) * payload_airtime
    if useful == 0.0:
        return 0.0
    return useful / expected_slot(sd, sp, p_e)
