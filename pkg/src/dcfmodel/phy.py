"""Bit and frame error rates over a Rayleigh fading channel."""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np

from .config import ChannelParams, MacParams

# Constellation size per modulation; CCK rates have no closed form here.
CONSTELLATION = {"DBPSK": 2, "DQPSK": 4}

_QUAD_RTOL = 1e-10
_MAX_DEPTH = 40
_custom_ber: dict[str, Callable[[float], float]] = {}


class UnsupportedModulation(ValueError):
    pass


class QuadratureError(ArithmeticError):
    pass


def register_ber(modulation: str, fn: Callable[[float], float] | None) -> None:
    """Install (or with ``None`` remove) a BER function of linear SNR.

    This is how CCK55/CCK11 become usable; registered functions also
    override the built-in DBPSK/DQPSK quadrature.
    """
    if fn is None:
        _custom_ber.pop(modulation, None)
    else:
        _custom_ber[modulation] = fn


@lru_cache(maxsize=None)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _gl(f, a: float, b: float, n: int) -> float:
    x, w = _gauss_legendre(n)
    half = 0.5 * (b - a)
    return float(half * np.dot(w, f(half * x + 0.5 * (a + b))))


def _integrate(f, a: float, b: float, depth: int = 0) -> float:
    # 64 vs 128 nodes; bisect the panel until they agree
    coarse = _gl(f, a, b, 64)
    fine = _gl(f, a, b, 128)
    if abs(fine - coarse) <= _QUAD_RTOL * abs(fine) or fine == coarse:
        return fine
    if depth >= _MAX_DEPTH:
        raise QuadratureError(
            f"Gauss-Legendre 64/128 disagree by {abs(fine - coarse):.3e} on [{a}, {b}]")
    mid = 0.5 * (a + b)
    return _integrate(f, a, mid, depth + 1) + _integrate(f, mid, b, depth + 1)


def mpsk_rayleigh_ber(m_ary: int, snr: float) -> float:
    """Approximate BER of Gray-coded M-PSK over Rayleigh fading.

    ``snr`` is the linear mean SNR per bit and ``m_ary`` the
    constellation size. Evaluated by adaptive Gauss-Legendre quadrature
    of the finite-range MGF integral.
    """
    if snr < 0:
        raise ValueError("snr must be >= 0")
    if snr == math.inf:
        return 0.0
    bits = math.log2(m_ary)
    total = 0.0
    for i in range(1, max(m_ary // 4, 1) + 1):
        c = snr * bits * math.sin((2 * i - 1) * math.pi / m_ary) ** 2

        def integrand(theta, c=c):
            s2 = np.sin(theta) ** 2
            return s2 / (s2 + c)

        total += _integrate(integrand, 0.0, math.pi / 2) / math.pi
    return 2.0 / max(bits, 2.0) * total


def ber_rayleigh(modulation: str, snr_linear: float) -> float:
    """Bit error probability for ``modulation`` at linear mean SNR."""
    if modulation in _custom_ber:
        return float(_custom_ber[modulation](snr_linear))
    if modulation not in CONSTELLATION:
        raise UnsupportedModulation(
            f"no BER model for {modulation}; supply one with register_ber()")
    return min(mpsk_rayleigh_ber(CONSTELLATION[modulation], snr_linear), 0.5)


def _frame_error(ber: float, n_bits: int) -> float:
    # 1 - (1-p)^n without cancellation for small p
    return -math.expm1(n_bits * math.log1p(-ber)) if ber < 1 else 1.0


def fer(mac: MacParams, ch: ChannelParams) -> float:
    """Data frame error rate P_e at the channel's mean SNR.

    The PLCP header always goes out with DBPSK; MAC header plus payload
    use ``ch.modulation``. ``ch.fer_override`` short-circuits everything.
    """
    if ch.fer_override is not None:
        return ch.fer_override
    snr = ch.snr_linear
    plcp = _frame_error(ber_rayleigh("DBPSK", snr), 8 * mac.phy_header_bytes)
    data = _frame_error(ber_rayleigh(ch.modulation, snr),
                        8 * (mac.payload_bytes + mac.mac_header_bytes))
    return 1.0 - (1.0 - plcp) * (1.0 - data)


def ber_table(mac: MacParams, ch: ChannelParams, snr_db_grid) -> list[tuple[float, float, float]]:
    """Rows of (snr_db, ber, fer) for the data modulation."""
    rows = []
    for snr_db in snr_db_grid:
        point = ChannelParams(snr_db=float(snr_db), z0_db=ch.z0_db,
                              spreading_factor=ch.spreading_factor,
                              modulation=ch.modulation)
        rows.append((float(snr_db), ber_rayleigh(ch.modulation, point.snr_linear), fer(mac, point)))
    return rows
