"""Stationary behaviour of the DCF backoff chain with an idle (empty-buffer) state.

States are the backoff pairs ``(i, k)`` for stage ``i`` in ``[0, m]`` and
counter ``k`` in ``[0, W_i - 1]`` with ``W_i = 2**i * W``, plus one idle
state ``I``. A station in ``(i, 0)`` transmits; it fails with probability
``p_eq`` and otherwise finds another packet queued with probability ``q``.

The closed forms are what the solver uses. :func:`build_chain_oracle`
builds the transition matrix explicitly and solves it numerically; it
exists to check the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_SINGULAR_BAND = 1e-6
MAX_ORACLE_STATES = 20_000


class ChainSizeError(ValueError):
    pass


@dataclass(frozen=True)
class ChainInputs:
    w_min: int
    m: int
    p_eq: float
    q: float

    def __post_init__(self):
        if self.w_min < 2:
            raise ValueError("w_min must be >= 2")
        if self.m < 0:
            raise ValueError("m must be >= 0")
        if not 0.0 <= self.p_eq <= 1.0:
            raise ValueError("p_eq must lie in [0, 1]")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("q must lie in [0, 1]")


@dataclass(frozen=True)
class StationaryDistribution:
    b: dict[tuple[int, int], float]
    b_idle: float
    b00: float

    def total(self) -> float:
        return math.fsum(self.b.values()) + self.b_idle

    def head(self, stage: int) -> float:
        """Mass of the transmitting state ``(stage, 0)``."""
        return self.b[(stage, 0)]


def _tau_geometric(c: ChainInputs) -> float:
    w, m, p, q = c.w_min, c.m, c.p_eq, c.q
    one_2p = 1.0 - 2.0 * p
    den = (q * ((w + 1) * one_2p + w * p * (1.0 - (2.0 * p) ** m))
           + 2.0 * (1.0 - q) * (1.0 - p) * one_2p)
    return 2.0 * one_2p * q / den


def _tau_series(c: ChainInputs) -> float:
    # Same quantity from the un-summed normalization; finite at p_eq = 1/2.
    w, m, p, q = c.w_min, c.m, c.p_eq, c.q
    two_p = 2.0 * p
    series = math.fsum(two_p ** i for i in range(m)) + two_p ** m / (1.0 - p)
    # 1 = (tau/2) * (1-p) * [W*series + 1/(1-p) + 2(1-q)/q]
    bracket = (1.0 - p) * (w * series + 2.0 * (1.0 - q) / q) + 1.0
    return 2.0 / bracket


def tau(c: ChainInputs) -> float:
    """Per-slot transmission probability of a station.

    Equals the stationary mass of all transmitting states ``(i, 0)``.
    """
    if c.q == 0.0:
        return 0.0
    if c.m == 0:
        # single stage: it is both stage 0 and the retention stage
        return 2.0 * c.q / (c.q * (c.w_min + 1) + 2.0 * (1.0 - c.q) * (1.0 - c.p_eq))
    if abs(1.0 - 2.0 * c.p_eq) < _SINGULAR_BAND and c.p_eq < 1.0:
        return _tau_series(c)
    return _tau_geometric(c)


def b00_closed_form(c: ChainInputs) -> float:
    """Stationary mass of state ``(0, 0)``.

    For ``m >= 1`` the transmitting masses form ``b00 * p_eq**i`` with a
    ``1/(1 - p_eq)`` tail at stage ``m``, so ``b00 = tau * (1 - p_eq)``.
    With ``m = 0`` the only transmitting state is ``(0, 0)`` itself.
    """
    t = tau(c)
    return t if c.m == 0 else t * (1.0 - c.p_eq)


def idle_mass(c: ChainInputs) -> float:
    """Stationary mass of the idle state."""
    if c.q == 0.0:
        return 1.0
    return (1.0 - c.q) * (1.0 - c.p_eq) / c.q * tau(c)


def closed_form_distribution(c: ChainInputs) -> StationaryDistribution:
    """Full stationary distribution assembled from the closed forms."""
    t = tau(c)
    p = c.p_eq
    b00 = b00_closed_form(c)
    if c.m == 0:
        heads = [t]
    else:
        heads = [b00 * p ** i for i in range(c.m)]
        heads.append(b00 * p ** c.m / (1.0 - p) if p < 1.0 else t)
    b = {}
    for i, head in enumerate(heads):
        wi = c.w_min * 2 ** i
        for k in range(wi):
            b[(i, k)] = (wi - k) / wi * head
    return StationaryDistribution(b=b, b_idle=idle_mass(c), b00=b00)


def chain_states(w_min: int, m: int) -> list:
    states: list = [(i, k) for i in range(m + 1) for k in range(w_min * 2 ** i)]
    states.append("I")
    return states


def transition_matrix(c: ChainInputs) -> tuple[np.ndarray, list]:
    """Row-stochastic transition matrix of the chain and its state list."""
    states = chain_states(c.w_min, c.m)
    if len(states) > MAX_ORACLE_STATES:
        raise ChainSizeError(f"{len(states)} states exceeds {MAX_ORACLE_STATES}")
    index = {s: n for n, s in enumerate(states)}
    idle = index["I"]
    w0 = c.w_min
    p, q = c.p_eq, c.q
    P = np.zeros((len(states), len(states)))
    for i in range(c.m + 1):
        wi = c.w_min * 2 ** i
        for k in range(1, wi):
            P[index[(i, k)], index[(i, k - 1)]] = 1.0
        row = index[(i, 0)]
        for k in range(w0):
            P[row, index[(0, k)]] += q * (1.0 - p) / w0
        nxt = min(i + 1, c.m)
        wn = c.w_min * 2 ** nxt
        for k in range(wn):
            P[row, index[(nxt, k)]] += p / wn
        P[row, idle] += (1.0 - q) * (1.0 - p)
    for k in range(w0):
        P[idle, index[(0, k)]] += q / w0
    P[idle, idle] += 1.0 - q
    return P, states


def build_chain_oracle(c: ChainInputs) -> StationaryDistribution:
    """Solve ``pi P = pi`` with normalization by a dense LU solve."""
    P, states = transition_matrix(c)
    n = len(states)
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi = np.linalg.solve(A, rhs)
    b = {s: float(v) for s, v in zip(states[:-1], pi[:-1])}
    return StationaryDistribution(b=b, b_idle=float(pi[-1]), b00=b[(0, 0)])


def oracle_tau(dist: StationaryDistribution) -> float:
    return math.fsum(v for (i, k), v in dist.b.items() if k == 0)
