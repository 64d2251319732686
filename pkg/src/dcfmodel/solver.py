"""Joint fixed point of the backoff chain, collision/capture coupling and offered load."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import capture, markov, metrics, phy
from .config import ChannelParams, MacParams, SolverConfig, TrafficParams


class SolverError(ArithmeticError):
    pass


class NonConvergence(SolverError):
    def __init__(self, message: str, residual: float, candidates=()):
        super().__init__(message)
        self.residual = residual
        self.candidates = tuple(candidates)


class InvalidRegime(SolverError):
    pass


@dataclass(frozen=True)
class ModelSolution:
    tau: float
    p_col: float
    p_cap: float
    p_e: float
    p_eq: float
    q: float
    e_slot_us: float
    throughput: float
    iterations: int = 0
    residual: float = 0.0
    method: str = "picard"


@dataclass(frozen=True)
class _Problem:
    mac: MacParams
    traffic: TrafficParams
    cap: capture.CaptureParams
    p_e: float
    durations: metrics.SlotDurations

    @classmethod
    def build(cls, mac, ch, tr, p_e=None):
        if p_e is None:
            p_e = phy.fer(mac, ch)
        return cls(mac, tr, capture.CaptureParams.from_channel(ch), p_e,
                   metrics.slot_durations(mac))

    @property
    def n(self) -> int:
        return self.traffic.n_stations

    def coupling(self, tau: float) -> tuple[float, float, float]:
        """(p_cap, p_col, p_eq) implied by ``tau``."""
        pcap = capture.p_cap(self.cap, self.n, tau)
        pcol = max(0.0, metrics.p_t(self.n - 1, tau) - pcap)
        peq = pcol + self.p_e - self.p_e * pcol
        return pcap, pcol, peq

    def chain_tau(self, peq: float, q: float) -> float:
        return markov.tau(markov.ChainInputs(self.mac.w_min, self.mac.m, min(peq, 1.0), q))

    def slot_time(self, tau: float, pcap: float) -> float:
        sp = metrics.slot_probabilities(self.n, tau, pcap)
        return metrics.expected_slot(self.durations, sp, self.p_e)

    def load_q(self, e_slot_us: float) -> float:
        if self.traffic.saturated:
            return 1.0
        return -math.expm1(-self.traffic.lambda_pkt_s * e_slot_us * 1e-6)

    def residuals(self, tau, p_col, p_cap, p_eq, q) -> np.ndarray:
        return np.array([
            tau - self.chain_tau(p_eq, q),
            p_col - (metrics.p_t(self.n - 1, tau) - p_cap),
            p_eq - (p_col + self.p_e - self.p_e * p_col),
            p_cap - capture.p_cap(self.cap, self.n, tau),
            q - self.load_q(self.slot_time(tau, p_cap)),
        ])

    def point(self, tau: float, q: float, iterations: int, method: str) -> ModelSolution:
        pcap, pcol, peq = self.coupling(tau)
        sp = metrics.slot_probabilities(self.n, tau, pcap)
        e_slot = metrics.expected_slot(self.durations, sp, self.p_e)
        s = metrics.throughput(self.durations, sp, self.p_e,
                               metrics.payload_airtime_us(self.mac))
        res = float(np.max(np.abs(self.residuals(tau, pcol, pcap, peq, q))))
        return ModelSolution(tau=tau, p_col=pcol, p_cap=pcap, p_e=self.p_e, p_eq=peq,
                             q=q, e_slot_us=e_slot, throughput=s,
                             iterations=iterations, residual=res, method=method)


def residuals(point: ModelSolution, mac: MacParams, ch: ChannelParams,
              tr: TrafficParams) -> np.ndarray:
    """LHS - RHS of the five model equations at ``point``.

    Order: tau (chain), p_col, p_eq, p_cap, q (offered load). The
    channel error rate is taken from ``point.p_e``.
    """
    prob = _Problem.build(mac, ch, tr, p_e=point.p_e)
    return prob.residuals(point.tau, point.p_col, point.p_cap, point.p_eq, point.q)


def initial_guess(mac: MacParams, tr: TrafficParams) -> tuple[float, float]:
    tau0 = 2.0 / (mac.w_min + 1)
    if tr.saturated:
        return tau0, 1.0
    return tau0, min(1.0, max(0.01, tr.lambda_pkt_s * 1000e-6))


def _picard(prob: _Problem, cfg: SolverConfig, tau: float, q: float):
    d = cfg.damping
    for it in range(cfg.max_iters + 1):
        pcap, pcol, peq = prob.coupling(tau)
        e_slot = prob.slot_time(tau, pcap)
        tau_new = prob.chain_tau(peq, q)
        q_new = prob.load_q(e_slot)
        res = max(abs(tau - tau_new), abs(q - q_new))
        if not (math.isfinite(res) and 0.0 <= tau <= 1.0 and 0.0 <= q <= 1.0):
            raise InvalidRegime(f"iterate left [0, 1]: tau={tau!r}, q={q!r}")
        if res <= cfg.tol:
            return tau, q, it, res
        if it == cfg.max_iters:
            break
        tau = (1.0 - d) * tau + d * tau_new
        q = (1.0 - d) * q + d * q_new
    return tau, q, None, res


def _map_residual(prob: _Problem, tau: float, q: float) -> np.ndarray:
    pcap, _, peq = prob.coupling(tau)
    return np.array([tau - prob.chain_tau(peq, q), q - prob.load_q(prob.slot_time(tau, pcap))])


def _polish(prob: _Problem, tau: float, q: float, steps: int = 4) -> tuple[float, float]:
    """A few finite-difference Newton steps on the (tau, q) map.

    Picard stops on step size, which leaves an error of the order of the
    tolerance; Newton removes it. A step is kept only if it shrinks the residual.
    """
    free_q = not prob.traffic.saturated
    r = _map_residual(prob, tau, q)
    for _ in range(steps):
        size = np.max(np.abs(r))
        if size == 0.0:
            break
        h = 1e-7
        if free_q:
            t_h = tau - h if tau + h > 1.0 else tau + h
            q_h = q - h if q + h > 1.0 else q + h
            jac = np.column_stack([(_map_residual(prob, t_h, q) - r) / (t_h - tau),
                                   (_map_residual(prob, tau, q_h) - r) / (q_h - q)])
            try:
                dt, dq = np.linalg.solve(jac, -r)
            except np.linalg.LinAlgError:
                break
        else:
            t_h = tau - h if tau + h > 1.0 else tau + h
            slope = (_map_residual(prob, t_h, q)[0] - r[0]) / (t_h - tau)
            if slope == 0.0:
                break
            dt, dq = -r[0] / slope, 0.0
        t_new, q_new = tau + dt, q + dq
        if not (0.0 <= t_new <= 1.0 and 0.0 <= q_new <= 1.0):
            break
        r_new = _map_residual(prob, t_new, q_new)
        if np.max(np.abs(r_new)) >= size:
            break
        tau, q, r = t_new, q_new, r_new
    return tau, q


def _tau_given_q(prob: _Problem, q: float) -> float:
    # g(0) < 0 and g(1) >= 0, so [0, 1] brackets a root
    def g(t):
        return t - prob.chain_tau(prob.coupling(t)[2], q)

    if g(0.0) >= 0.0:
        return 0.0
    return brentq(g, 0.0, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)


def _bracketing(prob: _Problem) -> tuple[float, float]:
    if prob.traffic.saturated:
        return _tau_given_q(prob, 1.0), 1.0
    if prob.traffic.lambda_pkt_s == 0.0:
        return 0.0, 0.0

    def h(q):
        t = _tau_given_q(prob, q)
        return q - prob.load_q(prob.slot_time(t, prob.coupling(t)[0]))

    q = brentq(h, 0.0, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    return _tau_given_q(prob, q), q


def solve_fixed_point(mac: MacParams, ch: ChannelParams, tr: TrafficParams,
                      cfg: SolverConfig = SolverConfig(),
                      init: ModelSolution | None = None,
                      p_e: float | None = None) -> ModelSolution:
    """Solve the coupled model by damped fixed-point iteration.

    The iteration runs on the pair (tau, q); p_cap, p_col and p_eq are
    recomputed from tau each step. If it stalls, the system is reduced to
    nested scalar root finds (tau for fixed q, then q). ``init`` warm-starts
    from an earlier solution. ``p_e`` skips the PHY computation.
    """
    prob = _Problem.build(mac, ch, tr, p_e=p_e)
    if not tr.saturated and tr.lambda_pkt_s == 0.0:
        # damped iteration only approaches q = 0 geometrically
        return prob.point(0.0, 0.0, 0, "exact")
    if init is not None:
        tau0, q0 = init.tau, (1.0 if tr.saturated else init.q)
    else:
        tau0, q0 = initial_guess(mac, tr)
    tau, q, iters, res = _picard(prob, cfg, tau0, q0)
    if iters is not None:
        tau, q = _polish(prob, tau, q)
        return prob.point(tau, q, iters, "picard")
    try:
        tau_b, q_b = _bracketing(prob)
    except ValueError as exc:
        raise NonConvergence(f"no convergence after {cfg.max_iters} iterations "
                             f"(residual {res:.3e}); bracketing failed: {exc}",
                             res, [prob.point(tau, q, cfg.max_iters, "picard")]) from None
    sol = prob.point(tau_b, q_b, cfg.max_iters, "bracketing")
    if sol.residual > cfg.tol:
        raise NonConvergence(
            f"no convergence after {cfg.max_iters} iterations (residual {res:.3e}); "
            f"bracketing residual {sol.residual:.3e}", min(res, sol.residual),
            [prob.point(tau, q, cfg.max_iters, "picard"), sol])
    return sol


def model_throughput(mac: MacParams, ch: ChannelParams, tr: TrafficParams,
                     cfg: SolverConfig = SolverConfig()) -> float:
    return solve_fixed_point(mac, ch, tr, cfg).throughput
