"""Slotted Monte-Carlo simulator of N DCF stations (basic access).

Each step is one channel slot: an idle backoff slot of length sigma, or a
busy period (success, collision, errored frame) whose length comes from
:func:`dcfmodel.metrics.slot_durations`. Stations have Poisson arrivals
into a finite buffer of waiting frames (the frame in service is held
apart from it),
binary exponential backoff with retention at the last stage, Bernoulli
frame errors on data frames and capture among colliding frames.

Random numbers come from one PCG64 stream per station plus one for the
channel, all spawned from the master seed with ``numpy.random.SeedSequence``.
The slot loop is compiled with numba and reads the streams through
refillable buffers, so results do not depend on how the run is chunked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import stats

from . import capture, metrics, phy
from .config import ChannelParams, MacParams, TrafficParams

IDLE, SUCCESS, CAPTURE, COLLISION, CHANNEL_ERROR = range(5)
OUTCOME_NAMES = ("idle", "success", "capture", "collision", "channel_error")

# stats vector layout
_S_IDLE, _S_SUCCESS, _S_COLLISION, _S_ERROR, _S_CAPTURE = 0, 1, 2, 3, 4
_S_ATTEMPTS, _S_ACTIVE, _S_DELIVERED, _S_SLOTS = 5, 6, 7, 8
_N_STATS = 9

# kernel exit codes
_DONE, _REFILL_STATION, _REFILL_CHANNEL, _TRACE_FULL = 0, 1, 2, 3

_STATION_BUF = 4096
_CHANNEL_BUF = 1 << 16
_TRACE_CHUNK = 1 << 16


@numba.njit(cache=True)
def _draw_backoff(u, window):
    k = int(u * window)
    return k if k < window else window - 1


@numba.njit(cache=True)
def _run_kernel(counter, stage, qlen, next_arr, role, ubuf, uptr, cbuf, cptr,
                time_arr, stat, w0, m, lam_per_us, qmax, saturated,
                freeze_on_busy, sigma, t_s, t_c, t_e, p_e, keep,
                slot_limit, t_limit, tr_code, tr_station, tr_dur):
    n = counter.shape[0]
    nbuf = ubuf.shape[1]
    margin = qmax + 3
    t = time_arr[0]
    steps = 0
    status = _DONE
    while stat[_S_SLOTS] < slot_limit and t < t_limit:
        if steps >= tr_code.shape[0]:
            status = _TRACE_FULL
            break
        low = False
        for i in range(n):
            if uptr[i] + margin > nbuf:
                low = True
        if low:
            status = _REFILL_STATION
            break
        if cptr[0] + 4 > cbuf.shape[0]:
            status = _REFILL_CHANNEL
            break

        # role: 0 no packet, 1 counting down, 2 transmitting
        k = 0
        for i in range(n):
            if qlen[i] == 0:
                role[i] = 0
            elif counter[i] == 0:
                role[i] = 2
                k += 1
            else:
                role[i] = 1
                stat[_S_ACTIVE] += 1
        stat[_S_ACTIVE] += k
        stat[_S_ATTEMPTS] += k

        winner = -1
        outcome = IDLE
        if k == 1:
            outcome = SUCCESS
            for i in range(n):
                if role[i] == 2:
                    winner = i
        elif k > 1:
            u = cbuf[cptr[0]]
            cptr[0] += 1
            if u < keep ** (k - 1):
                stat[_S_CAPTURE] += 1
                outcome = CAPTURE
                pick = int(cbuf[cptr[0]] * k)
                cptr[0] += 1
                if pick >= k:
                    pick = k - 1
                seen = 0
                for i in range(n):
                    if role[i] == 2:
                        if seen == pick:
                            winner = i
                        seen += 1
            else:
                outcome = COLLISION
        if winner >= 0:
            u = cbuf[cptr[0]]
            cptr[0] += 1
            if u < p_e:
                outcome = CHANNEL_ERROR

        if outcome == IDLE:
            dur = sigma
            stat[_S_IDLE] += 1
        elif outcome == COLLISION:
            dur = t_c
            stat[_S_COLLISION] += 1
        elif outcome == CHANNEL_ERROR:
            dur = t_e
            stat[_S_ERROR] += 1
        else:
            dur = t_s
            stat[_S_SUCCESS] += 1
            stat[_S_DELIVERED] += 1
        t_end = t + dur
        tr_code[steps] = outcome
        tr_station[steps] = winner
        tr_dur[steps] = dur

        # arrivals during the slot find the queue as it stood during the slot
        if not saturated:
            for i in range(n):
                while next_arr[i] <= t_end:
                    if qlen[i] == 0:
                        stage[i] = 0
                        counter[i] = _draw_backoff(ubuf[i, uptr[i]], w0)
                        uptr[i] += 1
                    qlen[i] += 1
                    if qlen[i] < qmax:
                        u = ubuf[i, uptr[i]]
                        uptr[i] += 1
                        next_arr[i] -= math.log(1.0 - u) / lam_per_us
                    else:
                        next_arr[i] = np.inf

        for i in range(n):
            if role[i] == 1:
                if outcome == IDLE or not freeze_on_busy:
                    counter[i] -= 1
            elif role[i] == 2:
                delivered = i == winner and outcome != CHANNEL_ERROR
                if delivered:
                    stage[i] = 0
                    if not saturated:
                        if next_arr[i] == np.inf and lam_per_us > 0.0:
                            u = ubuf[i, uptr[i]]
                            uptr[i] += 1
                            next_arr[i] = t_end - math.log(1.0 - u) / lam_per_us
                        qlen[i] -= 1
                else:
                    stage[i] = min(stage[i] + 1, m)
                if qlen[i] > 0:
                    counter[i] = _draw_backoff(ubuf[i, uptr[i]], w0 << stage[i])
                    uptr[i] += 1
                else:
                    counter[i] = 0
        t = t_end
        stat[_S_SLOTS] += 1
        steps += 1
    time_arr[0] = t
    return status, steps


@dataclass(frozen=True)
class StationState:
    backoff_counter: int
    stage: int
    queue_len: int  # frames waiting behind the one in service
    next_arrival_time_us: float
    backlogged: bool  # False means the idle (empty) state


class World:
    """Mutable state of one simulation run.

    ``queue_capacity`` is the number of frames that may wait behind the one
    in service; with the default of 1 an arrival is dropped when a frame is
    already waiting.
    ``freeze_on_busy`` stops backoff counters during busy slots instead of
    decrementing them once per slot of any kind.
    """

    def __init__(self, mac: MacParams, ch: ChannelParams, tr: TrafficParams,
                 seed: int = 0, queue_capacity: int = 1,
                 freeze_on_busy: bool = False, p_e: float | None = None):
        if queue_capacity < 0:
            raise ValueError("queue_capacity must be >= 0")
        self.mac, self.channel, self.traffic = mac, ch, tr
        self.seed = int(seed)
        self.queue_capacity = int(queue_capacity)
        self.freeze_on_busy = bool(freeze_on_busy)
        self.p_e = phy.fer(mac, ch) if p_e is None else float(p_e)
        self.durations = metrics.slot_durations(mac)
        cp = capture.CaptureParams.from_channel(ch)
        self.keep = 0.0 if cp.disabled else capture.capture_given_i(cp, 1)
        self.saturated = tr.saturated
        self.lam_per_us = tr.lambda_pkt_s * 1e-6

        n = tr.n_stations
        children = np.random.SeedSequence(self.seed).spawn(n + 1)
        self._station_rngs = [np.random.Generator(np.random.PCG64(s)) for s in children[:n]]
        self._channel_rng = np.random.Generator(np.random.PCG64(children[n]))
        self.ubuf = np.empty((n, _STATION_BUF))
        for i, rng in enumerate(self._station_rngs):
            self.ubuf[i] = rng.random(_STATION_BUF)
        self.uptr = np.zeros(n, dtype=np.int64)
        self.cbuf = self._channel_rng.random(_CHANNEL_BUF)
        self.cptr = np.zeros(1, dtype=np.int64)

        self.counter = np.zeros(n, dtype=np.int64)
        self.stage = np.zeros(n, dtype=np.int64)
        self.qlen = np.zeros(n, dtype=np.int64)
        self.next_arr = np.full(n, np.inf)
        self.role = np.zeros(n, dtype=np.int8)
        if self.saturated:
            self.qlen[:] = 1
            for i in range(n):
                self.counter[i] = self._uniform_backoff(i, mac.w_min)
        elif self.lam_per_us > 0:
            for i in range(n):
                self.next_arr[i] = -math.log1p(-self._take(i)) / self.lam_per_us
        self.time = np.zeros(1)
        self.stat = np.zeros(_N_STATS, dtype=np.int64)

    def _take(self, i: int) -> float:
        u = self.ubuf[i, self.uptr[i]]
        self.uptr[i] += 1
        return float(u)

    def _uniform_backoff(self, i: int, window: int) -> int:
        return min(int(self._take(i) * window), window - 1)

    def _refill(self) -> None:
        for i, rng in enumerate(self._station_rngs):
            used = int(self.uptr[i])
            if used:
                self.ubuf[i, :-used] = self.ubuf[i, used:]
                self.ubuf[i, -used:] = rng.random(used)
                self.uptr[i] = 0
        used = int(self.cptr[0])
        if used:
            self.cbuf[:-used] = self.cbuf[used:]
            self.cbuf[-used:] = self._channel_rng.random(used)
            self.cptr[0] = 0

    @property
    def slots(self) -> int:
        return int(self.stat[_S_SLOTS])

    @property
    def now_us(self) -> float:
        return float(self.time[0])

    def stations(self) -> list[StationState]:
        return [StationState(int(c), int(s), max(int(q) - 1, 0), float(a), bool(q > 0))
                for c, s, q, a in zip(self.counter, self.stage, self.qlen, self.next_arr)]

    def advance(self, max_slots: int | None = None, until_us: float | None = None,
                trace: list | None = None) -> None:
        """Run until ``max_slots`` more slots or simulated time ``until_us``."""
        slot_limit = np.iinfo(np.int64).max if max_slots is None else self.slots + int(max_slots)
        t_limit = np.inf if until_us is None else float(until_us)
        sd = self.durations
        code = np.empty(_TRACE_CHUNK, dtype=np.int8)
        station = np.empty(_TRACE_CHUNK, dtype=np.int32)
        dur = np.empty(_TRACE_CHUNK)
        while True:
            first = self.slots
            status, steps = _run_kernel(
                self.counter, self.stage, self.qlen, self.next_arr, self.role,
                self.ubuf, self.uptr, self.cbuf, self.cptr, self.time, self.stat,
                self.mac.w_min, self.mac.m, self.lam_per_us, self.queue_capacity + 1,
                self.saturated, self.freeze_on_busy, sd.sigma_us, sd.t_s_us,
                sd.t_c_us, sd.t_e_us, self.p_e, self.keep, slot_limit, t_limit,
                code, station, dur)
            if trace is not None:
                trace.extend(zip(range(first, first + steps), code[:steps].tolist(),
                                 station[:steps].tolist(), dur[:steps].tolist()))
            if status == _DONE:
                return
            if status in (_REFILL_STATION, _REFILL_CHANNEL):
                self._refill()


def step_slot(world: World) -> tuple[str, int | None]:
    """Advance ``world`` by one slot; return ``(outcome, station)``.

    ``station`` is the transmitter whose frame went through (success,
    capture) or was corrupted (channel_error); ``None`` for idle and
    collision slots.
    """
    events: list = []
    world.advance(max_slots=1, trace=events)
    _, code, station, _ = events[0]
    return OUTCOME_NAMES[code], (station if station >= 0 else None)


@dataclass(frozen=True)
class SimReport:
    sim_time_us: float
    payload_bits_delivered: int
    slots_idle: int
    slots_success: int
    slots_collision: int
    slots_error: int
    slots_capture: int
    attempts: int
    active_station_slots: int
    throughput: float
    ci95_halfwidth: float
    seed: int
    batches: int
    batch_throughput: tuple = field(default=(), repr=False)
    batch_tau: tuple = field(default=(), repr=False)
    batch_capture_rate: tuple = field(default=(), repr=False)
    degenerate: bool = False

    @property
    def total_slots(self) -> int:
        return self.slots_idle + self.slots_success + self.slots_collision + self.slots_error

    @property
    def tau_hat(self) -> float:
        """Attempts per slot spent by a station with a frame to send."""
        if self.active_station_slots == 0:
            return 0.0
        return self.attempts / self.active_station_slots

    @property
    def capture_rate(self) -> float:
        """Fraction of slots in which a frame was captured out of a collision."""
        return self.slots_capture / self.total_slots if self.total_slots else 0.0

    def ci95(self, values) -> float:
        return _t_halfwidth(values)


def _t_halfwidth(values) -> float:
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return math.inf
    sd = values.std(ddof=1)
    return float(stats.t.ppf(0.975, len(values) - 1) * sd / math.sqrt(len(values)))


def run(mac: MacParams, ch: ChannelParams, tr: TrafficParams, seed: int = 0,
        horizon_us: float | None = None, batches: int = 10, n_slots: int | None = None,
        queue_capacity: int = 1, freeze_on_busy: bool = False,
        warmup_slots: int = 0, p_e: float | None = None,
        trace: list | None = None) -> SimReport:
    """Simulate and report throughput with a batch-means 95% CI.

    Give either ``horizon_us`` (simulated time) or ``n_slots``; the run is
    cut into ``batches`` equal pieces of that budget. ``warmup_slots`` are
    simulated first and discarded. The report is a pure function of the
    arguments.
    """
    if (horizon_us is None) == (n_slots is None):
        raise ValueError("give exactly one of horizon_us or n_slots")
    if batches < 1:
        raise ValueError("batches must be >= 1")
    world = World(mac, ch, tr, seed=seed, queue_capacity=queue_capacity,
                  freeze_on_busy=freeze_on_busy, p_e=p_e)
    if warmup_slots:
        world.advance(max_slots=warmup_slots)
    base_stat = world.stat.copy()
    t0 = world.now_us
    bits_per_frame = 8 * mac.payload_bytes
    airtime = metrics.payload_airtime_us(mac)

    thr, taus, caps = [], [], []
    for b in range(batches):
        start_stat, start_t = world.stat.copy(), world.now_us
        if n_slots is not None:
            quota = n_slots // batches + (1 if b < n_slots % batches else 0)
            world.advance(max_slots=quota, trace=trace)
        else:
            world.advance(until_us=t0 + horizon_us * (b + 1) / batches, trace=trace)
        d = world.stat - start_stat
        span = world.now_us - start_t
        thr.append(d[_S_DELIVERED] * airtime / span if span > 0 else 0.0)
        taus.append(d[_S_ATTEMPTS] / d[_S_ACTIVE] if d[_S_ACTIVE] else 0.0)
        caps.append(d[_S_CAPTURE] / d[_S_SLOTS] if d[_S_SLOTS] else 0.0)

    total = world.stat - base_stat
    elapsed = world.now_us - t0
    delivered = int(total[_S_DELIVERED])
    throughput = delivered * airtime / elapsed if elapsed > 0 else 0.0
    degenerate = batches < 5 or total[_S_SLOTS] < 10_000
    return SimReport(
        sim_time_us=elapsed,
        payload_bits_delivered=delivered * bits_per_frame,
        slots_idle=int(total[_S_IDLE]),
        slots_success=int(total[_S_SUCCESS]),
        slots_collision=int(total[_S_COLLISION]),
        slots_error=int(total[_S_ERROR]),
        slots_capture=int(total[_S_CAPTURE]),
        attempts=int(total[_S_ATTEMPTS]),
        active_station_slots=int(total[_S_ACTIVE]),
        throughput=throughput,
        ci95_halfwidth=_t_halfwidth(thr),
        seed=int(seed),
        batches=batches,
        batch_throughput=tuple(thr),
        batch_tau=tuple(taus),
        batch_capture_rate=tuple(caps),
        degenerate=bool(degenerate),
    )
