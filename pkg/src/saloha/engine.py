"""Deterministic discrete-event engine.

Hosts node and gateway agents on a shared multi-channel medium with
pure interval-overlap collision semantics (no capture), LoRaWAN Class A
ACK timing (RX1 opens 1 s after the uplink ends), sliding-window
duty-cycle enforcement, and the ACK-piggybacked synchronization loop.

Everything is a pure function of (config, seed): event ties are broken
by a sequence counter, every node owns an RNG stream derived from
(seed, node_id), and no wall clock or hash order is consulted anywhere.
"""

from __future__ import annotations

import heapq
import random
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator, Optional

from . import sync as sync_mod
from .mac import MacPolicy
from .phy import RadioProfile, time_on_air
from .timebase import (
    NS_PER_SEC,
    ClockModel,
    drift_error,
    local_now,
    round_half_away_div,
)

DEFAULT_DC_WINDOW = 3600 * NS_PER_SEC
DEFAULT_RX1_DELAY = 1 * NS_PER_SEC


class SimConfigError(ValueError):
    """Scenario validation failure; message lists every offending field."""


class EventKind(IntEnum):
    NODE_DATA_READY = 0
    TX_START = 1
    TX_END = 2
    RX1_OPEN = 3
    ACK_TX_START = 4
    ACK_RX = 5
    ACK_TIMEOUT = 6


@dataclass(frozen=True)
class Event:
    """One scheduled occurrence; equal fire times resolve by sequence."""

    fire_at: int
    sequence: int
    kind: EventKind
    subject: int


@dataclass(frozen=True)
class Transmission:
    """An uplink occupying one channel for a half-open interval."""

    node_id: int
    channel: int
    start: int
    duration: int
    confirmed: bool = False

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise SimConfigError("transmission duration must be positive")


@dataclass(frozen=True)
class TransmissionRecord:
    index: int
    node_id: int
    true_start: int
    local_start: int
    slot_index: Optional[int]
    channel: int
    collided: bool
    acked: bool


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one simulation run.  Durations are integer
    nanoseconds; the seed is mandatory (no ambient entropy)."""

    n_nodes: int
    app_period: int
    uplink_profile: RadioProfile
    ack_profile: RadioProfile
    policy: MacPolicy
    duration: int
    seed: int
    jitter: int = 0
    n_channels: int = 1
    channel_selection: str = "fixed"  # fixed | round-robin | uniform-random
    drift_ppm_range: tuple[float, float] = (20.0, 80.0)
    initial_offset_max: int = 5 * NS_PER_SEC
    confirmed_mode: str = "all"  # all | on-demand | none
    duty_cycle_cap: float = 0.01
    dc_window: int = DEFAULT_DC_WINDOW
    rx1_delay: int = DEFAULT_RX1_DELAY
    warmup: int = 3600 * NS_PER_SEC
    drift_bound_ppm: float = 80.0
    residual_mean: int = 10_000_000
    residual_std: int = 2_500_000
    residual_max: int = 15_000_000
    timestamp_error_max_us: int = 19
    capture_effect: bool = False

    def validate(self) -> None:
        problems = []
        if self.n_nodes < 1:
            problems.append("n_nodes must be >= 1")
        if self.app_period <= time_on_air(self.uplink_profile):
            problems.append("app_period must exceed the uplink time-on-air")
        if self.duration <= 0:
            problems.append("duration must be positive")
        if self.jitter < 0:
            problems.append("jitter must be non-negative")
        if self.n_channels < 1:
            problems.append("n_channels must be >= 1")
        if self.channel_selection not in ("fixed", "round-robin", "uniform-random"):
            problems.append(f"unknown channel_selection {self.channel_selection!r}")
        lo, hi = self.drift_ppm_range
        if not 0 <= lo <= hi:
            problems.append("drift_ppm_range must satisfy 0 <= low <= high")
        if self.confirmed_mode not in ("all", "on-demand", "none"):
            problems.append(f"unknown confirmed_mode {self.confirmed_mode!r}")
        if self.policy.is_slotted and self.confirmed_mode == "none":
            problems.append("slotted policy needs confirmed uplinks to synchronize")
        if not 0.0 < self.duty_cycle_cap <= 1.0:
            problems.append("duty_cycle_cap must be in (0, 1]")
        if self.dc_window <= 0:
            problems.append("dc_window must be positive")
        if time_on_air(self.uplink_profile) > self.duty_cycle_cap * self.dc_window:
            problems.append("a single uplink already violates the duty-cycle cap")
        if self.rx1_delay <= 0:
            problems.append("rx1_delay must be positive")
        if self.warmup < 0:
            problems.append("warmup must be non-negative")
        if not 0 < self.residual_max <= sync_mod.MAX_RESIDUAL_ERROR_NS:
            problems.append("residual_max must be in (0, 15 ms]")
        if not 0 <= self.timestamp_error_max_us * 1000 < sync_mod.MAX_TIMESTAMP_ERROR_NS:
            problems.append("timestamp_error_max_us must be in [0, 20)")
        if self.capture_effect:
            problems.append("capture effect modelling is a disabled hook")
        if problems:
            raise SimConfigError("; ".join(problems))


def channel_arbitrate(active: list[Transmission]) -> list[bool]:
    """Collision flags for a set of transmissions.

    Two transmissions conflict iff their half-open intervals
    [start, start+duration) intersect and they share a channel; every
    party to a conflict loses (no capture).
    """
    flags = [False] * len(active)
    order = sorted(range(len(active)), key=lambda i: (active[i].start, i))
    last_by_channel: dict[int, list[int]] = {}
    for i in order:
        tx = active[i]
        peers = last_by_channel.setdefault(tx.channel, [])
        peers[:] = [j for j in peers if active[j].start + active[j].duration > tx.start]
        if peers:
            flags[i] = True
            for j in peers:
                flags[j] = True
        peers.append(i)
    return flags


def enforce_duty_cycle(
    history: list[tuple[int, int]],
    proposed_start: int,
    duration: int,
    cap: float,
    window: int,
) -> Optional[int]:
    """Sliding-window duty-cycle check for one node.

    ``history`` holds past (start, duration) pairs, non-overlapping and
    sorted by start.  Returns None when the proposal is legal, else the
    earliest start instant at which it becomes legal.
    """
    budget = round(cap * window) - duration
    if budget < 0:
        raise SimConfigError("transmission longer than the duty-cycle budget")

    def occupancy(win_start: int, win_end: int) -> int:
        total = 0
        for s, d in history:
            total += max(0, min(s + d, win_end) - max(s, win_start))
        return total

    win_end = proposed_start + duration
    excess = occupancy(win_end - window, win_end) - budget
    if excess <= 0:
        return None
    # Slide the window start forward until `excess` ns of old airtime
    # have left it; removal grows linearly while the window edge crosses
    # an entry and pauses in the gaps.
    s0 = win_end - window
    for s, d in history:
        if s + d <= s0:
            continue
        lo = max(s, s0)
        avail = s + d - lo
        if avail >= excess:
            edge = lo + excess
            return edge + window - duration
        excess -= avail
    raise AssertionError("unreachable: budget check bounds the walk")


class _Node:
    __slots__ = (
        "clock",
        "drift_num",
        "drift_den",
        "corrections",
        "rng",
        "channel",
        "phase",
        "next_ready_local",
        "synced",
        "last_sync_local",
        "uncertainty_at_sync",
        "pending_rec",
        "pending_tx_local",
        "pending_tx_end_local",
        "pending_use_slots",
        "retry_shift",
        "pending_residual_abs",
        "pending_ts_err",
        "duty",
        "duty_sum",
        "n_syncs",
        "max_mis_pre_sync",
        "max_mis_post_sync",
    )

    def __init__(self) -> None:
        self.corrections = 0
        self.phase = 0
        self.synced = False
        self.last_sync_local = 0
        self.uncertainty_at_sync = 0
        self.pending_rec = -1
        self.pending_use_slots = False
        self.retry_shift = 0
        self.duty: deque = deque()
        self.duty_sum = 0
        self.n_syncs = 0
        self.max_mis_pre_sync = 0
        self.max_mis_post_sync = 0


class Trace:
    """Column-oriented transmission log, materialized lazily."""

    def __init__(self) -> None:
        self.node_id: list[int] = []
        self.true_start: list[int] = []
        self.local_start: list[int] = []
        self.slot_index: list[int] = []  # -1 when not applicable
        self.channel: list[int] = []
        self.duration: list[int] = []
        self.collided = bytearray()
        self.acked = bytearray()
        self.confirmed = bytearray()

    def __len__(self) -> int:
        return len(self.node_id)

    def record(self, i: int) -> TransmissionRecord:
        return TransmissionRecord(
            index=i,
            node_id=self.node_id[i],
            true_start=self.true_start[i],
            local_start=self.local_start[i],
            slot_index=None if self.slot_index[i] < 0 else self.slot_index[i],
            channel=self.channel[i],
            collided=bool(self.collided[i]),
            acked=bool(self.acked[i]),
        )

    def __iter__(self) -> Iterator[TransmissionRecord]:
        return (self.record(i) for i in range(len(self)))


@dataclass
class Metrics:
    """Run summary; steady-state figures exclude the warm-up window."""

    transmissions: int
    conflicts: int
    collision_probability: float
    throughput_fraction: float
    steady_transmissions: int
    steady_conflicts: int
    steady_state_collision_probability: float
    warmup_transmissions: int
    warmup_conflicts: int
    warmup_ns: int
    duration_ns: int
    per_node: list[tuple[int, int]] = field(default_factory=list)

    @property
    def warmup_collision_probability(self) -> float:
        if self.warmup_transmissions == 0:
            return 0.0
        return self.warmup_conflicts / self.warmup_transmissions


class Engine:
    """One simulation run.  Construct, call :meth:`run`, inspect."""

    _TX_START = 0
    _ACK_EVENT = 1

    def __init__(self, config: ScenarioConfig) -> None:
        config.validate()
        self.config = config
        self.trace = Trace()
        self.gateway_airtime = 0
        self._seq = 0
        self._heap: list[tuple[int, int, int, int]] = []
        self._uplink_toa = time_on_air(config.uplink_profile)
        self._ack_toa = time_on_air(config.ack_profile)
        plan = config.policy.plan
        self._slot_t = plan.t if plan is not None else 0
        self._guard = plan.t_b if plan is not None else 0
        backoff = config.policy.backoff
        if config.policy.is_slotted:
            if backoff is not None:
                self._max_phase = backoff.max_phase_slots
            else:
                self._max_phase = max(1, config.app_period // self._slot_t)
        else:
            self._max_phase = 1
        # Headroom used when deciding whether the *next* opportunity
        # would already breach the guard: one period plus the time for
        # the sync round itself.
        self._resync_lookahead = (
            config.app_period
            + config.jitter
            + config.rx1_delay
            + self._ack_toa
            + self._slot_t
            + NS_PER_SEC
        )
        self._active: list[list[tuple[int, int]]] = [
            [] for _ in range(config.n_channels)
        ]
        self.nodes = [self._make_node(i) for i in range(config.n_nodes)]
        self._ran = False

    def _make_node(self, node_id: int) -> _Node:
        cfg = self.config
        nd = _Node()
        nd.rng = random.Random(f"{cfg.seed}:{node_id}")
        lo, hi = cfg.drift_ppm_range
        magnitude = nd.rng.uniform(lo, hi)
        sign = 1.0 if nd.rng.random() < 0.5 else -1.0
        offset = (
            nd.rng.randint(-cfg.initial_offset_max, cfg.initial_offset_max)
            if cfg.initial_offset_max > 0
            else 0
        )
        nd.clock = ClockModel(drift_ppm=sign * magnitude, initial_offset=offset)
        nd.drift_num, nd.drift_den = nd.clock.drift_ratio
        phase_true = nd.rng.randint(0, cfg.app_period - 1)
        nd.next_ready_local = local_now(nd.clock, 0, phase_true)
        if cfg.channel_selection == "fixed":
            nd.channel = nd.rng.randrange(cfg.n_channels)
        elif cfg.channel_selection == "round-robin":
            nd.channel = node_id % cfg.n_channels
        else:
            nd.channel = -1  # drawn per transmission
        return nd

    # -- clock helpers ---------------------------------------------------

    def _local_at(self, nd: _Node, t: int) -> int:
        return (
            nd.clock.initial_offset
            + nd.corrections
            + t
            + round_half_away_div(t * nd.drift_num, nd.drift_den)
        )

    def _true_at(self, nd: _Node, local: int) -> int:
        scaled = local - nd.clock.initial_offset - nd.corrections
        return round_half_away_div(scaled * nd.drift_den, nd.drift_den + nd.drift_num)

    def ground_truth_misalignment(self, node_id: int, t: int) -> int:
        """Omniscient node-RTC minus gateway-time at instant ``t``."""
        return self._local_at(self.nodes[node_id], t) - t

    def _uncertainty_at(self, nd: _Node, local: int) -> int:
        """Worst-case clock error bound at a future local instant."""
        elapsed = local - nd.last_sync_local
        if elapsed < 0:
            elapsed = 0
        return nd.uncertainty_at_sync + drift_error(
            self.config.drift_bound_ppm, elapsed
        )

    # -- scheduling ------------------------------------------------------

    def _push(self, t: int, kind: int, node_id: int) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (t, self._seq, kind, node_id))

    def _wants_ack(self, nd: _Node, tx_local: int) -> bool:
        cfg = self.config
        if cfg.confirmed_mode == "all":
            return True
        if cfg.confirmed_mode == "none":
            return False
        if not nd.synced:
            return True
        horizon = tx_local + self._resync_lookahead
        return sync_mod.needs_resync(
            sync_mod.SyncState(
                drift_bound_ppm=cfg.drift_bound_ppm,
                synced=True,
                last_sync_local=nd.last_sync_local,
                uncertainty_at_sync=nd.uncertainty_at_sync,
            ),
            horizon,
            self._guard if self._guard else cfg.app_period,
        )

    def _schedule_next_tx(self, node_id: int, now_true: int) -> None:
        cfg = self.config
        nd = self.nodes[node_id]
        ready = nd.next_ready_local
        nd.next_ready_local = ready + cfg.app_period
        if cfg.jitter > 0:
            ready += nd.rng.randint(-cfg.jitter, cfg.jitter)
        if nd.retry_shift:
            # Shift the whole ready grid, not just this attempt, so two
            # nodes that booted in lockstep stay decorrelated.
            ready += nd.retry_shift
            nd.next_ready_local += nd.retry_shift
            nd.retry_shift = 0
        now_local = self._local_at(nd, now_true)
        if ready < now_local:
            ready = now_local
        use_slots = (
            cfg.policy.is_slotted
            and nd.synced
            and self._uncertainty_at(nd, ready) < self._guard
        )
        dur = self._uplink_toa
        budget = round(cfg.duty_cycle_cap * cfg.dc_window)
        while True:
            if use_slots:
                t = self._slot_t
                tx_local = (-(-ready // t) + nd.phase) * t
            else:
                tx_local = ready
            tx_true = self._true_at(nd, tx_local)
            if tx_true < now_true:
                tx_true = now_true
            # Fast path: duty_sum counts whole durations of entries that
            # still touch the window, so it only over-estimates; the
            # precise sliding-window check runs only near the cap.
            win_start = tx_true + dur - cfg.dc_window
            duty = nd.duty
            while duty and duty[0][0] + duty[0][1] <= win_start:
                _s, d = duty.popleft()
                nd.duty_sum -= d
            if nd.duty_sum + dur <= budget:
                break
            defer = enforce_duty_cycle(
                list(duty), tx_true, dur, cfg.duty_cycle_cap, cfg.dc_window
            )
            if defer is None:
                break
            ready = self._local_at(nd, defer)
        if tx_true > cfg.duration:
            return
        nd.pending_tx_local = tx_local
        nd.pending_use_slots = use_slots
        self._push(tx_true, self._TX_START, node_id)

    # -- event handlers --------------------------------------------------

    def run(self) -> tuple[Trace, Metrics]:
        if self._ran:
            raise RuntimeError("engine instances are single-use")
        self._ran = True
        cfg = self.config
        for node_id in range(cfg.n_nodes):
            self._schedule_next_tx(node_id, 0)
        heap = self._heap
        trace = self.trace
        while heap:
            now, _seq, kind, node_id = heapq.heappop(heap)
            if kind == self._TX_START:
                self._on_tx_start(node_id, now)
            else:
                self._on_ack_event(node_id, now)
        return trace, self.metrics()

    def _on_tx_start(self, node_id: int, now: int) -> None:
        cfg = self.config
        nd = self.nodes[node_id]
        trace = self.trace
        dur = self._uplink_toa
        end = now + dur
        tx_local = nd.pending_tx_local
        use_slots = nd.pending_use_slots
        confirmed = self._wants_ack(nd, tx_local)
        channel = nd.channel
        if channel < 0:
            channel = nd.rng.randrange(cfg.n_channels)

        rec = len(trace.node_id)
        active = self._active[channel]
        if active:
            live = [e for e in active if e[0] > now]
            if live:
                for _end, idx in live:
                    trace.collided[idx] = 1
                live.append((end, rec))
                self._active[channel] = live
                collided = 1
            else:
                self._active[channel] = [(end, rec)]
                collided = 0
        else:
            active.append((end, rec))
            collided = 0

        trace.node_id.append(node_id)
        trace.true_start.append(now)
        trace.local_start.append(tx_local)
        trace.slot_index.append((tx_local // self._slot_t) if use_slots else -1)
        trace.channel.append(channel)
        trace.duration.append(dur)
        trace.collided.append(collided)
        trace.acked.append(0)
        trace.confirmed.append(1 if confirmed else 0)

        nd.duty.append((now, dur))
        nd.duty_sum += dur
        win_start = end - cfg.dc_window
        duty = nd.duty
        while duty and duty[0][0] + duty[0][1] <= win_start:
            s, d = duty.popleft()
            nd.duty_sum -= d

        if confirmed:
            nd.pending_rec = rec
            # Node-side end-of-transmission RTC reading, including the
            # measured execution-time jitter of the sync procedure.
            residual = min(
                cfg.residual_max,
                max(0, round(nd.rng.gauss(cfg.residual_mean, cfg.residual_std))),
            )
            signed_residual = residual if nd.rng.random() < 0.5 else -residual
            nd.pending_residual_abs = abs(signed_residual)
            nd.pending_tx_end_local = self._local_at(nd, end) + signed_residual
            nd.pending_ts_err = (
                nd.rng.randint(-cfg.timestamp_error_max_us, cfg.timestamp_error_max_us)
                * 1000
            )
            self._push(end + cfg.rx1_delay + self._ack_toa, self._ACK_EVENT, node_id)
        else:
            self._schedule_next_tx(node_id, now)

    def _on_ack_event(self, node_id: int, now: int) -> None:
        cfg = self.config
        nd = self.nodes[node_id]
        rec = nd.pending_rec
        nd.pending_rec = -1
        if self.trace.collided[rec]:
            # ACK never sent: uplink was lost.  Slotted senders pick a
            # new slot phase so persistent same-slot pairs break up;
            # un-slotted senders (not yet synced, or clock bound grown
            # past the guard) randomize the retry instead, otherwise two
            # nodes that boot in lockstep would collide every period.
            if nd.pending_use_slots and self._max_phase > 1:
                nd.phase = nd.rng.randrange(self._max_phase)
            elif not nd.pending_use_slots:
                nd.retry_shift = nd.rng.randint(0, cfg.app_period)
        else:
            uplink_end = now - cfg.rx1_delay - self._ack_toa
            gw_ts = sync_mod.gateway_record_rx_end(uplink_end, nd.pending_ts_err)
            ack = sync_mod.SyncAck(gw_ts // 1000)
            offset = sync_mod.compute_offset(
                nd.pending_tx_end_local, ack.gateway_timestamp_ns
            )
            mis = self._local_at(nd, now) - now
            if abs(mis) > nd.max_mis_pre_sync and nd.synced:
                nd.max_mis_pre_sync = abs(mis)
            nd.corrections += offset
            nd.synced = True
            nd.last_sync_local = self._local_at(nd, now)
            # The correction is referenced to the uplink-end timestamp
            # exchange; its error budget is the execution residual plus
            # the gateway timestamping error, and the drift accrued over
            # the RX1 window until the ACK lands is folded in up front.
            nd.uncertainty_at_sync = (
                nd.pending_residual_abs
                + cfg.timestamp_error_max_us * 1000
                + drift_error(cfg.drift_bound_ppm, now - uplink_end)
            )
            nd.n_syncs += 1
            mis = self._local_at(nd, uplink_end) - uplink_end
            if abs(mis) > nd.max_mis_post_sync:
                nd.max_mis_post_sync = abs(mis)
            self.trace.acked[rec] = 1
            self.gateway_airtime += self._ack_toa
        self._schedule_next_tx(node_id, now)

    # -- reporting -------------------------------------------------------

    def metrics(self) -> Metrics:
        cfg = self.config
        trace = self.trace
        n = len(trace)
        conflicts = sum(trace.collided)
        per_node = [[0, 0] for _ in range(cfg.n_nodes)]
        steady_n = steady_c = 0
        success_airtime = 0
        warmup = cfg.warmup
        for i in range(n):
            node = trace.node_id[i]
            hit = trace.collided[i]
            per_node[node][0] += 1
            per_node[node][1] += hit
            if trace.true_start[i] >= warmup:
                steady_n += 1
                steady_c += hit
            if not hit:
                success_airtime += trace.duration[i]
        return Metrics(
            transmissions=n,
            conflicts=conflicts,
            collision_probability=(conflicts / n) if n else 0.0,
            throughput_fraction=success_airtime / cfg.duration,
            steady_transmissions=steady_n,
            steady_conflicts=steady_c,
            steady_state_collision_probability=(steady_c / steady_n)
            if steady_n
            else 0.0,
            warmup_transmissions=n - steady_n,
            warmup_conflicts=conflicts - steady_c,
            warmup_ns=warmup,
            duration_ns=cfg.duration,
            per_node=[tuple(x) for x in per_node],
        )


def run(config: ScenarioConfig) -> tuple[Trace, Metrics]:
    """Execute one scenario to its horizon.  Identical (config, seed)
    pairs produce bit-identical traces."""
    return Engine(config).run()
