"""Channel-access policies and slot geometry.

Pure ALOHA transmits the moment data is ready.  The slotted overlay
divides time into slots of width T = T_r + T_b, where T_r covers the
uplink airtime, the RX1 delay and the ACK airtime, and T_b is the guard
absorbing sync residual plus inter-sync drift.  Slot boundaries form a
single global grid (multiples of T in gateway time) that nodes locate
through their corrected RTCs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .phy import RadioProfile, time_on_air
from .sync import UnsynchronizedError
from .timebase import drift_error

#: Peak channel utilization of the two access schemes: G·e^(-2G) tops
#: out at 1/(2e), G·e^(-G) at 1/e.
PURE_ALOHA_PEAK = 1.0 / (2.0 * math.e)
SLOTTED_ALOHA_PEAK = 1.0 / math.e


class MacError(ValueError):
    """Invalid MAC parameterization."""


@dataclass(frozen=True)
class SlotPlan:
    """Slot geometry: transmission window, guard, full width."""

    t_r: int
    t_b: int
    t: int

    def __post_init__(self) -> None:
        if self.t_r <= 0 or self.t_b <= 0:
            raise MacError("t_r and t_b must be positive")
        if self.t < self.t_r + self.t_b:
            raise MacError("slot width t must cover t_r + t_b")


@dataclass(frozen=True)
class BackoffPolicy:
    """Collision recovery for the slotted overlay: on a missed ACK the
    node re-randomizes its slot phase over the slots of its period."""

    max_phase_slots: int = 1

    def __post_init__(self) -> None:
        if self.max_phase_slots < 1:
            raise MacError("max_phase_slots must be >= 1")


@dataclass(frozen=True)
class MacPolicy:
    """Either pure ALOHA or the slotted overlay with its geometry."""

    variant: str  # "pure" | "slotted"
    plan: Optional[SlotPlan] = None
    backoff: Optional[BackoffPolicy] = None

    def __post_init__(self) -> None:
        if self.variant not in ("pure", "slotted"):
            raise MacError(f"unknown MAC variant {self.variant!r}")
        if self.variant == "slotted" and self.plan is None:
            raise MacError("slotted policy requires a SlotPlan")

    @property
    def is_slotted(self) -> bool:
        return self.variant == "slotted"


def plan_slot(
    uplink: RadioProfile,
    ack: RadioProfile,
    rx1_delay: int,
    guard: int,
    rounding: int = 100_000_000,
) -> SlotPlan:
    """Size a slot for the given uplink/ACK profiles.

    ``t_r`` is uplink airtime + RX1 delay + ACK airtime; the full width
    adds the guard and is rounded up to a multiple of ``rounding``.
    """
    if rx1_delay <= 0 or guard <= 0 or rounding <= 0:
        raise MacError("rx1_delay, guard and rounding must be positive")
    t_r = time_on_air(uplink) + rx1_delay + time_on_air(ack)
    raw = t_r + guard
    t = -(-raw // rounding) * rounding
    return SlotPlan(t_r=t_r, t_b=guard, t=t)


def required_guard(
    initial_uncertainty: int, drift_bound_ppm: float, resync_interval: int
) -> int:
    """Guard needed to absorb the sync residual plus drift accrued over
    one resync interval.  Inverse of ``sync.max_resync_interval``."""
    if initial_uncertainty <= 0 or drift_bound_ppm <= 0 or resync_interval < 0:
        raise MacError("inputs must be positive")
    return initial_uncertainty + drift_error(drift_bound_ppm, resync_interval)


def next_tx_time(
    policy: MacPolicy, ready_at_local: int, phase: int = 0, *, synced: bool = True
) -> int:
    """Earliest permitted transmission start for data ready at
    ``ready_at_local`` (node-local time).

    Pure ALOHA transmits at will.  The slotted overlay aligns to the
    next grid boundary, shifted forward by the node's backoff phase in
    whole slots; it is only usable once the clock is synchronized.
    """
    if not policy.is_slotted:
        return ready_at_local
    if not synced:
        raise UnsynchronizedError("slotted access requires a synchronized clock")
    t = policy.plan.t
    return (-(-ready_at_local // t) + phase) * t


def throughput(policy_kind: str, offered_load_g: float) -> float:
    """Analytic ALOHA channel throughput at offered load G."""
    if offered_load_g < 0:
        raise MacError(f"offered load must be non-negative, got {offered_load_g}")
    if policy_kind == "pure":
        return offered_load_g * math.exp(-2.0 * offered_load_g)
    if policy_kind == "slotted":
        return offered_load_g * math.exp(-offered_load_g)
    raise MacError(f"unknown policy kind {policy_kind!r}")


def max_node_dc(policy_kind: str, n_nodes: int, regulatory_cap: float = 0.01) -> float:
    """Maximum per-node duty cycle: flat at the regulatory cap for small
    networks, then the analytic channel ceiling shared across nodes."""
    if n_nodes < 1:
        raise MacError(f"n_nodes must be >= 1, got {n_nodes}")
    if not 0.0 < regulatory_cap <= 1.0:
        raise MacError(f"regulatory cap must be in (0, 1], got {regulatory_cap}")
    if policy_kind == "pure":
        peak = PURE_ALOHA_PEAK
    elif policy_kind == "slotted":
        peak = SLOTTED_ALOHA_PEAK
    else:
        raise MacError(f"unknown policy kind {policy_kind!r}")
    return min(regulatory_cap, peak / n_nodes)
