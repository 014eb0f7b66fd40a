"""ACK-piggybacked clock synchronization.

The gateway timestamps the end of every received uplink and returns the
timestamp inside the ACK that opens 1 s later.  The node compares it
with its own end-of-transmission RTC reading, obtains the offset, and
steps its clock.  Between corrections the alignment degrades linearly
with the assumed worst-case crystal drift, so nodes schedule a
confirmed (ACK-requesting) uplink before the uncertainty can reach the
slot guard interval.

Radio flight time is treated as zero; the only error sources are the
gateway's bounded timestamping error (tens of microseconds) and the
node-side residual from variable execution timing (milliseconds).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

from .timebase import NS_PER_US, drift_error

#: Residual error bound of a single synchronization, measured on real
#: hardware: worst case 15 ms, average 10 ms.
MAX_RESIDUAL_ERROR_NS = 15_000_000
#: Bound on the gateway-side ACK timestamping error.
MAX_TIMESTAMP_ERROR_NS = 20 * NS_PER_US

_ACK_STRUCT = struct.Struct("<Q")


class SyncError(ValueError):
    """Contract violation in the synchronization machinery."""


class UnsynchronizedError(SyncError):
    """An operation that requires a synchronized clock was attempted early."""


@dataclass(frozen=True)
class SyncState:
    """Node-side synchronization bookkeeping.

    An unsynced node has unbounded uncertainty and must not use the
    slotted grid; it bootstraps with an ACK-requesting uplink first.
    """

    drift_bound_ppm: float
    synced: bool = False
    last_sync_local: int = 0
    uncertainty_at_sync: int = 0


@dataclass(frozen=True)
class SyncAck:
    """Gateway timestamp carried in the ACK: 8 bytes, little-endian,
    unsigned microseconds since the gateway epoch."""

    gateway_timestamp_us: int

    def __post_init__(self) -> None:
        if not 0 <= self.gateway_timestamp_us < 1 << 64:
            raise SyncError(
                f"timestamp {self.gateway_timestamp_us} not representable in 8 bytes"
            )

    @property
    def gateway_timestamp_ns(self) -> int:
        return self.gateway_timestamp_us * NS_PER_US

    def to_bytes(self) -> bytes:
        return _ACK_STRUCT.pack(self.gateway_timestamp_us)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SyncAck":
        if len(data) != 8:
            raise SyncError(f"SyncAck payload must be 8 bytes, got {len(data)}")
        return cls(_ACK_STRUCT.unpack(data)[0])


def node_record_tx_end(local_clock_reading: int) -> int:
    """Save the node's RTC reading at end of transmission for later use."""
    return local_clock_reading


def gateway_record_rx_end(t: int, timestamp_error: int) -> int:
    """Gateway-observed end-of-reception instant, quantized to 1 µs.

    ``timestamp_error`` is the simulator-drawn timestamping error and
    must respect the hardware bound.
    """
    if abs(timestamp_error) > MAX_TIMESTAMP_ERROR_NS:
        raise SyncError(
            f"timestamp error {timestamp_error} ns exceeds ±{MAX_TIMESTAMP_ERROR_NS} ns"
        )
    observed = t + timestamp_error
    # round to microsecond, half away from zero (observed is non-negative
    # in practice but keep the rule symmetric)
    sign = -1 if observed < 0 else 1
    return sign * ((abs(observed) + NS_PER_US // 2) // NS_PER_US) * NS_PER_US


def compute_offset(node_tx_timestamp: int, gateway_timestamp: int) -> int:
    """Clock offset implied by the two end-of-transmission timestamps."""
    return gateway_timestamp - node_tx_timestamp


def apply_sync(
    state: SyncState, offset: int, residual_error: int, now_local: int
) -> tuple[SyncState, int]:
    """Apply an offset correction and reset the uncertainty bookkeeping.

    Returns the new state and the correction delta the caller must fold
    into its accumulated corrections (see ``timebase.apply_correction``).
    """
    if not 0 <= residual_error <= MAX_RESIDUAL_ERROR_NS:
        raise SyncError(
            f"residual error {residual_error} ns outside [0, {MAX_RESIDUAL_ERROR_NS}]"
        )
    new_state = replace(
        state,
        synced=True,
        last_sync_local=now_local + offset,
        uncertainty_at_sync=residual_error,
    )
    return new_state, offset


def current_uncertainty(state: SyncState, now_local: int) -> int:
    """Worst-case misalignment bound at ``now_local``.

    The residual of the last sync plus drift accrued since, using the
    configured worst-case crystal tolerance.  Monotone non-decreasing
    between syncs.
    """
    if not state.synced:
        raise UnsynchronizedError("node has never synchronized")
    elapsed = max(0, now_local - state.last_sync_local)
    return state.uncertainty_at_sync + drift_error(state.drift_bound_ppm, elapsed)


def needs_resync(state: SyncState, now_local: int, guard: int) -> bool:
    """Whether the node must request an ACK to refresh its clock.

    True when unsynced or when the uncertainty bound has reached the
    guard interval (threshold inclusive).
    """
    if not state.synced:
        return True
    return current_uncertainty(state, now_local) >= guard


def max_resync_interval(
    guard: int, initial_uncertainty: int, drift_bound_ppm: float
) -> int:
    """Longest time between clock refreshes that keeps misalignment
    under the guard interval: ``(guard - u0) / drift``."""
    if guard <= initial_uncertainty:
        raise SyncError(
            f"guard {guard} ns must exceed initial uncertainty {initial_uncertainty} ns"
        )
    if drift_bound_ppm <= 0:
        raise SyncError(f"drift bound must be positive, got {drift_bound_ppm}")
    num, den = float(drift_bound_ppm).as_integer_ratio()
    # (guard - u0) / (ppm * 1e-6), rounded half away from zero
    numer = (guard - initial_uncertainty) * den * 1_000_000
    q, r = divmod(numer, num)
    if 2 * r >= num:
        q += 1
    return q
