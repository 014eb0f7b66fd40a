"""Scenario files: INI-style sections with ``key = value`` entries.

All durations accept human-readable units (ns/us/ms/s/min/h/d) and are
normalized to integer nanoseconds.  Fractions accept either a plain
number ("0.0056") or a percentage ("0.56 %").  Unknown sections or keys
are a hard error so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import re
from typing import Optional

from .engine import ScenarioConfig, SimConfigError
from .mac import BackoffPolicy, MacPolicy, plan_slot
from .phy import RadioProfile


class ConfigError(ValueError):
    """Malformed scenario file or invalid value."""


_UNIT_NS = {
    "ns": 1,
    "us": 1_000,
    "µs": 1_000,
    "ms": 1_000_000,
    "s": 1_000_000_000,
    "sec": 1_000_000_000,
    "min": 60_000_000_000,
    "h": 3_600_000_000_000,
    "d": 86_400_000_000_000,
}

_DURATION_RE = re.compile(r"^\s*([0-9]+(?:\.[0-9]+)?)\s*([a-zµ]+)\s*$")


def parse_duration(text: str) -> int:
    """Parse e.g. '400 ms', '1.5 h', '30s' into integer nanoseconds."""
    m = _DURATION_RE.match(text.lower())
    if not m:
        raise ConfigError(f"cannot parse duration {text!r} (expected '<number> <unit>')")
    value, unit = m.groups()
    if unit not in _UNIT_NS:
        raise ConfigError(f"unknown duration unit {unit!r} in {text!r}")
    scale = _UNIT_NS[unit]
    if "." in value:
        ns = round(float(value) * scale)
    else:
        ns = int(value) * scale
    return ns


def parse_fraction(text: str) -> float:
    """Parse '1 %', '0.56%' or a bare fraction like '0.01'."""
    t = text.strip()
    if t.endswith("%"):
        return float(t[:-1].strip()) / 100.0
    return float(t)


def parse_range(text: str) -> tuple[float, float]:
    """Parse 'low .. high' (or a single number meaning a degenerate range)."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return float(lo), float(hi)
    v = float(text)
    return v, v


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"cannot parse boolean {text!r}")


_BANDWIDTH_RE = re.compile(r"^\s*([0-9]+)\s*(k?hz)?\s*$", re.IGNORECASE)


def parse_bandwidth(text: str) -> int:
    m = _BANDWIDTH_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse bandwidth {text!r}")
    value = int(m.group(1))
    unit = (m.group(2) or "hz").lower()
    return value * 1000 if unit == "khz" else value


def parse_coding_rate(text: str) -> int:
    """Accept '4/5'..'4/8' or the bare index 1..4."""
    t = text.strip()
    if "/" in t:
        num, den = t.split("/", 1)
        if num.strip() != "4":
            raise ConfigError(f"coding rate numerator must be 4 in {text!r}")
        index = int(den) - 4
    else:
        index = int(t)
    if not 1 <= index <= 4:
        raise ConfigError(f"coding rate {text!r} out of range 4/5..4/8")
    return index


_SCENARIO_KEYS = {
    "n_nodes",
    "app_period",
    "jitter",
    "n_channels",
    "channel_selection",
    "drift_ppm",
    "initial_offset",
    "confirmed_uplinks",
    "duty_cycle_cap",
    "dc_window",
    "duration",
    "warmup",
    "seed",
}
_RADIO_KEYS = {
    "spreading_factor",
    "bandwidth",
    "coding_rate",
    "preamble_symbols",
    "payload_bytes",
    "explicit_header",
    "crc",
    "low_data_rate_optimize",
}
_MAC_KEYS = {"policy", "rx1_delay", "guard", "slot_rounding", "max_phase_slots"}
_SYNC_KEYS = {
    "drift_bound_ppm",
    "residual_mean",
    "residual_std",
    "residual_max",
    "timestamp_error_max",
}
_SECTIONS = {
    "scenario": _SCENARIO_KEYS,
    "uplink": _RADIO_KEYS,
    "ack": _RADIO_KEYS,
    "mac": _MAC_KEYS,
    "sync": _SYNC_KEYS,
}

DEFAULT_SCENARIO = """\
[scenario]
n_nodes = 20
app_period = 30 s
jitter = 0 s
n_channels = 3
channel_selection = fixed
drift_ppm = 20 .. 80
initial_offset = 5 s
confirmed_uplinks = all
duty_cycle_cap = 1 %
dc_window = 1 h
duration = 1 d
warmup = 1 h

[uplink]
spreading_factor = 7
bandwidth = 125 kHz
coding_rate = 4/5
preamble_symbols = 6
payload_bytes = 101
explicit_header = true
crc = true
low_data_rate_optimize = false

[ack]
spreading_factor = 7
bandwidth = 125 kHz
coding_rate = 4/5
preamble_symbols = 6
payload_bytes = 13
explicit_header = true
crc = true
low_data_rate_optimize = false

[mac]
policy = slotted
rx1_delay = 1 s
guard = 400 ms
slot_rounding = 100 ms
max_phase_slots = auto

[sync]
drift_bound_ppm = 80
residual_mean = 10 ms
residual_std = 2.5 ms
residual_max = 15 ms
timestamp_error_max = 19 us
"""


def _read_ini(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), strict=True
    )
    try:
        parser.read_file(io.StringIO(text))
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario file: {exc}") from exc
    return parser


def _check_keys(parser: configparser.ConfigParser) -> None:
    problems = []
    for section in parser.sections():
        if section not in _SECTIONS:
            problems.append(f"unknown section [{section}]")
            continue
        for key in parser[section]:
            if key not in _SECTIONS[section]:
                problems.append(f"unknown key {key!r} in [{section}]")
    if problems:
        raise ConfigError("; ".join(problems))


def load_scenario(
    text: str,
    *,
    seed: Optional[int] = None,
    duration: Optional[int] = None,
    warmup: Optional[int] = None,
    policy: Optional[str] = None,
) -> ScenarioConfig:
    """Build a ScenarioConfig from scenario text plus CLI overrides.

    Missing keys take the documented defaults; the seed must come from
    either the file or the override.
    """
    defaults = _read_ini(DEFAULT_SCENARIO)
    parser = _read_ini(text)
    _check_keys(parser)
    merged = {}
    for section, keys in _SECTIONS.items():
        merged[section] = dict(defaults[section]) if defaults.has_section(section) else {}
        if parser.has_section(section):
            merged[section].update(parser[section])

    sc = merged["scenario"]
    mc = merged["mac"]
    sy = merged["sync"]

    try:
        uplink = _radio_profile_from_dict(merged["uplink"])
        ack = _radio_profile_from_dict(merged["ack"])
        policy_name = (policy or mc["policy"]).strip().lower()
        if policy_name not in ("pure", "slotted"):
            raise ConfigError(f"unknown MAC policy {policy_name!r}")
        rx1_delay = parse_duration(mc["rx1_delay"])
        guard = parse_duration(mc["guard"])
        app_period = parse_duration(sc["app_period"])
        if policy_name == "slotted":
            plan = plan_slot(
                uplink, ack, rx1_delay, guard, parse_duration(mc["slot_rounding"])
            )
            raw_phase = mc["max_phase_slots"].strip().lower()
            if raw_phase == "auto":
                max_phase = max(1, app_period // plan.t)
            else:
                max_phase = int(raw_phase)
            mac_policy = MacPolicy(
                "slotted", plan=plan, backoff=BackoffPolicy(max_phase_slots=max_phase)
            )
        else:
            mac_policy = MacPolicy("pure")

        seed_text = sc.get("seed")
        if seed is None:
            if seed_text is None:
                raise ConfigError("seed is mandatory: set it in [scenario] or via --seed")
            seed = int(seed_text)

        config = ScenarioConfig(
            n_nodes=int(sc["n_nodes"]),
            app_period=app_period,
            jitter=parse_duration(sc["jitter"]),
            n_channels=int(sc["n_channels"]),
            channel_selection=sc["channel_selection"].strip(),
            drift_ppm_range=parse_range(sc["drift_ppm"]),
            initial_offset_max=parse_duration(sc["initial_offset"]),
            confirmed_mode=_confirmed_mode(sc["confirmed_uplinks"]),
            duty_cycle_cap=parse_fraction(sc["duty_cycle_cap"]),
            dc_window=parse_duration(sc["dc_window"]),
            duration=duration if duration is not None else parse_duration(sc["duration"]),
            warmup=warmup if warmup is not None else parse_duration(sc["warmup"]),
            seed=seed,
            uplink_profile=uplink,
            ack_profile=ack,
            policy=mac_policy,
            rx1_delay=rx1_delay,
            drift_bound_ppm=float(sy["drift_bound_ppm"]),
            residual_mean=parse_duration(sy["residual_mean"]),
            residual_std=parse_duration(sy["residual_std"]),
            residual_max=parse_duration(sy["residual_max"]),
            timestamp_error_max_us=parse_duration(sy["timestamp_error_max"]) // 1000,
        )
    except (ValueError, KeyError) as exc:
        if isinstance(exc, (ConfigError, SimConfigError)):
            raise
        raise ConfigError(str(exc)) from exc
    config.validate()
    return config


def _confirmed_mode(text: str) -> str:
    mode = text.strip().lower()
    if mode not in ("all", "on-demand", "none"):
        raise ConfigError(f"unknown confirmed_uplinks mode {mode!r}")
    return mode


def _radio_profile_from_dict(values: dict) -> RadioProfile:
    return RadioProfile(
        spreading_factor=int(values["spreading_factor"]),
        bandwidth_hz=parse_bandwidth(values["bandwidth"]),
        coding_rate_index=parse_coding_rate(values["coding_rate"]),
        preamble_symbols=int(values["preamble_symbols"]),
        payload_bytes=int(values["payload_bytes"]),
        explicit_header=parse_bool(values["explicit_header"]),
        crc_enabled=parse_bool(values["crc"]),
        low_data_rate_optimize=parse_bool(values["low_data_rate_optimize"]),
    )


def load_scenario_file(path: str, **overrides) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return load_scenario(fh.read(), **overrides)


def config_digest(config: ScenarioConfig) -> str:
    """Stable digest of a scenario, for summary provenance lines."""
    return hashlib.sha256(repr(config).encode("utf-8")).hexdigest()[:16]
