"""Scenario configuration: validation, defaults, and the flat config-file format.

The scenario file is UTF-8 ``key = value`` lines with ``#`` comments.  Keys
are exactly the SimConfig field names.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, asdict
from pathlib import Path


class ConfigError(ValueError):
    """Raised for any invalid or unparseable configuration value."""


SCHEDULERS = ("wsss", "mesf", "random")
CHECKPOINT_POLICIES = ("tcc", "sync", "independent")
GROWTH_POLICIES = ("triangular", "geometric")


@dataclass(frozen=True)
class SimConfig:
    # monitoring / detection
    base_interval: int = 10          # pre-set initial monitoring interval
    ft_interval: int = 10            # initial fault-tolerance interval
    sla_bound: int = 100             # default per-task SLA delay bound D
    delay_low_frac: float = 0.25     # delay class thresholds, fractions of D
    delay_normal_frac: float = 1.0
    delay_high_frac: float = 2.0
    suspect_threshold: int = 3       # consecutive suspect rounds before replacement
    migration_threshold: int = 5     # per-job restarts tolerated before job migration
    detect_prob: float = 0.88
    propagation_prob: float = 0.0
    high_delay_fallback: bool = True  # missed detections surface as high delay
    # cost model, ticks
    checkpoint_write_cost: int = 1
    restart_cost: int = 2
    migration_cost: int = 2          # per VN moved in a job migration
    monitor_cost: int = 0            # VN time charged per monitor round
    preeval_cost: float = 0.03       # mesf pre-evaluation, per candidate server
    indep_mean_gap: int = 10         # mean gap of independent checkpointing
    # policies
    scheduler: str = "wsss"
    checkpoint_policy: str = "tcc"
    interval_growth: str = "triangular"
    # topology
    server_count: int = 4
    server_capacity: int = 4
    latency_mean_min: float = 5.0    # per-server mean extra delay, drawn uniformly
    latency_mean_max: float = 15.0
    latency_sigma: float = 3.0
    # workload
    task_count: int = 8
    job_count: int = 2
    demand_min: int = 400
    demand_max: int = 600
    # fault campaign
    byzantine_faults: int = 0
    crash_faults: int = 0
    delay_faults: int = 0
    delay_magnitude: float = 1.2     # spike size as a fraction of D
    fault_window_start: int = 30
    fault_window_end: int = 150
    # run control
    seed: int = 42
    horizon: int = 1000
    trace_path: str = ""             # optional utilization trace scaling demands
    trace_period: int = 300


_BOOL_TOKENS = {"true": True, "false": False, "1": True, "0": False,
                "yes": True, "no": False}


def _coerce(key: str, raw, target_type):
    if isinstance(raw, target_type) and not (target_type is int and isinstance(raw, bool)):
        return raw
    text = str(raw).strip()
    try:
        if target_type is bool:
            return _BOOL_TOKENS[text.lower()]
        if target_type is int:
            return int(text)
        if target_type is float:
            return float(text)
        return text
    except (ValueError, KeyError):
        raise ConfigError(f"{key}: cannot parse {raw!r} as {target_type.__name__}") from None


def validate_config(raw: dict) -> SimConfig:
    """Build a validated SimConfig from a raw key-value mapping.

    Fills defaults for missing keys.  Every rejection names the offending
    key.  Validating an already-valid config's dict form returns an equal
    config (idempotence).
    """
    known = {f.name: f.type for f in fields(SimConfig)}
    type_map = {"int": int, "float": float, "str": str, "bool": bool}
    values = {}
    for key, raw_value in raw.items():
        if key not in known:
            raise ConfigError(f"unknown config key: {key}")
        values[key] = _coerce(key, raw_value, type_map[known[key]])
    cfg = SimConfig(**values)

    def positive(name):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{name} must be positive")

    def non_negative(name):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"{name} must be >= 0")

    def probability(name):
        if not 0.0 <= getattr(cfg, name) <= 1.0:
            raise ConfigError(f"{name} out of range [0, 1]")

    for name in ("base_interval", "ft_interval", "sla_bound", "suspect_threshold",
                 "migration_threshold", "server_count", "server_capacity",
                 "task_count", "job_count", "demand_min", "horizon",
                 "indep_mean_gap", "trace_period"):
        positive(name)
    for name in ("checkpoint_write_cost", "restart_cost", "migration_cost",
                 "monitor_cost", "byzantine_faults", "crash_faults", "delay_faults",
                 "fault_window_start", "latency_sigma", "delay_magnitude",
                 "preeval_cost"):
        non_negative(name)
    for name in ("detect_prob", "propagation_prob"):
        probability(name)
    if cfg.ft_interval < cfg.base_interval:
        raise ConfigError("ft_interval must be >= base_interval")
    if not (0 < cfg.delay_low_frac < cfg.delay_normal_frac < cfg.delay_high_frac):
        raise ConfigError("delay_low_frac/delay_normal_frac/delay_high_frac must be strictly increasing and positive")
    if cfg.demand_max < cfg.demand_min:
        raise ConfigError("demand_max must be >= demand_min")
    if cfg.latency_mean_max < cfg.latency_mean_min or cfg.latency_mean_min < 0:
        raise ConfigError("latency_mean_min/latency_mean_max must be a non-negative non-decreasing pair")
    if cfg.fault_window_end <= cfg.fault_window_start:
        raise ConfigError("fault_window_end must exceed fault_window_start")
    if (cfg.byzantine_faults or cfg.crash_faults or cfg.delay_faults) \
            and cfg.fault_window_end >= cfg.horizon:
        raise ConfigError("fault_window_end must be below horizon")
    if cfg.scheduler not in SCHEDULERS:
        raise ConfigError(f"scheduler must be one of {SCHEDULERS}")
    if cfg.checkpoint_policy not in CHECKPOINT_POLICIES:
        raise ConfigError(f"checkpoint_policy must be one of {CHECKPOINT_POLICIES}")
    if cfg.interval_growth not in GROWTH_POLICIES:
        raise ConfigError(f"interval_growth must be one of {GROWTH_POLICIES}")
    if cfg.job_count > cfg.task_count:
        raise ConfigError("job_count must not exceed task_count")
    return cfg


def config_to_dict(cfg: SimConfig) -> dict:
    return asdict(cfg)


def parse_config_file(path: str | Path) -> dict:
    """Parse a flat ``key = value`` scenario file into a raw dict."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key}")
        raw[key] = value
    return raw


def load_config(path: str | Path, overrides: dict | None = None) -> SimConfig:
    raw = parse_config_file(path)
    if overrides:
        raw.update(overrides)
    return validate_config(raw)
