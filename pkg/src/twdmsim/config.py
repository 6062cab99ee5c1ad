"""Simulation parameters: fixed link constants, run configuration, config file parsing.

All times inside the library are integer nanoseconds. Config files use the
human units given in the key names (ms, s, us); conversion happens here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, fields, replace

# Link-layer constants. The feeder line rate is 1 Gbps per wavelength, which
# makes 1 bit == 1 ns and keeps all transmission times exact integers.
FEEDER_RATE_BPS = 1_000_000_000
ACCESS_RATE_BPS = 100_000_000
PACKET_BITS = 12_000          # fixed 1500 B frames
PACKET_NS = 12_000            # at feeder rate
GATE_NS = 512                 # 64 B control message at feeder rate
REPORT_NS = 512
GATE_PROC_NS = 35
GUARD_NS = 2_000              # burst-mode receiver guard between US bursts
BUFFER_BITS = 10_000_000      # per-queue tail-drop limit (OLT and ONU side)
SOURCES_PER_STREAM = 32

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000

DS_SCHEDULERS = ("eotx-novm", "late-only-baseline")
US_SCHEDULERS = ("novm-like", "roundrobin-firstfit")
SLEEP_ACCOUNTING = ("overhead", "full")


class ConfigError(ValueError):
    """Raised for unreadable, unknown or out-of-range configuration input."""


@dataclass(frozen=True)
class SimConfig:
    """One experiment description; `uf_sweep` etc. expand to scenarios."""

    n_onus: int = 16
    n_wavelengths: int = 2
    uf: float | None = None
    uf_sweep: tuple[float, ...] = ()
    d_ub_ms: float = 15.0
    t_rtt_ms: float = 0.2
    t_sw_ms: float = 1.0
    t_t_us: float = 1.0
    horizon_s: float = 20.0
    replications: int = 5
    seed: int = 1
    ds_scheduler: str = "eotx-novm"
    us_scheduler: str = "novm-like"
    sleep_accounting: str = "overhead"
    d_ub_ms_sweep: tuple[float, ...] = ()
    t_sw_ms_sweep: tuple[float, ...] = ()
    t_rtt_ms_sweep: tuple[float, ...] = ()
    n_onus_sweep: tuple[int, ...] = ()
    ds_scheduler_sweep: tuple[str, ...] = ()

    # Derived integer-ns views used by the engine.
    @property
    def d_ub_ns(self) -> int:
        return round(self.d_ub_ms * NS_PER_MS)

    @property
    def t_rtt_ns(self) -> int:
        return round(self.t_rtt_ms * NS_PER_MS)

    @property
    def t_sw_ns(self) -> int:
        return round(self.t_sw_ms * NS_PER_MS)

    @property
    def t_t_ns(self) -> int:
        return round(self.t_t_us * NS_PER_US)

    @property
    def horizon_ns(self) -> int:
        return round(self.horizon_s * NS_PER_S)

    def validate(self) -> None:
        checks = [
            ("n_onus", self.n_onus >= 1),
            ("n_wavelengths", self.n_wavelengths >= 1),
            ("d_ub_ms", self.d_ub_ms > 0),
            ("t_rtt_ms", self.t_rtt_ms > 0),
            ("t_sw_ms", self.t_sw_ms >= 0),
            ("t_t_us", self.t_t_us >= 0),
            ("horizon_s", self.horizon_s >= 0),
            ("replications", self.replications >= 1),
            ("ds_scheduler", self.ds_scheduler in DS_SCHEDULERS),
            ("us_scheduler", self.us_scheduler in US_SCHEDULERS),
            ("sleep_accounting", self.sleep_accounting in SLEEP_ACCOUNTING),
        ]
        for key, ok in checks:
            if not ok:
                raise ConfigError(f"invalid value for '{key}': {getattr(self, key)!r}")
        for key, values in [("uf", [self.uf] if self.uf is not None else []),
                            ("uf_sweep", self.uf_sweep)]:
            for v in values:
                if not 0.0 < v < 1.0:
                    raise ConfigError(f"invalid value for '{key}': {v!r} (need 0 < uf < 1)")
        for key, values in [("d_ub_ms_sweep", self.d_ub_ms_sweep),
                            ("t_sw_ms_sweep", self.t_sw_ms_sweep),
                            ("t_rtt_ms_sweep", self.t_rtt_ms_sweep)]:
            for v in values:
                if v <= 0 and key != "t_sw_ms_sweep":
                    raise ConfigError(f"invalid value for '{key}': {v!r}")
        for v in self.n_onus_sweep:
            if v < 1:
                raise ConfigError(f"invalid value for 'n_onus_sweep': {v!r}")
        for v in self.ds_scheduler_sweep:
            if v not in DS_SCHEDULERS:
                raise ConfigError(f"invalid value for 'ds_scheduler_sweep': {v!r}")

    def uf_points(self) -> tuple[float, ...]:
        if self.uf_sweep:
            return self.uf_sweep
        if self.uf is not None:
            return (self.uf,)
        # Default experiment: the load axis used throughout the result curves.
        return tuple(round(0.1 * i, 10) for i in range(1, 9))

    def scenarios(self) -> list["SimConfig"]:
        """Cartesian expansion of all sweep axes into single-point configs."""
        d_ubs = self.d_ub_ms_sweep or (self.d_ub_ms,)
        t_sws = self.t_sw_ms_sweep or (self.t_sw_ms,)
        t_rtts = self.t_rtt_ms_sweep or (self.t_rtt_ms,)
        n_onus = self.n_onus_sweep or (self.n_onus,)
        scheds = self.ds_scheduler_sweep or (self.ds_scheduler,)
        out = []
        for sched, n, d_ub, t_sw, t_rtt, uf in itertools.product(
                scheds, n_onus, d_ubs, t_sws, t_rtts, self.uf_points()):
            out.append(replace(
                self, uf=uf, uf_sweep=(), d_ub_ms=d_ub, t_sw_ms=t_sw,
                t_rtt_ms=t_rtt, n_onus=n, ds_scheduler=sched,
                d_ub_ms_sweep=(), t_sw_ms_sweep=(), t_rtt_ms_sweep=(),
                n_onus_sweep=(), ds_scheduler_sweep=()))
        return out


_INT_KEYS = {"n_onus", "n_wavelengths", "replications", "seed"}
_FLOAT_KEYS = {"uf", "d_ub_ms", "t_rtt_ms", "t_sw_ms", "t_t_us", "horizon_s"}
_STR_KEYS = {"ds_scheduler", "us_scheduler", "sleep_accounting"}
_FLOAT_LIST_KEYS = {"uf_sweep", "d_ub_ms_sweep", "t_sw_ms_sweep", "t_rtt_ms_sweep"}
_INT_LIST_KEYS = {"n_onus_sweep"}
_STR_LIST_KEYS = {"ds_scheduler_sweep"}


def _parse_number_list(key: str, text: str, cast) -> tuple:
    """`a..b step c` ranges or comma-separated values."""
    text = text.strip()
    if ".." in text:
        try:
            span, _, step_s = text.partition("step")
            lo_s, _, hi_s = span.partition("..")
            lo, hi, step = float(lo_s), float(hi_s), float(step_s)
        except ValueError as exc:
            raise ConfigError(f"bad range for '{key}': {text!r}") from exc
        if step <= 0 or hi < lo:
            raise ConfigError(f"bad range for '{key}': {text!r}")
        vals = []
        v = lo
        while v <= hi + 1e-9:
            vals.append(round(v, 10))
            v += step
        return tuple(cast(x) for x in vals)
    try:
        return tuple(cast(p.strip()) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for '{key}': {text!r}") from exc


def parse_config_text(text: str) -> SimConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        try:
            if key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _STR_KEYS:
                values[key] = val
            elif key in _FLOAT_LIST_KEYS:
                values[key] = _parse_number_list(key, val, float)
            elif key in _INT_LIST_KEYS:
                values[key] = _parse_number_list(key, val, lambda s: int(float(s)))
            elif key in _STR_LIST_KEYS:
                values[key] = tuple(p.strip() for p in val.split(",") if p.strip())
            else:
                raise ConfigError(f"unknown key '{key}'")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"type mismatch for '{key}': {val!r}") from exc
    cfg = SimConfig(**values)
    cfg.validate()
    return cfg


def parse_config(path: str) -> SimConfig:
    """Parse a `key = value` config file; unknown keys and bad values raise ConfigError."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    return parse_config_text(text)


def us_str(ns: int) -> str:
    """Render an ns time as microseconds for dumps and traces."""
    if ns % NS_PER_US == 0:
        return str(ns // NS_PER_US)
    return f"{ns / NS_PER_US:.3f}".rstrip("0").rstrip(".")
