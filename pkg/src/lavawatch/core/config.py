from __future__ import annotations

import os
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

from lavawatch.core.alerts import SeverityPolicy
from lavawatch.core.dispatch import RetryPolicy
from lavawatch.core.errors import ConfigError
from lavawatch.core.interfaces import (
    DetectParams,
    GateMode,
    HoughParams,
    HsvRange,
    MonitorConfig,
    SinkConfig,
    SinkKind,
    StructuringElement,
)

ENV_PREFIX = "LAVAWATCH_"

DEFAULTS: dict[str, str] = {
    "input.frame_interval_ms": "100",
    "input.start_timestamp_ms": "0",
    "detect.diff_threshold": "30",
    "detect.erode_w": "2",
    "detect.erode_h": "1",
    "detect.dilate_w": "4",
    "detect.dilate_h": "2",
    "detect.morph_passes": "2",
    "detect.min_blob_area": "20",
    "detect.connectivity": "8",
    "detect.color_gate": "true",
    "detect.h_lo": "139",
    "detect.h_hi": "202",
    "detect.s_lo": "0.2",
    "detect.s_hi": "1",
    "detect.v_lo": "0.3",
    "detect.v_hi": "1",
    "hough.theta_bins": "180",
    "hough.rho_resolution": "1",
    "hough.vote_threshold": "20",
    "hough.max_lines": "5",
    "alert.watch_fraction": "0.005",
    "alert.warning_fraction": "0.02",
    "alert.max_attempts": "3",
    "alert.backoff_base_sec": "1.0",
    "alert.timeout_sec": "5",
    "alert.pre_event_frames": "0",
    "monitor.enabled": "false",
    "monitor.bind": "127.0.0.1:8080",
    "monitor.username": "admin",
    "monitor.password_hash": "",
    "monitor.page_title": "lavawatch",
    "monitor.max_event_history": "256",
    "event_log": "-",
    "live": "false",
}
_SINK_FIELDS = {"kind", "url", "to", "path", "tcp"}


@dataclass(frozen=True)
class PipelineConfig:
    snapshot_dir: Path
    frames_dir: Path | None = None
    stream_path: Path | None = None
    frame_interval_ms: int = 100
    start_timestamp_ms: int = 0
    detect: DetectParams = field(default_factory=DetectParams)
    hough: HoughParams = field(default_factory=HoughParams)
    severity: SeverityPolicy = field(default_factory=SeverityPolicy)
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    sink_timeout_sec: float = 5.0
    pre_event_frames: int = 0
    sinks: tuple[SinkConfig, ...] = ()
    monitor: MonitorConfig = field(default_factory=MonitorConfig)
    event_log: str = "-"
    live: bool = False

    @classmethod
    def from_mapping(cls, values: Mapping[str, str], check_paths: bool = True) -> PipelineConfig:
        merged = {**DEFAULTS, **{k.strip(): v.strip() for k, v in values.items()}}
        frames_dir = _path_or_none(merged.get("input.frames_dir"))
        stream_path = _path_or_none(merged.get("input.stream"))
        if (frames_dir is None) == (stream_path is None):
            raise ConfigError("exactly one of input.frames_dir or input.stream must be set")
        snapshot_raw = merged.get("snapshot_dir", "").strip()
        if not snapshot_raw:
            raise ConfigError("snapshot_dir is required")
        snapshot_dir = Path(snapshot_raw)
        if check_paths:
            if frames_dir is not None and not frames_dir.is_dir():
                raise ConfigError(f"input.frames_dir does not exist: {frames_dir}")
            if stream_path is not None and not stream_path.exists():
                raise ConfigError(f"input.stream does not exist: {stream_path}")
            if not snapshot_dir.is_dir():
                raise ConfigError(f"snapshot_dir does not exist: {snapshot_dir}")

        try:
            return cls(
                snapshot_dir=snapshot_dir,
                frames_dir=frames_dir,
                stream_path=stream_path,
                frame_interval_ms=int_value(merged, "input.frame_interval_ms", minimum=1),
                start_timestamp_ms=int_value(merged, "input.start_timestamp_ms", minimum=0),
                detect=_detect_params(merged),
                hough=HoughParams(
                    theta_bins=int_value(merged, "hough.theta_bins", minimum=2),
                    rho_resolution=float_value(merged, "hough.rho_resolution", minimum=1e-6),
                    vote_threshold=int_value(merged, "hough.vote_threshold", minimum=1),
                    max_lines=int_value(merged, "hough.max_lines", minimum=1),
                ),
                severity=SeverityPolicy(
                    watch_fraction=float_value(merged, "alert.watch_fraction", minimum=1e-9),
                    warning_fraction=float_value(merged, "alert.warning_fraction", minimum=1e-9),
                ),
                retry=RetryPolicy(
                    max_attempts=int_value(merged, "alert.max_attempts", minimum=1),
                    backoff_base_sec=float_value(merged, "alert.backoff_base_sec", minimum=0.0),
                ),
                sink_timeout_sec=float_value(merged, "alert.timeout_sec", minimum=0.1),
                pre_event_frames=int_value(merged, "alert.pre_event_frames", minimum=0),
                sinks=_parse_sinks(merged),
                monitor=_monitor_config(merged),
                event_log=merged["event_log"] or "-",
                live=bool_value(merged, "live"),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def parse_key_values(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        values[key.strip()] = value.strip()
    return values


def load_config(
    path: str | Path,
    environ: Mapping[str, str] | None = None,
    check_paths: bool = True,
) -> PipelineConfig:
    config_path = Path(path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {config_path}: {exc}") from exc
    values = parse_key_values(text)
    env = os.environ if environ is None else environ
    for key in {*DEFAULTS, *values, "input.frames_dir", "input.stream", "snapshot_dir"}:
        override = env.get(env_name(key))
        if override is not None:
            values[key] = override
    return PipelineConfig.from_mapping(values, check_paths=check_paths)


def env_name(key: str) -> str:
    return ENV_PREFIX + key.upper().replace(".", "__")


def _detect_params(values: Mapping[str, str]) -> DetectParams:
    return DetectParams(
        diff_threshold=int_value(values, "detect.diff_threshold", minimum=0, maximum=255),
        erode_kernel=StructuringElement(
            int_value(values, "detect.erode_w", minimum=1),
            int_value(values, "detect.erode_h", minimum=1),
        ),
        dilate_kernel=StructuringElement(
            int_value(values, "detect.dilate_w", minimum=1),
            int_value(values, "detect.dilate_h", minimum=1),
        ),
        hsv_range=HsvRange(
            h_lo=float_value(values, "detect.h_lo", minimum=0.0),
            h_hi=float_value(values, "detect.h_hi", minimum=0.0),
            s_lo=float_value(values, "detect.s_lo", minimum=0.0),
            s_hi=float_value(values, "detect.s_hi", minimum=0.0),
            v_lo=float_value(values, "detect.v_lo", minimum=0.0),
            v_hi=float_value(values, "detect.v_hi", minimum=0.0),
        ),
        min_blob_area=int_value(values, "detect.min_blob_area", minimum=1),
        morph_passes=int_value(values, "detect.morph_passes", minimum=0),
        gate_mode=GateMode.AND if bool_value(values, "detect.color_gate") else GateMode.DIFF_ONLY,
        connectivity=int_value(values, "detect.connectivity", minimum=4),
    )


def _monitor_config(values: Mapping[str, str]) -> MonitorConfig:
    host, port = parse_host_port(values["monitor.bind"], "monitor.bind")
    return MonitorConfig(
        bind_host=host,
        bind_port=port,
        username=values["monitor.username"],
        password_hash=values["monitor.password_hash"],
        page_title=values["monitor.page_title"],
        max_event_history=int_value(values, "monitor.max_event_history", minimum=1),
        enabled=bool_value(values, "monitor.enabled"),
    )


def _parse_sinks(values: Mapping[str, str]) -> tuple[SinkConfig, ...]:
    grouped: dict[str, dict[str, str]] = {}
    for key, value in values.items():
        if not key.startswith("sink."):
            continue
        name, _, attr = key[len("sink.") :].rpartition(".")
        if not name or attr not in _SINK_FIELDS:
            raise ConfigError(f"unknown sink key: {key}")
        grouped.setdefault(name, {})[attr] = value
    sinks: list[SinkConfig] = []
    for name in sorted(grouped):
        attrs = grouped[name]
        try:
            kind = SinkKind(attrs.get("kind", "").strip().lower())
        except ValueError as exc:
            raise ConfigError(f"sink.{name}.kind must be webhook, sms or serial") from exc
        sink = SinkConfig(
            name=name,
            kind=kind,
            url=attrs.get("url") or None,
            to=attrs.get("to") or None,
            path=attrs.get("path") or None,
            tcp=attrs.get("tcp") or None,
        )
        _validate_sink(sink)
        sinks.append(sink)
    return tuple(sinks)


def _validate_sink(sink: SinkConfig) -> None:
    prefix = f"sink.{sink.name}"
    if sink.kind in (SinkKind.WEBHOOK, SinkKind.SMS) and not sink.url:
        raise ConfigError(f"{prefix}.url is required for {sink.kind.value} sinks")
    if sink.kind == SinkKind.SMS and not sink.to:
        raise ConfigError(f"{prefix}.to is required for sms sinks")
    if sink.kind == SinkKind.SERIAL:
        if (sink.path is None) == (sink.tcp is None):
            raise ConfigError(f"{prefix} needs exactly one of path or tcp")
        if sink.tcp is not None:
            parse_host_port(sink.tcp, f"{prefix}.tcp")


def parse_host_port(raw: str, name: str) -> tuple[str, int]:
    host, sep, port_text = raw.strip().rpartition(":")
    if not sep or not host:
        raise ConfigError(f"{name} must look like host:port")
    try:
        port = int(port_text)
    except ValueError as exc:
        raise ConfigError(f"{name} port must be an integer") from exc
    if not 1 <= port <= 65535:
        raise ConfigError(f"{name} port must be in 1-65535")
    return host.strip("[]"), port


def _path_or_none(raw: str | None) -> Path | None:
    if raw is None or not raw.strip():
        return None
    return Path(raw.strip())


def int_value(
    values: Mapping[str, str],
    name: str,
    minimum: int,
    maximum: int | None = None,
) -> int:
    try:
        value = int(values[name])
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer") from exc
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{name} must be <= {maximum}")
    return value


def float_value(values: Mapping[str, str], name: str, minimum: float) -> float:
    try:
        value = float(values[name])
    except ValueError as exc:
        raise ConfigError(f"{name} must be a number") from exc
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}")
    return value


def bool_value(values: Mapping[str, str], name: str) -> bool:
    normalized = values[name].strip().lower()
    if normalized in {"1", "true", "yes", "on"}:
        return True
    if normalized in {"0", "false", "no", "off"}:
        return False
    raise ConfigError(f"{name} must be one of: 1,0,true,false,yes,no,on,off")
