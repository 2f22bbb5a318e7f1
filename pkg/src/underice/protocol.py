"""Telemetry wire protocol, version 1.

Newline-delimited JSON records over any ordered reliable byte stream.
Server to client: telemetry records {"kind", "seq", "t", "payload"} with
kind one of hello | config_summary | state | measurement | event. Client
to server: command records {"kind", "seq", ...} with kind one of
winch_slider | rov_thrust | estop | estop_reset | pump_power.

Decoding is strict about kinds and required fields but ignores unknown
fields inside known kinds, so older clients survive newer servers. A
malformed line is an error for that line only, never for the stream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

PROTOCOL_VERSION = 1

TELEMETRY_KINDS = frozenset(
    {"hello", "config_summary", "state", "measurement", "event"})
COMMAND_KINDS = frozenset(
    {"winch_slider", "rov_thrust", "estop", "estop_reset", "pump_power"})


class ProtocolError(ValueError):
    """One bad record; carries the byte offset when known."""

    def __init__(self, reason: str, offset: int = 0):
        self.reason = reason
        self.offset = offset
        super().__init__(reason)


@dataclass(frozen=True)
class TelemetryMessage:
    kind: str
    seq: int
    time: float
    payload: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CommandMessage:
    kind: str
    seq: int
    slider: int | None = None
    axes: tuple[float, float, float, float] | None = None
    on: bool | None = None


def hello_message(seq: int, scenario_name: str = "") -> TelemetryMessage:
    return TelemetryMessage("hello", seq, 0.0, {
        "v": PROTOCOL_VERSION,
        "server": "underice",
        "scenario": scenario_name,
    })


def encode(message: TelemetryMessage | CommandMessage) -> str:
    """One newline-terminated record; no newlines inside."""
    if isinstance(message, TelemetryMessage):
        record = {"kind": message.kind, "seq": message.seq,
                  "t": message.time, "payload": message.payload}
    else:
        record = {"kind": message.kind, "seq": message.seq}
        if message.kind == "winch_slider":
            record["value"] = message.slider
        elif message.kind == "rov_thrust":
            record["axes"] = list(message.axes)
        elif message.kind == "pump_power":
            record["on"] = message.on
    return json.dumps(record, separators=(",", ":")) + "\n"


def _field(obj: dict, name: str, kinds: tuple[type, ...]):
    if name not in obj:
        raise ProtocolError(f"missing field {name!r}")
    value = obj[name]
    if not isinstance(value, kinds):
        raise ProtocolError(f"field {name!r} has wrong type")
    return value


def decode(line: str) -> TelemetryMessage | CommandMessage:
    """Strict parse of one record; raises ProtocolError, never kills a stream."""
    stripped = line.strip()
    if not stripped:
        raise ProtocolError("empty record")
    try:
        obj = json.loads(stripped)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"not valid JSON: {exc.msg}", exc.pos) from exc
    if not isinstance(obj, dict):
        raise ProtocolError("record is not an object")

    kind = _field(obj, "kind", (str,))
    seq = int(_field(obj, "seq", (int,)))

    if kind in TELEMETRY_KINDS:
        t = float(_field(obj, "t", (int, float)))
        payload = obj.get("payload", {})
        if not isinstance(payload, dict):
            raise ProtocolError("field 'payload' has wrong type")
        return TelemetryMessage(kind, seq, t, payload)

    if kind in COMMAND_KINDS:
        if kind == "winch_slider":
            return CommandMessage(kind, seq,
                                  slider=int(_field(obj, "value", (int,))))
        if kind == "rov_thrust":
            axes = _field(obj, "axes", (list,))
            if len(axes) != 4 or not all(isinstance(a, (int, float)) for a in axes):
                raise ProtocolError("field 'axes' must be 4 numbers")
            clamped = tuple(max(-1.0, min(1.0, float(a))) for a in axes)
            return CommandMessage(kind, seq, axes=clamped)
        if kind == "pump_power":
            return CommandMessage(kind, seq, on=bool(_field(obj, "on", (bool,))))
        return CommandMessage(kind, seq)

    raise ProtocolError(f"unknown kind {kind!r}")


def measurement_payload(m) -> dict:
    """Wire payload for a sampling.Measurement."""
    return {
        "time": m.time,
        "ch4_nm": m.ch4,
        "co2_uatm": m.co2,
        "valid": m.valid,
        "lag_s": m.transit_lag,
    }


def event_payload(time: float, kind: str, detail: str) -> dict:
    return {"time": time, "event": kind, "detail": detail}


def ack_payload(command: CommandMessage) -> dict:
    """Acknowledgment, sent back as an event-kind record."""
    return {"event": "ack", "cmd_seq": command.seq, "cmd": command.kind}
