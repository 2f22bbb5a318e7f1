"""Live telemetry service, mission recorder, and replay server.

One TCP listener speaks three dialects, autodetected per connection:
newline-delimited protocol records (native clients and recorders), the
same records inside WebSocket text frames (the browser console), and
plain HTTP GET for the console's static files. Every client session gets
hello + config_summary and then the broadcast stream; sequence numbers
are stamped per connection. A slow client is disconnected rather than
allowed to stall the simulation stepper.
"""

from __future__ import annotations

import base64
import hashlib
import logging
import os
import socket
import threading
import time
from collections import deque
from queue import Empty, Full, Queue

from underice.engine import Simulation
from underice.protocol import (
    CommandMessage,
    TelemetryMessage,
    ProtocolError,
    ack_payload,
    decode,
    encode,
    event_payload,
    hello_message,
    measurement_payload,
)
from underice.scenario import ScenarioConfig

logger = logging.getLogger(__name__)

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
_OUTQ_LIMIT = 2048  # records buffered per client before we drop the client

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".svg": "image/svg+xml",
    ".map": "application/json",
    ".json": "application/json",
}


# --- websocket framing -------------------------------------------------------

def _ws_accept_key(key: str) -> str:
    digest = hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def _ws_encode_text(data: bytes) -> bytes:
    n = len(data)
    if n < 126:
        header = bytes([0x81, n])
    elif n < 1 << 16:
        header = bytes([0x81, 126]) + n.to_bytes(2, "big")
    else:
        header = bytes([0x81, 127]) + n.to_bytes(8, "big")
    return header + data


def _read_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("peer closed")
        buf += chunk
    return buf


def _ws_read_message(sock: socket.socket) -> bytes | None:
    """One complete text/binary message; None on a close frame."""
    data = b""
    while True:
        b1, b2 = _read_exact(sock, 2)
        opcode = b1 & 0x0F
        masked = bool(b2 & 0x80)
        length = b2 & 0x7F
        if length == 126:
            length = int.from_bytes(_read_exact(sock, 2), "big")
        elif length == 127:
            length = int.from_bytes(_read_exact(sock, 8), "big")
        mask = _read_exact(sock, 4) if masked else b""
        payload = _read_exact(sock, length) if length else b""
        if masked:
            payload = bytes(c ^ mask[i % 4] for i, c in enumerate(payload))
        if opcode == 0x8:  # close
            return None
        if opcode == 0x9:  # ping -> pong
            sock.sendall(bytes([0x8A, len(payload)]) + payload)
            continue
        if opcode == 0xA:  # pong
            continue
        data += payload
        if b1 & 0x80:  # FIN
            return data


# --- client sessions ---------------------------------------------------------

class _Session:
    """One connected client: outbound queue, per-connection sequencing."""

    _ids = iter(range(1, 1 << 30))

    def __init__(self, sock: socket.socket, transport: str):
        self.id = next(self._ids)
        self.sock = sock
        self.transport = transport  # "raw" | "ws"
        self.outq: Queue = Queue(maxsize=_OUTQ_LIMIT)
        self.alive = True
        self._seq = 0

    def next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def offer(self, item) -> bool:
        """Non-blocking enqueue; False means the client is too slow."""
        try:
            self.outq.put_nowait(item)
            return True
        except Full:
            return False

    def send_line(self, line: str) -> None:
        data = line.encode("utf-8")
        if self.transport == "ws":
            self.sock.sendall(_ws_encode_text(data))
        else:
            self.sock.sendall(data)

    def close(self) -> None:
        self.alive = False
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass


class _Recorder:
    """Virtual client writing the canonical stream to disk."""

    def __init__(self, path: str):
        self._file = open(path, "wb")
        self._seq = 0
        self._lock = threading.Lock()

    def write(self, kind: str, t: float, payload: dict) -> None:
        with self._lock:
            self._seq += 1
            line = encode(TelemetryMessage(kind, self._seq, t, payload))
            self._file.write(line.encode("utf-8"))

    def close(self) -> None:
        with self._lock:
            self._file.close()


# --- the live server ---------------------------------------------------------

class TelemetryServer:
    """Serves one running simulation to any number of clients."""

    def __init__(self, config: ScenarioConfig, bind: tuple[str, int] = ("127.0.0.1", 0),
                 rate: float = 1.0, record_path: str | None = None,
                 console_dir: str | None = None, scenario_name: str = "scenario"):
        self.config = config
        self.rate = rate
        self.console_dir = console_dir
        self.scenario_name = scenario_name
        self.sim = Simulation(config)
        self.ack_log: list[tuple[int, int, str]] = []  # (session, cmd seq, kind)

        self._bind = bind
        self._listener: socket.socket | None = None
        self._sessions: list[_Session] = []
        self._sessions_lock = threading.Lock()
        self._commands: deque = deque()
        self._commands_lock = threading.Lock()
        self._recorder = _Recorder(record_path) if record_path else None
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []

    # -- lifecycle --

    @property
    def address(self) -> tuple[str, int]:
        return self._listener.getsockname()[:2]

    def start(self) -> None:
        self._listener = socket.create_server(self._bind)
        self._listener.settimeout(0.25)
        if self._recorder:
            hello = hello_message(0, self.scenario_name)
            self._recorder.write("hello", 0.0, hello.payload)
            self._recorder.write("config_summary", 0.0, self._config_summary())
        for target, name in ((self._accept_loop, "accept"),
                             (self._sim_loop, "sim")):
            thread = threading.Thread(target=target, name=f"underice-{name}",
                                      daemon=True)
            thread.start()
            self._threads.append(thread)

    def stop(self) -> None:
        self._stop.set()
        for thread in self._threads:
            thread.join(timeout=2.0)
        with self._sessions_lock:
            sessions = list(self._sessions)
        for session in sessions:
            session.close()
        if self._listener:
            self._listener.close()
        if self._recorder:
            self._recorder.close()

    # -- sim thread --

    def _config_summary(self) -> dict:
        cfg = self.config
        return {
            "duration_s": cfg.duration,
            "dt_s": cfg.dt,
            "seed": cfg.seed,
            "telemetry_rate_hz": cfg.telemetry_rate,
            "spool_capacity_m": cfg.spool.capacity,
            "max_duty": cfg.controller.max_duty,
            "slider_max": cfg.controller.slider_max,
            "sample_interval_s": cfg.analyzer.sample_interval,
            "tube_length_m": cfg.pump.tube_length,
            "nominal_flow_m3s": cfg.pump.nominal_flow,
            "background_ch4_nm": cfg.gas.background_ch4,
            "background_co2_uatm": cfg.gas.background_co2,
            "bottom_depth_m": cfg.world.bottom_depth,
        }

    def _sim_loop(self) -> None:
        cfg = self.config
        state_every = max(1, round(1.0 / (cfg.telemetry_rate * cfg.dt)))
        meas_cursor = 0
        event_cursor = 0
        wall_start = time.monotonic()
        while not self._stop.is_set() and not self.sim.finished():
            with self._commands_lock:
                due = list(self._commands)
                self._commands.clear()
            self.sim.step(due)

            if self.sim.step_index % state_every == 0:
                self._publish("state", self.sim.time, self.sim.snapshot())
            while meas_cursor < len(self.sim.measurements):
                m = self.sim.measurements[meas_cursor]
                meas_cursor += 1
                self._publish("measurement", self.sim.time, measurement_payload(m))
            while event_cursor < len(self.sim.events.records):
                t, kind, detail = self.sim.events.records[event_cursor]
                event_cursor += 1
                self._publish("event", self.sim.time, event_payload(t, kind, detail))

            target = wall_start + self.sim.time / self.rate
            delay = target - time.monotonic()
            if delay > 0:
                time.sleep(delay)

    def _publish(self, kind: str, t: float, payload: dict) -> None:
        if self._recorder:
            self._recorder.write(kind, t, payload)
        dead = []
        with self._sessions_lock:
            for session in self._sessions:
                if not session.offer((kind, t, payload)):
                    dead.append(session)
            for session in dead:
                self._sessions.remove(session)
        for session in dead:
            logger.warning("dropping slow client %d", session.id)
            session.close()

    def _enqueue_command(self, cmd: CommandMessage) -> None:
        if cmd.kind == "estop":
            engine_cmd = ("estop",)
        elif cmd.kind == "estop_reset":
            engine_cmd = ("estop_reset",)
        elif cmd.kind == "winch_slider":
            engine_cmd = ("winch_slider", cmd.slider)
        elif cmd.kind == "rov_thrust":
            engine_cmd = ("rov_thrust", cmd.axes)
        else:
            engine_cmd = ("pump_power", cmd.on)
        with self._commands_lock:
            if cmd.kind == "estop":  # e-stop wins over anything still queued
                self._commands.appendleft(engine_cmd)
            else:
                self._commands.append(engine_cmd)

    # -- connection handling --

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, _addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            threading.Thread(target=self._handshake, args=(sock,),
                             daemon=True).start()

    def _handshake(self, sock: socket.socket) -> None:
        try:
            head = sock.recv(4, socket.MSG_PEEK)
            if head[:4] == b"GET " or head[:4] == b"HEAD":
                self._serve_http(sock)
                return
            self._attach(_Session(sock, "raw"), leftover=b"")
        except (OSError, ConnectionError):
            sock.close()

    def _serve_http(self, sock: socket.socket) -> None:
        request = b""
        while b"\r\n\r\n" not in request:
            chunk = sock.recv(4096)
            if not chunk:
                sock.close()
                return
            request += chunk
        head = request.decode("latin-1")
        lines = head.split("\r\n")
        path = lines[0].split(" ")[1] if len(lines[0].split(" ")) > 1 else "/"
        headers = {}
        for line in lines[1:]:
            if ":" in line:
                name, _, value = line.partition(":")
                headers[name.strip().lower()] = value.strip()

        if headers.get("upgrade", "").lower() == "websocket":
            key = headers.get("sec-websocket-key", "")
            accept = _ws_accept_key(key)
            sock.sendall(
                b"HTTP/1.1 101 Switching Protocols\r\n"
                b"Upgrade: websocket\r\nConnection: Upgrade\r\n"
                b"Sec-WebSocket-Accept: " + accept.encode() + b"\r\n\r\n")
            self._attach(_Session(sock, "ws"), leftover=b"")
            return

        self._serve_static(sock, path)

    def _serve_static(self, sock: socket.socket, path: str) -> None:
        body, status, ctype = b"not found", "404 Not Found", "text/plain"
        if self.console_dir:
            rel = path.split("?")[0].lstrip("/") or "index.html"
            full = os.path.realpath(os.path.join(self.console_dir, rel))
            root = os.path.realpath(self.console_dir)
            if full.startswith(root + os.sep) or full == root:
                if os.path.isdir(full):
                    full = os.path.join(full, "index.html")
                if os.path.isfile(full):
                    with open(full, "rb") as f:
                        body = f.read()
                    status = "200 OK"
                    ctype = _CONTENT_TYPES.get(
                        os.path.splitext(full)[1], "application/octet-stream")
        response = (f"HTTP/1.1 {status}\r\nContent-Type: {ctype}\r\n"
                    f"Content-Length: {len(body)}\r\nConnection: close\r\n\r\n")
        try:
            sock.sendall(response.encode("latin-1") + body)
        finally:
            sock.close()

    def _attach(self, session: _Session, leftover: bytes) -> None:
        # hello + summary enter the queue before the live stream can
        session.offer(("hello", 0.0, hello_message(0, self.scenario_name).payload))
        session.offer(("config_summary", 0.0, self._config_summary()))
        with self._sessions_lock:
            self._sessions.append(session)
        writer = threading.Thread(target=self._writer_loop, args=(session,),
                                  daemon=True)
        writer.start()
        self._reader_loop(session, leftover)

    def _writer_loop(self, session: _Session) -> None:
        try:
            while session.alive and not self._stop.is_set():
                try:
                    kind, t, payload = session.outq.get(timeout=0.25)
                except Empty:
                    continue
                message = TelemetryMessage(kind, session.next_seq(), t, payload)
                session.send_line(encode(message))
        except OSError:
            pass
        finally:
            self._detach(session)

    def _reader_loop(self, session: _Session, leftover: bytes) -> None:
        buffer = leftover
        try:
            while session.alive and not self._stop.is_set():
                if session.transport == "ws":
                    message = _ws_read_message(session.sock)
                    if message is None:
                        break
                    for raw in message.splitlines():
                        self._handle_line(session, raw.decode("utf-8"))
                else:
                    chunk = session.sock.recv(4096)
                    if not chunk:
                        break
                    buffer += chunk
                    while b"\n" in buffer:
                        raw, _, buffer = buffer.partition(b"\n")
                        self._handle_line(session, raw.decode("utf-8"))
        except (OSError, ConnectionError):
            pass
        finally:
            self._detach(session)

    def _handle_line(self, session: _Session, line: str) -> None:
        if not line.strip():
            return
        try:
            message = decode(line)
        except ProtocolError as exc:
            session.offer(("event", self.sim.time,
                           event_payload(self.sim.time, "protocol_error",
                                         exc.reason)))
            return
        if isinstance(message, CommandMessage):
            self._enqueue_command(message)
            self.ack_log.append((session.id, message.seq, message.kind))
            session.offer(("event", self.sim.time, ack_payload(message)))

    def _detach(self, session: _Session) -> None:
        with self._sessions_lock:
            if session in self._sessions:
                self._sessions.remove(session)
        session.close()


# --- record / replay ---------------------------------------------------------

def record_stream(lines, path: str) -> None:
    """Write an iterable of encoded lines to disk verbatim."""
    with open(path, "wb") as f:
        for line in lines:
            f.write(line if isinstance(line, bytes) else line.encode("utf-8"))


def replay_lines(path: str, speed: float = 1.0):
    """Yield (delay_s, raw_line_bytes) honoring the recorded timing, scaled."""
    if speed <= 0:
        raise ValueError("speed must be positive")
    prev_t = None
    with open(path, "rb") as f:
        for raw in f:
            if not raw.strip():
                continue
            message = decode(raw.decode("utf-8"))
            t = message.time if isinstance(message, TelemetryMessage) else prev_t
            delay = 0.0
            if prev_t is not None and t is not None and t > prev_t:
                delay = (t - prev_t) / speed
            if t is not None:
                prev_t = t
            yield delay, raw


class ReplayServer:
    """Serves a recording to each client with original (scaled) pacing."""

    def __init__(self, path: str, bind: tuple[str, int] = ("127.0.0.1", 0),
                 speed: float = 1.0):
        self.path = path
        self.speed = speed
        self._bind = bind
        self._listener: socket.socket | None = None
        self._stop = threading.Event()
        self._accept_thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._listener.getsockname()[:2]

    def start(self) -> None:
        self._listener = socket.create_server(self._bind)
        self._listener.settimeout(0.25)
        self._accept_thread = threading.Thread(target=self._accept_loop,
                                               daemon=True)
        self._accept_thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._accept_thread:
            self._accept_thread.join(timeout=2.0)
        if self._listener:
            self._listener.close()

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            threading.Thread(target=self._stream_to, args=(sock,),
                             daemon=True).start()

    def _stream_to(self, sock: socket.socket) -> None:
        transport = "raw"
        try:
            head = sock.recv(4, socket.MSG_PEEK)
            if head[:4] == b"GET ":
                request = b""
                while b"\r\n\r\n" not in request:
                    chunk = sock.recv(4096)
                    if not chunk:
                        return
                    request += chunk
                key = ""
                for line in request.decode("latin-1").split("\r\n"):
                    if line.lower().startswith("sec-websocket-key"):
                        key = line.partition(":")[2].strip()
                sock.sendall(
                    b"HTTP/1.1 101 Switching Protocols\r\n"
                    b"Upgrade: websocket\r\nConnection: Upgrade\r\n"
                    b"Sec-WebSocket-Accept: " + _ws_accept_key(key).encode()
                    + b"\r\n\r\n")
                transport = "ws"
            for delay, raw in replay_lines(self.path, self.speed):
                if self._stop.is_set():
                    return
                if delay > 0:
                    time.sleep(delay)
                sock.sendall(_ws_encode_text(raw) if transport == "ws" else raw)
        except (OSError, ConnectionError, ProtocolError):
            pass
        finally:
            try:
                sock.close()
            except OSError:
                pass
