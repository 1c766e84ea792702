"""Fixed-size binary pose messages and a TCP sender/receiver pair.

Every message is 38 bytes, little-endian::

    magic "KD" | version u8 | flags u8 | seq u32 | timestamp_ms u32
    | 12 x i16 centidegrees | crc16 u16

``flags`` bit 0 marks the left arm occluded, bit 1 the right.  The CRC is
CRC-16/CCITT (polynomial 0x1021, initial value 0xFFFF, no reflection)
over the 36 bytes before it.
"""
from __future__ import annotations

import binascii
import json
import math
import queue
import socket
import struct
import threading
import time
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterator

from .errors import (
    BadMagicError,
    CorruptionError,
    RangeError,
    SessionError,
    VersionError,
)
from .pose3d import JointAngleFrame, JointLimits, clamp_to_limits

MAGIC = b"KD"
VERSION = 1
MESSAGE_SIZE = 38
_LAYOUT = struct.Struct("<2sBBII12h")
_CRC = struct.Struct("<H")
_MAX_CENTI = 32767
_U32 = 0xFFFFFFFF

__all__ = [
    "MAGIC",
    "MESSAGE_SIZE",
    "PoseMessage",
    "crc16_ccitt",
    "encode",
    "decode",
    "StreamDecoder",
    "ReceiverSession",
    "SessionStats",
    "PoseSender",
    "PoseReceiver",
]


def crc16_ccitt(data: bytes, init: int = 0xFFFF) -> int:
    return binascii.crc_hqx(data, init)


def to_centidegrees(angle: float) -> int:
    """Round to 0.01 degree, halves away from zero (12.345 -> 1235)."""
    if not math.isfinite(angle):
        raise RangeError(f"angle {angle!r} is not finite")
    centi = int((Decimal(repr(float(angle))) * 100).quantize(Decimal(1), rounding=ROUND_HALF_UP))
    if abs(centi) > _MAX_CENTI:
        raise RangeError(f"angle {angle} deg outside +-327.67 deg")
    return centi


@dataclass(frozen=True)
class PoseMessage:
    seq: int
    timestamp_ms: int
    angles: tuple[float, ...]
    flags: int = 0
    version: int = VERSION

    @property
    def occluded(self) -> tuple[bool, bool]:
        return bool(self.flags & 1), bool(self.flags & 2)

    @property
    def frame(self) -> JointAngleFrame:
        return JointAngleFrame(self.angles, self.occluded)


def encode(j: JointAngleFrame, seq: int, ts: int) -> bytes:
    if not 0 <= seq <= _U32:
        raise RangeError(f"seq {seq} does not fit in 32 bits")
    if not 0 <= ts <= _U32:
        raise RangeError(f"timestamp {ts} does not fit in 32 bits")
    flags = int(j.occluded[0]) | (int(j.occluded[1]) << 1)
    body = _LAYOUT.pack(MAGIC, VERSION, flags, seq, ts, *(to_centidegrees(a) for a in j.slots))
    return body + _CRC.pack(crc16_ccitt(body))


def decode(buf: bytes) -> PoseMessage | None:
    """Parse the message at the start of ``buf``.

    Returns None when fewer than 38 bytes are available (nothing is
    consumed); a caller holding a stream consumes exactly
    :data:`MESSAGE_SIZE` bytes per returned message.
    """
    if len(buf) < MESSAGE_SIZE:
        return None
    raw = bytes(buf[:MESSAGE_SIZE])
    if raw[:2] != MAGIC:
        raise BadMagicError(f"bad magic {raw[:2].hex()}")
    (crc,) = _CRC.unpack_from(raw, MESSAGE_SIZE - 2)
    if crc != crc16_ccitt(raw[:-2]):
        raise CorruptionError("crc mismatch")
    _, version, flags, seq, ts, *centi = _LAYOUT.unpack_from(raw)
    if version != VERSION:
        raise VersionError(f"unsupported version {version}")
    return PoseMessage(seq, ts, tuple(c / 100 for c in centi), flags, version)


class StreamDecoder:
    """Incremental decoder that resynchronizes on the magic bytes.

    Garbage before a message is skipped; a candidate that fails its CRC
    is counted as corrupt and scanning resumes one byte later, so an
    intact message hidden behind a false magic is still found.
    """

    def __init__(self) -> None:
        self._buf = bytearray()
        self.corrupt = 0
        self.bad_version = 0
        self.skipped_bytes = 0

    def feed(self, data: bytes) -> list[PoseMessage]:
        self._buf += data
        out = []
        buf = self._buf
        while True:
            start = buf.find(MAGIC)
            if start < 0:
                keep = 1 if buf[-1:] == MAGIC[:1] else 0
                self.skipped_bytes += len(buf) - keep
                del buf[: len(buf) - keep]
                break
            if start:
                self.skipped_bytes += start
                del buf[:start]
            try:
                msg = decode(buf)
            except CorruptionError:
                self.corrupt += 1
                self.skipped_bytes += 1
                del buf[:1]
                continue
            except VersionError:
                self.bad_version += 1
                self.skipped_bytes += MESSAGE_SIZE
                del buf[:MESSAGE_SIZE]
                continue
            if msg is None:
                break
            del buf[:MESSAGE_SIZE]
            out.append(msg)
        return out


@dataclass(frozen=True)
class SessionStats:
    frames: int
    bytes: int
    corrupt: int
    stale: int
    skipped_bytes: int
    bytes_per_frame: float
    fps: float
    bandwidth_Bps: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True)
class Delivery:
    seq: int
    timestamp_ms: int
    frame: JointAngleFrame


class ReceiverSession:
    """Transport-independent receiving end: decode, dedup, clamp, count.

    Rates come from the sender's timestamps, so stats are reproducible
    regardless of how the bytes were delivered.
    """

    def __init__(self, limits: JointLimits | None = None) -> None:
        self.limits = JointLimits.default() if limits is None else limits
        self._decoder = StreamDecoder()
        self._lock = threading.Lock()
        self._last_seq: int | None = None
        self._frames = 0
        self._bytes = 0
        self._stale = 0
        self._first_ts: int | None = None
        self._last_ts: int | None = None

    def feed(self, data: bytes) -> list[Delivery]:
        out = []
        with self._lock:
            self._bytes += len(data)
            for msg in self._decoder.feed(data):
                if self._last_seq is not None and msg.seq <= self._last_seq:
                    self._stale += 1
                    continue
                self._last_seq = msg.seq
                self._frames += 1
                if self._first_ts is None:
                    self._first_ts = msg.timestamp_ms
                self._last_ts = msg.timestamp_ms
                out.append(Delivery(msg.seq, msg.timestamp_ms, clamp_to_limits(msg.frame, self.limits)))
        return out

    def stats(self) -> SessionStats:
        with self._lock:
            n = self._frames
            bpf = self._bytes / n if n else 0.0
            span = (self._last_ts - self._first_ts) / 1000 if n > 1 else 0.0
            fps = (n - 1) / span if span > 0 else 0.0
            return SessionStats(
                frames=n,
                bytes=self._bytes,
                corrupt=self._decoder.corrupt,
                stale=self._stale,
                skipped_bytes=self._decoder.skipped_bytes,
                bytes_per_frame=bpf,
                fps=fps,
                bandwidth_Bps=bpf * fps,
            )


# --- TCP transport -------------------------------------------------------------

class PoseSender:
    """Client end: connects, then streams one message per :meth:`send`."""

    def __init__(self, host: str, port: int, timeout: float = 5.0) -> None:
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise SessionError(f"connect to {host}:{port} failed: {exc}") from exc
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._seq = 0
        self._t0 = time.monotonic()

    @property
    def seq(self) -> int:
        return self._seq

    def send(self, j: JointAngleFrame, ts: int | None = None) -> int:
        """Send ``j`` with the next sequence number, which is returned."""
        if ts is None:
            ts = int((time.monotonic() - self._t0) * 1000)
        msg = encode(j, self._seq, ts)
        try:
            self._sock.sendall(msg)
        except OSError as exc:
            raise SessionError(f"send failed: {exc}") from exc
        self._seq += 1
        return self._seq - 1

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_WR)
        except OSError:
            pass
        self._sock.close()

    def __enter__(self) -> "PoseSender":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


_END = object()


class PoseReceiver:
    """Server end: a background thread accepts senders one after another
    and pushes deliveries onto a single-consumer queue.

    ``max_connections`` bounds how many sender sessions are served before
    the receiver finishes (None serves until :meth:`close`).  Sequence
    numbers persist across reconnects, so replayed messages are dropped.
    """

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        limits: JointLimits | None = None,
        max_connections: int | None = 1,
    ) -> None:
        self.session = ReceiverSession(limits)
        self.max_connections = max_connections
        self.error: SessionError | None = None
        self._queue: queue.Queue = queue.Queue()
        self._closing = threading.Event()
        try:
            self._server = socket.create_server((host, port))
        except OSError as exc:
            raise SessionError(f"bind {host}:{port} failed: {exc}") from exc
        self._server.settimeout(0.2)
        self._thread = threading.Thread(target=self._run, name="pose-receiver", daemon=True)

    @property
    def address(self) -> tuple[str, int]:
        return self._server.getsockname()[:2]

    def start(self) -> "PoseReceiver":
        self._thread.start()
        return self

    def _serve(self, conn: socket.socket) -> None:
        conn.settimeout(0.2)
        with conn:
            while not self._closing.is_set():
                try:
                    data = conn.recv(65536)
                except socket.timeout:
                    continue
                if not data:
                    return
                for d in self.session.feed(data):
                    self._queue.put(d)

    def _run(self) -> None:
        served = 0
        try:
            while not self._closing.is_set():
                if self.max_connections is not None and served >= self.max_connections:
                    break
                try:
                    conn, _ = self._server.accept()
                except socket.timeout:
                    continue
                served += 1
                self._serve(conn)
        except OSError as exc:
            if not self._closing.is_set():
                self.error = SessionError(f"transport lost: {exc}")
        finally:
            self._queue.put(_END)

    def get(self, timeout: float | None = None) -> Delivery | None:
        """Next delivery in order; None once the receiver has finished.

        Raises :class:`SessionError` if the transport failed, after all
        frames received before the failure have been handed out.
        """
        item = self._queue.get(timeout=timeout)
        if item is _END:
            self._queue.put(_END)
            if self.error is not None:
                raise self.error
            return None
        return item

    def __iter__(self) -> Iterator[Delivery]:
        while (d := self.get()) is not None:
            yield d

    def stats(self) -> SessionStats:
        return self.session.stats()

    def close(self) -> None:
        self._closing.set()
        if self._thread.is_alive():
            self._thread.join(timeout=2.0)
        self._server.close()

    def __enter__(self) -> "PoseReceiver":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
