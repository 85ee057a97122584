"""Live recording endpoint: framed TCP for numeric topics, UDP for audio.

Wire layouts (all multi-byte integers and floats big-endian unless noted):

TCP frame:
    length    u32       byte count of everything after this field
    topic     UTF-8 bytes terminated by 0x00
    timestamp f64       seconds
    payload   C x f64   channel values

Audio datagram:
    sequence  u32
    timestamp f64       seconds
    pcm       16-bit little-endian PCM samples (even byte count)

The receiver keeps one reader task per socket; a single writer drains a
merged bounded queue, so per-topic arrival order is preserved while
cross-stream ordering stays unspecified.
"""

from __future__ import annotations

import queue
import socket
import struct
import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BindError, MalformedFrame, NeedMoreBytes
from .session import (
    AudioMeta,
    AudioTrack,
    Channel,
    RawSession,
    SessionManifest,
    StreamDescriptor,
    StreamKind,
    Task,
    TimedSeries,
    save_session,
    utc_now,
)

# smallest valid frame body: 1-byte topic + terminator + timestamp
_MIN_BODY = 1 + 1 + 8
DEFAULT_HIGH_WATER = 10_000


@dataclass(frozen=True)
class TcpFrame:
    topic: str
    timestamp: float
    values: tuple[float, ...]

    def encode(self) -> bytes:
        topic_bytes = self.topic.encode("utf-8")
        body = (
            topic_bytes
            + b"\x00"
            + struct.pack(">d", self.timestamp)
            + struct.pack(f">{len(self.values)}d", *self.values)
        )
        return struct.pack(">I", len(body)) + body


def frame_decode(data: bytes) -> tuple[TcpFrame, int]:
    """Decode one frame from the head of ``data``.

    Returns (frame, bytes consumed). Raises NeedMoreBytes for a partial frame
    and MalformedFrame for an invalid one.
    """
    if len(data) < 4:
        raise NeedMoreBytes(4 - len(data))
    (length,) = struct.unpack_from(">I", data, 0)
    if length < _MIN_BODY:
        raise MalformedFrame(f"length field {length} below minimum frame body {_MIN_BODY}")
    total = 4 + length
    if len(data) < total:
        raise NeedMoreBytes(total - len(data))
    body = data[4:total]
    nul = body.find(b"\x00")
    if nul <= 0:
        raise MalformedFrame("missing or empty topic before terminator")
    try:
        topic = body[:nul].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedFrame(f"topic not valid UTF-8: {exc}") from exc
    rest = body[nul + 1 :]
    if len(rest) < 8:
        raise MalformedFrame("frame too short for timestamp")
    (timestamp,) = struct.unpack(">d", rest[:8])
    payload = rest[8:]
    if len(payload) % 8 != 0:
        raise MalformedFrame(f"payload length {len(payload)} not a multiple of 8")
    values = struct.unpack(f">{len(payload) // 8}d", payload)
    return TcpFrame(topic=topic, timestamp=timestamp, values=values), total


@dataclass(frozen=True)
class AudioDatagram:
    sequence: int
    timestamp: float
    pcm: bytes

    def encode(self) -> bytes:
        if len(self.pcm) % 2 != 0:
            raise MalformedFrame("pcm length must be even")
        return struct.pack(">Id", self.sequence, self.timestamp) + self.pcm


def datagram_decode(data: bytes) -> AudioDatagram:
    if len(data) < 12:
        raise MalformedFrame(f"datagram of {len(data)} bytes below 12-byte header")
    sequence, timestamp = struct.unpack_from(">Id", data, 0)
    pcm = data[12:]
    if len(pcm) % 2 != 0:
        raise MalformedFrame("pcm length must be even")
    return AudioDatagram(sequence=sequence, timestamp=timestamp, pcm=pcm)


@dataclass(frozen=True)
class GapReport:
    stream: str
    missing_sequences: tuple[tuple[int, int], ...]  # inclusive ranges
    received: int
    expected: int

    @property
    def total_missing(self) -> int:
        return sum(hi - lo + 1 for lo, hi in self.missing_sequences)


def _ranges(sorted_seqs: list[int]) -> tuple[tuple[int, int], ...]:
    ranges = []
    start = prev = None
    for s in sorted_seqs:
        if start is None:
            start = prev = s
        elif s == prev + 1:
            prev = s
        else:
            ranges.append((start, prev))
            start = prev = s
    if start is not None:
        ranges.append((start, prev))
    return tuple(ranges)


def audio_reassemble(
    datagrams: list[AudioDatagram], stream: str = "audio"
) -> tuple[bytes, GapReport]:
    """Order datagrams by sequence, drop duplicates, zero-fill gaps.

    Gaps are filled at the nominal chunk size (the most common received pcm
    length); sequences are assumed to start at 0.
    """
    if not datagrams:
        return b"", GapReport(stream=stream, missing_sequences=(), received=0, expected=0)
    by_seq: dict[int, bytes] = {}
    for d in datagrams:
        if d.sequence not in by_seq:  # keep first, drop later duplicates
            by_seq[d.sequence] = d.pcm
    max_seq = max(by_seq)
    expected = max_seq + 1
    chunk = Counter(len(p) for p in by_seq.values()).most_common(1)[0][0]
    parts = []
    missing = []
    for seq in range(expected):
        if seq in by_seq:
            parts.append(by_seq[seq])
        else:
            parts.append(b"\x00" * chunk)
            missing.append(seq)
    report = GapReport(
        stream=stream,
        missing_sequences=_ranges(missing),
        received=len(by_seq),
        expected=expected,
    )
    return b"".join(parts), report


# -- live recorder ----------------------------------------------------------

@dataclass
class RecorderConfig:
    session_root: Path
    tcp_port: int = 0  # 0 picks an ephemeral port
    udp_port: int = 0
    host: str = "127.0.0.1"
    session_id: str = "recording"
    participant_id: str = ""
    task: Task = Task.FEEDING
    # topic -> (nominal rate, channel descriptors)
    stream_map: dict[str, tuple[float, tuple[Channel, ...]]] = field(default_factory=dict)
    audio_stream: str = "mic"
    audio_rate: int = 48000
    high_water: int = DEFAULT_HIGH_WATER


class RecordingHandle:
    """Live TCP/UDP recording session; ``stop()`` flushes a valid RawSession."""

    def __init__(self, config: RecorderConfig):
        self.config = config
        self._queue: queue.Queue = queue.Queue(maxsize=config.high_water)
        self._topics: dict[str, tuple[list[float], list[tuple[float, ...]]]] = {}
        self._datagrams: list[AudioDatagram] = []
        self._datagram_lock = threading.Lock()
        self._stopping = threading.Event()
        self._rx_done = threading.Event()
        self._stopped = False
        self._session: RawSession | None = None
        self.malformed_frames = 0
        self.frames_received = 0
        self.gap_report: GapReport | None = None

        try:
            self._tcp_sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            self._tcp_sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            self._tcp_sock.bind((config.host, config.tcp_port))
            self._tcp_sock.listen(16)
            self._udp_sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            # audio datagrams arrive in bursts; a large receive buffer avoids
            # kernel-level drops between recvfrom calls
            self._udp_sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, 1 << 22)
            self._udp_sock.bind((config.host, config.udp_port))
        except OSError as exc:
            raise BindError(str(exc)) from exc
        self.tcp_port = self._tcp_sock.getsockname()[1]
        self.udp_port = self._udp_sock.getsockname()[1]
        self._tcp_sock.settimeout(0.2)
        self._udp_sock.settimeout(0.2)

        self._threads = [
            threading.Thread(target=self._accept_loop, daemon=True),
            threading.Thread(target=self._udp_loop, daemon=True),
            threading.Thread(target=self._writer_loop, daemon=True),
        ]
        self._conn_threads: list[threading.Thread] = []
        for t in self._threads:
            t.start()

    def _accept_loop(self):
        while not self._stopping.is_set():
            try:
                conn, _ = self._tcp_sock.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            t = threading.Thread(target=self._conn_loop, args=(conn,), daemon=True)
            self._conn_threads.append(t)
            t.start()

    def _conn_loop(self, conn: socket.socket):
        conn.settimeout(0.2)
        buf = b""
        with conn:
            while True:
                try:
                    chunk = conn.recv(65536)
                except socket.timeout:
                    if self._stopping.is_set():
                        break
                    continue
                except OSError:
                    break
                if not chunk:
                    break
                buf += chunk
                while buf:
                    try:
                        frame, consumed = frame_decode(buf)
                    except NeedMoreBytes:
                        break
                    except MalformedFrame:
                        # resync: drop the declared frame length and move on
                        self.malformed_frames += 1
                        declared = 4 + struct.unpack_from(">I", buf, 0)[0]
                        buf = buf[min(declared, len(buf)) :]
                        continue
                    buf = buf[consumed:]
                    # blocking put = backpressure once the queue hits high water
                    self._queue.put(frame)

    def _udp_loop(self):
        while not self._stopping.is_set():
            try:
                data, _ = self._udp_sock.recvfrom(65536)
            except socket.timeout:
                continue
            except OSError:
                break
            try:
                dg = datagram_decode(data)
            except MalformedFrame:
                self.malformed_frames += 1
                continue
            with self._datagram_lock:
                self._datagrams.append(dg)

    def _writer_loop(self):
        while True:
            try:
                frame = self._queue.get(timeout=0.1)
            except queue.Empty:
                if self._rx_done.is_set():
                    return
                continue
            ts, vals = self._topics.setdefault(frame.topic, ([], []))
            ts.append(frame.timestamp)
            vals.append(frame.values)
            self.frames_received += 1

    def stop(self) -> RawSession:
        """Stop receiving, flush the session to disk, return it. Idempotent."""
        if self._stopped:
            assert self._session is not None
            return self._session
        # let in-flight connections drain before tearing sockets down
        self._stopping.set()
        self._threads[0].join(timeout=5.0)  # accept loop
        for t in self._conn_threads:
            t.join(timeout=5.0)
        self._threads[1].join(timeout=5.0)  # udp loop
        self._rx_done.set()
        self._threads[2].join(timeout=10.0)  # writer
        self._tcp_sock.close()
        self._udp_sock.close()
        self._session = self._build_session()
        save_session(self._session, self.config.session_root)
        self._stopped = True
        return self._session

    def _build_session(self) -> RawSession:
        import warnings

        cfg = self.config
        numeric: dict[str, TimedSeries] = {}
        streams: list[StreamDescriptor] = []
        for topic, (ts, vals) in sorted(self._topics.items()):
            n_ch = len(vals[0]) if vals else 1
            if topic in cfg.stream_map:
                rate, channels = cfg.stream_map[topic]
            else:
                rate = max(1.0, (len(ts) - 1) / max(ts[-1] - ts[0], 1e-9)) if len(ts) > 1 else 1.0
                channels = tuple(Channel(f"ch{i}", "1") for i in range(n_ch))
            numeric[topic] = TimedSeries(
                timestamps=np.array(ts), values=np.array(vals), channels=channels
            )
            streams.append(
                StreamDescriptor(
                    name=topic,
                    kind=StreamKind.NUMERIC,
                    nominal_rate=rate,
                    channels=channels,
                    file=f"streams/{topic}.csv",
                )
            )
        if not numeric:
            warnings.warn("recording stopped with zero frames received")

        audio: dict[str, AudioTrack] = {}
        with self._datagram_lock:
            datagrams = list(self._datagrams)
        if datagrams:
            pcm, self.gap_report = audio_reassemble(datagrams, stream=cfg.audio_stream)
            samples = np.frombuffer(pcm, dtype="<i2")
            audio[cfg.audio_stream] = AudioTrack(
                meta=AudioMeta(
                    sample_rate=cfg.audio_rate,
                    bit_depth=16,
                    channels=1,
                    file=f"audio/{cfg.audio_stream}.wav",
                ),
                samples=samples,
            )
            streams.append(
                StreamDescriptor(
                    name=cfg.audio_stream,
                    kind=StreamKind.AUDIO,
                    nominal_rate=float(cfg.audio_rate),
                    channels=(Channel("pcm", "1"),),
                    file=f"audio/{cfg.audio_stream}.wav",
                )
            )

        manifest = SessionManifest(
            session_id=cfg.session_id,
            participant_id=cfg.participant_id,
            task=cfg.task,
            success=None,
            created_at=utc_now(),
            streams=tuple(streams),
            notes="recorded by transport gateway",
        )
        return RawSession(manifest=manifest, numeric=numeric, audio=audio)


def start_recording(config: RecorderConfig) -> RecordingHandle:
    """Bind the sockets and start recording; see RecordingHandle.stop()."""
    return RecordingHandle(config)
