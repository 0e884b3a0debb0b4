"""Two-party message transports and single-repetition ping-pong operations.

Endpoints exchange length-prefixed messages ([u64 little-endian length]
[payload]) over one of two carriers:

* inmem: a pair of queues between two threads of one process.
* tcp: a loopback socket, one process (or thread) on each side.

A ping-pong repetition is strictly sequential, so in-memory payloads can be
handed over by reference without copying; the receiving side always copies
into its own region, which is the cost a real receive pays.
"""

from __future__ import annotations

import socket
import struct
import time
from queue import SimpleQueue

from .packer import make_engine
from .typecore import CommittedType, Datatype

_HEADER = struct.Struct("<Q")
_F64 = struct.Struct("<d")
_MAX_REASONABLE = 1 << 40


class TransportUnavailable(OSError):
    """Raised when a carrier cannot be set up (bind/connect failure)."""


class PeerClosed(ConnectionError):
    """Raised when the other party went away mid-conversation."""


class Endpoint:
    """One side of a two-party channel.  `peer_id` names the role this
    side plays ("ping" initiates, "pong" echoes)."""

    kind: str
    peer_id: str

    def send_msg(self, payload) -> None:
        raise NotImplementedError

    def recv_msg(self):
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError

    def barrier(self) -> None:
        """1-byte exchange; returns once both sides arrived."""
        self.send_msg(b"\x01")
        self.recv_msg()

    def exchange_f64(self, value: float) -> float:
        self.send_msg(_F64.pack(value))
        return _F64.unpack(bytes(self.recv_msg()))[0]


_CLOSED = object()


class InMemEndpoint(Endpoint):
    kind = "inmem"

    def __init__(self, peer_id: str, rx: SimpleQueue, tx: SimpleQueue):
        self.peer_id = peer_id
        self._rx = rx
        self._tx = tx
        self._open = True

    def send_msg(self, payload) -> None:
        if not self._open:
            raise PeerClosed("endpoint is closed")
        self._tx.put(_HEADER.pack(len(payload)))
        self._tx.put(payload)

    def recv_msg(self):
        header = self._rx.get()
        if header is _CLOSED:
            raise PeerClosed("peer closed the channel")
        (length,) = _HEADER.unpack(header)
        payload = self._rx.get()
        if payload is _CLOSED:
            raise PeerClosed("peer closed the channel mid-message")
        if len(payload) != length:
            raise PeerClosed(f"framing error: announced {length}, got {len(payload)}")
        return payload

    def close(self) -> None:
        if self._open:
            self._open = False
            self._tx.put(_CLOSED)


class TcpEndpoint(Endpoint):
    kind = "tcp"

    def __init__(self, peer_id: str, sock: socket.socket):
        self.peer_id = peer_id
        self._sock = sock
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def send_msg(self, payload) -> None:
        try:
            self._sock.sendmsg([_HEADER.pack(len(payload)), payload])
        except (BrokenPipeError, ConnectionResetError, OSError) as exc:
            raise PeerClosed(f"send failed: {exc}") from exc

    def _recv_exact(self, n: int) -> bytearray:
        buf = bytearray(n)
        view = memoryview(buf)
        got = 0
        while got < n:
            try:
                chunk = self._sock.recv_into(view[got:], n - got)
            except (ConnectionResetError, OSError) as exc:
                raise PeerClosed(f"recv failed: {exc}") from exc
            if chunk == 0:
                raise PeerClosed("peer closed the connection")
            got += chunk
        return buf

    def recv_msg(self):
        (length,) = _HEADER.unpack(bytes(self._recv_exact(8)))
        if length > _MAX_REASONABLE:
            raise PeerClosed(f"implausible frame length {length}")
        return self._recv_exact(length)

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def make_pair(kind: str) -> tuple[Endpoint, Endpoint]:
    """Connected (ping, pong) endpoints within this process."""
    if kind == "inmem":
        a_to_b: SimpleQueue = SimpleQueue()
        b_to_a: SimpleQueue = SimpleQueue()
        return (
            InMemEndpoint("ping", rx=b_to_a, tx=a_to_b),
            InMemEndpoint("pong", rx=a_to_b, tx=b_to_a),
        )
    if kind == "tcp":
        listener, port = tcp_listener()
        try:
            client = tcp_connect(port, peer_id="pong")
            server = tcp_accept(listener, peer_id="ping")
        finally:
            listener.close()
        return server, client
    raise TransportUnavailable(f"unknown transport kind {kind!r}")


def tcp_listener(host: str = "127.0.0.1") -> tuple[socket.socket, int]:
    try:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.bind((host, 0))
        sock.listen(1)
    except OSError as exc:
        raise TransportUnavailable(f"cannot listen on {host}: {exc}") from exc
    return sock, sock.getsockname()[1]


def tcp_accept(listener: socket.socket, peer_id: str, timeout: float = 30.0) -> TcpEndpoint:
    listener.settimeout(timeout)
    try:
        conn, _ = listener.accept()
    except (socket.timeout, OSError) as exc:
        raise TransportUnavailable(f"accept failed: {exc}") from exc
    return TcpEndpoint(peer_id, conn)


def tcp_connect(port: int, peer_id: str, host: str = "127.0.0.1", timeout: float = 30.0) -> TcpEndpoint:
    try:
        sock = socket.create_connection((host, port), timeout=timeout)
        sock.settimeout(None)
    except OSError as exc:
        raise TransportUnavailable(f"cannot connect to {host}:{port}: {exc}") from exc
    return TcpEndpoint(peer_id, sock)


# --- single-repetition ping-pong operations -----------------------------
#
# Each returns the caller's locally timed wall-clock seconds for one round
# trip.  The harness runs one of these on each side, then takes the
# maximum of the two local times.


def _send_typed(ep: Endpoint, eng, region) -> None:
    if eng.is_contiguous:
        # a committed fully contiguous description needs no staging buffer
        ep.send_msg(memoryview(region)[: eng.span])
    else:
        ep.send_msg(eng.pack_message(region))


def _recv_typed(ep: Endpoint, eng, region) -> None:
    data = ep.recv_msg()
    if eng.is_contiguous:
        memoryview(region)[: eng.span] = data
    else:
        eng.unpack_message(data, region)


def _resolve_engine(t, count, engine):
    return make_engine(engine, t, count) if isinstance(engine, str) else engine


def pingpong_typed(
    ep: Endpoint,
    t: Datatype | CommittedType,
    count: int,
    region,
    engine="interpreted",
    clock=time.perf_counter,
) -> float:
    """One round trip sending `count` instances as the datatype describes."""
    eng = _resolve_engine(t, count, engine)
    start = clock()
    if ep.peer_id == "ping":
        _send_typed(ep, eng, region)
        _recv_typed(ep, eng, region)
    else:
        _recv_typed(ep, eng, region)
        _send_typed(ep, eng, region)
    return clock() - start


def pingpong_packed(
    ep: Endpoint,
    t: Datatype | CommittedType,
    count: int,
    region,
    engine="interpreted",
    clock=time.perf_counter,
) -> float:
    """One round trip via explicit pack and unpack staging buffers.

    Initiator: pack, send, receive, unpack.
    Echoer: receive, unpack, pack, send.
    """
    eng = _resolve_engine(t, count, engine)
    start = clock()
    if ep.peer_id == "ping":
        staged = eng.pack_message(region)
        ep.send_msg(staged)
        data = ep.recv_msg()
        eng.unpack_message(data, region)
    else:
        data = ep.recv_msg()
        eng.unpack_message(data, region)
        staged = eng.pack_message(region)
        ep.send_msg(staged)
    return clock() - start


def pingpong_raw(ep: Endpoint, region, clock=time.perf_counter) -> float:
    """One round trip of the bare region bytes, no datatype involved."""
    start = clock()
    if ep.peer_id == "ping":
        ep.send_msg(memoryview(region))
        data = ep.recv_msg()
        memoryview(region)[: len(data)] = data
    else:
        data = ep.recv_msg()
        memoryview(region)[: len(data)] = data
        ep.send_msg(memoryview(region))
    return clock() - start
