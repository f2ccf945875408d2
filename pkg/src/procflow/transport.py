"""Network endpoints: UDP command/telemetry intake and the console bridge.

The receiver polls its socket on a fixed period (default 5 ms),
draining every pending datagram per poll, decoding, and handing
commands to the sink without ever running dispatcher work inline.
Malformed datagrams are dropped and counted.

The console bridge is a TCP server. Outbound, every connected console
receives the same newline-delimited JSON state snapshots on a fixed
period (default 50 ms). Inbound frames reuse the 16-byte-header packet
format, length-prefixed with a 4-byte ASCII decimal byte count. A
consumer that cannot keep up for a full send timeout is disconnected.
"""

from __future__ import annotations

import json
import logging
import socket
import threading
from dataclasses import dataclass, field
from typing import Callable

from .dispatch import Command, Origin
from .wire import DecodeError, RouteTable, decode

logger = logging.getLogger(__name__)

LENGTH_PREFIX = 4
DEFAULT_POLL_PERIOD = 0.005
DEFAULT_SNAPSHOT_PERIOD = 0.05


@dataclass
class EndpointConfig:
    host: str = "127.0.0.1"
    port: int = 0  # 0: ephemeral, read back from the handle


@dataclass
class ReceiverStats:
    received: int = 0
    delivered: int = 0
    dropped: int = 0


class ReceiverHandle:
    """Running UDP receiver; stop() is idempotent."""

    def __init__(self, sock: socket.socket, thread: threading.Thread,
                 stop_event: threading.Event, stats: ReceiverStats, lock: threading.Lock):
        self._sock = sock
        self._thread = thread
        self._stop = stop_event
        self._stats = stats
        self._lock = lock
        self.port = sock.getsockname()[1]

    def stats(self) -> ReceiverStats:
        with self._lock:
            return ReceiverStats(self._stats.received, self._stats.delivered,
                                 self._stats.dropped)

    def stop(self, timeout: float = 2.0) -> None:
        self._stop.set()
        self._thread.join(timeout=timeout)
        self._sock.close()


def serve(config: EndpointConfig, sink: Callable[[Command], None],
          route_table: RouteTable | None = None,
          poll_period: float = DEFAULT_POLL_PERIOD) -> ReceiverHandle:
    """Bind a UDP endpoint and deliver decoded commands to ``sink``.

    The sink runs on the receiver thread and must only enqueue; it must
    never block for long or the poll contract is broken.
    """
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((config.host, config.port))
    sock.setblocking(False)

    stop_event = threading.Event()
    stats = ReceiverStats()
    lock = threading.Lock()

    def run() -> None:
        while not stop_event.is_set():
            while True:
                try:
                    packet, _addr = sock.recvfrom(2048)
                except BlockingIOError:
                    break
                except OSError:
                    return
                with lock:
                    stats.received += 1
                try:
                    decoded = decode(packet, route_table)
                except DecodeError as err:
                    with lock:
                        stats.dropped += 1
                    logger.debug("dropped malformed datagram: %s", err)
                    continue
                sink(Command(decoded.name, decoded.values, Origin.DATAGRAM))
                with lock:
                    stats.delivered += 1
            stop_event.wait(poll_period)

    thread = threading.Thread(target=run, name="udp-receiver", daemon=True)
    thread.start()
    return ReceiverHandle(sock, thread, stop_event, stats, lock)


def send_packet(packet: bytes, host: str, port: int) -> None:
    """One-shot datagram send, for tests and simple clients."""
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
        sock.sendto(packet, (host, port))


def frame_command(packet: bytes) -> bytes:
    """Length-prefix a command packet for the bridge stream."""
    if len(packet) > 9999:
        raise ValueError("frame too large for 4-digit length prefix")
    return f"{len(packet):04d}".encode("ascii") + packet


class BridgeHandle:
    """Running console bridge; duplex TCP with periodic snapshots."""

    def __init__(self, server: socket.socket, stop_event: threading.Event,
                 threads: list[threading.Thread], clients: list, lock: threading.Lock):
        self._server = server
        self._stop = stop_event
        self._threads = threads
        self._clients = clients
        self._lock = lock
        self.port = server.getsockname()[1]

    def client_count(self) -> int:
        with self._lock:
            return len(self._clients)

    def stop(self, timeout: float = 2.0) -> None:
        self._stop.set()
        try:
            self._server.close()
        except OSError:
            pass
        with self._lock:
            clients = list(self._clients)
        for client in clients:
            try:
                client.close()
            except OSError:
                pass
        for thread in self._threads:
            thread.join(timeout=timeout)


def bridge_serve(config: EndpointConfig, snapshot_provider: Callable[[], dict],
                 sink: Callable[[Command], None],
                 snapshot_period: float = DEFAULT_SNAPSHOT_PERIOD,
                 send_timeout: float = 1.0) -> BridgeHandle:
    """Serve console connections: snapshots out, framed commands in."""
    server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    server.bind((config.host, config.port))
    server.listen(8)

    stop_event = threading.Event()
    clients: list[socket.socket] = []
    lock = threading.Lock()
    threads: list[threading.Thread] = []

    def drop_client(conn: socket.socket) -> None:
        with lock:
            if conn in clients:
                clients.remove(conn)
        try:
            conn.close()
        except OSError:
            pass

    def reader(conn: socket.socket) -> None:
        buffer = b""
        while not stop_event.is_set():
            try:
                chunk = conn.recv(4096)
            except OSError:
                break
            if not chunk:
                break
            buffer += chunk
            while len(buffer) >= LENGTH_PREFIX:
                try:
                    frame_len = int(buffer[:LENGTH_PREFIX])
                except ValueError:
                    logger.warning("bridge client sent a bad length prefix; dropping it")
                    drop_client(conn)
                    return
                if len(buffer) < LENGTH_PREFIX + frame_len:
                    break
                frame = buffer[LENGTH_PREFIX:LENGTH_PREFIX + frame_len]
                buffer = buffer[LENGTH_PREFIX + frame_len:]
                try:
                    decoded = decode(frame)
                except DecodeError as err:
                    logger.debug("bridge frame dropped: %s", err)
                    continue
                sink(Command(decoded.name, decoded.values, Origin.BRIDGE))
        drop_client(conn)

    def writer() -> None:
        while not stop_event.is_set():
            snapshot = snapshot_provider()
            line = (json.dumps(snapshot, sort_keys=True) + "\n").encode("utf-8")
            with lock:
                targets = list(clients)
            for conn in targets:
                try:
                    conn.sendall(line)
                except OSError:
                    drop_client(conn)  # slow or gone
            stop_event.wait(snapshot_period)

    def acceptor() -> None:
        while not stop_event.is_set():
            try:
                conn, _addr = server.accept()
            except OSError:
                return
            conn.settimeout(send_timeout)
            with lock:
                clients.append(conn)
            t = threading.Thread(target=reader, args=(conn,), name="bridge-reader", daemon=True)
            t.start()
            threads.append(t)

    accept_thread = threading.Thread(target=acceptor, name="bridge-accept", daemon=True)
    write_thread = threading.Thread(target=writer, name="bridge-writer", daemon=True)
    threads.extend([accept_thread, write_thread])
    accept_thread.start()
    write_thread.start()
    return BridgeHandle(server, stop_event, threads, clients, lock)
