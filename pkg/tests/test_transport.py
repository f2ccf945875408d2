import json
import socket
import threading
import time

import pytest

from procflow.dispatch import Command, Origin
from procflow.transport import (
    EndpointConfig,
    bridge_serve,
    frame_command,
    send_packet,
    serve,
)
from procflow.wire import RouteTable, encode


def wait_until(predicate, timeout=5.0, interval=0.005):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(interval)
    return predicate()


class TestUdpReceiver:
    def test_loopback_delivery_without_drops(self):
        received = []
        handle = serve(EndpointConfig(), received.append)
        try:
            for i in range(1000):
                send_packet(encode("DIGITIZE_PT", [float(i), 0.0, 0.0]),
                            "127.0.0.1", handle.port)
            assert wait_until(lambda: len(received) == 1000)
            stats = handle.stats()
            assert stats.received == 1000
            assert stats.delivered == 1000
            assert stats.dropped == 0
            assert received[0].origin is Origin.DATAGRAM
            assert received[0].name == "DIGITIZE_PT"
        finally:
            handle.stop()

    def test_malformed_datagrams_counted_and_dropped(self):
        received = []
        handle = serve(EndpointConfig(), received.append)
        try:
            good = 0
            bad = 0
            for i in range(200):
                if i % 2 == 0:
                    send_packet(encode("STREAM_POSE", [0, 0, 0, 1, 0, 0, 0]),
                                "127.0.0.1", handle.port)
                    good += 1
                else:
                    send_packet(b"garbage!", "127.0.0.1", handle.port)
                    bad += 1
            assert wait_until(lambda: handle.stats().received == 200)
            stats = handle.stats()
            assert stats.dropped == bad
            assert stats.delivered == good
            assert len(received) == good
        finally:
            handle.stop()

    def test_sixty_hertz_stream_sustained(self):
        received = []
        handle = serve(EndpointConfig(), received.append)
        try:
            count = 300  # 5 seconds at 60 Hz
            period = 1.0 / 60.0
            start = time.monotonic()
            for i in range(count):
                target = start + i * period
                delay = target - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                send_packet(encode("STREAM_POSE", [0, 0, 0, 1, float(i), 0, 0]),
                            "127.0.0.1", handle.port)
            elapsed = time.monotonic() - start
            assert wait_until(lambda: len(received) == count)
            assert handle.stats().dropped == 0
            rate = count / elapsed
            assert rate >= 59.0
        finally:
            handle.stop()

    def test_route_table_enforced(self):
        received = []
        table = RouteTable().add("STREAM_POSE", 0, 7, "poses")
        handle = serve(EndpointConfig(), received.append, route_table=table)
        try:
            send_packet(encode("STREAM_POSE", [1.0]), "127.0.0.1", handle.port)  # bad arity
            send_packet(encode("STREAM_POSE", [0, 0, 0, 1, 0, 0, 0]), "127.0.0.1", handle.port)
            assert wait_until(lambda: handle.stats().received == 2)
            assert handle.stats().dropped == 1
            assert len(received) == 1
        finally:
            handle.stop()

    def test_stop_is_clean_and_idempotent(self):
        handle = serve(EndpointConfig(), lambda cmd: None)
        handle.stop()
        handle.stop()


class _Console:
    """Minimal bridge client for tests."""

    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=5)
        self.sock.settimeout(5)
        self._buffer = b""

    def snapshots(self, n=1):
        out = []
        while len(out) < n:
            chunk = self.sock.recv(4096)
            if not chunk:
                break
            self._buffer += chunk
            while b"\n" in self._buffer:
                line, self._buffer = self._buffer.split(b"\n", 1)
                out.append(json.loads(line))
        return out

    def send(self, name, values=()):
        self.sock.sendall(frame_command(encode(name, values)))

    def close(self):
        self.sock.close()


class TestBridge:
    def test_inbound_frame_reaches_sink_with_bridge_origin(self):
        commands = []
        handle = bridge_serve(EndpointConfig(), lambda: {"seq": 0}, commands.append,
                              snapshot_period=0.01)
        try:
            console = _Console(handle.port)
            console.send("REGISTRATION_REG")
            assert wait_until(lambda: len(commands) == 1)
            assert commands[0] == Command("REGISTRATION_REG", (), Origin.BRIDGE)
            console.close()
        finally:
            handle.stop()

    def test_snapshots_reflect_provider_updates(self):
        state = {"seq": 0}

        def provider():
            state["seq"] += 1
            return dict(state)

        handle = bridge_serve(EndpointConfig(), provider, lambda cmd: None,
                              snapshot_period=0.01)
        try:
            console = _Console(handle.port)
            snaps = console.snapshots(3)
            seqs = [s["seq"] for s in snaps]
            assert seqs == sorted(seqs)
            assert len(set(seqs)) == len(seqs)
            console.close()
        finally:
            handle.stop()

    def test_two_consoles_receive_identical_streams(self):
        counter = {"seq": 0}

        def provider():
            counter["seq"] += 1
            return {"seq": counter["seq"], "payload": "x" * 10}

        handle = bridge_serve(EndpointConfig(), provider, lambda cmd: None,
                              snapshot_period=0.01)
        try:
            a = _Console(handle.port)
            b = _Console(handle.port)
            assert wait_until(lambda: handle.client_count() == 2)
            snaps_a = a.snapshots(5)
            snaps_b = b.snapshots(5)
            seqs_a = {s["seq"] for s in snaps_a}
            seqs_b = {s["seq"] for s in snaps_b}
            # overlapping window of the same stream
            assert seqs_a & seqs_b
            for snap in snaps_a:
                if snap["seq"] in seqs_b:
                    match = next(s for s in snaps_b if s["seq"] == snap["seq"])
                    assert match == snap
            a.close()
            b.close()
        finally:
            handle.stop()

    def test_split_frames_reassembled(self):
        commands = []
        handle = bridge_serve(EndpointConfig(), lambda: {}, commands.append,
                              snapshot_period=0.05)
        try:
            console = _Console(handle.port)
            frame = frame_command(encode("DIGITIZE_PT", [1.0, 2.0, 3.0]))
            console.sock.sendall(frame[:7])
            time.sleep(0.05)
            console.sock.sendall(frame[7:])
            assert wait_until(lambda: len(commands) == 1)
            assert commands[0].values == (1.0, 2.0, 3.0)
            console.close()
        finally:
            handle.stop()

    def test_disconnected_client_is_pruned(self):
        handle = bridge_serve(EndpointConfig(), lambda: {"seq": 1}, lambda cmd: None,
                              snapshot_period=0.01)
        try:
            console = _Console(handle.port)
            assert wait_until(lambda: handle.client_count() == 1)
            console.close()
            assert wait_until(lambda: handle.client_count() == 0)
        finally:
            handle.stop()


class TestPollContract:
    def test_end_to_end_latency_within_two_poll_periods(self):
        arrivals = []

        def sink(cmd):
            arrivals.append(time.monotonic())

        poll = 0.025
        handle = serve(EndpointConfig(), sink, poll_period=poll)
        try:
            latencies = []
            for i in range(100):
                sent = time.monotonic()
                send_packet(encode("STREAM_POSE", [0, 0, 0, 1, float(i), 0, 0]),
                            "127.0.0.1", handle.port)
                assert wait_until(lambda: len(arrivals) == i + 1)
                latencies.append(arrivals[-1] - sent)
            latencies.sort()
            p99 = latencies[98]
            assert p99 <= 2 * poll + 0.01, f"p99 latency {p99 * 1000:.1f} ms"
        finally:
            handle.stop()

    def test_sink_runs_on_receiver_thread_not_caller(self):
        import threading

        sink_threads = []

        def sink(cmd):
            sink_threads.append(threading.current_thread().name)

        handle = serve(EndpointConfig(), sink)
        try:
            send_packet(encode("STREAM_POSE", [0, 0, 0, 1, 0, 0, 0]),
                        "127.0.0.1", handle.port)
            assert wait_until(lambda: len(sink_threads) == 1)
            assert sink_threads[0] == "udp-receiver"
            assert sink_threads[0] != threading.current_thread().name
        finally:
            handle.stop()
