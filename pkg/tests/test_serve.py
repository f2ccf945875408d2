import json
import socket
import time

import pytest

from procflow.scenario import (
    CMD_ALL_DIGITIZED,
    CMD_DIGITIZE,
    CMD_PLACE,
    CMD_PLAN,
    CMD_PLAN_POSES,
    CMD_REGISTER,
    tms_scenario,
)
from procflow.serve import ServeConfig, ServeSession
from procflow.transport import frame_command, send_packet
from procflow.wire import encode


class ConsoleClient:
    """Test double for the operator console, speaking the bridge protocol."""

    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=5)
        self.sock.settimeout(5)
        self._buffer = b""

    def next_snapshot(self):
        while True:
            if b"\n" in self._buffer:
                line, self._buffer = self._buffer.split(b"\n", 1)
                return json.loads(line)
            chunk = self.sock.recv(65536)
            if not chunk:
                raise ConnectionError("bridge closed")
            self._buffer += chunk

    def wait_for(self, predicate, timeout=5.0):
        deadline = time.monotonic() + timeout
        snap = None
        while time.monotonic() < deadline:
            snap = self.next_snapshot()
            if predicate(snap):
                return snap
        raise AssertionError(f"condition not met within {timeout}s; last snapshot: {snap}")

    def send(self, name, values=()):
        self.sock.sendall(frame_command(encode(name, values)))

    def close(self):
        self.sock.close()


@pytest.fixture
def session():
    s = ServeSession(tms_scenario(seed=21), ServeConfig(snapshot_period=0.02)).start()
    yield s
    s.stop()


def verdicts_of(snapshot):
    return [
        (t["operation"], t["outcome"])
        for t in snapshot["transitions"]
        if t["trigger"] == "command"
    ]


class TestServeSession:
    def test_full_console_run_with_timely_verdicts(self, session):
        console = ConsoleClient(session.bridge_port)
        first = console.next_snapshot()
        assert first["branches"]["registration"]["digits"] == "000"
        assert first["branches"]["registration"]["operations"]["register"] is False
        assert first["branches"]["registration"]["operations"]["plan"] is True

        script = (
            [CMD_PLAN]
            + [CMD_DIGITIZE] * 6
            + [CMD_ALL_DIGITIZED, CMD_REGISTER, CMD_PLAN_POSES]
            + [CMD_PLACE] * 3
        )
        expected_accepted = 0
        for name in script:
            console.send(name)
            expected_accepted += 1
            want = expected_accepted
            start = time.monotonic()
            console.wait_for(
                lambda s: sum(
                    1 for _, outcome in verdicts_of(s) if outcome == "Accepted"
                ) >= want
            )
            assert time.monotonic() - start < 0.2  # verdict visible within 200 ms

        final = console.wait_for(
            lambda s: s["branches"]["registration"]["digits"] == "111"
        )
        assert final["flags"]["registered"] is True
        assert final["avg_residual"] is not None
        assert len(final["pose_errors"]) == 3
        console.close()

    def test_forced_register_at_start_rejected_and_logged_once(self, session):
        console = ConsoleClient(session.bridge_port)
        snap = console.next_snapshot()
        assert snap["branches"]["registration"]["operations"]["register"] is False
        console.send(CMD_REGISTER)  # bypasses any client-side gating
        snap = console.wait_for(
            lambda s: any(o == "RejectedInvalid" for _, o in verdicts_of(s))
        )
        rejections = [
            t for t in snap["transitions"]
            if t["operation"] == "register" and t["outcome"] == "RejectedInvalid"
        ]
        assert len(rejections) == 1
        assert snap["branches"]["registration"]["digits"] == "000"
        console.close()

    def test_udp_commands_drive_the_same_machine(self, session):
        console = ConsoleClient(session.bridge_port)
        send_packet(encode(CMD_PLAN), "127.0.0.1", session.udp_port)
        snap = console.wait_for(
            lambda s: s["branches"]["registration"]["digits"] == "100"
        )
        assert snap["flags"]["planned"] is True
        console.close()

    def test_pose_stream_updates_without_transitions(self, session):
        console = ConsoleClient(session.bridge_port)
        before = console.next_snapshot()
        send_packet(
            encode("STREAM_POSE", [0, 0, 0, 1, 5.0, 6.0, 7.0]),
            "127.0.0.1",
            session.udp_port,
        )
        time.sleep(0.1)
        after = console.next_snapshot()
        assert len(after["transitions"]) == len(before["transitions"])
        assert session.state.latest_pose == (0, 0, 0, 1, 5.0, 6.0, 7.0)
        console.close()

    def test_armed_fault_changes_next_run_segment(self, session):
        console = ConsoleClient(session.bridge_port)
        console.send("ARM_FAULT", [2.0, 3.0])  # missing landmark #3
        console.wait_for(
            lambda s: (s.get("armed_fault") or {}).get("kind") == "MissingLandmark"
        )
        console.send(CMD_PLAN)
        for _ in range(6):
            console.send(CMD_DIGITIZE)
        console.send(CMD_ALL_DIGITIZED)
        snap = console.wait_for(
            lambda s: any(o == "RejectedStepFailure" for _, o in verdicts_of(s))
        )
        failed = [
            t for t in snap["transitions"] if t["outcome"] == "RejectedStepFailure"
        ]
        assert failed[0]["operation"] == "all_digitized"
        assert "5/6" in str(failed[0]["detail"])
        console.close()
