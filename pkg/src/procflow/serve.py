"""One-process engine hosting: dispatch loop, UDP intake, console bridge.

The dispatch loop is the single mutator. After every dispatch it
rebuilds a snapshot dict that the bridge writer thread publishes
verbatim, so console snapshots never observe a half-applied transition.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass

from .dispatch import Command, DispatchLoop, DispatchResult
from .scenario import RunState, Scenario, build_dispatcher
from .transport import (
    DEFAULT_POLL_PERIOD,
    DEFAULT_SNAPSHOT_PERIOD,
    EndpointConfig,
    bridge_serve,
    serve as udp_serve,
)

logger = logging.getLogger(__name__)

TRANSITION_TAIL = 50


@dataclass
class ServeConfig:
    host: str = "127.0.0.1"
    udp_port: int = 0
    bridge_port: int = 0
    poll_period: float = DEFAULT_POLL_PERIOD
    snapshot_period: float = DEFAULT_SNAPSHOT_PERIOD


class ServeSession:
    """A live workflow run driven over the network."""

    def __init__(self, scenario: Scenario, config: ServeConfig | None = None):
        self.scenario = scenario
        self.config = config or ServeConfig()
        self.state = RunState(scenario)
        self.dispatcher = build_dispatcher(scenario, self.state)
        self._snapshot_core: dict = {}
        self._snapshot_seq = 0
        self._lock = threading.Lock()
        self._loop = DispatchLoop(self.dispatcher, on_result=self._on_result)
        self._receiver = None
        self._bridge = None
        self._rebuild_snapshot(None)

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> "ServeSession":
        self._loop.start()
        self._receiver = udp_serve(
            EndpointConfig(self.config.host, self.config.udp_port),
            self._loop.submit,
            poll_period=self.config.poll_period,
        )
        self._bridge = bridge_serve(
            EndpointConfig(self.config.host, self.config.bridge_port),
            self.snapshot,
            self._loop.submit,
            snapshot_period=self.config.snapshot_period,
        )
        logger.info(
            "engine serving: udp=%s:%s bridge=%s:%s",
            self.config.host, self.udp_port, self.config.host, self.bridge_port,
        )
        return self

    def stop(self) -> None:
        if self._receiver:
            self._receiver.stop()
        if self._bridge:
            self._bridge.stop()
        self._loop.stop()

    @property
    def udp_port(self) -> int:
        return self._receiver.port if self._receiver else 0

    @property
    def bridge_port(self) -> int:
        return self._bridge.port if self._bridge else 0

    def submit(self, command: Command) -> None:
        self._loop.submit(command)

    # -- snapshots -----------------------------------------------------------

    def _on_result(self, result: DispatchResult) -> None:
        self._rebuild_snapshot(result)

    def _rebuild_snapshot(self, last: DispatchResult | None) -> None:
        machine = self.dispatcher.machine
        core = self.dispatcher.snapshot()
        core["transitions"] = [
            r.to_dict() for r in machine.transition_log[-TRANSITION_TAIL:]
        ]
        core["avg_residual"] = (
            self.state.registration.avg_residual if self.state.registration else None
        )
        core["pose_errors"] = [
            [p.translational_mm, p.rotational_deg] for p in self.state.placements
        ]
        core["armed_fault"] = self.state.fault.to_dict() if self.state.fault else None
        if last is not None and last.kind == "rejected":
            core["last_rejected_command"] = {
                "name": last.command.name,
                "reason": last.reason,
            }
        with self._lock:
            self._snapshot_core = core

    def snapshot(self) -> dict:
        with self._lock:
            core = dict(self._snapshot_core)
        self._snapshot_seq += 1
        core["seq"] = self._snapshot_seq
        core["time"] = time.time()
        return core
