"""Command dispatch: named commands in, workflow operations or data out.

The dispatcher owns the single serialized command stream of a compiled
machine. Each command name maps to exactly one target, either a
``(branch, operation)`` pair or a pure data sink that never touches
workflow state (streaming poses, console side channels). Payload
preprocessing is limited to arity checking and unit scaling.

Flags are passive records: one named boolean per watched branch digit,
rewritten from the digit values of every accepted transition. Nothing
reads them back into dispatch decisions, so deleting the registry
changes no verdict (the test hook ``disable_flags`` exercises exactly
that).

Build order is rigid: register handlers, commands and flags first, then
``build()`` compiles the machine and freezes the registries.
"""

from __future__ import annotations

import enum
import logging
import queue
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from .definition import WorkflowDefinition
from .machine import (
    ACCEPTED,
    HandlerFn,
    RuntimeMachine,
    TransitionRecord,
    compile_machine,
)
from .validation import classify_incoming, IncomingKind, validate

logger = logging.getLogger(__name__)

COMMAND_LENGTH = 16

VARIABLE = "variable"  # arity spec: any positive multiple of `arity_unit`
ANY = "any"


class LifecycleError(RuntimeError):
    """Registration attempted after the dispatcher was built."""


class ConfigError(ValueError):
    """Inconsistent dispatcher configuration."""


class TransitionCheckError(RuntimeError):
    """Machine state after dispatch contradicts the declared edge."""


class Origin(enum.Enum):
    DATAGRAM = "datagram"
    LOCAL = "local"
    BRIDGE = "bridge"


@dataclass(frozen=True)
class Command:
    """A named request with a flat numeric payload."""

    name: str
    values: tuple[float, ...] = ()
    origin: Origin = Origin.LOCAL

    def __post_init__(self) -> None:
        if len(self.name) > COMMAND_LENGTH:
            raise ConfigError(f"command name {self.name!r} exceeds {COMMAND_LENGTH} characters")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def padded(self) -> str:
        return self.name.ljust(COMMAND_LENGTH, "_")


@dataclass(frozen=True)
class _OperationBinding:
    branch: str
    operation: str
    arity: int | str
    arity_unit: int = 1
    scale: float = 1.0


@dataclass(frozen=True)
class _DataBinding:
    sink: str
    fn: Callable[[tuple[float, ...], Origin], Any]
    arity: int | str
    arity_unit: int = 1
    scale: float = 1.0


@dataclass(frozen=True)
class FlagState:
    value: bool
    transition_seq: int


@dataclass
class DispatchResult:
    kind: str  # "transition" | "data" | "rejected"
    command: Command
    record: TransitionRecord | None = None
    sink: str | None = None
    data: Any = None
    reason: str | None = None

    @property
    def outcome(self) -> str:
        """Uniform verdict string for logs and comparisons."""
        if self.kind == "transition":
            return self.record.outcome
        if self.kind == "data":
            return "Data"
        return f"Rejected:{self.reason}"


def _check_arity(binding, values: tuple[float, ...]) -> str | None:
    if binding.arity == ANY:
        return None
    if binding.arity == VARIABLE:
        unit = binding.arity_unit
        if len(values) == 0 or len(values) % unit != 0:
            return f"expected a positive multiple of {unit} values, got {len(values)}"
        return None
    if len(values) != binding.arity:
        return f"expected {binding.arity} values, got {len(values)}"
    return None


class DispatcherBuilder:
    """Collects handlers, command bindings and flag names, then builds."""

    def __init__(self) -> None:
        self._handlers: dict[str, HandlerFn] = {}
        self._bindings: dict[str, _OperationBinding | _DataBinding] = {}
        self._flags: dict[tuple[str, int], str] = {}
        self._built = False

    def _check_open(self) -> None:
        if self._built:
            raise LifecycleError("registration after build is not allowed")

    def register_handler(self, name: str, fn: HandlerFn) -> "DispatcherBuilder":
        self._check_open()
        if name in self._handlers:
            raise ConfigError(f"duplicate handler {name!r}")
        self._handlers[name] = fn
        return self

    def register_operation_command(self, name: str, branch: str, operation: str,
                                   arity: int | str = 0, arity_unit: int = 1,
                                   scale: float = 1.0) -> "DispatcherBuilder":
        self._check_open()
        if name in self._bindings:
            raise ConfigError(f"duplicate command {name!r}")
        self._bindings[name] = _OperationBinding(branch, operation, arity, arity_unit, scale)
        return self

    def register_data_command(self, name: str, sink: str,
                              fn: Callable[[tuple[float, ...], Origin], Any],
                              arity: int | str = ANY, arity_unit: int = 1,
                              scale: float = 1.0) -> "DispatcherBuilder":
        self._check_open()
        if name in self._bindings:
            raise ConfigError(f"duplicate command {name!r}")
        self._bindings[name] = _DataBinding(sink, fn, arity, arity_unit, scale)
        return self

    def register_flag(self, name: str, branch: str, digit_index: int) -> "DispatcherBuilder":
        self._check_open()
        key = (branch, digit_index)
        if key in self._flags or name in self._flags.values():
            raise ConfigError(f"duplicate flag {name!r} or digit {key}")
        self._flags[key] = name
        return self

    def build(self, defn: WorkflowDefinition, *, signal_budget: int = 16,
              clock: Callable[[], float] | None = None,
              noop_steps: Sequence[str] = ()) -> "Dispatcher":
        self._check_open()
        report = validate(defn)
        if not report.ok:
            raise ConfigError(f"definition invalid:\n{report}")
        machine = compile_machine(
            defn, self._handlers, noop_steps=noop_steps,
            signal_budget=signal_budget, clock=clock,
        )
        classification = classify_incoming(defn)
        targets: dict[tuple[str, str, str], str] = {}
        for branch in defn.branches:
            for op in branch.operations():
                targets[(branch.name, op.name, op.source)] = op.target

        for cmd_name, binding in self._bindings.items():
            if isinstance(binding, _OperationBinding):
                try:
                    branch = defn.branch(binding.branch)
                except KeyError:
                    raise ConfigError(
                        f"command {cmd_name!r} targets unknown branch {binding.branch!r}"
                    ) from None
                if binding.operation not in branch.operation_names():
                    raise ConfigError(
                        f"command {cmd_name!r} targets unknown operation "
                        f"{binding.branch}.{binding.operation}"
                    )
                if classification[(binding.branch, binding.operation)] is IncomingKind.INDIRECT:
                    raise ConfigError(
                        f"command {cmd_name!r} targets child-signaled operation "
                        f"{binding.branch}.{binding.operation}"
                    )
        for (branch_name, idx), flag in self._flags.items():
            try:
                branch = defn.branch(branch_name)
            except KeyError:
                raise ConfigError(f"flag {flag!r} watches unknown branch {branch_name!r}") from None
            if not (0 <= idx < len(branch.start)):
                raise ConfigError(f"flag {flag!r} digit index {idx} out of range")

        self._built = True
        return Dispatcher(machine, dict(self._bindings), dict(self._flags), targets)


class Dispatcher:
    """Routes commands on one machine; not safe for concurrent dispatch."""

    def __init__(self, machine: RuntimeMachine,
                 bindings: Mapping[str, _OperationBinding | _DataBinding],
                 flags: Mapping[tuple[str, int], str],
                 targets: Mapping[tuple[str, str, str], str]):
        self.machine = machine
        self._bindings = dict(bindings)
        self._flag_names = dict(flags)
        self._targets = dict(targets)
        self._flags: dict[str, FlagState] = {
            name: FlagState(False, 0) for name in flags.values()
        }
        self._flags_enabled = True
        self._initialize_flags()

    # -- flags -------------------------------------------------------------

    def _initialize_flags(self) -> None:
        if not self._flags_enabled:
            return
        snapshot = self.machine.active_states()
        for (branch, idx), name in self._flag_names.items():
            self._flags[name] = FlagState(snapshot[branch][idx] == "1", 0)

    def _update_flags(self, new_records: Sequence[TransitionRecord]) -> None:
        if not self._flags_enabled:
            return
        for record in new_records:
            if record.outcome != ACCEPTED:
                continue
            for (branch, idx), name in self._flag_names.items():
                if branch == record.branch:
                    self._flags[name] = FlagState(record.to_digits[idx] == "1", record.seq)

    def get_flags(self) -> dict[str, FlagState]:
        """Immutable snapshot of the flag registry."""
        return dict(self._flags)

    def disable_flags(self) -> None:
        """Test hook: stop maintaining flags; dispatch verdicts must not change."""
        self._flags_enabled = False
        self._flags = {name: FlagState(False, 0) for name in self._flags}

    # -- dispatch ------------------------------------------------------------

    def dispatch(self, command: Command) -> DispatchResult:
        binding = self._bindings.get(command.name)
        if binding is None:
            return DispatchResult(
                "rejected", command, reason=f"unknown command {command.padded!r}"
            )

        problem = _check_arity(binding, command.values)
        if problem is not None:
            return DispatchResult("rejected", command, reason=f"arity mismatch: {problem}")

        values = command.values
        if binding.scale != 1.0:
            values = tuple(v * binding.scale for v in values)

        if isinstance(binding, _DataBinding):
            result = binding.fn(values, command.origin)
            return DispatchResult("data", command, sink=binding.sink, data=result)

        log_start = len(self.machine.transition_log)
        record = self.machine.request_operation(
            binding.branch, binding.operation, payload=values
        )
        self._verify_transition(record)
        self._update_flags(self.machine.transition_log[log_start:])
        return DispatchResult("transition", command, record=record)

    def _verify_transition(self, record: TransitionRecord) -> None:
        actual = self.machine.active_states()[record.branch]
        if record.outcome == ACCEPTED:
            declared = self._targets.get(
                (record.branch, record.operation, record.from_digits)
            )
            if declared is not None and actual != declared:
                raise TransitionCheckError(
                    f"{record.branch}.{record.operation} accepted but machine sits at "
                    f"{actual!r}, declared target {declared!r}"
                )
        elif actual != record.from_digits:
            raise TransitionCheckError(
                f"{record.branch}.{record.operation} rejected but machine moved to {actual!r}"
            )

    def snapshot(self) -> dict:
        """State snapshot for consoles: branches, enabled operations, flags."""
        machine = self.machine
        branches = {}
        for name, br in machine.branches.items():
            branches[name] = {
                "digits": br.active_digits,
                "operations": machine.valid_operations(name),
            }
        return {
            "branches": branches,
            "flags": {name: state.value for name, state in self.get_flags().items()},
        }


class DispatchLoop:
    """Bounded queue plus consumer thread around a dispatcher.

    Producers block when the queue is full (backpressure). Results go to
    the optional callback on the consumer thread.
    """

    def __init__(self, dispatcher: Dispatcher, capacity: int = 1024,
                 on_result: Callable[[DispatchResult], None] | None = None):
        self.dispatcher = dispatcher
        self._queue: queue.Queue[Command | None] = queue.Queue(maxsize=capacity)
        self._on_result = on_result
        self._thread = threading.Thread(target=self._run, name="dispatch-loop", daemon=True)
        self._started = False

    def start(self) -> "DispatchLoop":
        self._started = True
        self._thread.start()
        return self

    def submit(self, command: Command, timeout: float | None = None) -> None:
        self._queue.put(command, timeout=timeout)

    def stop(self, timeout: float = 5.0) -> None:
        if self._started:
            self._queue.put(None)
            self._thread.join(timeout=timeout)

    def _run(self) -> None:
        while True:
            command = self._queue.get()
            if command is None:
                return
            try:
                result = self.dispatcher.dispatch(command)
                if self._on_result is not None:
                    self._on_result(result)
            except Exception:
                # a raising handler or result callback is a bug in the
                # wiring; keep consuming so producers never deadlock
                logger.exception("dispatch of %s failed", command.name)
