"""Executable workflow machine: compilation and transition semantics.

A compiled machine holds one runtime branch per blueprint branch. Each
branch exposes, at its single active state, exactly the operations the
blueprint declares there; requesting anything else is rejected without
running a single step handler. An accepted operation deactivates the
source state, runs its step sequence in order, activates the target,
and verifies single activation. The first failing step restores the
source state and aborts the remaining steps, so a failed operation
never moves the machine.

Cascades after an accepted transition:

* upward: an operation with ``emits`` wiring invokes the named parent
  operation as a child signal, unless this execution is itself part of
  a downward reset (the initiating parent already reflects the result);
* downward: an operation with ``reinit-child`` wiring invokes each
  named child's reinitiation operation at the child's active state,
  unless this execution was invoked by a child signal (loop guard).

External requests are additionally gated: operations that children
signal cannot be invoked directly, and a nested branch only accepts
requests while its parent sits at a state from which one of the
branch's signals is accepted. Every dispatch of a signal decrements a
per-request budget; exhaustion aborts and indicates broken wiring.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Any, Callable, IO, Iterable, Mapping, Sequence

from .definition import OpKind, WorkflowDefinition
from .validation import child_activity_states, signaled_operation_names


class MachineError(Exception):
    """Base class for runtime machine errors."""


class CompileError(MachineError):
    pass


class UnknownBranchError(MachineError):
    pass


class UnknownOperationError(MachineError):
    """Operation name is not declared anywhere on the branch."""


class MissingReinitError(MachineError):
    """Active state has no reinitiation operation (unvalidated blueprint)."""


class SignalBudgetError(MachineError):
    """Cascade exceeded the signal budget; the wiring loops."""


class ReentrancyError(MachineError):
    """A step handler attempted to drive the machine it runs under."""


class ActivationInvariantError(MachineError):
    """More or fewer than one active state in a branch."""


ACCEPTED = "Accepted"
REJECTED_INVALID = "RejectedInvalid"
REJECTED_STEP_FAILURE = "RejectedStepFailure"

_TRIGGER_COMMAND = "command"
_TRIGGER_PARENT_SIGNAL = "parent-signal"  # upward, Rule-2 style
_TRIGGER_CHILD_REINIT = "child-reinit"    # downward, Rule-3 style


@dataclass
class StepResult:
    ok: bool
    detail: Any = None


# Step handler: (payload values, active-state snapshot) -> StepResult | bool | None.
# Returning None counts as success. Handlers must not drive the machine.
HandlerFn = Callable[[Sequence[float], Mapping[str, str]], "StepResult | bool | None"]


@dataclass(slots=True)
class TransitionRecord:
    seq: int
    branch: str
    from_digits: str
    to_digits: str
    operation: str
    outcome: str
    trigger: str
    timestamp: float
    cascade: list[tuple[str, str, str, str]] = field(default_factory=list)
    detail: Any = None

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "branch": self.branch,
            "from": self.from_digits,
            "to": self.to_digits,
            "operation": self.operation,
            "outcome": self.outcome,
            "trigger": self.trigger,
            "timestamp": self.timestamp,
            "cascade": [list(c) for c in self.cascade],
            "detail": self.detail,
        }


@dataclass(slots=True)
class _RuntimeOperation:
    name: str
    kind: OpKind
    source_index: int
    target_index: int
    step_names: tuple[str, ...]
    steps: tuple[HandlerFn, ...]
    emits: str | None
    reinit_children: tuple[str, ...]
    indirect: bool


class _RuntimeState:
    __slots__ = ("digits", "operations", "active")

    def __init__(self, digits: str, operations: dict[str, _RuntimeOperation]):
        self.digits = digits
        self.operations = operations
        self.active = False


class BranchRuntime:
    """One branch of the compiled machine; states materialized once."""

    def __init__(self, name: str, level: int, states: list[_RuntimeState],
                 start_index: int, parent: str | None, parent_digit: int | None,
                 activity_states: frozenset[str]):
        self.name = name
        self.level = level
        self.states = states
        self.index_of = {s.digits: i for i, s in enumerate(states)}
        self.active_index = start_index
        self.start_index = start_index
        states[start_index].active = True
        self.parent = parent
        self.parent_digit = parent_digit
        self.activity_states = activity_states
        self.all_operation_names: set[str] = set()
        for s in states:
            self.all_operation_names.update(s.operations)

    @property
    def active_state(self) -> _RuntimeState:
        return self.states[self.active_index]

    @property
    def active_digits(self) -> str:
        return self.active_state.digits

    def check_unique_activation(self) -> None:
        flags = [i for i, s in enumerate(self.states) if s.active]
        if flags != [self.active_index]:
            raise ActivationInvariantError(
                f"branch {self.name!r}: active flags {flags}, index {self.active_index}"
            )


def _noop_step(_payload: Sequence[float], _snapshot: Mapping[str, str]) -> None:
    return None


class RuntimeMachine:
    """A compiled workflow; mutate only through a single serialized caller."""

    def __init__(self, branches: dict[str, BranchRuntime], signal_budget: int,
                 clock: Callable[[], float]):
        self.branches = branches
        self.signal_budget = signal_budget
        self.clock = clock
        self.transition_log: list[TransitionRecord] = []
        self.hierarchy_depth = max(b.level for b in branches.values())
        self._seq = 0
        self._in_dispatch = False

    # -- queries ---------------------------------------------------------

    def active_states(self) -> dict[str, str]:
        return {name: br.active_digits for name, br in self.branches.items()}

    def branch(self, name: str) -> BranchRuntime:
        try:
            return self.branches[name]
        except KeyError:
            raise UnknownBranchError(f"unknown branch {name!r}") from None

    def check_unique_activation(self) -> None:
        for br in self.branches.values():
            br.check_unique_activation()

    def valid_operations(self, branch: str) -> dict[str, bool]:
        """Externally invokable operation names of a branch, with current validity."""
        br = self.branch(branch)
        result: dict[str, bool] = {}
        gated = self._branch_inactive(br)
        table = br.active_state.operations
        for state in br.states:
            for name, op in state.operations.items():
                if op.indirect:
                    continue
                enabled = (not gated) and name in table and not table[name].indirect
                result[name] = result.get(name, False) or enabled
        return result

    def snapshot_indices(self) -> tuple[int, ...]:
        return tuple(br.active_index for br in self.branches.values())

    def restore_indices(self, indices: tuple[int, ...]) -> None:
        for br, idx in zip(self.branches.values(), indices):
            br.active_state.active = False
            br.active_index = idx
            br.active_state.active = True

    # -- dispatch --------------------------------------------------------

    def request_operation(self, branch: str, operation: str,
                          payload: Sequence[float] | None = None) -> TransitionRecord:
        """Request an operation by name; returns the transition record."""
        if self._in_dispatch:
            raise ReentrancyError("step handlers must not drive the machine")
        br = self.branch(branch)
        if operation not in br.all_operation_names:
            raise UnknownOperationError(
                f"operation {operation!r} is not declared on branch {branch!r}"
            )
        self._in_dispatch = True
        try:
            budget = [self.signal_budget]
            return self._execute(br, operation, payload, _TRIGGER_COMMAND, budget)
        finally:
            self._in_dispatch = False

    def reinitialize(self, branch: str) -> TransitionRecord:
        """Return a branch to its start state via its reinitiation operation."""
        br = self.branch(branch)
        rio = self._reinit_operation(br)
        if rio is None:
            raise MissingReinitError(
                f"branch {branch!r} has no reinitiation at state {br.active_digits!r}"
            )
        return self.request_operation(branch, rio.name)

    # -- internals -------------------------------------------------------

    def _reinit_operation(self, br: BranchRuntime) -> _RuntimeOperation | None:
        for op in br.active_state.operations.values():
            if op.kind is OpKind.RIO:
                return op
        return None

    def _branch_inactive(self, br: BranchRuntime) -> bool:
        if br.parent is None:
            return False
        parent = self.branches[br.parent]
        return parent.active_digits not in br.activity_states

    def _record(self, br: BranchRuntime, op_name: str, outcome: str, from_digits: str,
                to_digits: str, trigger: str, detail: Any = None) -> TransitionRecord:
        self._seq += 1
        record = TransitionRecord(
            seq=self._seq,
            branch=br.name,
            from_digits=from_digits,
            to_digits=to_digits,
            operation=op_name,
            outcome=outcome,
            trigger=trigger,
            timestamp=self.clock(),
            detail=detail,
        )
        self.transition_log.append(record)
        return record

    def _execute(self, br: BranchRuntime, op_name: str,
                 payload: Sequence[float] | None, trigger: str,
                 budget: list[int]) -> TransitionRecord:
        if trigger != _TRIGGER_COMMAND:
            budget[0] -= 1
            if budget[0] < 0:
                raise SignalBudgetError(
                    f"signal budget exhausted dispatching {br.name}.{op_name}; "
                    "check the reinit/signal wiring for loops"
                )

        source = br.active_state
        op = source.operations.get(op_name)

        if trigger == _TRIGGER_COMMAND:
            if self._branch_inactive(br):
                return self._record(
                    br, op_name, REJECTED_INVALID, source.digits, source.digits, trigger,
                    detail=f"branch inactive: parent {br.parent!r} at "
                           f"{self.branches[br.parent].active_digits!r}",
                )
            if op is not None and op.indirect:
                return self._record(
                    br, op_name, REJECTED_INVALID, source.digits, source.digits, trigger,
                    detail="operation is child-signaled; not directly invokable",
                )

        if op is None:
            return self._record(
                br, op_name, REJECTED_INVALID, source.digits, source.digits, trigger,
                detail=f"operation invalid at state {source.digits!r}",
            )

        # Algorithm: deactivate, run steps, activate target, verify.
        snapshot = self.active_states()
        source.active = False
        for step_name, step in zip(op.step_names, op.steps):
            result = step(payload if payload is not None else (), snapshot)
            ok = True
            detail = None
            if isinstance(result, StepResult):
                ok, detail = result.ok, result.detail
            elif isinstance(result, bool):
                ok = result
            if not ok:
                source.active = True  # restore; remaining steps skipped
                return self._record(
                    br, op_name, REJECTED_STEP_FAILURE, source.digits, source.digits,
                    trigger, detail={"failed_step": step_name, "reason": detail},
                )

        target = br.states[op.target_index]
        from_digits = source.digits
        br.active_index = op.target_index
        target.active = True
        br.check_unique_activation()

        record = self._record(br, op_name, ACCEPTED, from_digits, target.digits, trigger)

        # upward signal, suppressed for downward resets
        if op.emits and br.parent is not None and trigger != _TRIGGER_CHILD_REINIT:
            induced = self._execute(
                self.branches[br.parent], op.emits, None, _TRIGGER_PARENT_SIGNAL, budget
            )
            record.cascade.append(
                ("parent-signal", induced.branch, induced.operation, induced.outcome)
            )

        # downward resets, never triggered by child-signaled executions
        if op.reinit_children and trigger != _TRIGGER_PARENT_SIGNAL:
            for child_name in op.reinit_children:
                child = self.branches.get(child_name)
                if child is None:
                    raise UnknownBranchError(f"reinit-child names unknown branch {child_name!r}")
                rio = self._reinit_operation(child)
                if rio is None:
                    raise MissingReinitError(
                        f"branch {child_name!r} has no reinitiation at state "
                        f"{child.active_digits!r}"
                    )
                induced = self._execute(child, rio.name, None, _TRIGGER_CHILD_REINIT, budget)
                record.cascade.append(
                    ("child-reinit", induced.branch, induced.operation, induced.outcome)
                )

        return record

    # -- export ----------------------------------------------------------

    def export_jsonl(self, stream: IO[str]) -> int:
        """Write the transition log as JSON Lines; returns the record count."""
        count = 0
        for record in self.transition_log:
            stream.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
            count += 1
        return count


def compile_machine(defn: WorkflowDefinition, handlers: Mapping[str, HandlerFn],
                    noop_steps: Iterable[str] = (), signal_budget: int = 16,
                    clock: Callable[[], float] | None = None) -> RuntimeMachine:
    """Compile a blueprint into a runtime machine at its start states.

    Every step name must resolve to a registered handler or be listed in
    ``noop_steps``. The blueprint should have passed validation; compile
    itself only checks what it needs to build the runtime.
    """
    if signal_budget <= 0:
        raise CompileError(f"signal budget must be positive, got {signal_budget}")
    noop = set(noop_steps)
    branches: dict[str, BranchRuntime] = {}

    for branch in defn.branches:
        digits_list = branch.state_digits()
        if branch.start not in digits_list:
            raise CompileError(
                f"branch {branch.name!r}: start state {branch.start!r} not declared"
            )
        index_of = {d: i for i, d in enumerate(digits_list)}
        signaled = signaled_operation_names(defn, branch.name)
        states: list[_RuntimeState] = []
        for state in branch.states:
            table: dict[str, _RuntimeOperation] = {}
            for op in state.operations:
                if op.target not in index_of:
                    raise CompileError(
                        f"branch {branch.name!r}: operation {op.name!r} targets "
                        f"undeclared state {op.target!r}"
                    )
                resolved: list[HandlerFn] = []
                for step in op.steps:
                    if step in handlers:
                        resolved.append(handlers[step])
                    elif step in noop:
                        resolved.append(_noop_step)
                    else:
                        raise CompileError(
                            f"step {step!r} of {branch.name}.{op.name} has no handler"
                        )
                table[op.name] = _RuntimeOperation(
                    name=op.name,
                    kind=op.kind,
                    source_index=index_of[op.source],
                    target_index=index_of[op.target],
                    step_names=op.steps,
                    steps=tuple(resolved),
                    emits=op.emits,
                    reinit_children=op.reinit_children,
                    indirect=op.name in signaled,
                )
            states.append(_RuntimeState(state.digits, table))

        parent = branch.parent.branch if branch.parent else None
        parent_digit = branch.parent.digit_index if branch.parent else None
        branches[branch.name] = BranchRuntime(
            name=branch.name,
            level=branch.level,
            states=states,
            start_index=index_of[branch.start],
            parent=parent,
            parent_digit=parent_digit,
            activity_states=child_activity_states(defn, branch),
        )

    return RuntimeMachine(branches, signal_budget, clock or time.time)
