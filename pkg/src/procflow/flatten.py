"""Single-level expansion of a hierarchical workflow.

Builds the equivalent flat machine by exploring the product of all
branch states under every externally invokable operation, starting from
the initial snapshot. Digit combinations that the wiring can never
produce are pruned automatically because they are unreachable.

Flat state labels concatenate the branch digit strings in declaration
order, except that a single-digit nested branch contributes nothing:
its state is mirrored verbatim by the parent digit it anchors. For the
bundled TMS core workflow this reproduces the four-critical-operation
single-level design (planned / digitized / registered / poses planned)
with its 8 reachable states out of the 16 combinations.

The expansion is a cross-check artifact: operations are renamed
``<branch>__<op>`` and carry the original step lists, so the flat
machine accepts exactly the command alphabet of the hierarchy.
"""

from __future__ import annotations

from .definition import (
    BranchDef,
    OperationDef,
    OpKind,
    StateDef,
    WorkflowDefinition,
)
from .machine import RuntimeMachine, compile_machine
from .validation import classify_incoming, IncomingKind

DEFAULT_STATE_CAP = 4096

FLAT_BRANCH = "flat"


class FlattenError(ValueError):
    pass


def _all_step_names(defn: WorkflowDefinition) -> set[str]:
    steps: set[str] = set()
    for branch in defn.branches:
        for op in branch.operations():
            steps.update(op.steps)
    return steps


def _label_layout(defn: WorkflowDefinition) -> list[str]:
    """Branches whose digits appear in flat labels.

    A single-digit nested branch is omitted: the parent digit it
    anchors mirrors its state verbatim. Multi-digit nested branches
    keep their digits (the parent digit only summarizes them).
    """
    return [
        b.name
        for b in defn.branches
        if not (b.parent is not None and len(b.start) == 1)
    ]


def _flat_label(snapshot: dict[str, str], layout: list[str]) -> str:
    return "".join(snapshot[name] for name in layout)


def external_alphabet(defn: WorkflowDefinition) -> list[tuple[str, str]]:
    """(branch, operation) pairs a command source may invoke, in declaration order."""
    classification = classify_incoming(defn)
    alphabet: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    for branch in defn.branches:
        for op in branch.operations():
            key = (branch.name, op.name)
            if key in seen:
                continue
            if classification[key] is IncomingKind.DIRECT:
                alphabet.append(key)
                seen.add(key)
    return alphabet


def expand_flat(defn: WorkflowDefinition, max_states: int = DEFAULT_STATE_CAP) -> WorkflowDefinition:
    """Expand a hierarchy into the equivalent single-branch workflow."""
    if len(defn.branches) == 1 and defn.branches[0].parent is None:
        return defn  # already flat

    machine = compile_machine(defn, {}, noop_steps=_all_step_names(defn))
    layout = _label_layout(defn)
    alphabet = external_alphabet(defn)
    step_names = {
        (b.name, op.name): op.steps for b in defn.branches for op in b.operations()
    }

    initial = machine.snapshot_indices()
    start_label = _flat_label(machine.active_states(), layout)

    # BFS over reachable snapshots.
    labels: dict[tuple[int, ...], str] = {initial: start_label}
    order: list[tuple[int, ...]] = [initial]
    edges: dict[tuple[int, ...], list[tuple[str, str, tuple[int, ...]]]] = {}
    queue = [initial]
    while queue:
        current = queue.pop(0)
        edges[current] = []
        for branch_name, op_name in alphabet:
            machine.restore_indices(current)
            record = machine.request_operation(branch_name, op_name)
            if record.outcome != "Accepted":
                continue
            after = machine.snapshot_indices()
            edges[current].append((branch_name, op_name, after))
            if after not in labels:
                if len(labels) >= max_states:
                    raise FlattenError(
                        f"expansion exceeds the {max_states}-state cap; "
                        "raise the cap explicitly if this is intended"
                    )
                labels[after] = _flat_label(machine.active_states(), layout)
                order.append(after)
                queue.append(after)

    if len(set(labels.values())) != len(labels):
        raise FlattenError("flat state labels collide; mirrored digits are inconsistent")

    states: list[StateDef] = []
    for snap in order:
        ops = []
        for branch_name, op_name, after in edges[snap]:
            source = labels[snap]
            target = labels[after]
            if source == target:
                kind = OpKind.SMO
            elif target == start_label:
                kind = OpKind.RIO if source != target else OpKind.SMO
            else:
                kind = OpKind.SCO
            ops.append(
                OperationDef(
                    name=f"{branch_name}__{op_name}",
                    kind=kind,
                    source=source,
                    target=target,
                    steps=step_names[(branch_name, op_name)],
                )
            )
        states.append(StateDef(labels[snap], tuple(ops)))

    flat_branch = BranchDef(
        name=FLAT_BRANCH,
        level=1,
        start=start_label,
        states=tuple(states),
        parent=None,
    )
    return WorkflowDefinition(f"{defn.name}_flat", (flat_branch,), defn.version)
