"""Semantic validation of workflow blueprints.

Rule findings use stable identifiers:

R1  every state of a nested branch (level > 1) must offer a
    reinitiation operation (kind ``RIO``)
R2  every state-changing operation (``SCO``, or ``RIO`` leaving a
    different state) of a branch that has a parent must declare an
    upward signal (``emits``)
R3  every direct edge whose target state anchors a child branch at
    digit value 0 must declare ``reinit-child`` for that child;
    conversely, an edge that is itself invoked by a child signal must
    not carry any ``reinit-child`` wiring (loop guard)

Structural checks (S1..S12) cover start-state membership, digit-length
consistency, cross references, kind/edge shape, and hierarchy links.
Warnings (W1..W3) flag suspicious but legal constructs, e.g. states
unreachable from the branch start.

An operation is classified *indirect* when some child branch names it
as an ``emits`` target: such edges are driven by child signals, never
invoked directly. Everything else is *direct*. The classification is
derived from the wiring, not declared.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .definition import BranchDef, OpKind, OperationDef, WorkflowDefinition


class IncomingKind(enum.Enum):
    DIRECT = "direct"      # invoked by commands or local wiring
    INDIRECT = "indirect"  # invoked by a child branch's signal


@dataclass(frozen=True)
class Finding:
    rule: str
    branch: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"{self.rule} [{self.branch}/{self.subject}] {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Finding, ...]
    warnings: tuple[Finding, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> set[str]:
        return {f.rule for f in self.violations}

    def __str__(self) -> str:
        if self.ok and not self.warnings:
            return "OK"
        lines = [str(f) for f in self.violations]
        lines += [f"warning: {f}" for f in self.warnings]
        return "\n".join(lines)


def signaled_operation_names(defn: WorkflowDefinition, branch: str) -> set[str]:
    """Operation names on ``branch`` that child branches signal via ``emits``."""
    names: set[str] = set()
    for child in defn.children_of(branch):
        for op in child.operations():
            if op.emits:
                names.add(op.emits)
    return names


def classify_incoming(defn: WorkflowDefinition) -> dict[tuple[str, str], IncomingKind]:
    """Per-(branch, operation name) direct/indirect classification."""
    result: dict[tuple[str, str], IncomingKind] = {}
    for branch in defn.branches:
        signaled = signaled_operation_names(defn, branch.name)
        for name in branch.operation_names():
            kind = IncomingKind.INDIRECT if name in signaled else IncomingKind.DIRECT
            result[(branch.name, name)] = kind
    return result


def child_activity_states(defn: WorkflowDefinition, child: BranchDef) -> frozenset[str]:
    """Parent states in which the child branch is live.

    A nested branch can only run while the parent sits at a state from
    which one of the child's upward signals is accepted, i.e. at a
    source state of an edge the child emits. Elsewhere the child's
    operations are rejected.
    """
    if child.parent is None:
        return frozenset()
    try:
        parent = defn.branch(child.parent.branch)
    except KeyError:
        return frozenset()
    emitted = {op.emits for op in child.operations() if op.emits}
    return frozenset(
        op.source for op in parent.operations() if op.name in emitted
    )


def _anchor_children(defn: WorkflowDefinition, branch: BranchDef):
    """(child, digit index) pairs for children anchored on this branch."""
    return [(c, c.parent.digit_index) for c in defn.children_of(branch.name)]


def validate(defn: WorkflowDefinition) -> ValidationReport:
    """Check rules R1-R3 plus structural constraints; never raises."""
    violations: list[Finding] = []
    warnings: list[Finding] = []
    names = set(defn.branch_names())

    def bad(rule: str, branch: str, subject: str, message: str) -> None:
        violations.append(Finding(rule, branch, subject, message))

    def warn(rule: str, branch: str, subject: str, message: str) -> None:
        warnings.append(Finding(rule, branch, subject, message))

    for branch in defn.branches:
        digit_len = len(branch.start)
        declared = set(branch.state_digits())

        if branch.start not in declared:
            bad("S1", branch.name, branch.start, "start state is not a declared state")
        for state in branch.states:
            if len(state.digits) != digit_len:
                bad("S2", branch.name, state.digits,
                    f"digit length {len(state.digits)} differs from start state length {digit_len}")

        for op in branch.operations():
            subject = f"{op.name}@{op.source}"
            if op.source not in declared:
                bad("S3", branch.name, subject, f"source state {op.source!r} is not declared")
            if op.target not in declared:
                bad("S3", branch.name, subject, f"target state {op.target!r} is not declared")
            if op.kind is OpKind.SMO and op.source != op.target:
                bad("S4", branch.name, subject, "SMO must keep the state (source == target)")
            if op.kind is OpKind.SCO and op.source == op.target:
                bad("S4", branch.name, subject, "SCO must change the state (source != target)")
            if op.kind is OpKind.RIO and op.target != branch.start:
                bad("S4", branch.name, subject,
                    f"RIO must target the start state {branch.start!r}, not {op.target!r}")

        # hierarchy links
        if branch.level == 1 and branch.parent is not None:
            bad("S5", branch.name, "parent", "level 1 branch must not declare a parent")
        if branch.level > 1 and branch.parent is None:
            bad("S5", branch.name, "parent", f"level {branch.level} branch requires a parent link")
        if branch.parent is not None:
            if branch.parent.branch not in names:
                bad("S6", branch.name, "parent",
                    f"parent branch {branch.parent.branch!r} does not exist")
            else:
                parent = defn.branch(branch.parent.branch)
                if branch.level != parent.level + 1:
                    bad("S7", branch.name, "parent",
                        f"level {branch.level} under level {parent.level} parent "
                        "(must be exactly one deeper)")
                if not (0 <= branch.parent.digit_index < len(parent.start)):
                    bad("S8", branch.name, "parent",
                        f"digit index {branch.parent.digit_index} out of range for "
                        f"parent states of length {len(parent.start)}")

        # emits wiring
        parent_branch = (
            defn.branch(branch.parent.branch)
            if branch.parent is not None and branch.parent.branch in names
            else None
        )
        for op in branch.operations():
            subject = f"{op.name}@{op.source}"
            if op.emits is not None:
                if branch.parent is None:
                    bad("S10", branch.name, subject, "emits declared but branch has no parent")
                elif parent_branch is not None and op.emits not in parent_branch.operation_names():
                    bad("S9", branch.name, subject,
                        f"emits target {op.emits!r} is not an operation of parent "
                        f"{parent_branch.name!r}")
                if op.source == op.target:
                    warn("W2", branch.name, subject,
                         "self-loop declares a parent signal; the parent state will not change")
            for child_name in op.reinit_children:
                child_names = {c.name for c in defn.children_of(branch.name)}
                if child_name not in child_names:
                    bad("S11", branch.name, subject,
                        f"reinit-child {child_name!r} is not a child of this branch")

        # duplicate digit anchors
        seen_digits: dict[int, str] = {}
        for child, idx in _anchor_children(defn, branch):
            if idx in seen_digits:
                bad("S12", branch.name, f"digit {idx}",
                    f"children {seen_digits[idx]!r} and {child.name!r} anchor the same digit")
            seen_digits[idx] = child.name

        # W1: unreachable states (within-branch edges of any kind)
        if branch.start in declared:
            reachable = {branch.start}
            frontier = [branch.start]
            edges: dict[str, set[str]] = {}
            for op in branch.operations():
                edges.setdefault(op.source, set()).add(op.target)
            while frontier:
                current = frontier.pop()
                for nxt in edges.get(current, ()):
                    if nxt in declared and nxt not in reachable:
                        reachable.add(nxt)
                        frontier.append(nxt)
            for state in branch.states:
                if state.digits not in reachable:
                    warn("W1", branch.name, state.digits, "state unreachable from start")

    # R1: nested branches need a reinitiation everywhere
    for branch in defn.branches:
        if branch.level <= 1:
            continue
        for state in branch.states:
            if not any(op.kind is OpKind.RIO for op in state.operations):
                bad("R1", branch.name, state.digits,
                    "state of a nested branch lacks a reinitiation operation")

    # R2: state-changing ops of a nested branch must signal the parent
    for branch in defn.branches:
        if branch.parent is None:
            continue
        for op in branch.operations():
            if op.source == op.target or op.kind is OpKind.SMO:
                continue
            if op.emits is None:
                bad("R2", branch.name, f"{op.name}@{op.source}",
                    "state-changing operation does not signal the parent branch")

    # R3: direct edges into child anchor states must reset the child;
    # child-signaled edges must not.
    classification = classify_incoming(defn)
    for branch in defn.branches:
        anchors = _anchor_children(defn, branch)
        for op in branch.operations():
            subject = f"{op.name}@{op.source}"
            kind = classification.get((branch.name, op.name), IncomingKind.DIRECT)
            if kind is IncomingKind.INDIRECT:
                if op.reinit_children:
                    bad("R3", branch.name, subject,
                        "child-signaled edge must not reinitialize a child "
                        "(infinite callback loop)")
                continue
            if len(op.target) != len(branch.start):
                continue  # S2 already reported
            for child, idx in anchors:
                if op.target[idx] == "0" and child.name not in op.reinit_children:
                    bad("R3", branch.name, subject,
                        f"direct edge into anchor state {op.target!r} must reinitialize "
                        f"child {child.name!r}")
                if op.target[idx] == "1" and child.name in op.reinit_children:
                    warn("W3", branch.name, subject,
                         f"edge marks child {child.name!r} complete yet reinitializes it")

    return ValidationReport(tuple(violations), tuple(warnings))
