"""Workflow blueprint types and the line-oriented ``.hfsm`` text format.

A definition is a forest of state branches. Each branch is a flat FSM
whose states are fixed-length binary digit strings; a branch at level
N+1 mirrors one digit of its parent branch. Operations are edges
attached to their source state and carry the runtime wiring: ordered
step handler names, an optional upward signal (``emits``) naming an
operation on the parent branch, and optional downward reset wiring
(``reinit-child``) naming child branches to reinitialize.

Grammar (one directive per line, ``#`` starts a comment, blank lines
ignored)::

    workflow <name>
    version <text>                      # optional, default "1"
    branch <name> level <N> start <digits>
    parent <branch> digit <index>       # inside a branch block, at most once
    state <digits>
    op <name> kind <SCO|SMO|RIO> from <digits> to <digits>
       [steps <s1,s2,...>] [emits <parent-op>] [reinit-child <branch>]...

Digits are binary. Operation kinds: ``SCO`` changes state, ``SMO``
keeps it, ``RIO`` returns the branch to its start state. Parsing checks
grammar and local uniqueness only; semantic rules live in
:mod:`procflow.validation`.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_DIGITS = re.compile(r"^[01]+$")


class ParseError(ValueError):
    """Syntax or local-uniqueness error in a definition file."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, col {column}: {message}")
        self.line = line
        self.column = column


class OpKind(enum.Enum):
    SCO = "SCO"  # state-changing: edge to a different state
    SMO = "SMO"  # state-maintaining: self-loop
    RIO = "RIO"  # reinitiation: edge back to the branch start state


@dataclass(frozen=True)
class OperationDef:
    """One edge of a branch, attached to its source state."""

    name: str
    kind: OpKind
    source: str
    target: str
    steps: tuple[str, ...] = ()
    emits: str | None = None
    reinit_children: tuple[str, ...] = ()


@dataclass(frozen=True)
class StateDef:
    digits: str
    operations: tuple[OperationDef, ...] = ()


@dataclass(frozen=True)
class ParentLink:
    branch: str
    digit_index: int


@dataclass(frozen=True)
class BranchDef:
    name: str
    level: int
    start: str
    states: tuple[StateDef, ...]
    parent: ParentLink | None = None

    def state(self, digits: str) -> StateDef:
        for s in self.states:
            if s.digits == digits:
                return s
        raise KeyError(digits)

    def state_digits(self) -> tuple[str, ...]:
        return tuple(s.digits for s in self.states)

    def operations(self) -> Iterator[OperationDef]:
        for s in self.states:
            yield from s.operations

    def operation_names(self) -> set[str]:
        return {op.name for op in self.operations()}


@dataclass(frozen=True)
class WorkflowDefinition:
    name: str
    branches: tuple[BranchDef, ...]
    version: str = "1"

    def branch(self, name: str) -> BranchDef:
        for b in self.branches:
            if b.name == name:
                return b
        raise KeyError(name)

    def branch_names(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.branches)

    def children_of(self, name: str) -> tuple[BranchDef, ...]:
        return tuple(b for b in self.branches if b.parent and b.parent.branch == name)


class _BranchBuilder:
    def __init__(self, name: str, level: int, start: str, line: int):
        self.name = name
        self.level = level
        self.start = start
        self.line = line
        self.parent: ParentLink | None = None
        self.state_order: list[str] = []
        self.ops: dict[str, list[OperationDef]] = {}

    def build(self) -> BranchDef:
        states = tuple(
            StateDef(d, tuple(self.ops.get(d, ()))) for d in self.state_order
        )
        return BranchDef(self.name, self.level, self.start, states, self.parent)


def _expect_ident(token: str, what: str, line: int) -> str:
    if not _IDENT.match(token):
        raise ParseError(f"invalid {what} {token!r}", line)
    return token


def _expect_digits(token: str, what: str, line: int) -> str:
    if not _DIGITS.match(token):
        raise ParseError(f"invalid {what} {token!r}: digits must be binary", line)
    return token


def _expect_keyword(tokens: list[str], pos: int, keyword: str, line: int) -> None:
    if pos >= len(tokens) or tokens[pos] != keyword:
        found = tokens[pos] if pos < len(tokens) else "end of line"
        raise ParseError(f"expected {keyword!r}, found {found!r}", line)


def parse_definition(text: str) -> WorkflowDefinition:
    """Parse definition text into a structurally complete blueprint."""
    workflow_name: str | None = None
    version = "1"
    builders: list[_BranchBuilder] = []
    current: _BranchBuilder | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        directive = tokens[0]

        if directive == "workflow":
            if workflow_name is not None:
                raise ParseError("duplicate workflow directive", lineno)
            if len(tokens) != 2:
                raise ParseError("usage: workflow <name>", lineno)
            workflow_name = _expect_ident(tokens[1], "workflow name", lineno)

        elif directive == "version":
            if len(tokens) != 2:
                raise ParseError("usage: version <text>", lineno)
            version = tokens[1]

        elif directive == "branch":
            if workflow_name is None:
                raise ParseError("branch before workflow directive", lineno)
            if len(tokens) != 6:
                raise ParseError("usage: branch <name> level <N> start <digits>", lineno)
            name = _expect_ident(tokens[1], "branch name", lineno)
            if any(b.name == name for b in builders):
                raise ParseError(f"duplicate branch {name!r}", lineno)
            _expect_keyword(tokens, 2, "level", lineno)
            try:
                level = int(tokens[3])
            except ValueError:
                raise ParseError(f"invalid level {tokens[3]!r}", lineno) from None
            if level < 1:
                raise ParseError("level must be >= 1", lineno)
            _expect_keyword(tokens, 4, "start", lineno)
            start = _expect_digits(tokens[5], "start state", lineno)
            current = _BranchBuilder(name, level, start, lineno)
            builders.append(current)

        elif directive == "parent":
            if current is None:
                raise ParseError("parent directive outside a branch block", lineno)
            if current.parent is not None:
                raise ParseError(f"duplicate parent directive for branch {current.name!r}", lineno)
            if len(tokens) != 4:
                raise ParseError("usage: parent <branch> digit <index>", lineno)
            pname = _expect_ident(tokens[1], "parent branch name", lineno)
            _expect_keyword(tokens, 2, "digit", lineno)
            try:
                idx = int(tokens[3])
            except ValueError:
                raise ParseError(f"invalid digit index {tokens[3]!r}", lineno) from None
            if idx < 0:
                raise ParseError("digit index must be >= 0", lineno)
            current.parent = ParentLink(pname, idx)

        elif directive == "state":
            if current is None:
                raise ParseError("state directive outside a branch block", lineno)
            if len(tokens) != 2:
                raise ParseError("usage: state <digits>", lineno)
            digits = _expect_digits(tokens[1], "state", lineno)
            if digits in current.state_order:
                raise ParseError(f"duplicate state {digits!r} in branch {current.name!r}", lineno)
            current.state_order.append(digits)

        elif directive == "op":
            if current is None:
                raise ParseError("op directive outside a branch block", lineno)
            op = _parse_op(tokens, lineno)
            siblings = current.ops.setdefault(op.source, [])
            if any(o.name == op.name for o in siblings):
                raise ParseError(
                    f"duplicate operation {op.name!r} at state {op.source!r} "
                    f"in branch {current.name!r}",
                    lineno,
                )
            siblings.append(op)

        else:
            raise ParseError(f"unknown directive {directive!r}", lineno)

    if workflow_name is None:
        raise ParseError("missing workflow directive", 1)
    return WorkflowDefinition(workflow_name, tuple(b.build() for b in builders), version)


def _parse_op(tokens: list[str], lineno: int) -> OperationDef:
    if len(tokens) < 8:
        raise ParseError(
            "usage: op <name> kind <SCO|SMO|RIO> from <digits> to <digits> "
            "[steps <s1,...>] [emits <op>] [reinit-child <branch>]",
            lineno,
        )
    name = _expect_ident(tokens[1], "operation name", lineno)
    _expect_keyword(tokens, 2, "kind", lineno)
    try:
        kind = OpKind(tokens[3])
    except ValueError:
        raise ParseError(f"invalid kind {tokens[3]!r}: expected SCO, SMO or RIO", lineno) from None
    _expect_keyword(tokens, 4, "from", lineno)
    source = _expect_digits(tokens[5], "source state", lineno)
    _expect_keyword(tokens, 6, "to", lineno)
    target = _expect_digits(tokens[7], "target state", lineno)

    steps: tuple[str, ...] = ()
    emits: str | None = None
    reinit: list[str] = []
    pos = 8
    while pos < len(tokens):
        clause = tokens[pos]
        if pos + 1 >= len(tokens):
            raise ParseError(f"clause {clause!r} is missing its value", lineno)
        value = tokens[pos + 1]
        if clause == "steps":
            if steps:
                raise ParseError("duplicate steps clause", lineno)
            steps = tuple(
                _expect_ident(s.strip(), "step name", lineno) for s in value.split(",")
            )
        elif clause == "emits":
            if emits is not None:
                raise ParseError("duplicate emits clause", lineno)
            emits = _expect_ident(value, "emits target", lineno)
        elif clause == "reinit-child":
            child = _expect_ident(value, "reinit-child target", lineno)
            if child in reinit:
                raise ParseError(f"duplicate reinit-child {child!r}", lineno)
            reinit.append(child)
        else:
            raise ParseError(f"unknown op clause {clause!r}", lineno)
        pos += 2

    return OperationDef(name, kind, source, target, steps, emits, tuple(reinit))


def serialize_definition(defn: WorkflowDefinition) -> str:
    """Canonical text form; reparses to a structurally equal definition."""
    lines = [f"workflow {defn.name}"]
    if defn.version != "1":
        lines.append(f"version {defn.version}")
    for branch in defn.branches:
        lines.append("")
        lines.append(f"branch {branch.name} level {branch.level} start {branch.start}")
        if branch.parent:
            lines.append(f"parent {branch.parent.branch} digit {branch.parent.digit_index}")
        for state in branch.states:
            lines.append(f"state {state.digits}")
        for state in branch.states:
            for op in state.operations:
                parts = [
                    f"op {op.name} kind {op.kind.value} from {op.source} to {op.target}"
                ]
                if op.steps:
                    parts.append(f"steps {','.join(op.steps)}")
                if op.emits:
                    parts.append(f"emits {op.emits}")
                for child in op.reinit_children:
                    parts.append(f"reinit-child {child}")
                lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def load_definition(path: str | Path) -> WorkflowDefinition:
    return parse_definition(Path(path).read_text())


def bundled_definition(name: str) -> WorkflowDefinition:
    """Load one of the definitions shipped with the package.

    Available: ``tms_navigation``, ``femoroplasty_navigation``,
    ``tms_core``, ``trajectory_grid``.
    """
    from importlib.resources import files

    text = files("procflow").joinpath("definitions", f"{name}.hfsm").read_text()
    return parse_definition(text)
