"""procflow: process-controlled workflow engine.

A hierarchical finite-state-machine workflow runtime with a text
definition language, a command dispatcher with passive status flags, a
16-byte-header datagram protocol, rigid landmark registration, and a
deterministic fault-injection simulation harness.
"""

from .definition import (
    bundled_definition,
    load_definition,
    parse_definition,
    serialize_definition,
)
from .flatten import expand_flat
from .machine import compile_machine
from .scenario import fem_scenario, run_scenario, suite, tms_scenario
from .validation import validate

__version__ = "0.1.0"

__all__ = [
    "bundled_definition",
    "compile_machine",
    "expand_flat",
    "fem_scenario",
    "load_definition",
    "parse_definition",
    "run_scenario",
    "serialize_definition",
    "suite",
    "tms_scenario",
    "validate",
    "__version__",
]
