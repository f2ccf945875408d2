"""Datagram codec for string-framed commands.

Wire format, byte exact:

    [16-byte ASCII header][ASCII payload]

The header is the command name from the alphabet ``A-Z 0-9 _``,
right-padded with ``_`` to exactly 16 bytes. Because padding uses
``_``, a command name must not end with an underscore of its own. The
payload is the numeric values rendered ``%.6f`` and comma-separated,
empty for bare commands. A full packet must fit one datagram
(1400 bytes). Standard payload arities are 0 (bare), 3 (point),
6 (pose) and 7 (quaternion pose / joint vector); anything else is legal
only for routes registered as variable-length.

Decoding never raises for an unknown header: the result is flagged
unknown so the dispatcher can log and reject it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

HEADER_LENGTH = 16
MAX_PACKET_BYTES = 1400
PAD = "_"
HEADER_ALPHABET = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")
STANDARD_ARITIES = (0, 3, 6, 7)


class WireError(ValueError):
    pass


class EncodeError(WireError):
    pass


class DecodeError(WireError):
    pass


def encode(name: str, values: Sequence[float] = ()) -> bytes:
    """Render a command packet; ``decode`` inverts it to 6 decimals."""
    if not name:
        raise EncodeError("command name is empty")
    if len(name) > HEADER_LENGTH:
        raise EncodeError(f"command name {name!r} exceeds {HEADER_LENGTH} characters")
    if name.endswith(PAD):
        raise EncodeError(f"command name {name!r} must not end with the pad character")
    bad = set(name) - HEADER_ALPHABET
    if bad:
        raise EncodeError(f"command name {name!r} uses illegal characters {sorted(bad)}")
    for v in values:
        if not math.isfinite(v):
            raise EncodeError(f"non-finite payload value {v!r}")
    header = name.ljust(HEADER_LENGTH, PAD)
    body = ",".join(f"{float(v):.6f}" for v in values)
    packet = (header + body).encode("ascii")
    if len(packet) > MAX_PACKET_BYTES:
        raise EncodeError(f"packet of {len(packet)} bytes exceeds {MAX_PACKET_BYTES}")
    return packet


@dataclass(frozen=True)
class Route:
    name: str
    index: int
    arity: int | None  # None: variable length
    destination: str


class RouteTable:
    """Unique command headers mapped to numbered destinations."""

    def __init__(self) -> None:
        self._routes: dict[str, Route] = {}

    def add(self, name: str, index: int, arity: int | None, destination: str) -> "RouteTable":
        if name in self._routes:
            raise WireError(f"duplicate route {name!r}")
        self._routes[name] = Route(name, index, arity, destination)
        return self

    def get(self, name: str) -> Route | None:
        return self._routes.get(name)

    def __len__(self) -> int:
        return len(self._routes)

    def __iter__(self):
        return iter(self._routes.values())


@dataclass(frozen=True)
class Decoded:
    name: str
    values: tuple[float, ...]
    route_index: int | None
    destination: str | None
    known: bool


def decode(packet: bytes, table: RouteTable | None = None) -> Decoded:
    """Parse a packet; resolves the route when a table is supplied."""
    if len(packet) < HEADER_LENGTH:
        raise DecodeError(f"short packet: {len(packet)} bytes, header needs {HEADER_LENGTH}")
    if len(packet) > MAX_PACKET_BYTES:
        raise DecodeError(f"oversize packet: {len(packet)} bytes")
    try:
        header = packet[:HEADER_LENGTH].decode("ascii")
        body = packet[HEADER_LENGTH:].decode("ascii")
    except UnicodeDecodeError as err:
        raise DecodeError(f"non-ASCII packet: {err}") from None
    if set(header) - HEADER_ALPHABET:
        raise DecodeError(f"illegal header characters in {header!r}")
    name = header.rstrip(PAD)
    if not name:
        raise DecodeError("empty command name")

    values: tuple[float, ...] = ()
    if body:
        parts = body.split(",")
        parsed = []
        for part in parts:
            try:
                v = float(part)
            except ValueError:
                raise DecodeError(f"malformed number {part!r}") from None
            if not math.isfinite(v):
                raise DecodeError(f"non-finite payload value {part!r}")
            parsed.append(v)
        values = tuple(parsed)

    if table is None:
        return Decoded(name, values, None, None, True)

    route = table.get(name)
    if route is None:
        return Decoded(name, values, None, None, False)
    if route.arity is not None and len(values) != route.arity:
        raise DecodeError(
            f"route {name!r} expects {route.arity} values, got {len(values)}"
        )
    return Decoded(name, values, route.index, route.destination, True)
