"""Trace events and the line-oriented trace text format.

    B <pc, lowercase hex, no prefix> <T|N>
    C <incoming pid, decimal>

One event per line, LF-terminated, no header, no blank lines.
"""

from __future__ import annotations

import io
import re
from typing import Iterable, NamedTuple, TextIO, Union

from csafsim.errors import TraceParseError, TraceStructureError


class Branch(NamedTuple):
    pc: int
    taken: bool


class Switch(NamedTuple):
    pid: int


TraceEvent = Union[Branch, Switch]
Trace = list[TraceEvent]


def check_structure(trace: Iterable[TraceEvent]) -> None:
    for ev in trace:
        if type(ev) is not Switch:
            raise TraceStructureError("trace must begin with a context-switch event")
        return


def format_event(ev: TraceEvent) -> str:
    if type(ev) is Branch:
        return f"B {ev.pc:x} {'T' if ev.taken else 'N'}"
    return f"C {ev.pid}"


def write_trace(trace: Iterable[TraceEvent], sink: TextIO) -> None:
    trace = list(trace)
    check_structure(trace)
    sink.write("".join(format_event(ev) + "\n" for ev in trace))


def dumps(trace: Iterable[TraceEvent]) -> str:
    buf = io.StringIO()
    write_trace(trace, buf)
    return buf.getvalue()


def _parse_line(lineno: int, line: str) -> TraceEvent:
    parts = line.split(" ")
    kind = parts[0]
    if kind == "B" and len(parts) == 3:
        pc_text, outcome = parts[1], parts[2]
        if not re.fullmatch(r"[0-9a-f]+", pc_text):
            raise TraceParseError(lineno, f"bad branch address {pc_text!r}")
        pc = int(pc_text, 16)
        if outcome not in ("T", "N"):
            raise TraceParseError(lineno, f"outcome must be T or N, got {outcome!r}")
        return Branch(pc, outcome == "T")
    if kind == "C" and len(parts) == 2:
        if not (parts[1].isascii() and parts[1].isdigit()):
            raise TraceParseError(lineno, f"bad pid {parts[1]!r}")
        return Switch(int(parts[1]))
    if not line:
        raise TraceParseError(lineno, "empty line")
    raise TraceParseError(lineno, f"unrecognised event {line!r}")


def parse_trace(source: TextIO | str) -> Trace:
    text = source if isinstance(source, str) else source.read()
    if not text:
        raise TraceStructureError("trace is empty")
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    trace = [_parse_line(n, line) for n, line in enumerate(lines, start=1)]
    check_structure(trace)
    return trace


def read_trace_file(path) -> Trace:
    with open(path, encoding="ascii", newline="") as fh:
        return parse_trace(fh)


def write_trace_file(trace: Iterable[TraceEvent], path) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        write_trace(trace, fh)
