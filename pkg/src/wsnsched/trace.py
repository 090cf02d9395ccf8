"""Trace records and their comma-separated line format."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TextIO


@dataclass(frozen=True)
class TraceRecord:
    time_ms: float
    cluster: int
    node: str
    kind: str
    detail: str = ""
    energy_delta_mj: float = 0.0

    def __post_init__(self):
        if "," in self.detail or "\n" in self.detail:
            raise ValueError(f"trace detail may not contain commas or newlines: {self.detail!r}")


def fmt_ms(value: float) -> str:
    """Times and durations: ``0.6``, ``60.0``."""
    return repr(round(float(value), 6) + 0.0)


def fmt_num(value: float) -> str:
    """Compact number for details: ``6``, ``0.4``."""
    return format(round(float(value), 6) + 0.0, "g")


def fmt_energy(value: float) -> str:
    return format(round(float(value), 9) + 0.0, ".6g")


class Trace:
    """Append-only record store, read back in (time, emission order)."""

    def __init__(self):
        self._items: list[tuple[float, int, TraceRecord]] = []

    def emit(self, record: TraceRecord) -> TraceRecord:
        self._items.append((round(record.time_ms, 9), len(self._items), record))
        return record

    def add(self, time_ms, cluster, node, kind, detail="", energy=0.0) -> TraceRecord:
        return self.emit(TraceRecord(time_ms, cluster, node, kind, detail, energy))

    @property
    def records(self) -> list[TraceRecord]:
        return [r for _, _, r in sorted(self._items, key=lambda it: (it[0], it[1]))]

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self.records)


def format_record(r: TraceRecord) -> str:
    return ",".join(
        [fmt_ms(r.time_ms), str(r.cluster), r.node, r.kind, r.detail, fmt_energy(r.energy_delta_mj)]
    )


def emit_trace(trace, sink: TextIO) -> None:
    """Write one line per record. Write errors propagate to the caller."""
    records = trace.records if isinstance(trace, Trace) else trace
    for r in records:
        sink.write(format_record(r) + "\n")


def parse_record(line: str) -> TraceRecord:
    time_ms, cluster, node, kind, detail, energy = line.rstrip("\n").split(",")
    return TraceRecord(float(time_ms), int(cluster), node, kind, detail, float(energy))
