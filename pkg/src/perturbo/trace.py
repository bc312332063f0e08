"""Per-oracle-query attack traces and their JSONL persistence.

One record per counted oracle query. The line-delimited format is
append-safe: a run interrupted partway leaves a valid prefix on disk.
First line is a header object carrying the config hash and seed; each
following line is one record.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import PerturboError


@dataclass(frozen=True)
class TraceRecord:
    query_index: int
    delta_probe: float
    decision: int
    best_distance: float
    elapsed_ms: float


@dataclass
class AttackTrace:
    """Validated sequence of per-query records."""

    header: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        expected = len(self.records) + 1
        if record.query_index != expected:
            raise PerturboError(
                f"query_index {record.query_index} out of order (expected {expected})"
            )
        if record.decision not in (-1, 1):
            raise PerturboError("decision must be +1 or -1")
        if self.records:
            last = self.records[-1]
            if record.best_distance > last.best_distance:
                raise PerturboError("best_distance must be non-increasing")
            if record.elapsed_ms < last.elapsed_ms:
                raise PerturboError("elapsed_ms must be non-decreasing")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def best_at_budget(self, budget: int) -> float:
        """Best distance at the last record with query_index <= budget."""
        best = None
        for rec in self.records:
            if rec.query_index > budget:
                break
            best = rec.best_distance
        if best is None:
            raise PerturboError(f"trace has no record at or below budget {budget}")
        return best


def write_trace(trace: AttackTrace, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(trace.header, sort_keys=True) + "\n")
        for rec in trace.records:
            fh.write(json.dumps(asdict(rec), sort_keys=True) + "\n")


class TraceWriter:
    """Incremental JSONL writer; keeps partial traces valid on interrupt."""

    def __init__(self, path, header: dict):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8")
        self._fh.write(json.dumps(header, sort_keys=True) + "\n")
        self._fh.flush()

    def write(self, record: TraceRecord) -> None:
        self._fh.write(json.dumps(asdict(record), sort_keys=True) + "\n")

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()


def load_trace(path) -> AttackTrace:
    """Load and validate a JSONL trace; invalid files are rejected."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise PerturboError(f"{path}: empty trace file")
    header = json.loads(lines[0])
    if not isinstance(header, dict):
        raise PerturboError(f"{path}: first line must be a header object")
    trace = AttackTrace(header=header)
    for line in lines[1:]:
        raw = json.loads(line)
        trace.append(TraceRecord(
            query_index=int(raw["query_index"]),
            delta_probe=float(raw["delta_probe"]),
            decision=int(raw["decision"]),
            best_distance=float(raw["best_distance"]),
            elapsed_ms=float(raw["elapsed_ms"]),
        ))
    return trace
