"""Append-only infusion log and its embedded persistence.

All infusion activity lands here as numbered entries; there is no update
or delete operation anywhere in this module. ``rebuild_indices`` replays a
log into per-patient prescription state, which is both the restart path of
the file backend and the event-sourcing consistency check.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from pumplink.protocol import InfusionIndex


class LogEventType(str, Enum):
    INDEX_SERVED = "IndexServed"
    INDEX_CHANGED = "IndexChanged"
    PROPOSAL_APPROVED = "ProposalApproved"
    PROPOSAL_REJECTED = "ProposalRejected"
    INFUSION_STARTED = "InfusionStarted"
    INFUSION_COMPLETED = "InfusionCompleted"
    DEVICE_REPORT = "DeviceReport"


# Events whose payload carries a newly accepted prescription.
_INDEX_BEARING = (LogEventType.INDEX_CHANGED, LogEventType.PROPOSAL_APPROVED)


@dataclass(frozen=True)
class InfusionLogEntry:
    seq: int
    t_ms: int
    patient_id: str
    event: LogEventType
    payload: dict

    def to_wire(self) -> dict:
        return {
            "seq": self.seq,
            "t_ms": self.t_ms,
            "patient_id": self.patient_id,
            "event": self.event.value,
            "payload": self.payload,
        }

    @classmethod
    def from_wire(cls, obj: dict) -> "InfusionLogEntry":
        return cls(
            seq=int(obj["seq"]),
            t_ms=int(obj["t_ms"]),
            patient_id=str(obj["patient_id"]),
            event=LogEventType(obj["event"]),
            payload=dict(obj["payload"]),
        )


def index_from_payload(payload: dict) -> InfusionIndex:
    return InfusionIndex(
        volume_ml=Decimal(str(payload["volume_ml"])),
        rate_ml_h=Decimal(str(payload["rate_ml_h"])),
        version=int(payload["version"]),
    )


def index_to_payload(index: InfusionIndex) -> dict:
    return {
        "volume_ml": float(index.volume_ml),
        "rate_ml_h": float(index.rate_ml_h),
        "version": index.version,
    }


def rebuild_indices(entries: Iterable[InfusionLogEntry]) -> dict[str, InfusionIndex]:
    """Fold the log into each patient's current prescription.

    Later entries win; seq order is the fold order. Patients with no
    index-bearing entry are absent from the result.
    """
    state: dict[str, InfusionIndex] = {}
    for entry in sorted(entries, key=lambda e: e.seq):
        if entry.event in _INDEX_BEARING:
            state[entry.patient_id] = index_from_payload(entry.payload)
    return state


class MemoryStorage:
    """In-memory log for tests and benchmark servers."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._entries: list[InfusionLogEntry] = []

    def append(self, entry: InfusionLogEntry) -> None:
        with self._lock:
            self._entries.append(entry)

    def entries(self) -> list[InfusionLogEntry]:
        with self._lock:
            return list(self._entries)

    def close(self) -> None:
        pass


class FileStorage:
    """Single-file JSONL log; append-only, flushed per entry."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._entries: list[InfusionLogEntry] = []
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as f:
                for line_no, line in enumerate(f, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        self._entries.append(InfusionLogEntry.from_wire(json.loads(line)))
                    except (json.JSONDecodeError, KeyError, ValueError) as e:
                        raise ValueError(f"{self.path}:{line_no}: corrupt log entry: {e}")
        self._fh = self.path.open("a", encoding="utf-8")

    def append(self, entry: InfusionLogEntry) -> None:
        with self._lock:
            self._fh.write(json.dumps(entry.to_wire(), sort_keys=True) + "\n")
            self._fh.flush()
            self._entries.append(entry)

    def entries(self) -> list[InfusionLogEntry]:
        with self._lock:
            return list(self._entries)

    def close(self) -> None:
        with self._lock:
            self._fh.close()


def open_storage(path: Optional[str]) -> MemoryStorage | FileStorage:
    return FileStorage(path) if path else MemoryStorage()
