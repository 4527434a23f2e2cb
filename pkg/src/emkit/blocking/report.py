"""Per-phase timing report for blocking runs.

The four phases mirror the end-to-end deployment breakdown: basic blocking,
record encoding, similarity search, and matching. Phases that a run skips
stay at zero.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

PHASES = ("blocking", "encoding", "search", "matching")


@dataclass
class BlockingReport:
    timings: dict[str, float] = field(default_factory=lambda: {p: 0.0 for p in PHASES})
    candidate_count: int = 0

    @contextmanager
    def phase(self, name: str):
        if name not in self.timings:
            raise ValueError(f"unknown phase {name!r}; expected one of {PHASES}")
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] += time.perf_counter() - start

    def to_dict(self) -> dict:
        return {
            "phases": {p: self.timings[p] for p in PHASES},
            "candidates": self.candidate_count,
        }

    def format_table(self) -> str:
        header = " | ".join(f"{p:>9}" for p in PHASES)
        row = " | ".join(f"{self.timings[p]:9.3f}" for p in PHASES)
        return f"phase (s): {header}\n           {row}\ncandidates: {self.candidate_count}"
