"""Per-stage wall-clock accounting for one pipeline run."""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator

STAGES = ("decode", "extract", "distance", "cluster", "render")

# reference seconds per hour of 1 fps video, shown next to measured totals
REFERENCE_RUNTIMES_S = {"time": 13.0, "inception": 86.0, "uid": 216.0, "scda": 74.0}


@dataclass
class RunReport:
    method: str
    n_frames: int = 0
    n_clusters: int = 0
    lam: float = 0.0
    wall_times: dict[str, float] = field(default_factory=lambda: {s: 0.0 for s in STAGES})
    fid: float | None = None

    @property
    def total(self) -> float:
        return sum(self.wall_times.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["total"] = self.total
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        times = {s: float(d.get("wall_times", {}).get(s, 0.0)) for s in STAGES}
        if any(t < 0 for t in times.values()):
            raise ValueError("stage times must be non-negative")
        return cls(d["method"], int(d.get("n_frames", 0)), int(d.get("n_clusters", 0)),
                   float(d.get("lambda", 0.0)), times, d.get("fid"))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "RunReport":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.wall_times[name] += time.perf_counter() - start

    def timed_iter(self, items: Iterable, name: str = "decode") -> Iterator:
        """Yield from ``items``, charging the time spent producing them to ``name``."""
        it = iter(items)
        while True:
            start = time.perf_counter()
            try:
                item = next(it)
            except StopIteration:
                self.wall_times[name] += time.perf_counter() - start
                return
            self.wall_times[name] += time.perf_counter() - start
            yield item


def format_table(reports: list[RunReport], reference: bool = True, markdown: bool = False) -> str:
    """Timing table, aligned text by default or a markdown pipe table."""
    cols = ["method", "frames", *STAGES, "total"]
    if reference:
        cols += ["ref_1h", "ratio"]
    rows = []
    for r in reports:
        row = [r.method, str(r.n_frames)] + [f"{r.wall_times[s]:.3f}" for s in STAGES]
        row.append(f"{r.total:.3f}")
        if reference:
            ref = REFERENCE_RUNTIMES_S.get(r.method)
            row.append(f"{ref:.0f}" if ref else "-")
            row.append(f"{r.total / ref:.3f}" if ref else "-")
        rows.append(row)
    if markdown:
        lines = ["| " + " | ".join(cols) + " |", "|" + "|".join("---" for _ in cols) + "|"]
        return "\n".join(lines + ["| " + " | ".join(row) + " |" for row in rows])
    widths = [max(len(c), *(len(row[i]) for row in rows)) if rows else len(c)
              for i, c in enumerate(cols)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in rows]
    return "\n".join(lines)
