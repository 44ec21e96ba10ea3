"""Ingestion of timestamped proximity-contact logs.

The raw input is a stream of `timestamp i j class_i class_j` records from
wearable sensors sampling at a fixed resolution (20 s in the source
datasets).  Free-mixing periods (breaks, lunch) are detected from surges in
cross-class contact, sliced into fixed-length windows, and turned into
per-day observation sets; self-reported friendship nominations are parsed
for validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ObservationMatrix, ObservationSet

SECONDS_PER_DAY = 86_400


class ContactParseError(ValueError):
    """Malformed input line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass
class ContactEvent:
    timestamp: int
    i: int
    j: int
    class_i: str
    class_j: str

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("a contact needs two distinct nodes")

    @property
    def day(self) -> int:
        return self.timestamp // SECONDS_PER_DAY

    @property
    def cross_class(self) -> bool:
        return self.class_i != self.class_j


@dataclass
class BreakSchedule:
    """Non-overlapping (start, end) timestamp intervals, grouped by day."""

    intervals: dict  # day -> list of (start, end), end exclusive

    def __post_init__(self):
        for day, spans in self.intervals.items():
            for start, end in spans:
                if start >= end:
                    raise ValueError(f"empty interval on day {day}")
            for (_, e1), (s2, _) in zip(spans, spans[1:]):
                if s2 < e1:
                    raise ValueError(f"overlapping intervals on day {day}")

    def days(self) -> list[int]:
        return sorted(self.intervals)


def parse_contacts(stream) -> list[ContactEvent]:
    """Parse `timestamp i j class_i class_j` lines, preserving order."""
    events = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 5:
            raise ContactParseError(line_no, f"expected 5 fields, got {len(fields)}")
        try:
            ts, i, j = int(fields[0]), int(fields[1]), int(fields[2])
        except ValueError as exc:
            raise ContactParseError(line_no, str(exc)) from exc
        if i == j:
            raise ContactParseError(line_no, "self-contact")
        events.append(ContactEvent(ts, i, j, fields[3], fields[4]))
    return events


def detect_breaks(
    events: list[ContactEvent],
    bin_width: int = 300,
    threshold: float | None = None,
) -> BreakSchedule:
    """Locate free-mixing periods from per-bin cross-class contact counts.

    A break opens at the first bin whose cross-class count reaches the
    threshold and closes at the first later bin that drops below it.
    When no threshold is given, the median of the nonzero per-bin counts is
    used.  A gap of at most one bin between intervals is treated as a
    momentary dip and merged away.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    counts: dict[int, int] = {}
    for ev in events:
        if ev.cross_class:
            b = ev.timestamp // bin_width
            counts[b] = counts.get(b, 0) + 1
    if not counts:
        return BreakSchedule({})
    if threshold is None:
        threshold = float(np.median([c for c in counts.values() if c > 0]))

    lo, hi = min(counts), max(counts)
    intervals: list[tuple[int, int]] = []
    open_start = None
    for b in range(lo, hi + 2):
        above = counts.get(b, 0) >= threshold
        if above and open_start is None:
            open_start = b * bin_width
        elif not above and open_start is not None:
            intervals.append((open_start, b * bin_width))
            open_start = None

    merged: list[tuple[int, int]] = []
    for start, end in intervals:
        if merged and start - merged[-1][1] <= bin_width:
            merged[-1] = (merged[-1][0], end)
        else:
            merged.append((start, end))

    by_day: dict[int, list[tuple[int, int]]] = {}
    for start, end in merged:
        by_day.setdefault(start // SECONDS_PER_DAY, []).append((start, end))
    return BreakSchedule(by_day)


def build_id_map(events: list[ContactEvent], extra_ids=()) -> dict[int, int]:
    """Map raw node ids (events plus any extras) to contiguous 0..n-1."""
    raw = {ev.i for ev in events} | {ev.j for ev in events} | set(extra_ids)
    return {r: k for k, r in enumerate(sorted(raw))}


def window_observations(
    events: list[ContactEvent],
    schedule: BreakSchedule,
    window_len: int = 240,
    resolution: int = 20,
    id_map: dict[int, int] | None = None,
    keep_partial: bool = False,
) -> dict[int, ObservationSet]:
    """Slice each break into windows and count active slots per pair.

    Within one window a pair's count is the number of distinct
    resolution-length slots with at least one contact, so it never exceeds
    t = window_len / resolution.  Trailing partial windows are dropped
    unless ``keep_partial`` is set, in which case they keep a smaller t.
    """
    if window_len % resolution != 0:
        raise ValueError("window_len must be a multiple of resolution")
    if id_map is None:
        id_map = build_id_map(events)
    n = len(id_map)
    t_full = window_len // resolution

    # window boundaries per (day, interval)
    windows: dict[int, list[tuple[int, int, int]]] = {}
    for day in schedule.days():
        spans = []
        for start, end in schedule.intervals[day]:
            full = (end - start) // window_len
            for w in range(full):
                spans.append((start + w * window_len, start + (w + 1) * window_len, t_full))
            if keep_partial:
                rem = (end - start) - full * window_len
                if rem >= resolution:
                    t_part = rem // resolution
                    spans.append(
                        (start + full * window_len,
                         start + full * window_len + t_part * resolution,
                         t_part)
                    )
        windows[day] = spans

    slot_sets: dict[tuple[int, int], set] = {}
    for ev in events:
        day = ev.day
        for w_idx, (w_start, w_end, _) in enumerate(windows.get(day, ())):
            if w_start <= ev.timestamp < w_end:
                a, b = sorted((id_map[ev.i], id_map[ev.j]))
                slot_sets.setdefault((day, w_idx), set()).add(
                    (a, b, (ev.timestamp - w_start) // resolution)
                )
                break

    out: dict[int, ObservationSet] = {}
    for day, spans in windows.items():
        if not spans:
            continue
        mats = []
        for w_idx, (_, _, t) in enumerate(spans):
            counts = np.zeros((n, n), dtype=np.int64)
            for a, b, _slot in slot_sets.get((day, w_idx), ()):
                counts[a, b] += 1
            counts = counts + counts.T
            mats.append(ObservationMatrix(counts, t))
        out[day] = ObservationSet(mats)
    return out


def parse_questionnaire(stream) -> tuple[set, set]:
    """Split nominations `i j` into reciprocated and one-sided pair sets."""
    nominations = set()
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ContactParseError(line_no, f"expected 2 fields, got {len(fields)}")
        try:
            i, j = int(fields[0]), int(fields[1])
        except ValueError as exc:
            raise ContactParseError(line_no, str(exc)) from exc
        if i == j:
            raise ContactParseError(line_no, "self-nomination")
        nominations.add((i, j))
    reciprocated, unreciprocated = set(), set()
    for i, j in nominations:
        pair = (min(i, j), max(i, j))
        if (j, i) in nominations:
            reciprocated.add(pair)
        else:
            unreciprocated.add(pair)
    return reciprocated, unreciprocated


def parse_metadata(stream) -> dict[int, str]:
    """Parse `i class` lines into a node -> class mapping."""
    classes: dict[int, str] = {}
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) < 2:
            raise ContactParseError(line_no, f"expected 2 fields, got {len(fields)}")
        try:
            classes[int(fields[0])] = fields[1]
        except ValueError as exc:
            raise ContactParseError(line_no, str(exc)) from exc
    return classes


def sample_control_pairs(
    n: int, count: int, exclusions, rng: np.random.Generator
) -> set:
    """Uniform sample of unordered pairs, without replacement, avoiding the
    excluded sets."""
    excluded = set()
    for pairs in exclusions:
        excluded |= {(min(i, j), max(i, j)) for i, j in pairs}
    iu, ju = np.triu_indices(n, 1)
    allowed = [
        (int(a), int(b)) for a, b in zip(iu, ju) if (int(a), int(b)) not in excluded
    ]
    if count > len(allowed):
        raise ValueError(f"cannot sample {count} pairs from {len(allowed)} available")
    chosen = rng.choice(len(allowed), size=count, replace=False)
    return {allowed[c] for c in chosen}
