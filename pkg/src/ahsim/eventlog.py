"""Per-frame event log sinks and the RAW isolation/containment audit."""
from __future__ import annotations

import csv
from typing import Iterable

from .aid import aid_from_raw, interval_owner
from .mac.contention import AP, BROADCAST, FrameRecord, SlotOwner
from .mac.schedule import assign_subslots

LOG_COLUMNS = ["start_us", "end_us", "src", "dst", "kind", "outcome", "direction", "segment"]


def format_owner(owner) -> str:
    if owner is None:
        return ""
    if isinstance(owner, SlotOwner):
        return f"{format_owner(owner.owner)}/{owner.subslot}"
    if isinstance(owner, tuple):
        return ":".join(str(x) for x in owner)
    return str(owner)


def record_row(r: FrameRecord) -> list:
    return [r.start, r.end, r.src, r.dst, r.kind, r.outcome, r.direction, format_owner(r.segment)]


class MemorySink:
    def __init__(self):
        self.records: list[FrameRecord] = []

    def __call__(self, record: FrameRecord) -> None:
        self.records.append(record)

    def close(self) -> None:
        pass


class CsvSink:
    """Streams records to a CSV file."""

    def __init__(self, path):
        self._f = open(path, "w", newline="", encoding="utf-8")
        self._w = csv.writer(self._f, lineterminator="\n")
        self._w.writerow(LOG_COLUMNS)

    def __call__(self, record: FrameRecord) -> None:
        self._w.writerow(record_row(record))

    def close(self) -> None:
        self._f.close()


class IsolationAudit:
    """Checks every frame against the schedule, independently of the simulator.

    For each frame involving a TIM station, the owning TIM interval is derived
    from the station's AID and the signaling mode, and the frame must lie
    entirely inside that interval's segment for its direction (and inside the
    station's sub-slot when sub-slots are used). Frames of non-TIM and
    unscheduled stations must stay out of RAW time altogether. Multicast data
    must lie inside the multicast segment. Records must arrive in start-time
    order.
    """

    def __init__(self, schedule, mode, tim_aids: Iterable[int], max_messages: int = 20):
        self.schedule = schedule
        self.mode = mode
        self.max_messages = max_messages
        aids = [aid_from_raw(a) for a in tim_aids]
        self._owner = {a.raw: interval_owner(a, mode) for a in aids}
        members: dict = {}
        for a in aids:
            members.setdefault(self._owner[a.raw], []).append(a)
        self._slot_dl, self._slot_ul = {}, {}
        for ms in members.values():
            for a, k in assign_subslots(ms, schedule.subslots_dl).items():
                self._slot_dl[a.raw] = k
            for a, k in assign_subslots(ms, schedule.subslots_ul).items():
                self._slot_ul[a.raw] = k
        self.frames = 0
        self.violations = 0
        self.messages: list[str] = []
        self._last_start = None
        # (slot, kind) -> owner seen transmitting there, for the current cycle
        self._segment_owner: dict = {}
        self._cycle = None

    def _fail(self, msg: str) -> None:
        self.violations += 1
        if len(self.messages) < self.max_messages:
            self.messages.append(msg)

    def __call__(self, r: FrameRecord) -> None:
        self.frames += 1
        if self._last_start is not None and r.start < self._last_start:
            self._fail(f"log out of order at {r.start} (after {self._last_start})")
        self._last_start = r.start
        if r.kind.startswith("beacon"):
            return
        sched = self.schedule
        d = sched.dtim_interval
        cycle, off = divmod(r.start, d)
        end_off = r.end - cycle * d
        iv, kind = sched.locate(off)
        if r.dst == BROADCAST:
            seg = iv.multicast
            if seg is None or not (seg.start <= off and end_off <= seg.end):
                self._fail(f"multicast frame [{r.start}, {r.end}) outside the multicast segment")
            return
        station = r.src if r.src != AP else r.dst
        owner = self._owner.get(station)
        if owner is None:
            # non-TIM or unscheduled: must avoid RAW time entirely
            if kind != "free" or end_off > iv.end:
                self._fail(f"station {station} frame [{r.start}, {r.end}) inside RAW time")
            return
        want = "dl" if r.direction == "DL" else "ul"
        if kind != want:
            self._fail(f"station {station} {r.direction} frame at {r.start} lies in {kind or 'beacon'} time")
            return
        if iv.owner != owner:
            self._fail(f"station {station} of group {owner} transmitted in the segment of {iv.owner} at {r.start}")
        seg = getattr(iv, kind)
        k = (self._slot_dl if kind == "dl" else self._slot_ul)[station] if seg.subslots else 0
        lo, hi = seg.slot_bounds(k)
        if not (lo <= off and end_off <= hi):
            self._fail(f"station {station} frame [{r.start}, {r.end}) escapes its slot [{lo}, {hi}) of cycle {cycle}")
        if cycle != self._cycle:
            self._cycle = cycle
            self._segment_owner.clear()
        key = (iv.slot, kind)
        seen = self._segment_owner.setdefault(key, owner)
        if seen != owner:
            self._fail(f"groups {seen} and {owner} both active in segment {key} of cycle {cycle}")

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def close(self) -> None:
        pass
