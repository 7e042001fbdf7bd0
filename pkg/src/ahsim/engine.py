"""Discrete-event core: event queue, beacon cycle orchestration and metrics assembly.

Time is an integer number of microseconds. A run covers whole DTIM cycles
only. Stations that merely listen to beacons in a cycle are not simulated
event by event; their radio time is attributed in bulk the next time they
become active (or at the end of the run), using the per-cycle record of which
group bits and multicast frames were signaled. Stations with something to
send or receive are driven through explicit power-state events.
"""
from __future__ import annotations

import bisect
import heapq
import itertools
import math
import random
from collections import deque
from fractions import Fraction

from .aid import (GroupingPolicy, SignalingMode, assign_aids, build_beacon_sequence, interval_owner,
                  interval_owners, station_may_sleep)
from .config import ScenarioConfig
from .errors import Infeasible, NoWindow
from .eventlog import IsolationAudit
from .mac.contention import (AirtimeBook, FrameRecord, MacTiming, SegmentStats, contend, run_downlink_segment,
                             run_uplink_segment)
from .mac.schedule import Calendar, PeriodicWindow, assign_subslots, beta_from_periods, build_raw_schedule, \
    poll_unscheduled, reserve_praw
from .mac.station import (Direction, Packet, PowerEvent, PowerEventKind, StationKind, StationState,
                          advance_power_state, fast_forward)
from .metrics import MetricsReport, StationRecord, finalize_direction, segment_capacity, summarize_energy
from .phy import SHORT_MAC_HEADER_BYTES, FrameKind, FrameSpec, airtime, data_frame, select_rate
from .traffic import MULTICAST, generate_traffic

PRIO_ARRIVAL = 0
PRIO_DTIM = 1
PRIO_TIM = 2
PRIO_STATION = 3
PRIO_END = 9

AP = 0
BROADCAST = -1

# fixed beacon body (timestamp, intervals, capability) before the bitmaps
BEACON_FIXED_BYTES = 8
PAGE_BITMAP_BYTES = 8  # 64 stations per block


class EventQueue:
    """Min-heap keyed by (time, priority, insertion sequence)."""

    def __init__(self):
        self._heap = []
        self._seq = itertools.count()

    def push(self, time: int, priority: int, kind: str, payload=None) -> None:
        heapq.heappush(self._heap, (time, priority, next(self._seq), kind, payload))

    def pop(self):
        return heapq.heappop(self._heap)

    def __len__(self):
        return len(self._heap)


def _ev(st, kind, t, pending=False, until=None):
    advance_power_state(st, PowerEvent(kind, t, pending, 0, until))


class Simulation:
    def __init__(self, config: ScenarioConfig, seed: int | None = None, sinks=(), warmup_cycles: int = 2,
                 audit: bool = False):
        self.config = config.validate()
        self.seed = config.seed if seed is None else seed
        self.warmup_cycles = warmup_cycles
        self._setup()
        self.sinks = list(sinks)
        self.audit = None
        if audit:
            self.audit = IsolationAudit(self.schedule, self.mode, [st.aid.raw for st in self.tim_stations])
            self.sinks.append(self.audit)
        self._log = self._fanout if self.sinks else None

    # ------------------------------------------------------------------ setup

    def _setup(self):
        cfg = self.config
        m, g = cfg.mac, cfg.grouping
        self.profile = cfg.phy.profile()
        self.timing = MacTiming(m.slot, m.sifs, m.cw_min, m.cw_max, m.retry_limit, m.ndp_control,
                                m.rts_cts_uplink, m.speed_frame_exchange)
        self.book = AirtimeBook(self.profile, self.timing, cfg.traffic.payload_bytes)
        self.payload_bits = 8 * cfg.traffic.payload_bytes
        self.mode = SignalingMode(g.signaling)

        policy = GroupingPolicy(g.policy)
        layout = (g.pages, g.blocks) if policy is GroupingPolicy.ROUND_ROBIN else None
        aids = assign_aids(cfg.n_stations, policy, layout)
        place = random.Random(f"{self.seed}/placement")
        self.stations: list[StationState] = []
        for sid, aid in enumerate(aids):
            # uniform over the disc; 1 m floor keeps path loss non-negative
            d = max(1.0, cfg.area_radius * math.sqrt(place.random()))
            st = StationState(sid, aid, StationKind(cfg.station_kind(sid)), select_rate(d, self.profile), d,
                              cw=m.cw_min)
            self.stations.append(st)
        self._by_aid = {st.aid.raw: st for st in self.stations}
        self.tim_stations = [st for st in self.stations if st.kind is StationKind.TIM]
        self.groups = sorted({st.aid.group for st in self.tim_stations})
        owners = interval_owners(self.groups, self.mode) if self.groups else [0]
        for st in self.tim_stations:
            st.owner = interval_owner(st.aid, self.mode)

        if m.beacon_rate == "min-station":
            self.beacon_rate = min((st.rate for st in self.stations), default=self.profile.top_rate)
        else:
            self.beacon_rate = int(m.beacon_rate)
        n_groups = max(1, len(self.groups))
        dtim_body = BEACON_FIXED_BYTES + math.ceil(n_groups / 8) + len(owners)
        if self.mode is SignalingMode.TIM_OFFSET:
            dtim_body += math.ceil(5 * n_groups / 8)
        pages = 1 if self.mode is SignalingMode.TIM_OFFSET else max(1, len({p for p, _ in self.groups}))
        tim_body = BEACON_FIXED_BYTES + PAGE_BITMAP_BYTES * pages
        self.dtim_air = airtime(FrameSpec(FrameKind.BEACON_DTIM, SHORT_MAC_HEADER_BYTES, dtim_body),
                                self.beacon_rate, self.profile)
        self.tim_air = airtime(FrameSpec(FrameKind.BEACON_TIM, SHORT_MAC_HEADER_BYTES, tim_body),
                               self.beacon_rate, self.profile)
        self.mc_air = airtime(data_frame(cfg.traffic.payload_bytes), self.beacon_rate, self.profile)

        beta = beta_from_periods(Fraction(str(cfg.traffic.ul_interarrival)),
                                 Fraction(str(cfg.traffic.dl_interarrival)))
        self.schedule = build_raw_schedule(
            g.tim_interval_us, owners, beta, dtim_airtime=self.dtim_air, tim_airtime=self.tim_air,
            multicast_airtime=self.mc_air, subslots_dl=g.subslots_dl, subslots_ul=g.subslots_ul,
            raw_share=Fraction(str(g.raw_share)))
        self.D = self.schedule.dtim_interval
        self.n_cycles = round(cfg.duration * 1_000_000) // self.D
        self.horizon = self.n_cycles * self.D
        self.warm_t = self.warmup_cycles * self.D
        self.raw_geometry = tuple((iv.dl.duration, iv.ul.duration) for iv in self.schedule.intervals)

        members: dict = {}
        for st in self.tim_stations:
            members.setdefault(st.owner, []).append(st)
        for ms in members.values():
            by_aid = {st.aid: st for st in ms}
            for a, k in assign_subslots(by_aid, g.subslots_dl).items():
                by_aid[a].subslot_dl = k
            for a, k in assign_subslots(by_aid, g.subslots_ul).items():
                by_aid[a].subslot_ul = k

        self.doze = m.doze_cycles
        self.guard = math.ceil(Fraction(str(m.drift_ppm)) * self.doze * self.D / 1_000_000)
        for st in self.tim_stations:
            st.doze_phase = st.sid % self.doze

        self.calendar = Calendar.from_schedule(self.schedule)
        self.grants = {}
        self._grant_praw()

    def _exchange_len(self, direction, rate) -> int:
        return self.book.exchange_duration(self.book.steps(direction, rate, None))

    def _grant_praw(self):
        non_tim = [st for st in self.stations if st.kind is StationKind.NON_TIM]
        if not non_tim:
            return
        free = [iv.free for iv in self.schedule.intervals if iv.free is not None]
        slots = iter(free)
        seg = next(slots, None)
        cursor = seg.start if seg else 0
        for st in non_tim:
            need = self.timing.difs + max(self._exchange_len(Direction.UL, st.rate),
                                          self._exchange_len(Direction.DL, st.rate))
            while seg is not None and cursor + need > seg.end:
                seg = next(slots, None)
                cursor = seg.start if seg else 0
            if seg is None:
                raise Infeasible(f"free time outside RAW cannot hold PRAW grants for {len(non_tim)} non-TIM stations")
            self.grants[st.sid] = reserve_praw(self.calendar, st, PeriodicWindow(cursor, need, self.D))
            cursor += need

    # ------------------------------------------------------------------ run

    def _fanout(self, record: FrameRecord) -> None:
        for s in self.sinks:
            s(record)

    def run(self) -> MetricsReport:
        cfg = self.config
        self.report = MetricsReport(cfg.name, self.seed, self.horizon, self.n_cycles, self.D, self.warmup_cycles)
        self.stats = SegmentStats()
        self.rng = random.Random(f"{self.seed}/channel")
        self._pid = itertools.count()
        self._dl_waiting: set = set()
        self._ul_waiting: set = set()
        self._bit_cycles = {grp: [] for grp in self.groups}
        self._mc_cycles: list = []
        self._mc_queue: deque = deque()
        self._booked: set = set()
        self._unbooked: set = set()

        q = EventQueue()
        self.queue = q
        traffic = generate_traffic(cfg, random.Random(f"{self.seed}/traffic"), self.D, self.horizon)
        nxt = next(traffic, None)
        if nxt is not None:
            q.push(nxt.time, PRIO_ARRIVAL, "arrival", nxt)
        if self.n_cycles > 0:
            q.push(0, PRIO_DTIM, "dtim", 0)
        q.push(self.horizon, PRIO_END, "end")
        while q:
            t, _, _, kind, payload = q.pop()
            if kind == "arrival":
                self._on_arrival(payload)
                nxt = next(traffic, None)
                if nxt is not None:
                    q.push(nxt.time, PRIO_ARRIVAL, "arrival", nxt)
            elif kind == "dtim":
                self._on_dtim(payload)
            elif kind == "tim":
                self._on_tim(*payload)
            elif kind == "praw":
                self._on_praw(*payload)
            elif kind == "unscheduled":
                self._on_unscheduled(*payload)
            elif kind == "end":
                break
        return self._finish()

    # ------------------------------------------------------------------ traffic

    def _on_arrival(self, a) -> None:
        if a.sid == MULTICAST:
            self._mc_queue.append(Packet(next(self._pid), MULTICAST, Direction.DL, a.time))
            self.report.multicast.generated += 1
            return
        st = self.stations[a.sid]
        pkt = Packet(next(self._pid), a.sid, a.direction, a.time)
        self.report.direction(a.direction).generated += 1
        if a.direction is Direction.UL:
            st.ul_pending.append(pkt)
            self._ul_waiting.add(a.sid)
            if st.kind is StationKind.UNSCHEDULED:
                self._book(st, a.time)
        else:
            st.dl_pending.append(pkt)
            self._dl_waiting.add(a.sid)

    # ------------------------------------------------------------------ energy bookkeeping

    def _listening(self, st, c) -> bool:
        return self.doze == 1 or c % self.doze == st.doze_phase

    def _wake_time(self, st, c) -> int:
        if c == 0:
            return 0
        return max(st.since, c * self.D - self.guard)

    def _passive_rx(self, st, s, c) -> int:
        """Receive time of a beacon-only TIM station over cycles [s, c)."""
        if st.kind is not StationKind.TIM or s >= c:
            return 0
        k = self.doze
        first = s + (st.doze_phase - s) % k
        if first >= c:
            return 0
        n = len(range(first, c, k))
        rx = n * (self.dtim_air + self.guard)
        if first == 0:
            rx -= self.guard
        elif first == s and st.since > s * self.D - self.guard:
            # the station was still awake from its last active cycle
            rx -= self.guard - max(0, s * self.D - st.since)
        bits = self._bit_cycles.get(st.aid.group, ())
        lo, hi = bisect.bisect_left(bits, first), bisect.bisect_left(bits, c)
        if k == 1:
            nb = hi - lo
        else:
            nb = sum(1 for x in bits[lo:hi] if x % k == st.doze_phase)
        rx += nb * self.tim_air
        lo, hi = bisect.bisect_left(self._mc_cycles, first), bisect.bisect_left(self._mc_cycles, c)
        if k == 1:
            nm = hi - lo
        else:
            nm = sum(1 for x in self._mc_cycles[lo:hi] if x % k == st.doze_phase)
        return rx + nm * self.mc_air

    def _sync(self, st, c) -> None:
        """Attribute cycles after the last synced one up to the wake-up for cycle ``c``."""
        s = st.synced_cycle + 1
        end = self._wake_time(st, c)
        fast_forward(st, end, self._passive_rx(st, s, c))
        st.synced_cycle = c - 1

    def _wake_for_dtim(self, st, c, multicast: bool) -> None:
        self._sync(st, c)
        t = st.since
        if st.long_doze_until is not None:
            _ev(st, PowerEventKind.DOZE_END, t)
        _ev(st, PowerEventKind.BEACON_DUE, t)
        dtim_end = c * self.D + self.dtim_air
        if multicast:
            _ev(st, PowerEventKind.RX_END, dtim_end, pending=True)
            _ev(st, PowerEventKind.RX_START, dtim_end)
            _ev(st, PowerEventKind.RX_END, dtim_end + self.mc_air)
        else:
            _ev(st, PowerEventKind.RX_END, dtim_end)
        st.synced_cycle = c

    def _start_doze(self, st, c) -> None:
        k = self.doze
        nxt = c + 1 + (st.doze_phase - c - 1) % k
        until = max(st.since, nxt * self.D - self.guard)
        _ev(st, PowerEventKind.DOZE_START, st.since, until=until)

    # ------------------------------------------------------------------ beacon cycle

    def _eligible(self, queue, cutoff) -> bool:
        return bool(queue) and queue[0].generated <= cutoff

    def _on_dtim(self, c: int) -> None:
        q = self.queue
        D = self.D
        t0 = c * D
        if c + 1 < self.n_cycles:
            q.push(t0 + D, PRIO_DTIM, "dtim", c + 1)

        dl_sig = [self.stations[i] for i in sorted(self._dl_waiting)]
        dl_sig = [st for st in dl_sig if st.kind is StationKind.TIM and self._eligible(st.dl_pending, t0)]
        ul_ready = [self.stations[i] for i in sorted(self._ul_waiting)]
        ul_ready = [st for st in ul_ready if st.kind is StationKind.TIM and self._eligible(st.ul_pending, t0)]
        beacons = build_beacon_sequence(self.groups or [(0, 0)], self.mode, [st.aid for st in dl_sig],
                                        self.raw_geometry)
        dtim = beacons[0].dtim
        for grp in dtim.pending_groups:
            self._bit_cycles[grp].append(c)

        mc_pkt = None
        if self._eligible(self._mc_queue, t0):
            mc_pkt = self._mc_queue.popleft()
            self._mc_cycles.append(c)
        if self._log:
            self._log(FrameRecord(t0, t0 + self.dtim_air, AP, BROADCAST, FrameKind.BEACON_DTIM.value, "ok",
                                  "DL", None))
        if mc_pkt is not None:
            self._multicast(mc_pkt, t0 + self.dtim_air)

        active: dict = {}
        ul_set = set(map(id, ul_ready))
        seen = set()
        for st in sorted(dl_sig + ul_ready, key=lambda s: s.sid):
            if st.sid in seen:
                continue
            seen.add(st.sid)
            has_ul = id(st) in ul_set
            if not has_ul and not self._listening(st, c):
                continue
            tim = None
            if dtim.has_group(st.aid.group):
                tim = beacons[1 + self.schedule.interval_of(st.owner).slot].tim_for(st.aid.group)
            if station_may_sleep(st.aid, dtim, tim, has_ul):
                continue
            dl_list, ul_list, listeners = active.setdefault(st.owner, ([], [], []))
            if tim is not None and tim.has(st.aid):
                dl_list.append(st)
            if has_ul:
                ul_list.append(st)
            if tim is not None:
                listeners.append(st)
            self._wake_for_dtim(st, c, mc_pkt is not None)

        for iv in self.schedule.intervals:
            entry = active.get(iv.owner)
            if entry is not None or self._log:
                q.push(t0 + iv.start, PRIO_TIM, "tim", (c, iv, entry))

        # non-TIM stations use their PRAW grant this cycle if they have anything queued
        for sid in sorted(self._dl_waiting | self._ul_waiting):
            st = self.stations[sid]
            if st.kind is StationKind.NON_TIM:
                w = self.grants[sid].window
                q.push(t0 + w.offset, PRIO_STATION, "praw", (st, t0 + w.offset, t0 + w.offset + w.duration))
        for sid in sorted(self._unbooked):
            self._book(self.stations[sid], t0)

    def _multicast(self, pkt, t) -> None:
        ok = self.rng.random() >= self.profile.per
        end = t + self.mc_air
        mc = self.report.multicast
        if ok:
            pkt.delivered_at = end
            mc.delivered += 1
        else:
            mc.dropped += 1
        if self._log:
            self._log(FrameRecord(t, end, AP, BROADCAST, FrameKind.DATA.value, "ok" if ok else "corrupted",
                                  "DL", None))

    def _on_tim(self, c, iv, entry) -> None:
        t0 = c * self.D
        tb0, tb1 = t0 + iv.tim_beacon[0], t0 + iv.tim_beacon[1]
        if self._log:
            self._log(FrameRecord(tb0, tb1, AP, BROADCAST, FrameKind.BEACON_TIM.value, "ok", "DL", iv.owner))
        if entry is None:
            return
        dl_list, ul_list, listeners = entry
        for st in listeners:
            _ev(st, PowerEventKind.BEACON_DUE, tb0)
            _ev(st, PowerEventKind.RX_END, tb1)
        per = self.profile.per
        res = run_downlink_segment(iv.dl, dl_list, self.book, self.rng, per, t0, self.stats, self._log, cutoff=t0)
        self._settle(res, Direction.DL)
        ul_now = [st for st in ul_list if self._eligible(st.ul_pending, t0)]
        res = run_uplink_segment(iv.ul, ul_now, self.book, self.rng, per, t0, self.stats, self._log, cutoff=t0)
        self._settle(res, Direction.UL)
        if self.doze > 1:
            done = set()
            for st in dl_list + ul_list:
                if st.sid not in done:
                    done.add(st.sid)
                    self._start_doze(st, c)

    # ------------------------------------------------------------------ non-TIM and unscheduled access

    def _on_praw(self, st, start, end) -> None:
        if self._eligible(st.dl_pending, start):
            direction, pkt = Direction.DL, st.dl_pending[0]
        elif self._eligible(st.ul_pending, start):
            direction, pkt = Direction.UL, st.ul_pending[0]
        else:
            return
        fast_forward(st, start, 0)
        res = contend(direction, start, end, "praw", [(st, pkt)], self.book, self.rng, self.profile.per,
                      self.stats, self._log, contention=False)
        self._settle(res, direction)

    def _book(self, st, now) -> None:
        if st.sid in self._booked or not st.ul_pending:
            return
        t = self.timing
        ndp = self.book.ctrl[FrameKind.PS_POLL]
        need = 2 * ndp + 2 * t.sifs + t.difs + self._exchange_len(Direction.UL, st.rate)
        self.calendar.bookings = [b for b in self.calendar.bookings if b[1] > now]
        try:
            s, e = poll_unscheduled(self.calendar, st, now, need)
        except NoWindow:
            self._unbooked.add(st.sid)
            return
        self._unbooked.discard(st.sid)
        if e > self.horizon:
            return
        self._booked.add(st.sid)
        self.queue.push(s, PRIO_STATION, "unscheduled", (st, s, e))

    def _on_unscheduled(self, st, s, e) -> None:
        self._booked.discard(st.sid)
        pkt = st.ul_pending[0]
        t = self.timing
        ndp = self.book.ctrl[FrameKind.PS_POLL]
        per = self.profile.per
        fast_forward(st, s, 0)
        _ev(st, PowerEventKind.SEGMENT_START, s)
        _ev(st, PowerEventKind.TX_START, s)
        _ev(st, PowerEventKind.TX_END, s + ndp, pending=True)
        ok_poll = self.rng.random() >= per
        r0 = s + ndp + t.sifs
        ok_resp = ok_poll and self.rng.random() >= per
        if self._log:
            self._log(FrameRecord(s, s + ndp, st.aid.raw, AP, FrameKind.NDP_CTRL.value,
                                  "ok" if ok_poll else "corrupted", "UL", "unscheduled"))
        if ok_poll:
            _ev(st, PowerEventKind.RX_START, r0)
            _ev(st, PowerEventKind.RX_END, r0 + ndp, pending=True)
            if self._log:
                self._log(FrameRecord(r0, r0 + ndp, AP, st.aid.raw, FrameKind.NDP_CTRL.value,
                                      "ok" if ok_resp else "corrupted", "UL", "unscheduled"))
        if not ok_resp:
            pkt.attempts += 1
            self.stats.attempts += 1
            _ev(st, PowerEventKind.SEGMENT_END, (r0 + ndp) if ok_poll else (s + ndp + t.sifs + ndp))
            if pkt.attempts >= t.retry_limit:
                st.ul_pending.popleft()
                self._account(st, pkt, Direction.UL)
                if not st.ul_pending:
                    self._ul_waiting.discard(st.sid)
        else:
            res = contend(Direction.UL, r0 + ndp, e, "unscheduled", [(st, pkt)], self.book, self.rng, per,
                          self.stats, self._log, contention=False)
            self._settle(res, Direction.UL)
        self._book(st, e)

    # ------------------------------------------------------------------ accounting

    def _settle(self, results, direction) -> None:
        for r in results:
            if r.outcome == "deferred":
                continue
            st = self._by_aid[r.station]
            queue = st.dl_pending if direction is Direction.DL else st.ul_pending
            pkt = queue.popleft()
            assert pkt is r.packet, "exchange settled a packet that is not at the head of its queue"
            self._account(st, pkt, direction)
            for extra in r.extra:
                head = st.ul_pending.popleft()
                assert head is extra
                self._account(st, extra, Direction.UL)
            if not st.dl_pending:
                self._dl_waiting.discard(st.sid)
            if not st.ul_pending:
                self._ul_waiting.discard(st.sid)

    def _account(self, st, pkt, direction) -> None:
        ds = self.report.direction(direction)
        if pkt.delivered_at is None:
            ds.dropped += 1
            return
        ds.delivered += 1
        st.bits_delivered += self.payload_bits
        if pkt.generated >= self.warm_t:
            ds.delay_sum_us += pkt.delivered_at - pkt.generated
            ds.delay_count += 1
        if pkt.delivered_at >= self.warm_t and st.kind is StationKind.TIM:
            ds.measured_delivered += 1

    def _finish(self) -> MetricsReport:
        rep = self.report
        for st in self.stations:
            if st.kind is StationKind.TIM:
                self._sync(st, self.n_cycles)
            fast_forward(st, self.horizon, 0)
            rep.dl.in_flight += len(st.dl_pending)
            rep.ul.in_flight += len(st.ul_pending)
        rep.multicast.in_flight = len(self._mc_queue)
        measured = max(0, self.n_cycles - self.warmup_cycles)
        top = self.profile.top_rate
        cap = segment_capacity(self.schedule, {d: self.book.min_exchange(d, top) for d in Direction}, measured)
        rep.dl.capacity, rep.ul.capacity = cap[Direction.DL], cap[Direction.UL]
        finalize_direction(rep.dl, self.D)
        finalize_direction(rep.ul, self.D)
        finalize_direction(rep.multicast, self.D)
        rep.attempts = self.stats.attempts
        rep.collisions = self.stats.collisions
        rep.retransmissions = self.stats.retransmissions
        rep.corrupted_frames = self.stats.corrupted
        rep.stations = [StationRecord(st.sid, st.aid.raw, st.kind.value, st.distance, st.rate, st.ledger())
                        for st in self.stations]
        e = self.config.energy
        summarize_energy(rep, e.profile(), e.battery_specs(), e.reference_battery)
        for s in self.sinks:
            if isinstance(s, IsolationAudit):
                rep.audit_violations = (rep.audit_violations or 0) + s.violations
            s.close()
        return rep


def run(config: ScenarioConfig, seed: int | None = None, sinks=(), warmup_cycles: int = 2,
        audit: bool = False) -> MetricsReport:
    """Simulate one scenario and return its metrics report.

    ``sinks`` receive every frame record; ``audit`` adds an isolation audit
    whose violation count lands in ``report.audit_violations``.
    """
    return Simulation(config, seed, sinks, warmup_cycles, audit).run()
