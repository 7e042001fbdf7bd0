from fractions import Fraction

from ahsim.aid import SignalingMode
from ahsim.eventlog import LOG_COLUMNS, CsvSink, IsolationAudit
from ahsim.mac.contention import AP, FrameRecord
from ahsim.mac.schedule import build_raw_schedule

# blocks 0 and 1 (AIDs 1..63 and 64..127), 10 ms intervals split 50/50
SCHED = build_raw_schedule(10_000, [0, 1], Fraction(1, 2), tim_airtime=1000)
# interval 0: dl [1000, 5500), ul [5500, 10000); interval 1: dl [11000, 15500), ul [15500, 20000)


def audit():
    return IsolationAudit(SCHED, SignalingMode.NON_TIM_OFFSET, [1, 2, 64])


def frame(start, end, src, dst, direction):
    return FrameRecord(start, end, src, dst, "data", "ok", direction, None)


def test_clean_log_passes():
    a = audit()
    a(frame(1000, 2000, AP, 1, "DL"))
    a(frame(6000, 7000, 2, AP, "UL"))
    a(frame(16000, 17000, 64, AP, "UL"))
    a(frame(20000 + 6000, 20000 + 7000, 1, AP, "UL"))  # next cycle
    assert a.ok and a.frames == 4


def test_cross_group_transmission_detected():
    a = audit()
    a(frame(6000, 7000, 64, AP, "UL"))  # block 1 station in block 0's segment
    assert a.violations == 1 and "segment of 0" in a.messages[0]


def test_wrong_direction_and_boundary_crossing_detected():
    a = audit()
    a(frame(1000, 2000, 1, AP, "UL"))
    a(frame(5000, 6000, AP, 2, "DL"))
    assert a.violations == 2


def test_out_of_order_log_detected():
    a = audit()
    a(frame(6000, 7000, 1, AP, "UL"))
    a(frame(5900, 5950, 2, AP, "UL"))
    assert not a.ok


def test_csv_sink_header(tmp_path):
    p = tmp_path / "log.csv"
    s = CsvSink(p)
    s(frame(1, 2, 3, AP, "UL"))
    s.close()
    lines = p.read_text(encoding="utf-8").splitlines()
    assert lines[0].split(",") == LOG_COLUMNS
    assert lines[1] == "1,2,3,0,data,ok,UL,"
