import pytest

from gdpx.flightdata import Cause, FlightRecord
from gdpx.lifecycle import GdpProgram

EPOCH = "2019-07-01"


def hm(h, m=0):
    """Minutes since epoch for a clock time on the epoch day."""
    return 60 * h + m


def make_flight(fid="F1", origin="KBOS", dest="EWR", fp_off=hm(14), ete=60, taxi=10,
                edct=None, off=None, go=None, on=None, sched_arr=None, cancelled=False, taxi_in=10):
    off = (edct if edct is not None else fp_off) if off is None else off
    go = off - taxi if go is None else go
    on = off + ete if on is None else on
    if sched_arr is None:
        sched_arr = fp_off + ete + taxi_in
    if cancelled:
        return FlightRecord(fid, origin, dest, sched_arr, fp_off - taxi, fp_off, ete, taxi, edct,
                            None, None, None, None, True)
    return FlightRecord(fid, origin, dest, sched_arr, fp_off - taxi, fp_off, ete, taxi, edct,
                        go, off, on, on + taxi_in, False)


def make_program(key="EWR-1", airport="EWR", release=hm(12), start=hm(13), end=hm(19), cancel=None,
                 par=((52, 8.0),), final_par=None, us=("KBOS", "KORD"), ca=("CYYZ",),
                 cause=Cause.WIND, revisions=()):
    return GdpProgram(key, airport, release, tuple(revisions), cancel, start, end, tuple(par),
                      tuple(final_par or par), frozenset(us), frozenset(ca), cause)


@pytest.fixture
def program():
    return make_program()


ACCEPTANCE: dict = {}


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL verdict for an acceptance criterion; the body asserts as usual."""
    def record(n, ok, detail=""):
        ACCEPTANCE[n] = (ok, detail)
        print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for n in sorted(ACCEPTANCE):
            ok, detail = ACCEPTANCE[n]
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
