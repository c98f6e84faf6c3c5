import pytest

from ssdiv.models.schemas import Approach, BenchRecord, Engine, Scheme
from ssdiv.services.bench import ask_vs_recursive, measure


def _record(approach: Approach, n: int, mean_ms: float) -> BenchRecord:
    return BenchRecord(approach=approach, n=n, workers=1, mean_ms=mean_ms, reps=1)


@pytest.mark.parametrize("engine,scheme,expected", [
    (Engine.ASK, Scheme.SBR, Approach.ASK_SBR),
    (Engine.ASK, Scheme.MBR, Approach.ASK_MBR),
    (Engine.RECURSIVE, Scheme.SBR, Approach.REC_SBR),
    (Engine.RECURSIVE, Scheme.MBR, Approach.REC_MBR),
])
def test_approach_of(engine, scheme, expected):
    assert Approach.of(engine, scheme) is expected
    assert (expected.engine, expected.scheme) == (engine, scheme)


class TestAskVsRecursive:
    def test_verdict_per_scheme(self):
        records = [
            _record(Approach.ASK_SBR, 512, 10.0),
            _record(Approach.REC_SBR, 512, 12.0),
            _record(Approach.ASK_MBR, 512, 9.0),
            _record(Approach.REC_MBR, 512, 8.0),
        ]
        assert ask_vs_recursive(records, 512) == {"ASK_SBR": True, "ASK_MBR": False}

    def test_tie_counts_as_not_slower(self):
        records = [_record(Approach.ASK_SBR, 256, 5.0), _record(Approach.REC_SBR, 256, 5.0)]
        assert ask_vs_recursive(records, 256) == {"ASK_SBR": True}

    def test_missing_partner_or_other_n(self):
        records = [
            _record(Approach.EX, 256, 50.0),
            _record(Approach.ASK_SBR, 256, 5.0),
            _record(Approach.REC_SBR, 1024, 1.0),
        ]
        assert ask_vs_recursive(records, 256) == {}


def test_measure_discards_warmup():
    calls = []

    def fn():
        calls.append(len(calls))
        return len(calls)

    timing = measure(fn, reps=3)
    assert len(calls) == 4
    assert timing.reps == 3
    assert timing.result == 4
    assert timing.mean_ms >= 0
    with pytest.raises(ValueError):
        measure(fn, reps=0)
