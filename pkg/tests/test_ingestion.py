import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mmv2v.errors import DataFormatError, DomainError, SpanLengthWarning
from mmv2v.ingestion import (DistanceSource, MeasurementRecord, PositionFix, RawSpan,
                             TagSegment, Tags, average_span, build_records,
                             dump_records_jsonl, filter_transitions, fuse_distance,
                             lee_check, read_fixes_jsonl, read_records_jsonl,
                             read_spans_csv, read_tags_jsonl, to_path_loss)
from mmv2v.linkbudget import PRESETS, max_measurable_pl
from mmv2v.models import PathLossModel, sample_path_loss

OMNI = PRESETS["paper-omni"]
DIRECTIONAL = PRESETS["paper-directional"]
LOS_URBAN = Tags("los", "urban", "rooftop", "omni")
NLOS_URBAN = Tags("nlos", "urban", "rooftop", "omni")


def record(t=0.0, rx=-60.0, tags=LOS_URBAN, censored=False, d=50.0):
    return MeasurementRecord(timestamp=t, distance=d, rx_power=rx, censored=censored, tags=tags)


def test_average_constant_span():
    assert average_span(RawSpan(0, [-80.0] * 551)) == pytest.approx(-80.0, abs=1e-12)


def test_average_two_levels():
    expected = 10 * math.log10((1e-8 + 1e-9) / 2)
    assert average_span([-80, -90]) == pytest.approx(expected, abs=1e-12)
    assert average_span([-80, -90]) == pytest.approx(-82.5964, abs=1e-3)


def test_average_very_weak_span_does_not_underflow():
    assert average_span([-400.0, -400.0]) == pytest.approx(-400.0)


dbm = st.lists(st.floats(min_value=-150, max_value=20), min_size=1, max_size=60)


@given(dbm)
def test_linear_average_dominates_db_average(powers):
    assert average_span(powers) >= np.mean(powers) - 1e-9


@given(dbm, st.randoms())
def test_average_permutation_invariant(powers, rnd):
    shuffled = powers[:]
    rnd.shuffle(shuffled)
    assert average_span(shuffled) == pytest.approx(average_span(powers), abs=1e-9)


def test_raw_span_invariants():
    with pytest.raises(DomainError):
        RawSpan(0, [])
    with pytest.raises(DomainError):
        RawSpan(0, [-80], duration=0)
    with pytest.raises(DomainError):
        average_span([])


def test_to_path_loss_examples():
    assert to_path_loss(record(rx=-60.0), OMNI).path_loss == pytest.approx(58.1, abs=1e-12)
    assert to_path_loss(record(rx=-122.4), DIRECTIONAL).path_loss == pytest.approx(149.5, abs=1e-12)
    assert to_path_loss(record(rx=-122.4), OMNI).path_loss == pytest.approx(120.5, abs=1e-12)
    censored = to_path_loss(record(rx=-122.4, censored=True), OMNI)
    assert censored.censored and censored.path_loss == max_measurable_pl(OMNI)


@given(st.floats(-130, 0), st.floats(-30, 30))
def test_to_path_loss_slope_minus_one(rx, k):
    base = to_path_loss(record(rx=rx), OMNI).path_loss
    assert to_path_loss(record(rx=rx + k), OMNI).path_loss == pytest.approx(base - k, abs=1e-9)


def test_synthetic_round_trip():
    model = PathLossModel(22.4, 82.1, 3.7)
    rng = np.random.default_rng(17)
    d = 10 ** rng.uniform(1, 2.5, 200)
    pl = sample_path_loss(model, d, rng)
    for di, li in zip(d, pl):
        rec = record(rx=OMNI.eirp_less_rx - li, d=di)
        assert to_path_loss(rec, OMNI).path_loss == pytest.approx(li, abs=1e-9)


def test_fuse_distance_examples():
    assert fuse_distance(PositionFix(0, 52.0, 49.3), 100) == (49.3, DistanceSource.UWB)
    assert fuse_distance(PositionFix(0, 350.0, None), 100) == (350.0, DistanceSource.GPS)
    assert fuse_distance(PositionFix(0, 52.0, 49.3), 40) == (52.0, DistanceSource.GPS)
    assert fuse_distance(PositionFix(0, None, 30.0)).source is DistanceSource.UWB
    with pytest.raises(DomainError):
        fuse_distance(PositionFix(0, None, 150.0), 100)
    with pytest.raises(DomainError):
        PositionFix(0)


def _brute_force_filter(records, window):
    changes = [records[i].timestamp for i in range(1, len(records))
               if records[i].tags != records[i - 1].tags]
    return [r for r in records if all(abs(r.timestamp - c) > window for c in changes)]


def test_filter_no_changes():
    recs = [record(t=0.73 * i) for i in range(30)]
    assert filter_transitions(recs) == recs


def test_filter_single_change():
    recs = [record(t=float(t), tags=LOS_URBAN if t < 100 else NLOS_URBAN)
            for t in range(90, 111)]
    kept = filter_transitions(recs, window=2)
    assert [r.timestamp for r in kept] == [t for t in range(90, 111) if not 98 <= t <= 102]


def test_filter_merging_windows():
    tags = lambda t: NLOS_URBAN if 100 <= t < 101 else LOS_URBAN
    recs = [record(t=90 + 0.25 * i, tags=tags(90 + 0.25 * i)) for i in range(80)]
    kept = filter_transitions(recs, window=2)
    assert kept == _brute_force_filter(recs, 2)
    assert all(not 98 <= r.timestamp <= 103 for r in kept)


@given(st.lists(st.tuples(st.floats(0, 5), st.booleans()), min_size=1, max_size=40),
       st.floats(0, 5))
def test_filter_matches_brute_force(steps, window):
    t, recs = 0.0, []
    for gap, los in steps:
        t += gap
        recs.append(record(t=t, tags=LOS_URBAN if los else NLOS_URBAN))
    kept = filter_transitions(recs, window)
    assert kept == _brute_force_filter(recs, window)
    it = iter(recs)
    assert all(any(k is r for r in it) for k in kept)  # ordered subsequence


def test_filter_rejects_unordered():
    with pytest.raises(DomainError):
        filter_transitions([record(t=5), record(t=1)])


def test_lee_examples():
    lam = 299_792_458 / 26.555e9
    n, ok = lee_check(lam / 0.055, 0.055, 26.555)
    assert n == pytest.approx(1.0) and not ok
    n, ok = lee_check(16.5, 0.055, 26.555)
    assert n == pytest.approx(0.9075 / lam) and n == pytest.approx(80.4, abs=0.1) and ok
    n, ok = lee_check(2.07, 0.055, 26.555)
    assert n == pytest.approx(10.08, abs=0.01) and not ok
    with pytest.raises(DomainError):
        lee_check(0, 0.055, 26.555)


def test_tags_give_model_key():
    assert Tags("los", "urban", "roof", "omni").model_key().format() == \
        "omnidirectional,rooftop,los,urban,none"


def test_record_json_fields():
    rec = MeasurementRecord(1.5, 40.0, -70.0, False, LOS_URBAN, "uwb", 10.0, 2.0)
    d = rec.to_dict()
    assert list(d) == ["timestamp_s", "distance_m", "distance_source", "rx_power_dbm",
                       "censored", "visibility", "environment", "mounting", "antenna",
                       "blocking", "v_rx_mps", "v_rel_mps"]
    assert MeasurementRecord.from_dict(json.loads(json.dumps(d))) == rec


def _write_campaign(tmp_path):
    rng = np.random.default_rng(3)
    spans = tmp_path / "spans.csv"
    rows = []
    for i in range(40):
        t = 100 + 0.73 * i
        level = -70.0 if i != 5 else -130.0
        powers = level + 0.5 * rng.standard_normal(551)
        rows.append(",".join([f"{t:.2f}", "0.055"] + [f"{p:.3f}" for p in powers]))
    spans.write_text("\n".join(rows) + "\n")
    fixes = tmp_path / "fixes.jsonl"
    fixes.write_text("".join(json.dumps({"timestamp_s": 100 + 0.73 * i + 0.05,
                                         "gps_distance_m": 60.0 + i,
                                         "uwb_distance_m": 58.0 + i if i < 20 else None,
                                         "v_rx_mps": 20.0, "v_rel_mps": 2.0}) + "\n"
                             for i in range(40)))
    tags = tmp_path / "tags.jsonl"
    tags.write_text(
        json.dumps({"start_s": 99, "end_s": 115, "visibility": "los", "environment": "urban",
                    "mounting": "rooftop", "antenna": "omni"}) + "\n" +
        json.dumps({"start_s": 115, "end_s": 128, "visibility": "nlos", "environment": "urban",
                    "mounting": "rooftop", "antenna": "omni"}) + "\n")
    return spans, fixes, tags


def test_build_records(tmp_path):
    spans, fixes, tags = _write_campaign(tmp_path)
    records = build_records(read_spans_csv(spans), read_fixes_jsonl(fixes),
                            read_tags_jsonl(tags), OMNI)
    times = [r.timestamp for r in records]
    change = min(t for t in (100 + 0.73 * i for i in range(40)) if t >= 115)
    assert all(abs(t - round(change, 2)) > 2.0 for t in times)
    assert len(records) < 40
    censored = [r for r in records if r.censored]
    assert len(censored) == 1 and censored[0].rx_power == OMNI.detection_threshold
    first = records[0]
    assert first.distance_source is DistanceSource.UWB and first.distance == 58.0
    assert records[-1].distance_source is DistanceSource.GPS
    assert first.v_rx == 20.0 and first.v_rel == 2.0
    assert all(abs(r.rx_power + 70) < 1 for r in records if not r.censored)
    text = dump_records_jsonl(records)
    out = tmp_path / "records.jsonl"
    out.write_text(text)
    assert read_records_jsonl(out) == records


def test_build_records_drops_unjoined_and_untagged():
    spans = [RawSpan(10.0, [-70.0]), RawSpan(20.0, [-70.0]), RawSpan(30.0, [-70.0])]
    fixes = [PositionFix(10.2, 40.0), PositionFix(21.0, 40.0), PositionFix(30.1, 40.0)]
    segs = [TagSegment(0, 25, LOS_URBAN)]
    recs = build_records(spans, fixes, segs, OMNI)
    assert [r.timestamp for r in recs] == [10.0]


def test_span_length_warning(tmp_path):
    path = tmp_path / "spans.csv"
    path.write_text("timestamp_s,duration_s,p1\n1.0,0.055," + ",".join(["-80"] * 100) + "\n")
    with pytest.warns(SpanLengthWarning):
        spans = read_spans_csv(path)
    assert len(spans[0].powers) == 100
    path.write_text("1.0,0.055," + ",".join(["-80"] * 548) + "\n")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        read_spans_csv(path)


@pytest.mark.filterwarnings("ignore::mmv2v.errors.SpanLengthWarning")
def test_malformed_inputs_report_line(tmp_path):
    path = tmp_path / "spans.csv"
    path.write_text("1.0,0.055,-80\n2.0,0.055,oops\n")
    with pytest.raises(DataFormatError) as info:
        read_spans_csv(path)
    assert info.value.line == 2
    fixes = tmp_path / "fixes.jsonl"
    fixes.write_text('{"timestamp_s": 1, "gps_distance_m": 3}\n{"timestamp_s": 2}\n')
    with pytest.raises(DataFormatError) as info:
        read_fixes_jsonl(fixes)
    assert info.value.line == 2
    tags = tmp_path / "tags.jsonl"
    tags.write_text("{not json\n")
    with pytest.raises(DataFormatError) as info:
        read_tags_jsonl(tags)
    assert info.value.line == 1
