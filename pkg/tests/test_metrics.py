import dataclasses

import pytest

from mcsched import metrics, sim
from mcsched.predict import ForecastRecord, rmse


def fake(scenario="mono", policy="EDF", released=104_050, missed=7_030, **kw):
    r = sim.RunResult(seed=1, scenario=scenario, policy=policy, horizon=420_000)
    r.released = {1: released}
    r.missed = {1: missed}
    for name in ("completed", "aborted", "aborted_started", "discarded", "suppressed",
                 "in_flight"):
        setattr(r, name, {1: 0})
    r.completed = {1: released - missed}
    r.busy, r.idle, r.last_activity = 300_000, 120_000, 420_000
    for k, v in kw.items():
        setattr(r, k, v)
    return r


def test_empty_input_is_an_error():
    with pytest.raises(ValueError):
        metrics.aggregate([])


def test_miss_percentage_uses_released_jobs():
    rep = metrics.aggregate([fake()])
    c = rep.cell("EDF", "mono")
    assert c.miss_percentage == pytest.approx(100 * 7030 / 104050)
    text = metrics.table(rep)
    row = next(l for l in text.splitlines() if l.startswith("Percentage of misses"))
    assert f"{100 * 7030 / 104050:.2f}%" in row


def test_zero_misses():
    c = metrics.aggregate([fake(missed=0)]).cell("EDF", "mono")
    assert c.missed == 0 and f"{c.miss_percentage:.2f}" == "0.00"


def test_counts_are_summed_over_repetitions():
    runs = [fake(released=10_405, missed=m) for m in (700, 703)]
    c = metrics.aggregate(runs).cell("EDF", "mono")
    assert c.released == 20_810 and c.missed == 1403 and c.runs == 2
    assert sum(t["missed"] for t in c.per_task.values()) == c.missed
    assert sum(t["completed"] for t in c.per_task.values()) == c.completed


def test_table_has_fourteen_labelled_rows():
    text = metrics.table(metrics.aggregate([fake()]))
    lines = text.splitlines()
    body = lines[3:]
    assert [l.split("|")[0].strip() for l in body] == list(metrics.TABLE_ROWS)
    assert len(body) == 14
    assert "Reactive/Mono" in lines[1] and "Fuzzy+Predictor/Multi" in lines[1]


def test_mono_columns_are_identical():
    text = metrics.table(metrics.aggregate([fake()]))
    for line in text.splitlines()[3:9]:
        cells = [c.strip() for c in line.split("|")[1:]]
        assert cells[0] == cells[2] == cells[4]


def test_emission_is_byte_identical():
    runs = [fake(), fake(scenario="reactive", missed=753, released=102_007)]
    assert metrics.emit(metrics.aggregate(runs), "table") == \
        metrics.emit(metrics.aggregate(runs), "table")
    assert metrics.emit(metrics.aggregate(runs), "csv") == \
        metrics.emit(metrics.aggregate(runs), "csv")
    with pytest.raises(ValueError):
        metrics.emit(metrics.aggregate(runs), "xml")


def test_summary_round_trip_reproduces_table():
    rep = metrics.aggregate([fake(), fake(scenario="fuzzy", missed=474, released=100_857)])
    rows = metrics.read_summary(metrics.summary_csv(rep))
    assert metrics.table_from_rows(rows) == metrics.table(rep)


def test_header_only_per_task_csv():
    rep = metrics.aggregate([fake()])
    for c in rep.cells.values():
        c.per_task.clear()
    text = metrics.per_task_csv(rep)
    assert text.strip() == ",".join(metrics.PER_TASK_FIELDS)


def test_pooled_rmse_matches_predictor_module():
    a = [ForecastRecord(k, 1, 0.1 * k, 0.1 * k + 0.01 * (k % 3)) for k in range(50)]
    b = [ForecastRecord(k, 1, 0.2, 0.25) for k in range(30)]
    runs = [fake(predictor_ran=True, forecasts=a), fake(predictor_ran=True, forecasts=b)]
    c = metrics.aggregate(runs).cell("EDF", "mono")
    assert c.rmse(1) == pytest.approx(rmse(a + b), abs=1e-12)
    assert c.mse(1) == pytest.approx(c.rmse(1) ** 2, abs=1e-15)
    assert c.rmse(3) is None


def test_prediction_rows_are_na_without_predictor():
    text = metrics.table(metrics.aggregate([fake(scenario="reactive")]))
    row = next(l for l in text.splitlines() if l.startswith("RMSE - Prediction 1"))
    assert row.count("N/A") == 6


def test_anticipation_stats():
    r = fake(anticipation={"fuzzy": [10, 20, 60], "fuzzy+predictor": []})
    c = metrics.aggregate([r]).cell("EDF", "mono")
    assert c.anticipation_stats("fuzzy") == (30, 20, 3)
    assert c.anticipation_stats("fuzzy+predictor") == (None, None, 0)
    assert c.anticipation_stats("reactive") is None


def test_series_truncation():
    r = fake(laxity=[(10 * k, 1.0, 0.0, None) for k in range(1200)])
    assert len(metrics.laxity_csv(r, metrics.SERIES_LIMIT).splitlines()) == 501
    assert len(metrics.laxity_csv(r).splitlines()) == 1201
