import numpy as np
import pytest

from hydroindex.errors import DataError, MalformedRow
from hydroindex.events import detect_events
from hydroindex.gamlss import fit_binned_zaga, fit_seasonal_zaga
from hydroindex.indices import compute_mbsi1
from hydroindex.io import (
    format_float,
    load_model,
    read_events_csv,
    read_index_csv,
    save_model,
    write_events_csv,
    write_index_csv,
    write_json,
)


def test_format_float():
    assert format_float(0.1) == "0.1"
    assert format_float(np.nan) == ""
    assert format_float(np.float64(1e-300)) == "1e-300"


def test_index_roundtrip_bit_exact(weekly_series, tmp_path):
    idx = compute_mbsi1(weekly_series, 4)
    write_index_csv(idx, tmp_path / "i.csv")
    back = read_index_csv(tmp_path / "i.csv", {"method": "mbsi1", "k": 4})
    for name in ("ma", "prob", "z", "pi", "mu", "sigma"):
        assert np.array_equal(getattr(idx, name), getattr(back, name), equal_nan=True)
    assert np.array_equal(idx.dates, back.dates)
    assert back.scale == 4


def test_index_bad_rows(tmp_path):
    p = tmp_path / "i.csv"
    p.write_text("date,ma,prob,z,pi,mu,sigma\n2004-01-05,1,0.5\n")
    with pytest.raises(MalformedRow):
        read_index_csv(p)
    p.write_text("a,b\n")
    with pytest.raises(MalformedRow):
        read_index_csv(p)


def test_events_roundtrip(tmp_path):
    d = np.datetime64("2004-01-05") + 7 * np.arange(5)
    evs = detect_events([0.5, -0.2, -1.3, -0.4, 0.3], 1.0, dates=d)
    write_events_csv(evs, tmp_path / "e.csv")
    (row,) = read_events_csv(tmp_path / "e.csv")
    assert row["start"] == "2004-01-12" and row["end"] == "2004-01-26"
    assert row["peak"] == -1.3


def test_model_files(weekly_series, tmp_path):
    m = fit_seasonal_zaga(weekly_series)
    save_model(m, tmp_path / "m.json")
    again = load_model(tmp_path / "m.json")
    assert np.array_equal(again.predict_arrays(weekly_series.dates)[1], m.predict_arrays(weekly_series.dates)[1])
    b = fit_binned_zaga(weekly_series, 4)
    save_model(b, tmp_path / "b.json")
    assert load_model(tmp_path / "b.json") == b
    write_json({"format": "other"}, tmp_path / "x.json")
    with pytest.raises(DataError):
        load_model(tmp_path / "x.json")
