import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from microclust.panel import MeasurePanel


def make(values, measures=None, step=10):
    values = np.asarray(values, dtype=float)
    measures = measures or tuple(f"m{j}" for j in range(values.shape[1]))
    return MeasurePanel("AAA", np.arange(len(values)) * step, values, measures)


def test_shape_checked():
    with pytest.raises(ValueError):
        MeasurePanel("A", [0, 10], np.zeros((3, 1)), ("a",))


def test_duplicate_measures_rejected():
    with pytest.raises(ValueError):
        MeasurePanel("A", [0], np.zeros((1, 2)), ("a", "a"))


def test_uneven_grid_rejected():
    with pytest.raises(ValueError):
        MeasurePanel("A", [0, 10, 25], np.zeros((3, 1)), ("a",))
    with pytest.raises(ValueError):
        MeasurePanel("A", [10, 0], np.zeros((2, 1)), ("a",))


def test_columns_select_coverage():
    p = make([[1, np.nan], [2, 5], [3, np.nan], [4, np.nan]], ("a", "b"))
    assert p.column("a").tolist() == [1, 2, 3, 4]
    assert p.select(["b"]).measures == ("b",)
    assert p.coverage().tolist() == [1.0, 0.25]
    assert p.interval_ns == 10


def test_csv_layout(tmp_path):
    p = make([[1.5, np.nan], [0.0, -2.0]], ("a", "b"))
    p.to_csv(tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().splitlines() == [
        "interval_start_ns,a,b", "0,1.5,", "10,0.0,-2.0"]


finite_or_nan = st.one_of(st.floats(allow_nan=False, allow_infinity=False, width=64),
                          st.just(float("nan")))


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 12), st.integers(1, 5)), elements=finite_or_nan))
def test_csv_and_binary_round_trip(tmp_path_factory, values):
    tmp = tmp_path_factory.mktemp("panel")
    p = make(values, step=10_000_000_000)
    p.to_csv(tmp / "p.csv")
    p.save(tmp / "p.bin")
    for q in (MeasurePanel.read_csv(tmp / "p.csv", "AAA"), MeasurePanel.load(tmp / "p.bin")):
        assert q.symbol == "AAA"
        assert q.measures == p.measures
        assert q.interval_start.tolist() == p.interval_start.tolist()
        np.testing.assert_array_equal(q.values, p.values)


def test_binary_header_checked(tmp_path):
    (tmp_path / "x.bin").write_bytes(b"garbage!" + bytes(20))
    with pytest.raises(ValueError):
        MeasurePanel.load(tmp_path / "x.bin")


def test_binary_magic(tmp_path):
    make([[1.0]]).save(tmp_path / "p.bin")
    assert (tmp_path / "p.bin").read_bytes()[:8] == b"MCPANEL\0"


def test_to_frame():
    f = make([[1.0, 2.0]], ("a", "b")).to_frame()
    assert list(f.columns) == ["interval_start_ns", "a", "b"]
