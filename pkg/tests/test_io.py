import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lloydkit import io
from lloydkit.metrics import ConvergenceTrace, evaluate


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestDenseCsv:
    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4)), elements=st.floats(-1e6, 1e6)))
    def test_round_trip(self, tmp_path_factory, matrix):
        path = tmp_path_factory.mktemp("dense") / "m.csv"
        io.save_dense_csv(path, matrix)
        np.testing.assert_array_equal(io.load_dense_csv(path), matrix)

    def test_header_mismatch(self, tmp_path):
        path = write(tmp_path / "m.csv", "2,2\n1,2\n")
        with pytest.raises(io.FormatError, match="expected 2 rows"):
            io.load_dense_csv(path)

    def test_bad_row_reports_line(self, tmp_path):
        path = write(tmp_path / "m.csv", "2,2\n1,2\n3,x\n")
        with pytest.raises(io.FormatError) as info:
            io.load_dense_csv(path)
        assert info.value.line == 3

    def test_non_finite(self, tmp_path):
        path = write(tmp_path / "m.csv", "1,1\nnan\n")
        with pytest.raises(io.FormatError, match="non-finite"):
            io.load_dense_csv(path)

    def test_width_mismatch(self, tmp_path):
        path = write(tmp_path / "m.csv", "1,3\n1,2\n")
        with pytest.raises(io.FormatError, match="expected 3 values"):
            io.load_dense_csv(path)


class TestLabels:
    def test_round_trip_is_one_based(self, tmp_path):
        path = tmp_path / "z.txt"
        io.save_labels(path, [0, 2, 1])
        assert path.read_text() == "1\n3\n2\n"
        assert io.load_labels(path).tolist() == [0, 2, 1]

    def test_out_of_range(self, tmp_path):
        path = write(tmp_path / "z.txt", "1\n4\n")
        with pytest.raises(io.FormatError, match="out of range") as info:
            io.load_labels(path, k=3)
        assert info.value.line == 2
        with pytest.raises(io.FormatError):
            io.load_labels(write(tmp_path / "y.txt", "0\n"))

    def test_sign_labels(self, tmp_path):
        path = tmp_path / "s.txt"
        io.save_sign_labels(path, np.array([1, -1, 1]))
        assert path.read_text() == "1\n2\n1\n"


class TestEdgeList:
    def test_path_graph(self, tmp_path):
        adj = io.load_edge_list(write(tmp_path / "e.txt", "1 2\n2 3\n"))
        np.testing.assert_array_equal(adj, [[0, 1, 0], [1, 0, 1], [0, 1, 0]])

    def test_duplicate_rejected(self, tmp_path):
        with pytest.raises(io.FormatError, match="duplicate") as info:
            io.load_edge_list(write(tmp_path / "e.txt", "1 2\n2 1\n"))
        assert info.value.line == 2

    def test_self_loop_rejected(self, tmp_path):
        with pytest.raises(io.FormatError, match="self-loop"):
            io.load_edge_list(write(tmp_path / "e.txt", "3 3\n"))

    def test_explicit_n(self, tmp_path):
        path = write(tmp_path / "e.txt", "1 2\n")
        assert io.load_edge_list(path, n=4).shape == (4, 4)
        with pytest.raises(io.FormatError):
            io.load_edge_list(path, n=1)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        upper = np.triu(rng.random((12, 12)) < 0.3, 1)
        adj = (upper | upper.T).astype(np.int8)
        adj[-1, -2] = adj[-2, -1] = 1
        io.save_edge_list(tmp_path / "e.txt", adj)
        np.testing.assert_array_equal(io.load_edge_list(tmp_path / "e.txt"), adj)


class TestCrowdCsv:
    def test_round_trip(self, tmp_path):
        table = np.array([[1, 0, 2], [0, 3, 3]])
        io.save_crowd_csv(tmp_path / "c.csv", table)
        np.testing.assert_array_equal(io.load_crowd_csv(tmp_path / "c.csv", m=2, n=3), table)

    def test_explicit_missing_rejected(self, tmp_path):
        path = write(tmp_path / "c.csv", "worker,item,label\n1,1,0\n")
        with pytest.raises(io.FormatError, match="omit the row"):
            io.load_crowd_csv(path)

    def test_header_required(self, tmp_path):
        with pytest.raises(io.FormatError, match="header"):
            io.load_crowd_csv(write(tmp_path / "c.csv", "1,1,1\n"))

    def test_duplicate_answer(self, tmp_path):
        path = write(tmp_path / "c.csv", "worker,item,label\n1,1,1\n1,1,2\n")
        with pytest.raises(io.FormatError, match="duplicate"):
            io.load_crowd_csv(path)

    def test_label_above_k(self, tmp_path):
        path = write(tmp_path / "c.csv", "worker,item,label\n1,1,3\n")
        with pytest.raises(io.FormatError, match="exceeds"):
            io.load_crowd_csv(path, k=2)


class TestTraceCsv:
    def test_rows_and_timing(self, tmp_path):
        trace = ConvergenceTrace()
        trace.append(0, evaluate([0, 1], [0, 0], objective=2.0), 1.23456)
        trace.append(1, evaluate([0, 1], [0, 1], objective=1.0), 2.5)
        path = tmp_path / "t.csv"
        io.write_csv(path, io.TRACE_HEADER, io.trace_rows("demo", 3, trace, timing=False))
        rows = io.read_csv(path)
        assert list(rows[0]) == io.TRACE_HEADER
        assert [r["iteration"] for r in rows] == ["0", "1"]
        assert rows[0]["A"] == "0.5" and rows[1]["A"] == "0.0"
        assert rows[0]["Lambda"] == "nan"
        assert {r["elapsed_ms"] for r in rows} == {"0.0"}
        timed = list(io.trace_rows("demo", 3, trace))
        assert timed[0][-1] == 1.235
