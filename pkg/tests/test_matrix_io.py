import numpy as np
import pytest

from pole_swap.exception import ParseError, ShapeError
from pole_swap.matrix_io import (
    create_storage,
    read_matrix,
    schema_comment,
    write_csv,
    write_matrix,
)

HEADER = "%%MatrixMarket matrix array complex general"


def _write_text(tmp_path, text, name="input.mtx"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_create_storage_resolves_local_path(tmp_path):
    storage, path = create_storage(str(tmp_path / "a.mtx"))

    assert "file" in storage.protocol
    assert path.endswith("a.mtx")


def test_matrix_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    matrix = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    matrix[0, 0] = 1e-300 - 3.141592653589793j
    path = str(tmp_path / "m.mtx")

    write_matrix(path, matrix)

    np.testing.assert_array_equal(read_matrix(path), matrix)
    assert not list(tmp_path.glob("*.tmp"))


def test_read_matrix_accepts_comments(tmp_path):
    path = _write_text(tmp_path, f"{HEADER}\n% note\n1 1\n\n2.5 -1\n")

    np.testing.assert_array_equal(read_matrix(path), np.array([[2.5 - 1j]]))


def test_read_matrix_rejects_bad_header(tmp_path):
    path = _write_text(tmp_path, "%%MatrixMarket matrix coordinate real general\n")

    with pytest.raises(ParseError) as e:
        read_matrix(path)
    assert (e.value.line, e.value.column) == (1, 1)


def test_read_matrix_rejects_non_square(tmp_path):
    path = _write_text(tmp_path, f"{HEADER}\n2 3\n" + "1 0\n" * 6)

    with pytest.raises(ShapeError):
        read_matrix(path)


@pytest.mark.parametrize(
    "body, line, column",
    [
        ("2 2\n1 0\n1 x\n1 0\n1 0\n", 4, 2),
        ("2 2\n1 0\nnan 0\n1 0\n1 0\n", 4, 1),
        ("2 2\n1 0\n1 0 0\n1 0\n1 0\n", 4, 1),
        ("two 2\n", 2, 1),
    ],
)
def test_read_matrix_reports_position(tmp_path, body, line, column):
    path = _write_text(tmp_path, f"{HEADER}\n{body}")

    with pytest.raises(ParseError) as e:
        read_matrix(path)
    assert (e.value.line, e.value.column) == (line, column)
    assert f"line {line}, column {column}" in str(e.value)


def test_read_matrix_rejects_missing_entries(tmp_path):
    path = _write_text(tmp_path, f"{HEADER}\n2 2\n1 0\n")

    with pytest.raises(ParseError) as e:
        read_matrix(path)
    assert "Expected 4 entries, found 1" in str(e.value)


def test_read_matrix_missing_file(tmp_path):
    with pytest.raises(ParseError) as e:
        read_matrix(str(tmp_path / "absent.mtx"))
    assert isinstance(e.value.original_exception, OSError)


def test_write_matrix_rejects_vector(tmp_path):
    with pytest.raises(ShapeError):
        write_matrix(str(tmp_path / "v.mtx"), np.ones(3))


def test_write_matrix_lists_entries_by_column(tmp_path):
    path = str(tmp_path / "out.mtx")
    write_matrix(path, np.array([[1 + 2j, 3.0], [4.0, 5j]]))

    with open(path) as stream:
        lines = [line.split() for line in stream if line.strip()]
    assert [word.lower() for word in lines[0]] == HEADER.lower().split()
    body = [line for line in lines if not line[0].startswith("%")]
    assert body[0] == ["2", "2"]
    entries = [complex(float(re), float(im)) for re, im in body[1:]]
    assert entries == [1 + 2j, 4.0, 3.0, 5j]


def test_write_csv_with_summary(tmp_path):
    path = tmp_path / "report.csv"

    write_csv(
        str(path),
        "solve",
        ["index", "value"],
        [[0, 1.5], [1, "inf"]],
        summary_header=["n"],
        summary_rows=[[2]],
    )

    assert path.read_text().splitlines() == [
        schema_comment("solve"),
        "index,value",
        "0,1.5",
        "1,inf",
        "# summary",
        "n",
        "2",
    ]
    assert schema_comment("stress") == "# pole-swap stress schema v1"


def test_write_csv_failure_leaves_nothing(tmp_path):
    path = tmp_path / "report.csv"

    def rows():
        yield [0, 1.0]
        raise RuntimeError("interrupted")

    with pytest.raises(RuntimeError):
        write_csv(str(path), "solve", ["index", "value"], rows())

    assert not path.exists()
    assert list(tmp_path.iterdir()) == []
