import contextlib
import csv
import io
import math
import uuid
from typing import Iterable, Iterator, Optional, Sequence, Tuple

import fsspec
import numpy as np
import scipy.io
from fsspec.spec import AbstractFileSystem

from pole_swap import config
from pole_swap.exception import ParseError, ShapeError
from pole_swap.logging_config import get_library_logger

logger = get_library_logger()


def create_storage(path: str) -> Tuple[AbstractFileSystem, str]:
    """
    Resolves any fsspec URL or local path to its filesystem and the path
    within it.
    """
    return fsspec.core.url_to_fs(path)


@contextlib.contextmanager
def atomic_open(path: str, mode: str = "wb", **kwargs) -> Iterator:
    """
    Opens a sibling temporary file for writing and moves it onto ``path``
    only when the block finishes without an exception; on failure the
    temporary file is removed and ``path`` is left untouched.
    """
    storage, target = create_storage(path)
    temporary = f"{target}.{uuid.uuid4().hex}.tmp"
    try:
        with storage.open(temporary, mode, **kwargs) as stream:
            yield stream
        storage.mv(temporary, target)
    except BaseException:
        if storage.exists(temporary):
            storage.rm(temporary)
        raise


def _expected_header() -> list:
    return config.MATRIX_MARKET_HEADER.lower().split()


def _validate_matrix_market(text: str) -> Tuple[int, int]:
    """
    Checks the banner, size line and every data line of a dense complex
    Matrix Market file before it is handed to scipy.

    :return: The declared (rows, columns).
    :raises ParseError: On the first malformed line, with its position.
    :raises ShapeError: If the declared array is not square.
    """
    lines = text.splitlines()
    if not lines or lines[0].lower().split() != _expected_header():
        raise ParseError(
            f"Expected header '{config.MATRIX_MARKET_HEADER}'", line=1, column=1
        )

    size = None
    entries = 0
    for number, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        tokens = stripped.split()
        if size is None:
            try:
                rows, cols = (int(token) for token in tokens)
            except ValueError as e:
                raise ParseError(
                    "Size line must hold two integers", line=number, column=1
                ) from e
            if rows < 1 or cols < 1:
                raise ParseError("Array dimensions must be positive", line=number)
            if rows != cols:
                raise ShapeError(f"Matrix must be square, got {rows} x {cols}")
            size = (rows, cols)
            continue
        if len(tokens) != 2:
            raise ParseError(
                f"Expected a real and an imaginary part, got {len(tokens)} fields",
                line=number,
                column=1,
            )
        for column, token in enumerate(tokens, start=1):
            try:
                value = float(token)
            except ValueError as e:
                raise ParseError(
                    f"'{token}' is not a number", line=number, column=column
                ) from e
            if not math.isfinite(value):
                raise ParseError(
                    f"'{token}' is not finite", line=number, column=column
                )
        entries += 1

    if size is None:
        raise ParseError("Missing size line", line=len(lines) + 1)
    if entries != size[0] * size[1]:
        raise ParseError(
            f"Expected {size[0] * size[1]} entries, found {entries}",
            line=len(lines) + 1,
        )
    return size


def read_matrix(path: str) -> np.ndarray:
    """
    Reads a dense complex square matrix stored as Matrix Market
    ``array complex general`` from any fsspec path.

    :param path: Local path or fsspec URL.
    :return: The matrix as complex128.
    :rtype: numpy.ndarray
    :raises ParseError: If the file is unreadable or malformed.
    :raises ShapeError: If the array is not square.
    """
    try:
        with fsspec.open(path, "rt") as stream:
            text = stream.read()
    except OSError as e:
        logger.exception(
            "Failed to read matrix file", extra={"path": path, "error": str(e)}
        )
        raise ParseError(
            f"Failed to read matrix file '{path}': {str(e)}", original_exception=e
        ) from e

    _validate_matrix_market(text)
    try:
        matrix = scipy.io.mmread(io.BytesIO(text.encode()))
    except Exception as e:
        logger.exception(
            "Failed to decode matrix file", extra={"path": path, "error": str(e)}
        )
        raise ParseError(
            f"Failed to decode matrix file '{path}': {str(e)}", original_exception=e
        ) from e
    logger.debug("Matrix read", extra={"path": path, "n": matrix.shape[0]})
    return np.asarray(matrix, dtype=np.complex128)


def write_matrix(path: str, matrix) -> None:
    """
    Writes a dense complex matrix as Matrix Market ``array complex general``
    with 17 significant digits. Entries are listed column by column, as the
    array format prescribes, not row by row; :func:`read_matrix` and other
    Matrix Market readers rebuild the same matrix. Finite doubles survive a
    write/read round trip unchanged.
    """
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.ndim != 2:
        raise ShapeError(f"Expected a 2-d matrix, got shape {matrix.shape}")
    buffer = io.BytesIO()
    scipy.io.mmwrite(
        buffer,
        matrix,
        field="complex",
        precision=config.MATRIX_MARKET_PRECISION,
        symmetry="general",
    )
    with atomic_open(path, "wb") as stream:
        stream.write(buffer.getvalue())
    logger.debug("Matrix written", extra={"path": path, "n": matrix.shape[0]})


def schema_comment(command: str) -> str:
    return f"# pole-swap {command} schema v{config.CSV_SCHEMA_VERSION}"


def write_csv(
    path: str,
    command: str,
    header: Sequence[str],
    rows: Iterable[Sequence],
    *,
    summary_header: Optional[Sequence[str]] = None,
    summary_rows: Iterable[Sequence] = (),
) -> None:
    """
    Writes a versioned CSV report atomically: the schema comment, the header
    and rows, and optionally a ``# summary`` block with its own header.
    """
    with atomic_open(path, "w", newline="") as stream:
        stream.write(schema_comment(command) + "\n")
        writer = csv.writer(stream)
        writer.writerow(header)
        writer.writerows(rows)
        if summary_header is not None:
            stream.write("# summary\n")
            writer.writerow(summary_header)
            writer.writerows(summary_rows)
    logger.info("Report written", extra={"path": path, "command": command})
