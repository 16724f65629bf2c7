"""Averaged semantic rating vectors and their Euclidean dissimilarity."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FormatError, ParameterError

RATING_MIN = 1.0
RATING_MAX = 5.0


@dataclass(frozen=True)
class RatingVector:
    """Per-adjective mean ratings for one image, five-point scale."""

    image_id: str
    adjectives: tuple
    values: np.ndarray

    def __post_init__(self):
        if len(self.adjectives) not in (5, 6):
            raise ParameterError(
                f"expected 5 or 6 adjectives, got {len(self.adjectives)}"
            )
        vals = np.asarray(self.values, dtype=float)
        if vals.size != len(self.adjectives):
            raise ParameterError("values length must match adjective count")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("rating values must be finite")
        if np.any(vals < RATING_MIN) or np.any(vals > RATING_MAX):
            raise ParameterError(
                f"rating values must lie in [{RATING_MIN}, {RATING_MAX}]"
            )
        vals = np.ascontiguousarray(vals)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "adjectives", tuple(self.adjectives))


def load_ratings(table):
    """Parse a ratings CSV (header: image_id plus 5 or 6 adjective columns)."""
    if hasattr(table, "read"):
        table = table.read()
    reader = csv.reader(io.StringIO(table))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty ratings table") from None
    if not header or header[0] != "image_id":
        raise FormatError("first column must be image_id")
    adjectives = tuple(header[1:])
    if len(adjectives) not in (5, 6):
        raise FormatError(
            f"expected 5 or 6 adjective columns, found {len(adjectives)}"
        )
    vectors = []
    for row_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise FormatError(
                f"row {row_no}: expected {len(header)} cells, found {len(row)}"
            )
        values = []
        for col_no, cell in enumerate(row[1:], start=2):
            try:
                value = float(cell)
            except ValueError:
                raise FormatError(
                    f"row {row_no}, column {col_no}: non-numeric cell {cell!r}"
                ) from None
            if not RATING_MIN <= value <= RATING_MAX:
                raise FormatError(
                    f"row {row_no}, column {col_no}: value {value} outside "
                    f"[{RATING_MIN}, {RATING_MAX}]"
                )
            values.append(value)
        vectors.append(RatingVector(row[0], adjectives, np.array(values)))
    return vectors


def dump_ratings(vectors):
    """Serialize rating vectors back to CSV; floats round-trip exactly."""
    if not vectors:
        raise ParameterError("nothing to serialize")
    adjectives = vectors[0].adjectives
    lines = ["image_id," + ",".join(adjectives)]
    for vec in vectors:
        if vec.adjectives != adjectives:
            raise ParameterError(
                f"adjective mismatch for {vec.image_id!r}: "
                f"{vec.adjectives} vs {adjectives}"
            )
        lines.append(vec.image_id + "," + ",".join(repr(float(v)) for v in vec.values))
    return "\n".join(lines) + "\n"


def semantic_dissimilarity(a, b):
    """Euclidean distance between two rating vectors."""
    if a.adjectives != b.adjectives:
        raise DimensionError(
            f"adjective lists differ: {a.adjectives} vs {b.adjectives}"
        )
    return float(np.linalg.norm(a.values - b.values))


def semantic_matrix(vectors):
    """Pairwise semantic dissimilarity matrix for a list of rating vectors."""
    from .similarity import PairMatrix

    n = len(vectors)
    if n < 2:
        raise ParameterError(f"need at least 2 rating vectors, got {n}")
    ids = tuple(v.image_id for v in vectors)
    if len(set(ids)) != n:
        raise ParameterError("duplicate image ids in ratings")
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = semantic_dissimilarity(vectors[i], vectors[j])
    return PairMatrix(ids, values, "dissimilarity")
