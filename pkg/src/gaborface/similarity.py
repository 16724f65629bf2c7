"""Jet-based image similarity, geometry dissimilarity, pairwise matrices."""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateJetError,
    DimensionError,
    FormatError,
    IncompatibleCodingError,
    ParameterError,
)
from .grid import NODE_COUNT


@dataclass(frozen=True)
class CodedImage:
    """All 34 jets of one image plus the fingerprint of the bank used."""

    image_id: str
    jets: tuple
    bank_fingerprint: str

    def __post_init__(self):
        if len(self.jets) != NODE_COUNT:
            raise ParameterError(
                f"coded image needs {NODE_COUNT} jets, got {len(self.jets)}"
            )
        sizes = {len(j) for j in self.jets}
        if len(sizes) != 1:
            raise ParameterError(f"inconsistent jet dimensions: {sorted(sizes)}")


def jet_similarity(a, b):
    """Normalized dot product of two jets; in [0, 1] for non-negative jets."""
    va, vb = a.amplitudes, b.amplitudes
    if va.size != vb.size:
        raise DimensionError(f"jet dimensions differ: {va.size} vs {vb.size}")
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise DegenerateJetError("all-zero jet has no direction")
    return float(np.dot(va, vb) / (na * nb))


def gabor_image_similarity(a, b):
    """Mean jet similarity over corresponding grid nodes.

    A node pair involving an all-zero jet contributes 0 and emits a
    warning instead of failing the whole comparison.
    """
    if a.bank_fingerprint != b.bank_fingerprint:
        raise IncompatibleCodingError(
            f"images {a.image_id!r} and {b.image_id!r} coded with different banks"
        )
    total = 0.0
    for i, (ja, jb) in enumerate(zip(a.jets, b.jets)):
        try:
            total += jet_similarity(ja, jb)
        except DegenerateJetError:
            warnings.warn(
                f"zero jet at node {i} comparing {a.image_id!r} vs {b.image_id!r}; "
                "counting similarity 0 for that node"
            )
    return total / NODE_COUNT


def geometry_dissimilarity(a, b):
    """Euclidean distance between two shape vectors."""
    if a.distances.size != b.distances.size:
        raise DimensionError(
            f"shape vector lengths differ: {a.distances.size} vs {b.distances.size}"
        )
    return float(np.linalg.norm(a.distances - b.distances))


@dataclass(frozen=True)
class PairMatrix:
    """Symmetric pairwise matrix over a list of items."""

    item_ids: tuple
    values: np.ndarray
    kind: str  # "similarity" or "dissimilarity"

    def __post_init__(self):
        if self.kind not in ("similarity", "dissimilarity"):
            raise ParameterError(f"unknown matrix kind {self.kind!r}")
        vals = np.asarray(self.values, dtype=float)
        n = len(self.item_ids)
        if vals.shape != (n, n):
            raise ParameterError(f"matrix shape {vals.shape} != ({n}, {n})")
        if not np.allclose(vals, vals.T, rtol=0, atol=0):
            raise ParameterError("pair matrix must be exactly symmetric")
        diag = 1.0 if self.kind == "similarity" else 0.0
        if not np.all(np.diag(vals) == diag):
            raise ParameterError(f"{self.kind} matrix diagonal must be {diag}")
        vals = np.ascontiguousarray(vals)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "item_ids", tuple(self.item_ids))

    def to_json(self):
        return json.dumps(
            {
                "kind": self.kind,
                "item_ids": list(self.item_ids),
                "values": [list(row) for row in self.values],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
            return cls(tuple(doc["item_ids"]), np.asarray(doc["values"]), doc["kind"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"malformed pair-matrix document: {exc}") from exc

    def to_csv(self):
        out = io.StringIO()
        out.write("," + ",".join(self.item_ids) + "\n")
        for item_id, row in zip(self.item_ids, self.values):
            out.write(item_id + "," + ",".join(repr(float(v)) for v in row) + "\n")
        return out.getvalue()


def pairwise_matrix(items, measure):
    """Fill the full symmetric matrix for a list of items.

    measure "gabor" takes CodedImage items and yields a similarity matrix;
    measure "geometry" takes (item_id, ShapeVector) pairs and yields a
    dissimilarity matrix.
    """
    if measure == "gabor":
        ids = [it.image_id for it in items]
        compare = gabor_image_similarity
        payloads = list(items)
        kind, diag = "similarity", 1.0
    elif measure == "geometry":
        ids = [item_id for item_id, _ in items]
        compare = geometry_dissimilarity
        payloads = [vec for _, vec in items]
        kind, diag = "dissimilarity", 0.0
    else:
        raise ParameterError(f"unknown measure {measure!r}")
    n = len(ids)
    if n < 2:
        raise ParameterError(f"need at least 2 items, got {n}")
    if len(set(ids)) != n:
        raise ParameterError("duplicate item ids")
    values = np.full((n, n), diag)
    for i in range(n):
        for j in range(i + 1, n):
            try:
                values[i, j] = values[j, i] = compare(payloads[i], payloads[j])
            except (ValueError, RuntimeError) as exc:
                raise type(exc)(f"pair ({ids[i]!r}, {ids[j]!r}): {exc}") from exc
    return PairMatrix(tuple(ids), values, kind)
