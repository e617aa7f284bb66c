"""Response-file parsing, report serialization, and the run manifest."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .model import ResponseMatrix

__all__ = [
    "ParseError",
    "RunManifest",
    "load_responses",
    "write_responses",
    "config_digest",
    "write_json_report",
]

TOOL_VERSION = "robustirt 0.1.0"
_DELIMITERS = (",", "\t", ";", None)  # None = whitespace


class ParseError(ValueError):
    """Input file violates the response-matrix format."""


def _split(line: str, delimiter):
    return [tok.strip() for tok in (line.split(delimiter) if delimiter else line.split())]


def _sniff_delimiter(first_line: str):
    for cand in (",", "\t", ";"):
        if cand in first_line:
            return cand
    return None


def _is_binary_token(tok: str) -> bool:
    return tok in ("0", "1")


def load_responses(path) -> ResponseMatrix:
    """Parse a delimiter-separated binary response file.

    Layout: optional header row of item labels, one row per respondent,
    optional leading identifier column, remaining cells 0 or 1.  Missing
    values, non-binary cells, and ragged rows are rejected with the
    offending 1-based row/column position.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() != ""]
    if not lines:
        raise ParseError(f"{path}: file contains no data rows")
    delimiter = _sniff_delimiter(lines[0])
    rows = [_split(ln, delimiter) for ln in lines]

    # a header is any first row whose non-leading cells are not all 0/1
    header_tokens = rows[0]
    has_header = any(not _is_binary_token(t) for t in header_tokens[1:])
    data_rows = rows[1:] if has_header else rows
    if not data_rows:
        raise ParseError(f"{path}: no respondent rows after the header")

    has_ids = any(not _is_binary_token(r[0]) for r in data_rows)
    width = len(data_rows[0])
    values = []
    ids = []
    for i, row in enumerate(data_rows):
        rownum = i + 2 if has_header else i + 1
        if len(row) != width:
            raise ParseError(
                f"{path}: row {rownum} has {len(row)} cells, expected {width}"
            )
        cells = row[1:] if has_ids else row
        ids.append(row[0] if has_ids else str(i + 1))
        parsed = []
        for c, tok in enumerate(cells):
            col = c + (2 if has_ids else 1)
            if tok == "":
                raise ParseError(f"{path}: missing value at (row {rownum}, col {col})")
            if not _is_binary_token(tok):
                raise ParseError(
                    f"{path}: non-binary cell {tok!r} at (row {rownum}, col {col})"
                )
            parsed.append(int(tok))
        values.append(parsed)
    matrix = np.asarray(values, dtype=np.int8)
    if matrix.shape[1] < 1:
        raise ParseError(f"{path}: no item columns found")
    return ResponseMatrix(responses=matrix, row_ids=tuple(ids))


def write_responses(matrix: ResponseMatrix, path) -> None:
    """Write a ResponseMatrix in the canonical comma-separated layout."""
    j = matrix.n_items
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id," + ",".join(f"i{k + 1}" for k in range(j)) + "\n")
        for rid, row in zip(matrix.row_ids, matrix.responses):
            fh.write(rid + "," + ",".join(str(int(v)) for v in row) + "\n")


def config_digest(config: dict) -> str:
    """Content hash of a resolved configuration (canonical JSON, sha256)."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Provenance block embedded in every emitted report."""

    command: str
    config_digest: str
    seed: int
    versions: str = TOOL_VERSION

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "versions": self.versions,
        }


def write_json_report(path, manifest: RunManifest, settings: dict, results) -> None:
    """Nested machine report: manifest, resolved settings, results."""
    doc = {"manifest": manifest.to_dict(), "settings": settings, "results": results}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
