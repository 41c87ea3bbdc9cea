"""Edge-list, label and perturbation text formats.

Edge lists: optional ``#`` comment lines, then a header ``n m``, then ``m``
lines ``u v`` with 0-based endpoints. Writers emit normalized pairs in
sorted order so a write/read cycle is bit-exact.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from powerlab.errors import GraphError
from powerlab.graph import Graph, build_graph


def _data_lines(text):
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            yield lineno, stripped


def format_edgelist(g: Graph, comment: str | None = None) -> str:
    e = g.edges()
    parts = []
    if comment:
        parts.append(f"# {comment}\n")
    parts.append(f"{g.n} {len(e)}\n")
    parts.extend(f"{u} {v}\n" for u, v in e.tolist())
    return "".join(parts)


def parse_edgelist(text: str, labels=None) -> Graph:
    lines = list(_data_lines(text))
    if not lines:
        raise GraphError("edge list is empty (missing 'n m' header)")
    lineno, header = lines[0]
    try:
        n, m = (int(tok) for tok in header.split())
    except ValueError:
        raise GraphError(f"line {lineno}: header must be 'n m', got {header!r}") from None
    body = lines[1:]
    if len(body) != m:
        raise GraphError(f"header announces {m} edges but {len(body)} edge lines follow")
    edges = []
    for lineno, line in body:
        toks = line.split()
        if len(toks) != 2:
            raise GraphError(f"line {lineno}: expected 'u v', got {line!r}")
        try:
            edges.append((int(toks[0]), int(toks[1])))
        except ValueError:
            raise GraphError(f"line {lineno}: non-integer endpoint in {line!r}") from None
    return build_graph(n, edges, labels)


def parse_labels(text: str) -> np.ndarray:
    out = []
    for lineno, line in _data_lines(text):
        if line not in ("1", "2"):
            raise GraphError(f"line {lineno}: label must be 1 or 2, got {line!r}")
        out.append(int(line))
    return np.asarray(out, dtype=np.int8)


def format_labels(labels) -> str:
    return "".join(f"{int(x)}\n" for x in labels)


def read_graph(path: str | os.PathLike, labels_path: str | os.PathLike | None = None) -> Graph:
    labels = parse_labels(Path(labels_path).read_text()) if labels_path else None
    return parse_edgelist(Path(path).read_text(), labels)


def write_graph(g: Graph, path, labels_path=None, comment: str | None = None) -> None:
    Path(path).write_text(format_edgelist(g, comment))
    if labels_path is not None:
        if g.labels is None:
            raise GraphError("graph carries no labels to write")
        Path(labels_path).write_text(format_labels(g.labels))


def default_labels_path(path) -> Path:
    """Companion label file used by the CLI: ``g.el`` -> ``g.labels``."""
    return Path(path).with_suffix(".labels")
