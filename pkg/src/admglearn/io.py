"""File formats: graph JSON, plain-text edge lists, dataset CSV, parameter JSON.

Every writer goes through a temp-file-plus-rename so consumers never see a
partial file. Data and parameter floats are written with full round-trip
precision (`repr`), so save followed by load reproduces the in-memory
values bit for bit.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from typing import Optional, Sequence

import numpy as np

from .graphs import Admg, GraphError
from .sem import Dataset, SemParams


class FormatError(ValueError):
    """Unreadable or malformed input file."""


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_text(path: str, what: str) -> str:
    try:
        with open(path, "r") as handle:
            return handle.read()
    except OSError as exc:
        raise FormatError(f"cannot read {what} file '{path}': {exc}") from exc


# -- graphs -----------------------------------------------------------------

def graph_to_dict(g: Admg) -> dict:
    return {
        "vertices": list(g.names),
        "directed": [[a, b] for a, b in g.directed_edges()],
        "bidirected": [[a, b] for a, b in g.bidirected_edges()],
    }


def graph_from_dict(obj: dict) -> Admg:
    for key in ("vertices", "directed", "bidirected"):
        if key not in obj:
            raise FormatError(f"graph object is missing field '{key}'")
    try:
        return Admg.from_edges(
            obj["vertices"],
            directed=[tuple(e) for e in obj["directed"]],
            bidirected=[tuple(e) for e in obj["bidirected"]],
        )
    except GraphError as exc:
        raise FormatError(f"invalid graph: {exc}") from exc


def save_graph_json(g: Admg, path: str) -> None:
    atomic_write_text(path, json.dumps(graph_to_dict(g), indent=2) + "\n")


def load_graph_json(path: str) -> Admg:
    text = _read_text(path, "graph")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"graph file '{path}' is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise FormatError(f"graph file '{path}' must hold a JSON object")
    return graph_from_dict(obj)


def graph_to_edge_list(g: Admg) -> str:
    """Vertex names one per line (fixing the index order), then the edges."""
    lines = list(g.names)
    lines += [f"{a} -> {b}" for a, b in g.directed_edges()]
    lines += [f"{a} <-> {b}" for a, b in g.bidirected_edges()]
    return "\n".join(lines) + "\n"


def graph_from_edge_list(text: str) -> Admg:
    names: list[str] = []
    seen: set[str] = set()
    directed: list[tuple[str, str]] = []
    bidirected: list[tuple[str, str]] = []

    def declare(name: str) -> None:
        if name not in seen:
            seen.add(name)
            names.append(name)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) == 1:
            declare(tokens[0])
        elif len(tokens) == 3 and tokens[1] in ("->", "<->"):
            declare(tokens[0])
            declare(tokens[2])
            if tokens[1] == "->":
                directed.append((tokens[0], tokens[2]))
            else:
                bidirected.append((tokens[0], tokens[2]))
        else:
            raise FormatError(
                f"line {lineno}: expected 'A -> B', 'A <-> B', or a vertex name"
            )
    if not names:
        raise FormatError("edge list declares no vertices")
    try:
        return Admg.from_edges(names, directed=directed, bidirected=bidirected)
    except GraphError as exc:
        raise FormatError(f"invalid graph: {exc}") from exc


def save_graph_edge_list(g: Admg, path: str) -> None:
    atomic_write_text(path, graph_to_edge_list(g))


def load_graph_edge_list(path: str) -> Admg:
    return graph_from_edge_list(_read_text(path, "graph"))


def load_graph(path: str) -> Admg:
    """JSON when the file looks like JSON, edge-list text otherwise."""
    text = _read_text(path, "graph")
    if text.lstrip().startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"graph file '{path}' is not valid JSON: {exc}") from exc
        return graph_from_dict(obj)
    return graph_from_edge_list(text)


# -- datasets ---------------------------------------------------------------

def dataset_to_csv(data: Dataset) -> str:
    buffer = _io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(data.names)
    for row in data.X:
        writer.writerow([repr(float(x)) for x in row])
    return buffer.getvalue()


def save_dataset_csv(data: Dataset, path: str) -> None:
    atomic_write_text(path, dataset_to_csv(data))


def load_dataset_csv(path: str) -> Dataset:
    text = _read_text(path, "data")
    reader = csv.reader(_io.StringIO(text))
    rows = [row for row in reader if row]
    if len(rows) < 2:
        raise FormatError(f"data file '{path}' needs a header and at least two rows")
    names = [nm.strip() for nm in rows[0]]
    try:
        X = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    except ValueError as exc:
        raise FormatError(f"data file '{path}' has a non-numeric cell: {exc}") from exc
    if X.ndim != 2 or X.shape[1] != len(names):
        raise FormatError(f"data file '{path}' has ragged rows")
    try:
        return Dataset(X, names)
    except ValueError as exc:
        raise FormatError(f"data file '{path}': {exc}") from exc


# -- parameters -------------------------------------------------------------

def params_to_dict(params: SemParams, names: Optional[Sequence[str]] = None) -> dict:
    if names is None:
        names = [f"V{i + 1}" for i in range(params.d)]
    return {
        "delta": params.delta.tolist(),
        "beta": params.beta.tolist(),
        "names": list(names),
    }


def params_from_dict(obj: dict) -> tuple[SemParams, list[str]]:
    for key in ("delta", "beta", "names"):
        if key not in obj:
            raise FormatError(f"parameter object is missing field '{key}'")
    try:
        params = SemParams(np.array(obj["delta"]), np.array(obj["beta"]))
    except ValueError as exc:
        raise FormatError(f"invalid parameters: {exc}") from exc
    names = [str(nm) for nm in obj["names"]]
    if len(names) != params.d:
        raise FormatError("field 'names' does not match the parameter dimension")
    return params, names


def save_params_json(
    params: SemParams, path: str, names: Optional[Sequence[str]] = None
) -> None:
    atomic_write_text(path, json.dumps(params_to_dict(params, names), indent=2) + "\n")


def load_params_json(path: str) -> tuple[SemParams, list[str]]:
    text = _read_text(path, "parameter")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"parameter file '{path}' is not valid JSON: {exc}") from exc
    return params_from_dict(obj)
