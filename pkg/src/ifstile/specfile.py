"""JSON IFS files and the bundled example systems.

Format::

    {"name": "...", "dimension": 2,
     "maps": [{"matrix": [[a, b], [c, d]], "translation": [e, g], "cost": 1}, ...],
     "tile": {"kind": "box", "data": [[0, 0], [1, 1]]},
     "similarity_tol": 1e-9, "suggested_costs": [1, 8, 8]}

``cost``, ``tile``, ``similarity_tol`` and ``suggested_costs`` are optional.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .geometry import SIMILARITY_RTOL, GeometryError, IfsSpec, Similitude


class SpecFileError(ValueError):
    pass


def bundled_names() -> list:
    root = resources.files("ifstile") / "specs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _bundled_text(name: str) -> str | None:
    res = resources.files("ifstile") / "specs" / f"{name}.json"
    return res.read_text(encoding="utf-8") if res.is_file() else None


def read_spec_document(ref: str) -> dict:
    """The raw JSON of a file path or a bundled name."""
    path = Path(ref)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    else:
        text = _bundled_text(ref) if "/" not in ref and not ref.endswith(".json") else None
        if text is None:
            raise FileNotFoundError(f"no such spec file or bundled spec: {ref}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecFileError(f"{ref}: invalid JSON ({e})") from e


def parse_spec(doc: dict, costs=None) -> IfsSpec:
    """Build an IfsSpec; ``costs`` overrides the file's per-map costs."""
    if not isinstance(doc, dict) or "maps" not in doc:
        raise SpecFileError("spec must be an object with a 'maps' list")
    maps_doc = doc["maps"]
    if not isinstance(maps_doc, list):
        raise SpecFileError("'maps' must be a list")
    tol = float(doc.get("similarity_tol", SIMILARITY_RTOL))
    dim = doc.get("dimension")
    maps, file_costs = [], []
    try:
        for k, m in enumerate(maps_doc, 1):
            rows = m["matrix"]
            t = m["translation"]
            if dim is not None and (len(rows) != dim or len(t) != dim):
                raise SpecFileError(f"map {k}: expected dimension {dim}")
            maps.append(Similitude(rows, t, tol=tol))
            file_costs.append(m.get("cost"))
        if costs is None and any(c is not None for c in file_costs):
            if any(c is None for c in file_costs):
                raise SpecFileError("give a cost for every map or for none")
            costs = file_costs
        return IfsSpec(tuple(maps), None if costs is None else tuple(costs), doc.get("name", ""), doc.get("tile"))
    except (KeyError, TypeError) as e:
        raise SpecFileError(f"malformed map entry: {e}") from e
    except GeometryError as e:
        raise SpecFileError(str(e)) from e


def load_spec(ref: str, costs=None) -> IfsSpec:
    return parse_spec(read_spec_document(ref), costs)


def suggested_costs(ref: str):
    return read_spec_document(ref).get("suggested_costs")
