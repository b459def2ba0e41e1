"""JSON readers and writers for meshes, order specs, forms and reports."""
from __future__ import annotations

import json
from pathlib import Path

from .meshes import BUNDLED, load_bundled, mesh_from_json
from .simplicial import Complex
from .spaces.assignment import SequenceAssignment, assignment_from_spec
from .spaces.layout import GlobalForm, Layout


def read_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from None


def write_json(path: str | Path, data) -> None:
    Path(path).write_text(dumps(data) + "\n")


def dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=False)


def load_mesh(spec: str) -> Complex:
    """A mesh JSON path, or the name of a bundled mesh (with or without .json)."""
    path = Path(spec)
    if path.exists():
        return mesh_from_json(read_json(path))
    name = path.name[:-5] if path.name.endswith(".json") else path.name
    if name in BUNDLED:
        return load_bundled(name)
    raise FileNotFoundError(f"no mesh file {spec!r} and no bundled mesh of that name")


def load_order_spec(c: Complex, spec: str) -> SequenceAssignment:
    """Order spec from a JSON file or an inline JSON string."""
    text = spec.strip()
    data = json.loads(text) if text.startswith("{") else read_json(spec)
    return assignment_from_spec(c, data)


def load_form(layout: Layout, path: str | Path) -> GlobalForm:
    return GlobalForm.from_json(layout, read_json(path))


def save_form(path: str | Path, form: GlobalForm) -> None:
    write_json(path, form.to_json())
