"""Built-in named specs shipped as JSON files under ``moranfrac/catalog``."""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .sequences import SequenceSpec


def catalog_names() -> list:
    files = resources.files("moranfrac") / "catalog"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_catalog(name: str) -> SequenceSpec:
    res = resources.files("moranfrac") / "catalog" / f"{name}.json"
    if not res.is_file():
        raise FileNotFoundError(f"no catalog spec named {name!r}; available: {', '.join(catalog_names())}")
    spec = SequenceSpec.from_dict(json.loads(res.read_text()))
    if spec.name is None:
        object.__setattr__(spec, "name", name)
    return spec


def resolve_spec(ref) -> SequenceSpec:
    """A spec from a ``SequenceSpec``, a dict, a file path or a catalog name."""
    if isinstance(ref, SequenceSpec):
        return ref
    if isinstance(ref, dict):
        return SequenceSpec.from_dict(ref)
    path = Path(ref)
    if path.suffix == ".json" or path.exists():
        return SequenceSpec.load(path)
    return load_catalog(str(ref))
