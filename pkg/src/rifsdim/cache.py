"""On-disk cache of enumerated graphs, keyed by the system hash."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .config import canonical_json, system_hash
from .finite_type import DEFAULT_CAP, CvGraph, enumerate_graph, graph_from_dict, graph_to_dict
from .model import Rifs

CACHE_VERSION = 1


def _path(cache_dir, key: str) -> Path:
    return Path(cache_dir) / f"graph-{key[:32]}.json"


def load_or_build(rifs: Rifs, cache_dir=None, cap: int = DEFAULT_CAP) -> tuple[CvGraph, str]:
    """Graph plus one of "none", "hit", "miss", "rebuilt" (corrupt or stale file)."""
    if cache_dir is None:
        return enumerate_graph(rifs, cap), "none"
    key = system_hash(rifs)
    path = _path(cache_dir, key)
    status = "miss"
    if path.exists():
        try:
            doc = json.loads(path.read_text())
            body = doc["graph"]
            ok = (doc.get("version") == CACHE_VERSION and doc.get("system_hash") == key
                  and doc.get("checksum") == _checksum(body))
            if ok:
                return graph_from_dict(rifs, body), "hit"
        except (ValueError, KeyError, TypeError):
            pass
        status = "rebuilt"
    graph = enumerate_graph(rifs, cap)
    store(graph, cache_dir)
    return graph, status


def _checksum(body: dict) -> str:
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def store(graph: CvGraph, cache_dir) -> Path:
    key = system_hash(graph.rifs)
    body = graph_to_dict(graph)
    doc = {"version": CACHE_VERSION, "system_hash": key, "checksum": _checksum(body), "graph": body}
    path = _path(cache_dir, key)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(canonical_json(doc))
    tmp.replace(path)
    return path
