"""On-disk cache for expensive, deterministic tables.

Layout under the cache root (``$HYPERCUBE_CLUSTERS_CACHE`` or
``~/.cache/hypercube_clusters``)::

    v1/hist_d{d}.json        (|A|, |N(A)|) histogram of even subsets
    v1/lk_k{k}.json          symbolic cluster sum L_k
    v1/sets_k{k}_c{c}.json   canonical 2-linked set lists

Each file is a JSON object with ``format``, ``version``, ``kind``, ``key``,
``payload`` and a ``sha256`` of the canonical payload encoding.  Anything
that fails to parse or verify is recomputed and rewritten.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Callable

import numpy as np

log = logging.getLogger(__name__)

FORMAT = "hypercube-clusters-cache"
VERSION = 1
ENV_VAR = "HYPERCUBE_CLUSTERS_CACHE"

# provenance of the most recent lookups, for self-describing output records
provenance: dict[str, str] = {}


def cache_root() -> Path | None:
    root = os.environ.get(ENV_VAR)
    if root == "":
        return None  # caching disabled
    path = Path(root) if root else Path.home() / ".cache" / "hypercube_clusters"
    return path / f"v{VERSION}"


def _digest(payload: Any) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def read(name: str, kind: str, key: dict) -> Any | None:
    root = cache_root()
    if root is None:
        return None
    path = root / name
    if not path.exists():
        return None
    try:
        obj = json.loads(path.read_text())
        ok = (obj["format"] == FORMAT and obj["version"] == VERSION and obj["kind"] == kind
              and obj["key"] == key and obj["sha256"] == _digest(obj["payload"]))
    except (ValueError, KeyError, TypeError):
        ok = False
    if not ok:
        log.warning("cache file %s is corrupt or stale; recomputing", path)
        provenance[name] = "recomputed-corrupt"
        return None
    return obj["payload"]


def write(name: str, kind: str, key: dict, payload: Any) -> None:
    root = cache_root()
    if root is None:
        return
    root.mkdir(parents=True, exist_ok=True)
    obj = {"format": FORMAT, "version": VERSION, "kind": kind, "key": key,
           "payload": payload, "sha256": _digest(payload)}
    tmp = root / (name + ".tmp")
    tmp.write_text(json.dumps(obj, sort_keys=True, separators=(",", ":")))
    tmp.replace(root / name)


def cached(name: str, kind: str, key: dict, build: Callable[[], Any]) -> Any:
    payload = read(name, kind, key)
    if payload is not None:
        provenance[name] = "hit"
        return payload
    payload = build()
    provenance.setdefault(name, "miss")
    write(name, kind, key, payload)
    return payload


def load_or_build_histogram(d: int, threads: int = 1) -> np.ndarray:
    from .exact import neighborhood_histogram

    payload = cached(f"hist_d{d}.json", "neighborhood-histogram", {"d": d},
                     lambda: neighborhood_histogram(d, threads=threads).tolist())
    return np.array(payload, dtype=np.int64)


def load_or_build_lk(k: int):
    from .clusters import LkValue, compute_Lk_symbolic

    payload = cached(f"lk_k{k}.json", "lk-symbolic", {"k": k},
                     lambda: compute_Lk_symbolic(k).to_json())
    return LkValue.from_json(payload)


def load_or_build_set_lists(k_max: int, coords: int | None = None):
    from .clusters import CanonicalSetList, _index, build_set_lists

    c = 2 * k_max if coords is None else coords

    def build():
        lists = build_set_lists(k_max, c)
        return {str(m): [sorted(S) for S in lists[m].entries] for m in lists}

    payload = cached(f"sets_k{k_max}_c{c}.json", "canonical-set-lists", {"k_max": k_max, "coords": c}, build)
    out = {}
    for m, entries in payload.items():
        es = [frozenset(e) for e in entries]
        out[int(m)] = CanonicalSetList(int(m), c, es, _index(es))
    return out
