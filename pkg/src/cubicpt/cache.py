"""Content-addressed result cache for CLI runs.

Keys hash the full (operation, parameters, tolerances, version) tuple;
values are the serialized payloads the CLI would otherwise recompute.
Writes are atomic (temp file + rename) so a cache directory can be
shared across sequential runs.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from pathlib import Path

from . import __version__


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class ResultCache:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def key(self, operation: str, params: dict) -> str:
        blob = canonical_json({
            "operation": operation,
            "params": params,
            "version": __version__,
        })
        return hashlib.sha256(blob.encode()).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str):
        p = self._path(key)
        if not p.exists():
            return None
        with open(p) as f:
            return json.load(f)["payload"]

    def put(self, key: str, payload) -> None:
        entry = {"key": key, "created": time.time(), "payload": payload}
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as f:
                json.dump(entry, f, sort_keys=True)
            os.replace(tmp, self._path(key))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def cache_from_options(cache_dir):
    """Cache directory from the CLI flag or the CUBIC_PT_CACHE override."""
    env = os.environ.get("CUBIC_PT_CACHE")
    chosen = env or cache_dir
    return ResultCache(chosen) if chosen else None
