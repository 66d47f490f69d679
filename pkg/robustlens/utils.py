from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable

import numpy as np


_SEED_MASK = (1 << 64) - 1


def tag_code(tag: str) -> int:
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(seed: int, *keys: int | str) -> int:
    """Fold ``keys`` into ``seed`` and return a new 64-bit seed."""
    entropy = [int(seed) & _SEED_MASK] + [tag_code(k) if isinstance(k, str) else int(k) & _SEED_MASK for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


def node_stream(seed: int, tag: str, index: int) -> np.random.Generator:
    """Independent counter-based stream for one (seed, purpose, node) triple.

    Streams never depend on how many other nodes were drawn before, so any
    node of a graph can be regenerated in isolation.
    """
    ss = np.random.SeedSequence([int(seed) & _SEED_MASK, tag_code(tag), int(index)])
    return np.random.Generator(np.random.Philox(ss))


def mean_std_stderr(values: Iterable[float]) -> Dict[str, float]:
    arr = np.asarray([v for v in values if v is not None and not math.isnan(v)], dtype=float)
    if arr.size == 0:
        return {"mean": float("nan"), "std": float("nan"), "stderr": float("nan"), "count": 0}
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {
        "mean": float(arr.mean()),
        "std": std,
        "stderr": std / math.sqrt(arr.size),
        "count": int(arr.size),
    }


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def stable_hash(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def safe_filename(s: str) -> str:
    s = s.replace("\\", "_").replace("/", "_").replace(":", "_")
    return "".join(ch if ch.isalnum() or ch in "-_.+" else "_" for ch in s)[:120]


def atomic_write_text(path: Path, text: str) -> Path:
    """Write via a temporary sibling file and rename, so readers never see partial output."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path

