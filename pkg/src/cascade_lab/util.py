"""Small shared helpers: bounded thread map, canonical JSON, float formatting."""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "CASCADE_LAB_THREADS"


def thread_count():
    """Internal parallelism cap, from CASCADE_LAB_THREADS (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def thread_map(fn, items):
    """Ordered map over items, threaded when the env cap allows it.

    Results are collected in input order, so callers stay deterministic
    regardless of the worker count.
    """
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))


def fmt_float(x):
    """Render a float with 17 significant digits (round-trip safe)."""
    return f"{float(x):.17g}"


def canonical_json(obj):
    """Key-sorted, whitespace-free JSON used for hashing configs."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
