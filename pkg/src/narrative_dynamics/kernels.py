"""Kernel backend selection and block-parallel drivers.

The compiled ``_ckernels`` extension is used when importable; otherwise
the pure-Python ``_pykernels`` twin. Set ``NARRDYN_PURE_PYTHON=1`` to force
the fallback. ``BACKEND`` names the active choice.

Source nodes are processed in fixed-size blocks whose size depends only on
the node count. Block results are summed in block order, so the output is
bit-identical for any number of worker threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from types import ModuleType

import numpy as np

from . import _pykernels

IDX = np.int64


def _load_backend() -> tuple[ModuleType, str]:
    if os.environ.get("NARRDYN_PURE_PYTHON", "").strip() not in ("", "0"):
        return _pykernels, "python"
    try:
        from . import _ckernels
    except ImportError:
        return _pykernels, "python"
    return _ckernels, "cython"


_impl, BACKEND = _load_backend()

MIN_BLOCK = 64
MAX_BLOCKS = 64


def get_backend(name: str | None = None) -> ModuleType:
    """Kernel module by name (``"python"``/``"cython"``), or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def block_ranges(n: int) -> list[tuple[int, int]]:
    size = max(MIN_BLOCK, -(-n // MAX_BLOCKS))
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def _run_blocks(fn, n: int, workers: int) -> list[np.ndarray]:
    blocks = block_ranges(n)
    if workers <= 1 or len(blocks) <= 1:
        return [fn(lo, hi) for lo, hi in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: fn(*b), blocks))


def betweenness_raw(indptr, indices, rindptr, rindices, workers: int = 1, backend=None) -> np.ndarray:
    impl = backend or _impl
    n = len(indptr) - 1

    def one(lo: int, hi: int) -> np.ndarray:
        part = np.zeros(n, dtype=np.float64)
        impl.brandes_block(indptr, indices, rindptr, rindices, lo, hi, part)
        return part

    total = np.zeros(n, dtype=np.float64)
    for part in _run_blocks(one, n, workers):
        total += part
    return total


def closeness(rindptr, rindices, workers: int = 1, backend=None) -> np.ndarray:
    impl = backend or _impl
    n = len(rindptr) - 1
    out = np.zeros(n, dtype=np.float64)

    def one(lo: int, hi: int) -> None:
        # disjoint slices of ``out``; no reduction needed
        impl.closeness_block(rindptr, rindices, lo, hi, out)

    _run_blocks(one, n, workers)
    return out


def local_moves(indptr, indices, weights, k, order, comm, tot, size, resolution, m, backend=None) -> int:
    impl = backend or _impl
    return impl.local_moves(indptr, indices, weights, k, order, comm, tot, size, float(resolution), float(m))
