"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the pure-Python
module takes over. Set ``WSRP_ELITES_PURE=1`` to force the fallback.
Both backends consume identical random draws and return identical results.
"""
from __future__ import annotations

import os

from . import _pykernels

backend_module = _pykernels
if os.environ.get("WSRP_ELITES_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as backend_module  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on build
        backend_module = _pykernels

BACKEND: str = backend_module.BACKEND
ME_UNIFORMS = _pykernels.ME_UNIFORMS
EA_UNIFORMS = _pykernels.EA_UNIFORMS
EMPTY_BEST = _pykernels.EMPTY_BEST

decode_totals = backend_module.decode_totals
evaluate_batch = backend_module.evaluate_batch
ArchiveCore = backend_module.ArchiveCore
EaCore = backend_module.EaCore
pick = backend_module.pick
section = backend_module.section
bin_index = backend_module.bin_index


def get_backend(name: str):
    """Return the kernel module for ``"python"`` or ``"cython"`` (raises ImportError if unbuilt)."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    out = ["python"]
    try:
        get_backend("cython")
        out.append("cython")
    except ImportError:
        pass
    return out
