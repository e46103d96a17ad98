"""Hot-kernel backend selection.

The compiled Cython module is preferred when importable; the numpy
fallback implements the same signatures. Set KGFORGE_BACKEND=fallback (or
=native) to force a choice, e.g. for the benchmark in benchmarks/.
"""

import os

from . import fallback

_forced = os.environ.get("KGFORGE_BACKEND", "").strip().lower()

if _forced == "fallback":
    _impl = fallback
    BACKEND = "fallback"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        if _forced == "native":
            raise
        _impl = fallback
        BACKEND = "fallback"

ward_nnchain = _impl.ward_nnchain
average_nnchain = fallback.average_nnchain  # small-scale alternative, numpy only
transe_batch = _impl.transe_batch
rotate_batch = _impl.rotate_batch
