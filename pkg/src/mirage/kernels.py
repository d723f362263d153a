"""Ray-kernel backend selection.

The hot inner loop of the LiDAR simulator (per-beam scene intersection with
one specular bounce) exists twice: a Cython extension (`mirage._kernels`)
compiled at install time and a vectorized numpy fallback
(`mirage._kernels_py`).  The compiled backend is preferred when the build
produced it; both implement the identical `trace_beams` contract and are
cross-checked against the scalar reference in the test suite.

Set the environment variable MIRAGE_BACKEND=python before import to force
the fallback (used by the benchmark and CI).
"""

from __future__ import annotations

import os

from mirage import _kernels_py

if os.environ.get("MIRAGE_BACKEND", "").lower() == "python":
    _impl = _kernels_py
else:
    try:
        from mirage import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND_NAME


def trace_beams(origin, dirs, scene_arrays, max_range, impl=None):
    """Dispatch a beam bundle to the active (or explicitly given) backend."""
    mod = impl if impl is not None else _impl
    return mod.trace_beams(origin, dirs, scene_arrays, max_range)


def available_backends():
    mods = {"python": _kernels_py}
    try:
        from mirage import _kernels

        mods["cython"] = _kernels
    except ImportError:
        pass
    return mods
