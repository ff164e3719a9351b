"""Backend selection for the thinning kernels.

The compiled extension is used when it imports; set ``DMFSIM_PURE_PYTHON=1``
to force the pure-Python fallback.
"""
import os

from . import _kernels_py

if os.environ.get("DMFSIM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

OK, BLOWUP, MAJORANT, BUDGET = _kernels_py.OK, _kernels_py.BLOWUP, _kernels_py.MAJORANT, _kernels_py.BUDGET
STATUS_NAMES = {OK: "ok", BLOWUP: "blowup", MAJORANT: "majorant-violation", BUDGET: "event-budget"}

simulate_batch = _impl.simulate_batch
simulate_events = _impl.simulate_events


def get_backend(name: str):
    """Return the kernel module for ``"cython"`` or ``"python"`` (benchmarks, parity tests)."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
