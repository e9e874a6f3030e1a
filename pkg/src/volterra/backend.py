"""Select the compiled core or the numpy fallback.

Set ``VOLTERRA_BACKEND=python`` to force the fallback even when the
extension is built.
"""
import os

from . import _fallback

try:
    if os.environ.get("VOLTERRA_BACKEND", "").lower() == "python":
        raise ImportError("fallback forced by VOLTERRA_BACKEND")
    from . import _core as _impl

    NAME = "compiled"
except ImportError:
    _impl = _fallback
    NAME = "python"

volterra_sweep = _impl.volterra_sweep
packed_apply = _impl.packed_apply
# np.convolve is SIMD-dispatched C and beats the compiled loop; see benchmarks/bench_core.py
lower_toeplitz = _fallback.lower_toeplitz
reformulated_sweep = _impl.reformulated_sweep
slobodeckij_sum = _impl.slobodeckij_sum


def implementations():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _fallback}
    try:
        from . import _core

        found["compiled"] = _core
    except ImportError:
        pass
    return found
