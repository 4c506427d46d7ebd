"""Backend selection for the plan-search kernels.

The compiled Cython core is used when it was built; otherwise, or when
``NDTSTREAM_PURE=1`` is set, the numpy fallback is used. Both expose
``evaluate_plan`` and ``search_plans`` with identical results.
"""
from __future__ import annotations

import os

import numpy as np

from . import _plancore_py

try:
    if os.environ.get("NDTSTREAM_PURE") == "1":
        raise ImportError("pure-Python backend requested")
    from . import _plancore as _compiled
except ImportError:
    _compiled = None

BACKENDS = {"python": _plancore_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

BACKEND = "cython" if _compiled is not None else "python"
_impl = BACKENDS[BACKEND]


def _args(bits, util, bw, rtt_s):
    f = lambda a: np.ascontiguousarray(a, dtype=np.float64)  # noqa: E731
    return f(bits), f(util), f(bw), f(rtt_s)


def evaluate_plan(plan, bits, util, bw, rtt_s, buffer0, prev_util, playing0, thr_now,
                  thr_resume, chunk, max_buffer, w_r, w_b, w_s, b_ref, backend=None) -> float:
    impl = BACKENDS[backend] if backend else _impl
    plan = np.ascontiguousarray(plan, dtype=np.intp)
    return impl.evaluate_plan(plan, *_args(bits, util, bw, rtt_s), float(buffer0), float(prev_util),
                              bool(playing0), float(thr_now), float(thr_resume), float(chunk),
                              float(max_buffer), float(w_r), float(w_b), float(w_s), float(b_ref))


def search_plans(limits, bits, util, bw, rtt_s, buffer0, prev_util, playing0, thr_now,
                 thr_resume, chunk, max_buffer, w_r, w_b, w_s, b_ref, backend=None):
    impl = BACKENDS[backend] if backend else _impl
    limits = np.ascontiguousarray(limits, dtype=np.intp)
    plan, value = impl.search_plans(limits, *_args(bits, util, bw, rtt_s), float(buffer0),
                                    float(prev_util), bool(playing0), float(thr_now),
                                    float(thr_resume), float(chunk), float(max_buffer),
                                    float(w_r), float(w_b), float(w_s), float(b_ref))
    return tuple(int(i) for i in plan), value
