"""Pure-Python (numpy) what-if evaluation and exhaustive plan search.

Fallback for the compiled ``_plancore``. Plans are expanded breadth-first,
one slot at a time, with every prefix held in flat arrays ordered
lexicographically, so ``argmax`` picks the same plan the compiled
depth-first search does. Arithmetic follows ``_plancore.pyx`` step by step.
"""
from __future__ import annotations

import numpy as np


def _step(buf, playing, thr, prev_u, value, i, k, bits, util, bw, rtt_s,
          thr_resume, chunk, max_buffer, w_r, w_b, w_s, b_ref):
    b = np.where(playing & (buf + chunk > max_buffer), max_buffer - chunk, buf)
    if bw[k] > 0:
        dl = rtt_s[k] + bits[i] / bw[k]
    else:
        dl = np.full(np.shape(i), np.inf)
    stall = playing & (dl > b)
    reb = np.where(playing, np.where(stall, dl - b, 0.0), dl)
    b = np.where(playing, np.where(stall, 0.0, b - dl), b)
    playing = playing & ~stall
    thr = np.where(stall, thr_resume, thr)
    b = b + chunk
    playing = playing | (b >= thr) | (b + chunk > max_buffer)
    reb = np.minimum(reb, b_ref)
    u = util[i]
    value = value + (w_r * u - w_b * (reb / b_ref) - w_s * np.abs(u - prev_u))
    return b, playing, thr, u, value


def evaluate_plan(plan, bits, util, bw, rtt_s, buffer0, prev_util, playing0, thr_now,
                  thr_resume, chunk, max_buffer, w_r, w_b, w_s, b_ref) -> float:
    bits, util = np.asarray(bits, float), np.asarray(util, float)
    state = (np.array([buffer0], float), np.array([bool(playing0)]),
             np.array([thr_now], float), np.array([prev_util], float), np.zeros(1))
    for k, i in enumerate(plan):
        state = _step(*state, np.array([i]), k, bits, util, bw, rtt_s,
                      thr_resume, chunk, max_buffer, w_r, w_b, w_s, b_ref)
    return float(state[4][0])


def search_plans(limits, bits, util, bw, rtt_s, buffer0, prev_util, playing0, thr_now,
                 thr_resume, chunk, max_buffer, w_r, w_b, w_s, b_ref):
    """Best plan over the box ``0 <= plan[k] <= limits[k]``; first maximum in lexicographic order."""
    bits, util = np.asarray(bits, float), np.asarray(util, float)
    buf = np.array([buffer0], float)
    playing = np.array([bool(playing0)])
    thr = np.array([thr_now], float)
    prev_u = np.array([prev_util], float)
    value = np.zeros(1)
    sizes = [int(n) + 1 for n in limits]
    for k, n in enumerate(sizes):
        parents = len(value)
        buf, playing, thr, prev_u, value = (np.repeat(a, n) for a in (buf, playing, thr, prev_u, value))
        i = np.tile(np.arange(n), parents)
        buf, playing, thr, prev_u, value = _step(
            buf, playing, thr, prev_u, value, i, k, bits, util, bw, rtt_s,
            thr_resume, chunk, max_buffer, w_r, w_b, w_s, b_ref,
        )
    flat = int(np.argmax(value))
    plan = []
    for n in reversed(sizes):
        flat, r = divmod(flat, n)
        plan.append(r)
    return tuple(reversed(plan)), float(value.max())
