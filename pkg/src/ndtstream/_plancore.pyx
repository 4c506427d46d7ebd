# cython: language_level=3
"""Compiled what-if evaluation and exhaustive plan search.

Mirrors ``_plancore_py`` operation for operation; the two must return
bit-identical values, so keep the arithmetic order in sync.
"""
from libc.math cimport fabs, INFINITY


cdef struct Model:
    const double* bits
    const double* util
    const double* bw
    const double* rtt
    const Py_ssize_t* limits
    int horizon
    double chunk
    double max_buffer
    double thr_resume
    double w_r
    double w_b
    double w_s
    double b_ref


cdef struct State:
    double buf
    int playing
    double thr
    double prev_u
    double value


cdef inline State _step(const Model* m, State s, int k, int i) noexcept nogil:
    cdef double dl, reb
    cdef double b = s.buf
    if s.playing and b + m.chunk > m.max_buffer:
        b = m.max_buffer - m.chunk
    if m.bw[k] > 0:
        dl = m.rtt[k] + m.bits[i] / m.bw[k]
    else:
        dl = INFINITY
    if s.playing:
        if dl > b:
            reb = dl - b
            b = 0.0
            s.playing = 0
            s.thr = m.thr_resume
        else:
            reb = 0.0
            b = b - dl
    else:
        reb = dl
    b = b + m.chunk
    if not s.playing and (b >= s.thr or b + m.chunk > m.max_buffer):
        s.playing = 1
    if reb > m.b_ref:
        reb = m.b_ref
    s.value = s.value + (m.w_r * m.util[i] - m.w_b * (reb / m.b_ref) - m.w_s * fabs(m.util[i] - s.prev_u))
    s.buf = b
    s.prev_u = m.util[i]
    return s


cdef void _dfs(const Model* m, State s, int k, Py_ssize_t* cur, Py_ssize_t* best, double* best_value) noexcept nogil:
    cdef int i, j
    cdef State nxt
    if k == m.horizon:
        if s.value > best_value[0]:
            best_value[0] = s.value
            for j in range(m.horizon):
                best[j] = cur[j]
        return
    for i in range(m.limits[k] + 1):
        cur[k] = i
        nxt = _step(m, s, k, i)
        _dfs(m, nxt, k + 1, cur, best, best_value)


cdef Model _model(const double[::1] bits, const double[::1] util, const double[::1] bw,
                  const double[::1] rtt_s, double chunk, double max_buffer, double thr_resume,
                  double w_r, double w_b, double w_s, double b_ref):
    cdef Model m
    m.bits = &bits[0]
    m.util = &util[0]
    m.bw = &bw[0]
    m.rtt = &rtt_s[0]
    m.horizon = bw.shape[0]
    m.chunk = chunk
    m.max_buffer = max_buffer
    m.thr_resume = thr_resume
    m.w_r = w_r
    m.w_b = w_b
    m.w_s = w_s
    m.b_ref = b_ref
    return m


def evaluate_plan(const Py_ssize_t[::1] plan, const double[::1] bits, const double[::1] util,
                  const double[::1] bw, const double[::1] rtt_s,
                  double buffer0, double prev_util, bint playing0, double thr_now,
                  double thr_resume, double chunk, double max_buffer,
                  double w_r, double w_b, double w_s, double b_ref):
    cdef Model m = _model(bits, util, bw, rtt_s, chunk, max_buffer, thr_resume, w_r, w_b, w_s, b_ref)
    cdef State s
    cdef int k
    s.buf = buffer0
    s.playing = playing0
    s.thr = thr_now
    s.prev_u = prev_util
    s.value = 0.0
    for k in range(m.horizon):
        s = _step(&m, s, k, plan[k])
    return s.value


def search_plans(const Py_ssize_t[::1] limits, const double[::1] bits, const double[::1] util,
                 const double[::1] bw, const double[::1] rtt_s,
                 double buffer0, double prev_util, bint playing0, double thr_now,
                 double thr_resume, double chunk, double max_buffer,
                 double w_r, double w_b, double w_s, double b_ref):
    """Best plan over the box ``0 <= plan[k] <= limits[k]``; first maximum in lexicographic order."""
    cdef Model m = _model(bits, util, bw, rtt_s, chunk, max_buffer, thr_resume, w_r, w_b, w_s, b_ref)
    m.limits = &limits[0]
    cdef State s
    s.buf = buffer0
    s.playing = playing0
    s.thr = thr_now
    s.prev_u = prev_util
    s.value = 0.0
    cdef Py_ssize_t cur[64]
    cdef Py_ssize_t best[64]
    cdef double best_value = -INFINITY
    cdef int j
    if m.horizon > 64:
        raise ValueError("horizon too long for exhaustive search")
    for j in range(m.horizon):
        best[j] = 0
    with nogil:
        _dfs(&m, s, 0, cur, best, &best_value)
    return tuple(best[j] for j in range(m.horizon)), best_value
