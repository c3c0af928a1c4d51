# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. API identical to ``gazekit._kernels_py``.

Row-major matrices are handed to column-major BLAS as their transposes, so a
row-major ``C = A @ B`` becomes ``dgemm('N', 'N', n, m, k, B, A, C)``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


cdef inline void _activate(const double* z, double* a, int H) noexcept nogil:
    # contiguous exp-only loops so the compiler can use vector math
    cdef int j
    for j in range(2 * H):
        a[j] = 1.0 / (1.0 + exp(-z[j]))
    for j in range(2 * H, 3 * H):
        a[j] = 2.0 / (1.0 + exp(-2.0 * z[j])) - 1.0
    for j in range(3 * H, 4 * H):
        a[j] = 1.0 / (1.0 + exp(-z[j]))


cdef inline void _tanh_vec(const double* x, double* out, int n) noexcept nogil:
    cdef int j
    for j in range(n):
        out[j] = 2.0 / (1.0 + exp(-2.0 * x[j])) - 1.0


def lstm_recurrence(const double[:, :, ::1] xw, const double[:, ::1] U):
    cdef int B = xw.shape[0]
    cdef int T = xw.shape[1]
    cdef int G = xw.shape[2]
    cdef int H = G // 4
    hs_arr = np.zeros((B, T, H))
    cs_arr = np.zeros((B, T, H))
    acts_arr = np.empty((B, T, G))
    z_arr = np.empty((B, G))
    tc_arr = np.empty(H)
    cdef double* hs = <double*>cnp.PyArray_DATA(hs_arr)
    cdef double* cs = <double*>cnp.PyArray_DATA(cs_arr)
    cdef double* acts = <double*>cnp.PyArray_DATA(acts_arr)
    cdef double* z = <double*>cnp.PyArray_DATA(z_arr)
    cdef double* tc = <double*>cnp.PyArray_DATA(tc_arr)
    cdef const double* xwp = &xw[0, 0, 0]
    cdef int b, t, j
    cdef int ldh = T * H
    cdef double one = 1.0
    cdef double* a
    cdef double* c
    cdef double* h
    cdef const double* c_prev
    with nogil:
        for t in range(T):
            for b in range(B):
                memcpy(&z[b * G], &xwp[(b * T + t) * G], G * sizeof(double))
            if t > 0:
                # z += h_{t-1} @ U
                dgemm(b"N", b"N", &G, &B, &H, &one, <double*>&U[0, 0], &G,
                      &hs[(t - 1) * H], &ldh, &one, z, &G)
            for b in range(B):
                a = &acts[(b * T + t) * G]
                c = &cs[(b * T + t) * H]
                h = &hs[(b * T + t) * H]
                _activate(&z[b * G], a, H)
                if t > 0:
                    c_prev = &cs[(b * T + t - 1) * H]
                    for j in range(H):
                        c[j] = a[H + j] * c_prev[j] + a[j] * a[2 * H + j]
                else:
                    for j in range(H):
                        c[j] = a[j] * a[2 * H + j]
                _tanh_vec(c, tc, H)
                for j in range(H):
                    h[j] = a[3 * H + j] * tc[j]
    return hs_arr, cs_arr, acts_arr


def lstm_recurrence_backward(const double[:, :, ::1] dhs, const double[:, ::1] U,
                             const double[:, :, ::1] cs, const double[:, :, ::1] acts):
    cdef int B = dhs.shape[0]
    cdef int T = dhs.shape[1]
    cdef int H = dhs.shape[2]
    cdef int G = 4 * H
    dgates_arr = np.empty((B, T, G))
    dh_next_arr = np.zeros((B, H))
    dc_next_arr = np.zeros((B, H))
    tc_arr = np.empty(H)
    zeros_arr = np.zeros(H)
    cdef double* dg = <double*>cnp.PyArray_DATA(dgates_arr)
    cdef double* dh_next = <double*>cnp.PyArray_DATA(dh_next_arr)
    cdef double* dc_next = <double*>cnp.PyArray_DATA(dc_next_arr)
    cdef double* tc = <double*>cnp.PyArray_DATA(tc_arr)
    cdef const double* zeros = <double*>cnp.PyArray_DATA(zeros_arr)
    cdef const double* dhp = &dhs[0, 0, 0]
    cdef const double* csp = &cs[0, 0, 0]
    cdef const double* ap = &acts[0, 0, 0]
    cdef int b, t, j
    cdef int ldg = T * G
    cdef double one = 1.0, zero = 0.0
    cdef double dh, dc, i, f, g, o
    cdef const double* a
    cdef const double* c
    cdef const double* c_prev
    cdef const double* dh_in
    cdef double* d
    cdef double* dhn
    cdef double* dcn
    with nogil:
        for t in range(T - 1, -1, -1):
            for b in range(B):
                a = &ap[(b * T + t) * G]
                c = &csp[(b * T + t) * H]
                c_prev = &csp[(b * T + t - 1) * H] if t > 0 else zeros
                dh_in = &dhp[(b * T + t) * H]
                d = &dg[(b * T + t) * G]
                dhn = &dh_next[b * H]
                dcn = &dc_next[b * H]
                _tanh_vec(c, tc, H)
                for j in range(H):
                    i = a[j]
                    f = a[H + j]
                    g = a[2 * H + j]
                    o = a[3 * H + j]
                    dh = dh_in[j] + dhn[j]
                    dc = dh * o * (1.0 - tc[j] * tc[j]) + dcn[j]
                    d[j] = dc * g * i * (1.0 - i)
                    d[H + j] = dc * c_prev[j] * f * (1.0 - f)
                    d[2 * H + j] = dc * i * (1.0 - g * g)
                    d[3 * H + j] = dh * tc[j] * o * (1.0 - o)
                    dcn[j] = dc * f
            # dh_next = dgates_t @ U.T
            dgemm(b"T", b"N", &H, &B, &G, &one, <double*>&U[0, 0], &G,
                  &dg[t * G], &ldg, &zero, dh_next, &H)
    return dgates_arr


def resample_means(xs, ys, valid):
    cdef const double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] y = np.ascontiguousarray(ys, dtype=np.float64)
    cdef const cnp.uint8_t[::1] v = np.ascontiguousarray(valid, dtype=np.uint8)
    cdef Py_ssize_t n_blocks = x.shape[0] // 100
    out_x_arr = np.empty(3 * n_blocks)
    out_y_arr = np.empty(3 * n_blocks)
    out_v_arr = np.empty(3 * n_blocks, dtype=np.uint8)
    cdef double[::1] ox = out_x_arr
    cdef double[::1] oy = out_y_arr
    cdef cnp.uint8_t[::1] ov = out_v_arr
    cdef Py_ssize_t blk, k, s, lo, hi, base
    cdef double sx, sy, nan = float("nan")
    cdef int ok
    cdef Py_ssize_t bounds[4]
    bounds[0] = 0
    bounds[1] = 33
    bounds[2] = 66
    bounds[3] = 100
    with nogil:
        for blk in range(n_blocks):
            base = blk * 100
            for k in range(3):
                lo = bounds[k]
                hi = bounds[k + 1]
                sx = 0.0
                sy = 0.0
                ok = 1
                for s in range(base + lo, base + hi):
                    sx = sx + x[s]
                    sy = sy + y[s]
                    if not v[s]:
                        ok = 0
                if ok:
                    ox[3 * blk + k] = sx / (hi - lo)
                    oy[3 * blk + k] = sy / (hi - lo)
                else:
                    ox[3 * blk + k] = nan
                    oy[3 * blk + k] = nan
                ov[3 * blk + k] = ok
    return out_x_arr, out_y_arr, out_v_arr


def run_lengths(codes):
    cdef const cnp.int64_t[::1] c = np.ascontiguousarray(codes, dtype=np.int64)
    cdef Py_ssize_t n = c.shape[0]
    lengths_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] lengths = lengths_arr
    cdef Py_ssize_t idx, n_runs = 0
    cdef long shifts = 0
    cdef cnp.int64_t prev = -1
    with nogil:
        for idx in range(n):
            if c[idx] < 0:
                prev = -1
                continue
            if prev >= 0 and c[idx] == prev:
                lengths[n_runs - 1] += 1
            else:
                if prev >= 0:
                    shifts += 1
                lengths[n_runs] = 1
                n_runs += 1
            prev = c[idx]
    return lengths_arr[:n_runs].copy(), int(shifts)


def window_starts(valid, has_target, Py_ssize_t window):
    cdef const cnp.uint8_t[::1] v = np.ascontiguousarray(valid, dtype=np.uint8)
    cdef const cnp.uint8_t[::1] tg = np.ascontiguousarray(has_target, dtype=np.uint8)
    cdef Py_ssize_t n = v.shape[0]
    if n <= window:
        return np.zeros(0, dtype=np.int64)
    out_arr = np.empty(n - window, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t s, m = 0, run = 0, idx
    with nogil:
        # run = number of consecutive valid frames ending at idx
        for idx in range(n):
            if v[idx]:
                run += 1
            else:
                run = 0
            if idx >= window and run > window and tg[idx]:
                out[m] = idx - window
                m += 1
    return out_arr[:m].copy()
