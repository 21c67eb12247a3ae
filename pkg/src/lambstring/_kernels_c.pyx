# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 kernels; same interface as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, exp, tanh, atan, fabs, NAN, isfinite

cnp.import_array()

DEF MAX_STACK = 64
cdef double BLOWUP = 1e12


cdef inline double ipow(double b, long n) noexcept nogil:
    cdef double r = 1.0
    cdef long e = n if n >= 0 else -n
    while e > 0:
        if e & 1:
            r *= b
        b *= b
        e >>= 1
    return r if n >= 0 else 1.0 / r


cdef double force(const long long[:, ::1] code, const double[::1] consts, double y) noexcept nogil:
    cdef double stack[MAX_STACK]
    cdef int sp = -1
    cdef Py_ssize_t i
    cdef long long op, arg
    for i in range(code.shape[0]):
        op = code[i, 0]
        arg = code[i, 1]
        if op == 0:
            sp += 1
            stack[sp] = consts[arg]
        elif op == 1:
            sp += 1
            stack[sp] = y
        elif op == 2:
            stack[sp] = -stack[sp]
        elif op == 3:
            sp -= 1
            stack[sp] = stack[sp] + stack[sp + 1]
        elif op == 4:
            sp -= 1
            stack[sp] = stack[sp] - stack[sp + 1]
        elif op == 5:
            sp -= 1
            stack[sp] = stack[sp] * stack[sp + 1]
        elif op == 6:
            sp -= 1
            stack[sp] = stack[sp] / stack[sp + 1]
        elif op == 7:
            stack[sp] = ipow(stack[sp], arg)
        elif op == 8:
            stack[sp] = sin(stack[sp])
        elif op == 9:
            stack[sp] = cos(stack[sp])
        elif op == 10:
            stack[sp] = exp(stack[sp])
        elif op == 11:
            stack[sp] = tanh(stack[sp])
        else:
            stack[sp] = atan(stack[sp])
    return stack[sp]


def eval_force(code, consts, y):
    cdef const long long[:, ::1] c = np.ascontiguousarray(code, dtype=np.int64)
    cdef const double[::1] k = np.ascontiguousarray(consts, dtype=float)
    if np.ndim(y) == 0:
        return force(c, k, float(y))
    yy = np.ascontiguousarray(y, dtype=float)
    flat = yy.ravel()
    out = np.empty_like(flat)
    cdef double[::1] o = out
    cdef const double[::1] f = flat
    cdef Py_ssize_t i
    for i in range(f.shape[0]):
        o[i] = force(c, k, f[i])
    return out.reshape(yy.shape)


def rk4_path(code, consts, int mode, double alpha, double k, drive, double h, Py_ssize_t n,
             double y0, double v0):
    cdef const long long[:, ::1] c = np.ascontiguousarray(code, dtype=np.int64)
    cdef const double[::1] kc = np.ascontiguousarray(consts, dtype=float)
    cdef const double[::1] d = np.ascontiguousarray(drive, dtype=float)
    ys_a = np.full(n + 1, np.nan)
    vs_a = np.full(n + 1, np.nan)
    dys_a = np.full(n + 1, np.nan)
    dvs_a = np.full(n + 1, np.nan)
    cdef double[::1] ys = ys_a, vs = vs_a, dys = dys_a, dvs = dvs_a
    cdef double y = y0, v = v0, hh = 0.5 * h, h6 = h / 6.0
    cdef double k1, k2, k3, k4, kv1, kv2, kv3, kv4, y2, y3, y4, v2, v3, v4, d0, dm, d1
    cdef Py_ssize_t i, done = n
    with nogil:
        if mode == 0:
            for i in range(n):
                d0 = d[2 * i]
                dm = d[2 * i + 1]
                d1 = d[2 * i + 2]
                k1 = alpha * force(c, kc, y) + d0
                k2 = alpha * force(c, kc, y + hh * k1) + dm
                k3 = alpha * force(c, kc, y + hh * k2) + dm
                k4 = alpha * force(c, kc, y + h * k3) + d1
                ys[i] = y
                dys[i] = k1
                vs[i] = 0.0
                dvs[i] = 0.0
                y = y + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                if not (fabs(y) <= BLOWUP):
                    done = i
                    break
            if done == n:
                ys[n] = y
                dys[n] = alpha * force(c, kc, y) + d[2 * n]
                vs[n] = 0.0
                dvs[n] = 0.0
        else:
            for i in range(n):
                d0 = d[2 * i]
                dm = d[2 * i + 1]
                d1 = d[2 * i + 2]
                kv1 = alpha * force(c, kc, y) - k * v + d0
                y2 = y + hh * v
                v2 = v + hh * kv1
                kv2 = alpha * force(c, kc, y2) - k * v2 + dm
                y3 = y + hh * v2
                v3 = v + hh * kv2
                kv3 = alpha * force(c, kc, y3) - k * v3 + dm
                y4 = y + h * v3
                v4 = v + h * kv3
                kv4 = alpha * force(c, kc, y4) - k * v4 + d1
                ys[i] = y
                vs[i] = v
                dys[i] = v
                dvs[i] = kv1
                y = y + h6 * (v + 2.0 * v2 + 2.0 * v3 + v4)
                v = v + h6 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4)
                if not (fabs(y) + fabs(v) <= BLOWUP):
                    done = i
                    break
            if done == n:
                ys[n] = y
                vs[n] = v
                dys[n] = v
                dvs[n] = alpha * force(c, kc, y) - k * v + d[2 * n]
    return ys_a, vs_a, dys_a, dvs_a, done


cdef void _orbit(const long long[:, ::1] c, const double[::1] kc, int mode, double alpha,
                 double k, const double[::1] d, double h, Py_ssize_t steps, Py_ssize_t n_iter,
                 double y, double v, Py_ssize_t record_from, double[:, :] rec,
                 long long* fail) noexcept nogil:
    cdef double hh = 0.5 * h, h6 = h / 6.0
    cdef double k1, k2, k3, k4, kv1, kv2, kv3, kv4, y2, y3, y4, v2, v3, v4
    cdef Py_ssize_t it, i
    fail[0] = -1
    for it in range(n_iter + 1):
        if it >= record_from:
            rec[it - record_from, 0] = y
            rec[it - record_from, 1] = v
        if it == n_iter:
            break
        if mode == 0:
            for i in range(steps):
                k1 = alpha * force(c, kc, y) + d[2 * i]
                k2 = alpha * force(c, kc, y + hh * k1) + d[2 * i + 1]
                k3 = alpha * force(c, kc, y + hh * k2) + d[2 * i + 1]
                k4 = alpha * force(c, kc, y + h * k3) + d[2 * i + 2]
                y = y + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            for i in range(steps):
                kv1 = alpha * force(c, kc, y) - k * v + d[2 * i]
                y2 = y + hh * v
                v2 = v + hh * kv1
                kv2 = alpha * force(c, kc, y2) - k * v2 + d[2 * i + 1]
                y3 = y + hh * v2
                v3 = v + hh * kv2
                kv3 = alpha * force(c, kc, y3) - k * v3 + d[2 * i + 1]
                y4 = y + h * v3
                v4 = v + h * kv3
                kv4 = alpha * force(c, kc, y4) - k * v4 + d[2 * i + 2]
                y = y + h6 * (v + 2.0 * v2 + 2.0 * v3 + v4)
                v = v + h6 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4)
        if not (fabs(y) + fabs(v) <= BLOWUP):
            fail[0] = it
            y = NAN
            v = NAN
            for i in range(it + 1, n_iter + 1):
                if i >= record_from:
                    rec[i - record_from, 0] = NAN
                    rec[i - record_from, 1] = NAN
            return


def poincare_orbits(code, consts, int mode, double alpha, double k, drive, double h,
                    Py_ssize_t steps, Py_ssize_t n_iter, Y0, Py_ssize_t record_from):
    cdef const long long[:, ::1] c = np.ascontiguousarray(code, dtype=np.int64)
    cdef const double[::1] kc = np.ascontiguousarray(consts, dtype=float)
    cdef const double[::1] d = np.ascontiguousarray(drive, dtype=float)
    cdef const double[:, ::1] Y = np.ascontiguousarray(Y0, dtype=float)
    cdef Py_ssize_t B = Y.shape[0], b
    n_rec = n_iter - record_from + 1
    rec_a = np.full((B, n_rec, 2), np.nan)
    fail_a = np.full(B, -1, dtype=np.int64)
    cdef double[:, :, ::1] rec = rec_a
    cdef long long[::1] fail = fail_a
    with nogil:
        for b in range(B):
            _orbit(c, kc, mode, alpha, k, d, h, steps, n_iter, Y[b, 0], Y[b, 1],
                   record_from, rec[b], &fail[b])
    return rec_a, fail_a
