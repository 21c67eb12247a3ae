"""Pure-Python fallback for the RK4 kernels.

Mirrors ``_kernels_c.pyx`` call for call.  Single trajectories run on Python
floats through ``math``; batches of Poincare orbits are vectorised over the
batch with numpy.

Right-hand sides (``mode`` 0 / 1)::

    0:  y' = alpha * F(y) + d(t)
    1:  y' = v,  v' = alpha * F(y) - k * v + d(t)

``d`` is tabulated at half steps: ``drive[2 i]`` at ``t_i``, ``drive[2 i + 1]``
at ``t_i + h / 2``.
"""
from __future__ import annotations

import math

import numpy as np

BLOWUP = 1e12


def _run(code, consts, y, fns, ipow):
    stack = []
    push = stack.append
    pop = stack.pop
    for op, arg in code:
        if op == 0:
            push(consts[arg])
        elif op == 1:
            push(y)
        elif op == 2:
            push(-pop())
        elif op == 3:
            b = pop()
            push(pop() + b)
        elif op == 4:
            b = pop()
            push(pop() - b)
        elif op == 5:
            b = pop()
            push(pop() * b)
        elif op == 6:
            b = pop()
            push(pop() / b)
        elif op == 7:
            push(ipow(pop(), arg))
        else:
            push(fns[op - 8](pop()))
    return stack[-1]


def _ipow_scalar(b, n):
    if n < 0:
        return 1.0 / (b ** -n) if b != 0.0 else math.inf
    return b ** n


def _ipow_array(b, n):
    if n < 0:
        return 1.0 / (b ** -n)
    return b ** n


def _safe(fn):
    def wrapped(x):
        try:
            return fn(x)
        except (OverflowError, ValueError):
            return math.inf
    return wrapped


_SCALAR_FNS = tuple(_safe(f) for f in (math.sin, math.cos, math.exp, math.tanh, math.atan))
_ARRAY_FNS = (np.sin, np.cos, np.exp, np.tanh, np.arctan)


def _safe_div_scalar(code, consts, y):
    try:
        return _run(code, consts, y, _SCALAR_FNS, _ipow_scalar)
    except (ZeroDivisionError, OverflowError):
        return math.nan


def eval_force(code, consts, y):
    """Evaluate the compiled force at a scalar (float) or an array."""
    code_l = [(int(o), int(a)) for o, a in code]
    consts_l = [float(c) for c in consts]
    if np.ndim(y) == 0:
        return _safe_div_scalar(code_l, consts_l, float(y))
    with np.errstate(all="ignore"):
        return np.asarray(_run(code_l, consts_l, np.asarray(y, float), _ARRAY_FNS, _ipow_array),
                          dtype=float) * np.ones(np.shape(y))


def rk4_path(code, consts, mode, alpha, k, drive, h, n, y0, v0):
    """Integrate ``n`` steps; returns (y, v, dy, dv, n_done).

    ``dy``/``dv`` are the right-hand sides at the knots.  ``n_done < n``
    signals blow-up after ``n_done`` successful steps; arrays beyond that are nan.
    """
    code_l = [(int(o), int(a)) for o, a in code]
    consts_l = [float(c) for c in consts]
    drive = [float(d) for d in drive]

    def F(y):
        return _safe_div_scalar(code_l, consts_l, y)

    ys = [math.nan] * (n + 1)
    vs = [math.nan] * (n + 1)
    dys = [math.nan] * (n + 1)
    dvs = [math.nan] * (n + 1)
    y, v = float(y0), float(v0)
    hh = 0.5 * h
    done = n
    if mode == 0:
        for i in range(n):
            d0, dm, d1 = drive[2 * i], drive[2 * i + 1], drive[2 * i + 2]
            k1 = alpha * F(y) + d0
            k2 = alpha * F(y + hh * k1) + dm
            k3 = alpha * F(y + hh * k2) + dm
            k4 = alpha * F(y + h * k3) + d1
            ys[i], dys[i], vs[i], dvs[i] = y, k1, 0.0, 0.0
            y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not (abs(y) <= BLOWUP):
                done = i
                break
        if done == n:
            ys[n], dys[n], vs[n], dvs[n] = y, alpha * F(y) + drive[2 * n], 0.0, 0.0
    else:
        for i in range(n):
            d0, dm, d1 = drive[2 * i], drive[2 * i + 1], drive[2 * i + 2]
            ky1, kv1 = v, alpha * F(y) - k * v + d0
            y2, v2 = y + hh * ky1, v + hh * kv1
            ky2, kv2 = v2, alpha * F(y2) - k * v2 + dm
            y3, v3 = y + hh * ky2, v + hh * kv2
            ky3, kv3 = v3, alpha * F(y3) - k * v3 + dm
            y4, v4 = y + h * ky3, v + h * kv3
            ky4, kv4 = v4, alpha * F(y4) - k * v4 + d1
            ys[i], vs[i], dys[i], dvs[i] = y, v, ky1, kv1
            y = y + h / 6.0 * (ky1 + 2.0 * ky2 + 2.0 * ky3 + ky4)
            v = v + h / 6.0 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4)
            if not (abs(y) + abs(v) <= BLOWUP):
                done = i
                break
        if done == n:
            ys[n], vs[n], dys[n], dvs[n] = y, v, v, alpha * F(y) - k * v + drive[2 * n]
    return (np.array(ys), np.array(vs), np.array(dys), np.array(dvs), done)


def poincare_orbits(code, consts, mode, alpha, k, drive, h, steps, n_iter, Y0, record_from):
    """Iterate the period map ``n_iter`` times for each row of ``Y0`` (shape (B, 2)).

    Returns ``(records, fail)``: ``records[b, j]`` is the state after
    ``record_from + j`` periods (j = 0 .. n_iter - record_from), and ``fail[b]``
    is the period index at which seed ``b`` blew up, or -1.
    """
    code_l = [(int(o), int(a)) for o, a in code]
    consts_l = [float(c) for c in consts]
    Y0 = np.asarray(Y0, dtype=float)
    B = Y0.shape[0]
    y = Y0[:, 0].copy()
    v = Y0[:, 1].copy()
    drive = np.asarray(drive, dtype=float)
    n_rec = n_iter - record_from + 1
    rec = np.full((B, n_rec, 2), np.nan)
    fail = np.full(B, -1, dtype=np.int64)
    hh = 0.5 * h

    def F(x):
        return _run(code_l, consts_l, x, _ARRAY_FNS, _ipow_array)

    with np.errstate(all="ignore"):
        for it in range(n_iter + 1):
            if it >= record_from:
                rec[:, it - record_from, 0] = y
                rec[:, it - record_from, 1] = v
            if it == n_iter:
                break
            for i in range(steps):
                d0, dm, d1 = drive[2 * i], drive[2 * i + 1], drive[2 * i + 2]
                if mode == 0:
                    k1 = alpha * F(y) + d0
                    k2 = alpha * F(y + hh * k1) + dm
                    k3 = alpha * F(y + hh * k2) + dm
                    k4 = alpha * F(y + h * k3) + d1
                    y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                else:
                    kv1 = alpha * F(y) - k * v + d0
                    y2, v2 = y + hh * v, v + hh * kv1
                    kv2 = alpha * F(y2) - k * v2 + dm
                    y3, v3 = y + hh * v2, v + hh * kv2
                    kv3 = alpha * F(y3) - k * v3 + dm
                    y4, v4 = y + h * v3, v + h * kv3
                    kv4 = alpha * F(y4) - k * v4 + d1
                    y = y + h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4)
                    v = v + h / 6.0 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4)
            bad = ~(np.abs(y) + np.abs(v) <= BLOWUP) & (fail < 0)
            if bad.any():
                fail[bad] = it
                y = np.where(bad, np.nan, y)
                v = np.where(bad, np.nan, v)
    return rec, fail
