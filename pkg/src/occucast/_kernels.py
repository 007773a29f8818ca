"""Compiled recurrent loops for the LSTM.

Batches are small (16 rows) and layers narrow, so the per-call overhead of a
vectorised numpy step loop dominates.  Only the strictly sequential part of
each pass lives here; all input-side products are batched over time by the
caller.  Arrays are time-major: (T, B, ...).  Gate order on every 4N axis is
f, i, c, o.
"""

import math

import numpy as np
from numba import njit


# exp-based forms run several times faster than math.tanh; both saturate
# cleanly when exp overflows to inf
@njit(cache=True, inline="always")
def _sigmoid(a):
    return 1.0 / (1.0 + math.exp(-a))


@njit(cache=True, inline="always")
def _tanh(a):
    return 2.0 / (1.0 + math.exp(-2.0 * a)) - 1.0


@njit(cache=True)
def layer_forward(xw, W_hT, p_f, p_i, p_o, peep, F, I, G, O, C, TC, H):
    """Recurrence over precomputed input projections ``xw`` (T, B, 4N).

    Fills the (T, B, N) gate, cell and output caches in place.
    """
    nt, nb, _ = xw.shape
    n = W_hT.shape[0]
    for t in range(nt):
        if t > 0:
            a = xw[t] + np.dot(H[t - 1], W_hT)
        else:
            a = xw[t].copy()
        for r in range(nb):
            for u in range(n):
                c_prev = C[t - 1, r, u] if t > 0 else 0.0
                af = a[r, u]
                ai = a[r, n + u]
                if peep:
                    af += p_f[u] * c_prev
                    ai += p_i[u] * c_prev
                f = _sigmoid(af)
                i = _sigmoid(ai)
                g = _tanh(a[r, 2 * n + u])
                c = f * c_prev + i * g
                ao = a[r, 3 * n + u]
                if peep:
                    ao += p_o[u] * c
                o = _sigmoid(ao)
                tc = _tanh(c)
                F[t, r, u] = f
                I[t, r, u] = i
                G[t, r, u] = g
                O[t, r, u] = o
                C[t, r, u] = c
                TC[t, r, u] = tc
                H[t, r, u] = o * tc


@njit(cache=True)
def layer_backward(W_h, p_f, p_i, p_o, peep, F, I, G, O, C, TC, dH, DA, dp_f, dp_i, dp_o):
    """BPTT through one layer's recurrence.

    ``dH`` (T, B, N) is the loss gradient w.r.t. each step's output coming
    from above.  Writes gate pre-activation gradients into ``DA`` (T, B, 4N)
    and accumulates peephole gradients; weight gradients are formed from
    ``DA`` by the caller.
    """
    nt, nb, n = F.shape
    dh_next = np.zeros((nb, n))
    dc_next = np.zeros((nb, n))
    for t in range(nt - 1, -1, -1):
        for r in range(nb):
            for u in range(n):
                c_prev = C[t - 1, r, u] if t > 0 else 0.0
                f = F[t, r, u]
                i = I[t, r, u]
                g = G[t, r, u]
                o = O[t, r, u]
                tc = TC[t, r, u]
                dh = dH[t, r, u] + dh_next[r, u]
                dao = dh * tc * o * (1.0 - o)
                dc = dh * o * (1.0 - tc * tc) + dc_next[r, u]
                if peep:
                    dc += dao * p_o[u]
                    dp_o[u] += dao * C[t, r, u]
                daf = dc * c_prev * f * (1.0 - f)
                dai = dc * g * i * (1.0 - i)
                DA[t, r, u] = daf
                DA[t, r, n + u] = dai
                DA[t, r, 2 * n + u] = dc * i * (1.0 - g * g)
                DA[t, r, 3 * n + u] = dao
                dcn = dc * f
                if peep:
                    dcn += daf * p_f[u] + dai * p_i[u]
                    dp_f[u] += daf * c_prev
                    dp_i[u] += dai * c_prev
                dc_next[r, u] = dcn
        if t > 0:
            dh_next = np.dot(DA[t], W_h)
