"""Independent reference implementations used as test oracles."""

import math

import numpy as np

from occucast.lstm import backward, predict_rows


def brute_force(sessions, scale, scope, t0, t1):
    """Scan every (device, interval) pair for a nonzero-length overlap."""
    step = scale * 60
    out = []
    for k in range((t1 - t0) // step):
        lo, hi = t0 + k * step, t0 + (k + 1) * step
        seen = set()
        for s in sessions:
            if scope.ap_id is not None and s.ap_id != scope.ap_id:
                continue
            if min(hi, s.start + s.duration) - max(lo, s.start) > 0:
                seen.add(s.device_id)
        out.append(len(seen))
    return out


def multiscale_oracle(s15, s30, s60, lag):
    """Walk hour by hour and slice each series by timestamp."""
    rows, targets, anchors = [], [], []
    t = -(-max(s.start for s in (s15, s30, s60)) // 3600) * 3600
    end = min(s.end for s in (s15, s30, s60))
    while t < end:
        row, tgt, ok = [], [], True
        for s in (s15, s30, s60):
            k = (t - s.start) // s.step
            if k < lag or k >= len(s):
                ok = False
                break
            row.extend(s.values[k - lag:k])
            tgt.append(s.values[k])
        if ok:
            rows.append(row)
            targets.append(tgt)
            anchors.append(t)
        t += 3600
    return np.array(rows), np.array(targets), np.array(anchors)


def naive_forward(model, row):
    """Scalar-loop evaluation of the stacked peephole LSTM, one unit at a time."""
    cfg = model.config
    m, lag = cfg.heads, cfg.lag
    steps = [[row[k * lag + t] for k in range(m)] for t in range(lag)]
    sig = lambda a: 1.0 / (1.0 + math.exp(-a))
    for layer in model.layers:
        n = layer.W_h.shape[1]
        h, c = [0.0] * n, [0.0] * n
        outputs = []
        for x in steps:
            pre = []
            for r in range(4 * n):
                acc = layer.b[r]
                for j, xv in enumerate(x):
                    acc += layer.W_x[r, j] * xv
                for j, hv in enumerate(h):
                    acc += layer.W_h[r, j] * hv
                pre.append(acc)
            new_h, new_c = [], []
            for u in range(n):
                pf = layer.p_f[u] * c[u] if cfg.peepholes else 0.0
                pi = layer.p_i[u] * c[u] if cfg.peepholes else 0.0
                f = sig(pre[u] + pf)
                i = sig(pre[n + u] + pi)
                cu = f * c[u] + i * math.tanh(pre[2 * n + u])
                po = layer.p_o[u] * cu if cfg.peepholes else 0.0
                o = sig(pre[3 * n + u] + po)
                new_c.append(cu)
                new_h.append(o * math.tanh(cu))
            h, c = new_h, new_c
            outputs.append(h)
        steps = outputs
    top = steps[-1]
    return np.array([model.b_y[k] + sum(model.W_y[k, j] * top[j] for j in range(len(top)))
                     for k in range(m)])


def finite_difference_check(model, x, y, eps=1e-5):
    _, grads = backward(model, x, y)
    worst = 0.0
    for key, p in model.parameters().items():
        g = grads[key]
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            up = np.mean((predict_rows(model, x) - y) ** 2)
            p[idx] = old - eps
            down = np.mean((predict_rows(model, x) - y) ** 2)
            p[idx] = old
            num = (up - down) / (2 * eps)
            denom = max(abs(num), abs(g[idx]), 1e-6)
            worst = max(worst, abs(num - g[idx]) / denom)
    return worst


def naive_residuals(w, c, ar, ma):
    """Direct loop over the recursion with zero pre-sample terms."""
    z = np.zeros(len(w))
    for t in range(len(w)):
        acc = w[t] - c
        for i, a in enumerate(ar, 1):
            if t - i >= 0:
                acc -= a * w[t - i]
        for j, b in enumerate(ma, 1):
            if t - j >= 0:
                acc -= b * z[t - j]
        z[t] = acc
    return z
