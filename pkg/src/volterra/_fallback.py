"""Pure numpy implementations of the compiled inner loops.

Signatures and return conventions match ``volterra._core`` exactly.
"""
import numpy as np


def _row_offset(i):
    return i * (i + 1) // 2


def volterra_sweep(weights, f, mus):
    weights = np.asarray(weights, dtype=float)
    f = np.asarray(f, dtype=float)
    mus = np.asarray(mus, dtype=float)
    m, nk = f.shape[0], mus.shape[0]
    u = np.zeros((nk, m))
    alive = np.ones(nk, dtype=bool)
    bad = -1
    for i in range(m):
        row = weights[_row_offset(i):_row_offset(i) + i + 1]
        hist = u[:, :i] @ row[:i]
        denom = 1.0 + mus * row[i]
        singular = np.abs(denom) <= 1e-14 * (1.0 + np.abs(mus * row[i]))
        hit = singular & alive
        if hit.any():
            bad = i if bad < 0 else min(bad, i)
            alive &= ~hit
        ok = alive
        u[ok, i] = (f[i] - mus[ok] * hist[ok]) / denom[ok]
    return u, bad


def packed_apply(weights, values):
    weights = np.asarray(weights, dtype=float)
    values = np.asarray(values, dtype=float)
    nk, m = values.shape
    out = np.zeros((nk, m))
    for i in range(m):
        row = weights[_row_offset(i):_row_offset(i) + i + 1]
        out[:, i] = values[:, :i + 1] @ row
    return out


def lower_toeplitz(v, x):
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    nb, nk, n = x.shape
    out = np.empty((nb, nk, n))
    for b in range(nb):
        for k in range(nk):
            out[b, k] = np.convolve(v[k], x[b, k])[:n]
    return out


def reformulated_sweep(decay, phi, lam, c, mem, mem_first, noise):
    decay = np.asarray(decay, dtype=float)
    phi = np.asarray(phi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    mem = np.asarray(mem, dtype=float)
    mem_first = np.asarray(mem_first, dtype=float)
    noise = np.asarray(noise, dtype=float)
    nb, nk, n = noise.shape
    y = np.zeros((nb, nk, n))
    wt = np.zeros((nb, nk, n))
    ws = np.zeros((nb, nk, n))
    ws[:, :, 0] = noise[:, :, 0]
    wt[:, :, 0] = mem_first[0] * ws[:, :, 0]
    for i in range(1, n):
        y[:, :, i] = decay * y[:, :, i - 1] + phi * (wt[:, :, i - 1] + c * noise[:, :, i - 1])
        ws[:, :, i] = -lam * y[:, :, i] + noise[:, :, i]
        # mem[i-1], ..., mem[0] against ws_1..ws_i
        wt[:, :, i] = mem_first[i] * ws[:, :, 0] + ws[:, :, 1:i + 1] @ mem[i - 1::-1]
    return y, wt, ws


def slobodeckij_sum(path, t, w, s):
    path = np.asarray(path, dtype=float)
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    n = path.shape[0]
    total = 0.0
    for d in range(1, n):
        diff = path[d:] - path[:-d]
        d2 = np.einsum("ij,ij->i", diff, diff)
        total += 2.0 * np.sum(w[:-d] * w[d:] * d2 / (t[d:] - t[:-d]) ** s)
    return float(total)
