"""Numba-jitted implementations of the hot pairwise kernels.

Same surface as ``_kernels_np``. Distances go through BLAS (np.dot inside
the jitted code); the kernel-mixture evaluation and gradient assembly are
fused loops, which avoids the temporary matrices the NumPy path allocates.
No fastmath: reassociation would break the exact-zero identity for
coincident inputs.
"""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def pairwise_sqdist(X, Y):
    n, d = X.shape
    m = Y.shape[0]
    xx = np.empty(n)
    yy = np.empty(m)
    for i in range(n):
        s = 0.0
        for k in range(d):
            s += X[i, k] * X[i, k]
        xx[i] = s
    for j in range(m):
        s = 0.0
        for k in range(d):
            s += Y[j, k] * Y[j, k]
        yy[j] = s
    G = np.dot(X, Y.T)
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            v = xx[i] + yy[j] - 2.0 * G[i, j]
            out[i, j] = v if v > 0.0 else 0.0
    return out


@njit(cache=True, nogil=True)
def condensed_sqdist(Z):
    n, d = Z.shape
    zz = np.empty(n)
    for i in range(n):
        s = 0.0
        for k in range(d):
            s += Z[i, k] * Z[i, k]
        zz[i] = s
    G = np.dot(Z, Z.T)
    out = np.empty(n * (n - 1) // 2)
    idx = 0
    for i in range(n):
        for j in range(i + 1, n):
            v = zz[i] + zz[j] - 2.0 * G[i, j]
            out[idx] = v if v > 0.0 else 0.0
            idx += 1
    return out


@njit(cache=True, nogil=True)
def _mixture_block(D, kcoef, wcoef, betas, W):
    """Fill W with the gradient-weight mixture; return the kernel-value sum."""
    n, m = D.shape
    L = kcoef.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(m):
            r = D[i, j]
            kv = 0.0
            wv = 0.0
            for l in range(L):
                e = np.exp(-r * kcoef[l])
                kv += betas[l] * e
                wv += wcoef[l] * e
            total += kv
            W[i, j] = wv
    return total


@njit(cache=True, nogil=True)
def mmd_biased(S, T, sigmas, betas):
    ns, d = S.shape
    nt = T.shape[0]
    L = sigmas.shape[0]
    kcoef = np.empty(L)
    wcoef = np.empty(L)
    for l in range(L):
        kcoef[l] = 0.5 / (sigmas[l] * sigmas[l])
        wcoef[l] = betas[l] / (sigmas[l] * sigmas[l])

    dss = pairwise_sqdist(S, S)
    dtt = pairwise_sqdist(T, T)
    dst = pairwise_sqdist(S, T)
    wss = np.empty((ns, ns))
    wtt = np.empty((nt, nt))
    wst = np.empty((ns, nt))
    sum_ss = _mixture_block(dss, kcoef, wcoef, betas, wss)
    sum_tt = _mixture_block(dtt, kcoef, wcoef, betas, wtt)
    sum_st = _mixture_block(dst, kcoef, wcoef, betas, wst)
    value = sum_ss / (ns * ns) + sum_tt / (nt * nt) - 2.0 * sum_st / (ns * nt)

    c_ss = 2.0 / (ns * ns)
    c_tt = 2.0 / (nt * nt)
    c_st = 2.0 / (ns * nt)
    wss_s = np.dot(wss, S)
    wst_t = np.dot(wst, T)
    wtt_t = np.dot(wtt, T)
    wst_s = np.dot(wst.T.copy(), S)
    grad_s = np.empty((ns, d))
    for i in range(ns):
        row_ss = 0.0
        for j in range(ns):
            row_ss += wss[i, j]
        row_st = 0.0
        for j in range(nt):
            row_st += wst[i, j]
        for k in range(d):
            grad_s[i, k] = (-c_ss * (row_ss * S[i, k] - wss_s[i, k])
                            + c_st * (row_st * S[i, k] - wst_t[i, k]))
    grad_t = np.empty((nt, d))
    for j in range(nt):
        row_tt = 0.0
        for i in range(nt):
            row_tt += wtt[j, i]
        col_st = 0.0
        for i in range(ns):
            col_st += wst[i, j]
        for k in range(d):
            grad_t[j, k] = (-c_tt * (row_tt * T[j, k] - wtt_t[j, k])
                            + c_st * (col_st * T[j, k] - wst_s[j, k]))
    return value, grad_s, grad_t
