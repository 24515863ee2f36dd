"""Pure-NumPy implementations of the hot pairwise kernels.

These are the fallback twins of the Numba versions in ``_kernels_nb``;
both expose the same three functions with identical semantics.
"""
import numpy as np


def pairwise_sqdist(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between all row pairs, shape (len(X), len(Y))."""
    xx = (X * X).sum(axis=1)[:, None]
    yy = (Y * Y).sum(axis=1)[None, :]
    d2 = xx + yy - 2.0 * (X @ Y.T)
    # broadcasting can produce tiny negatives for near-coincident rows
    return np.maximum(d2, 0.0)


def condensed_sqdist(Z: np.ndarray) -> np.ndarray:
    """Squared distances of all unordered row pairs (i < j), as a flat vector."""
    d2 = pairwise_sqdist(Z, Z)
    iu = np.triu_indices(Z.shape[0], k=1)
    return d2[iu]


def mmd_biased(S: np.ndarray, T: np.ndarray, sigmas: np.ndarray, betas: np.ndarray):
    """Biased (V-statistic) squared MMD under a Gaussian kernel mixture.

    Returns (value, grad_S, grad_T) where the gradients are with respect
    to the rows of S and T. Self-pairs (i = j) are included, so the value
    is nonnegative up to rounding and exactly zero for S identical to T.
    """
    ns, nt = S.shape[0], T.shape[0]
    dss = pairwise_sqdist(S, S)
    dtt = pairwise_sqdist(T, T)
    dst = pairwise_sqdist(S, T)

    sum_ss = sum_tt = sum_st = 0.0
    wss = np.zeros_like(dss)
    wtt = np.zeros_like(dtt)
    wst = np.zeros_like(dst)
    for sig, beta in zip(sigmas, betas):
        kc = 0.5 / (sig * sig)
        wc = beta / (sig * sig)
        ess = np.exp(-dss * kc)
        ett = np.exp(-dtt * kc)
        est = np.exp(-dst * kc)
        sum_ss += beta * ess.sum()
        sum_tt += beta * ett.sum()
        sum_st += beta * est.sum()
        wss += wc * ess
        wtt += wc * ett
        wst += wc * est

    value = sum_ss / (ns * ns) + sum_tt / (nt * nt) - 2.0 * sum_st / (ns * nt)

    c_ss = 2.0 / (ns * ns)
    c_tt = 2.0 / (nt * nt)
    c_st = 2.0 / (ns * nt)
    grad_s = -c_ss * (wss.sum(axis=1)[:, None] * S - wss @ S) + c_st * (
        wst.sum(axis=1)[:, None] * S - wst @ T
    )
    grad_t = -c_tt * (wtt.sum(axis=1)[:, None] * T - wtt @ T) + c_st * (
        wst.sum(axis=0)[:, None] * T - wst.T @ S
    )
    return value, grad_s, grad_t
