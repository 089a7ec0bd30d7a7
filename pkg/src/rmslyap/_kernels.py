"""Compiled inner loops. Everything here is sequential in time and pure."""
import numpy as np
from numba import njit


@njit(cache=True)
def markov_walk(start, cdf, u):
    """states[0] = start; states[j+1] drawn from row cdf[states[j]] using u[j]."""
    n = u.shape[0]
    S = cdf.shape[0]
    out = np.empty(n + 1, dtype=np.int64)
    out[0] = start
    s = start
    for j in range(n):
        row = cdf[s]
        t = 0
        while t < S - 1 and u[j] >= row[t]:
            t += 1
        s = t
        out[j + 1] = s
    return out


@njit(cache=True)
def vector_increments(A, dtab, states, v0):
    """Log growth factors of v -> A diag(d) v / ||A diag(d) v||_2 along ``states``.

    Returns (increments, final unit vector). An increment of -inf means the
    vector was annihilated; the walk stops there.
    """
    n = states.shape[0]
    N = A.shape[0]
    inc = np.empty(n)
    v = v0.copy()
    w = np.empty(N)
    for k in range(n):
        d = dtab[states[k]]
        s = 0.0
        for i in range(N):
            acc = 0.0
            for j in range(N):
                acc += A[i, j] * d[j] * v[j]
            w[i] = acc
            s += acc * acc
        if s == 0.0:
            inc[k:] = -np.inf
            return inc, v
        s = np.sqrt(s)
        inc[k] = np.log(s)
        for i in range(N):
            v[i] = w[i] / s
    return inc, v


@njit(cache=True)
def matrix_increments(A, dtab, states, U0):
    """Log growth factors of U -> S_k U / ||S_k U||_F with S_k = A diag(d[states[k]]).

    With ``U0`` the identity the increments sum to ln ||S^(n)||_F.
    Returns (increments, final unit factor).
    """
    n = states.shape[0]
    N = A.shape[0]
    inc = np.empty(n)
    U = U0.copy()
    W = np.empty((N, N))
    for k in range(n):
        d = dtab[states[k]]
        s = 0.0
        for i in range(N):
            for c in range(N):
                acc = 0.0
                for j in range(N):
                    acc += A[i, j] * d[j] * U[j, c]
                W[i, c] = acc
                s += acc * acc
        if s == 0.0:
            inc[k:] = -np.inf
            return inc, U
        s = np.sqrt(s)
        inc[k] = np.log(s)
        for i in range(N):
            for c in range(N):
                U[i, c] = W[i, c] / s
    return inc, U


@njit(cache=True)
def principal_forward(A, dtab, states, w0):
    """w(k+1) = S_k w(k) / rho(k) with rho(k) = ||S_k w(k)||_2.

    Returns the (n+1, N) array of w(k) and the length-n array of rho(k).
    """
    n = states.shape[0]
    N = A.shape[0]
    W = np.empty((n + 1, N))
    rho = np.empty(n)
    W[0] = w0
    for k in range(n):
        d = dtab[states[k]]
        s = 0.0
        for i in range(N):
            acc = 0.0
            for j in range(N):
                acc += A[i, j] * d[j] * W[k, j]
            W[k + 1, i] = acc
            s += acc * acc
        s = np.sqrt(s)
        rho[k] = s
        for i in range(N):
            W[k + 1, i] /= s
    return W, rho
