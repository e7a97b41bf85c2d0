"""Compiled inner loops for the greedy decoders.

Column eligibility is expressed through ``group``: column ``i`` belongs to
discard group ``group[i]`` (its sub-block for SSE, itself for SFE, -1 when the
column is never used). Detecting a column marks its whole group excluded.
Symbols come from ``table[set_of[i], :sizes[set_of[i]]]``.

Scans run over increasing column index and then increasing symbol index with a
strict ``>`` comparison, so ties resolve to the lowest column, then symbol.
"""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def best_per_column(c, group, excluded, set_of, table, sizes, out_metric, out_sym):
    for i in range(c.shape[0]):
        g = group[i]
        if g < 0 or excluded[g]:
            out_metric[i] = -np.inf
            out_sym[i] = -1
            continue
        s = set_of[i]
        best = -np.inf
        bm = -1
        for m in range(sizes[s]):
            b = table[s, m]
            p = (c[i] * np.conj(b)).real - 0.5 * (b * np.conj(b)).real
            if p > best:
                best = p
                bm = m
        out_metric[i] = best
        out_sym[i] = bm


@njit(cache=True, nogil=True)
def argmax_step(c, group, excluded, set_of, table, sizes):
    best = -np.inf
    bi = -1
    bm = -1
    for i in range(c.shape[0]):
        g = group[i]
        if g < 0 or excluded[g]:
            continue
        s = set_of[i]
        for m in range(sizes[s]):
            b = table[s, m]
            p = (c[i] * np.conj(b)).real - 0.5 * (b * np.conj(b)).real
            if p > best:
                best = p
                bi = i
                bm = m
    return bi, bm, best


@njit(cache=True, nogil=True)
def apply_detection(bi, b, c, r, AH, G, use_gram, group, excluded):
    """Exclude the group of column ``bi``, subtract ``b a_bi`` from the residual
    and bring the correlations of still-eligible columns up to date."""
    excluded[group[bi]] = True
    N = r.shape[0]
    for n in range(N):
        r[n] -= b * np.conj(AH[bi, n])
    L = c.shape[0]
    if use_gram:
        # <r - b a_bi, a_i> = <r, a_i> - b <a_bi, a_i>
        for i in range(L):
            g = group[i]
            if g >= 0 and not excluded[g]:
                c[i] -= b * G[bi, i]
    else:
        for i in range(L):
            g = group[i]
            if g >= 0 and not excluded[g]:
                acc = c[i] * 0
                for n in range(N):
                    acc += AH[i, n] * r[n]
                c[i] = acc


@njit(cache=True, nogil=True)
def mad_run(c, r, AH, G, use_gram, group, excluded, set_of, table, sizes,
            t0, n_steps, cols, syms, metrics):
    """Run ``n_steps`` match/decode/update iterations starting at ``t0``.

    Returns the number of filled slots (smaller than ``t0 + n_steps`` only if
    no eligible column remains).
    """
    for t in range(t0, t0 + n_steps):
        bi, bm, best = argmax_step(c, group, excluded, set_of, table, sizes)
        if bi < 0:
            return t
        cols[t] = bi
        syms[t] = bm
        metrics[t] = best
        apply_detection(bi, table[set_of[bi], bm], c, r, AH, G, use_gram, group, excluded)
    return t0 + n_steps


@njit(cache=True, nogil=True)
def pmad_run(c0, y, AH, G, use_gram, group, excluded0, set_of, table, sizes,
             seed_cols, seed_syms, seed_metrics, K, cols, syms, metrics, dist):
    """One MAD path per seed; ``dist[n]`` is ``||y - A x_n||`` of path ``n``."""
    T = seed_cols.shape[0]
    for n in range(T):
        c = c0.copy()
        r = y.copy()
        excluded = excluded0.copy()
        bi = seed_cols[n]
        bm = seed_syms[n]
        cols[n, 0] = bi
        syms[n, 0] = bm
        metrics[n, 0] = seed_metrics[n]
        apply_detection(bi, table[set_of[bi], bm], c, r, AH, G, use_gram, group, excluded)
        filled = mad_run(c, r, AH, G, use_gram, group, excluded, set_of, table, sizes,
                         1, K - 1, cols[n], syms[n], metrics[n])
        if filled < K:
            dist[n] = np.inf
        else:
            acc = 0.0
            for k in range(r.shape[0]):
                acc += (r[k] * np.conj(r[k])).real
            dist[n] = np.sqrt(acc)
