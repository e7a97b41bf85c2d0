"""Greedy decoders for generalized sparse regression codes.

All decoders take the observation ``y``, the dictionary, the sparsity ``K``,
the scheme (a :class:`SubBlockPartition` for SSE or the string ``"sfe"``) and
the constellation (one shared :class:`Constellation` or one per sub-block).
They return a :class:`SparseCodeword` with exactly ``K`` active columns.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from . import _kernels
from .dictionary import DictionaryMatrix
from .encoding import (
    Constellation,
    ConstellationArg,
    SparseCodeword,
    SubBlockPartition,
    make_codeword,
    per_block,
)
from .errors import ConfigError

Scheme = Union[SubBlockPartition, str]


@dataclass(frozen=True)
class DecoderSpec:
    """Decoder name (``mad``, ``pmad``, ``omp`` or ``ml``) and PMAD path count."""

    algorithm: str = "mad"
    T: int = 1

    def __post_init__(self):
        if self.algorithm not in ("mad", "pmad", "omp", "ml"):
            raise ConfigError(f"unknown decoder {self.algorithm!r}")
        if self.T < 1:
            raise ConfigError("T must be at least 1")

    @property
    def label(self) -> str:
        return f"{self.T}-pmad" if self.algorithm == "pmad" else self.algorithm


@dataclass
class DecoderState:
    """Snapshot of MAD after ``t`` detections."""

    t: int
    residual: np.ndarray
    support: tuple[int, ...]
    symbol_indices: tuple[int, ...]
    discarded_groups: frozenset
    correlations: np.ndarray
    metric: float = float("nan")


@dataclass(frozen=True)
class GuaranteeReport:
    mu: float
    gamma: float
    K: int
    bound: float
    guaranteed: bool

    def to_dict(self) -> dict:
        return {"mu": self.mu, "gamma": self.gamma, "K": self.K,
                "bound": self.bound, "guaranteed": self.guaranteed}


def check_recovery_guarantee(mu: float, gamma: float, K: int) -> GuaranteeReport:
    """Noiseless MAD recovery holds when
    ``K < min{(1 + mu) / (2 mu), (1 + 2 mu - gamma) / (2 mu)}``."""
    if not 0 < mu < 1:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    if not -1 <= gamma < 1:
        raise ValueError(f"gamma must lie in [-1, 1), got {gamma}")
    bound = min((1 + mu) / (2 * mu), (1 + 2 * mu - gamma) / (2 * mu))
    return GuaranteeReport(mu, gamma, K, bound, K < bound)


# ------------------------------------------------------------------ planning

@dataclass(frozen=True, eq=False)
class _Plan:
    group: np.ndarray
    n_groups: int
    set_of: np.ndarray
    sets: tuple[Constellation, ...]
    table: np.ndarray
    sizes: np.ndarray
    real: bool

    def group_of(self, column: int) -> int:
        return int(self.group[column])


@lru_cache(maxsize=64)
def _plan(L: int, A_real: bool, scheme: Scheme, cons: tuple[Constellation, ...]) -> _Plan:
    if isinstance(scheme, SubBlockPartition):
        if scheme.L != L:
            raise ConfigError(f"partition covers {scheme.L} columns, dictionary has {L}")
        group = scheme.column_blocks()
        n_groups = scheme.K
        set_of = np.where(group >= 0, group, 0) if len(cons) > 1 else np.zeros(L, np.int64)
    elif scheme == "sfe":
        if len(cons) != 1:
            raise ConfigError("SFE uses a single constellation")
        group = np.arange(L, dtype=np.int64)
        n_groups = L
        set_of = np.zeros(L, dtype=np.int64)
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")
    real = A_real and all(c.is_real for c in cons)
    Mmax = max(c.M for c in cons)
    table = np.zeros((len(cons), Mmax), dtype=np.complex128)
    for s, c in enumerate(cons):
        table[s, :c.M] = c.symbols
    if real:
        table = np.ascontiguousarray(table.real)
    sizes = np.array([c.M for c in cons], dtype=np.int64)
    return _Plan(group, n_groups, np.ascontiguousarray(set_of, dtype=np.int64),
                 cons, table, sizes, real)


def _setup(A: DictionaryMatrix, K: int, scheme: Scheme, constellation: ConstellationArg):
    if isinstance(scheme, SubBlockPartition):
        if K > scheme.K:
            raise ConfigError(f"K={K} exceeds the {scheme.K} sub-blocks of the partition")
        cons = per_block(constellation, scheme.K)
        if len(set(map(id, cons))) == 1:
            cons = cons[:1]
    else:
        if not isinstance(constellation, Constellation):
            raise ConfigError("SFE decoding needs a single constellation")
        if not 1 <= K <= A.L:
            raise ConfigError(f"K={K} outside [1, L={A.L}]")
        cons = (constellation,)
    return _plan(A.L, A.field == "real", scheme, cons)


def _work(A: DictionaryMatrix, plan: _Plan, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    y = np.asarray(y)
    if y.shape != (A.N,):
        raise ValueError(f"observation must have shape ({A.N},), got {y.shape}")
    dtype = np.float64 if plan.real and not np.iscomplexobj(y) else np.complex128
    y = np.ascontiguousarray(y, dtype=dtype)
    AH = A.adjoint
    return y, AH, (A.correlate(y)).astype(dtype, copy=False)


def _gram_array(A: DictionaryMatrix, gram, dtype) -> tuple[np.ndarray, bool]:
    if gram is None:
        gram = A.gram_fits()
    if gram:
        return A.gram().entries, True
    return np.zeros((1, 1), dtype=dtype), False


def _finish(A, plan: _Plan, cols, syms) -> SparseCodeword:
    cons = [plan.sets[plan.set_of[i]] for i in cols]
    return make_codeword(A, list(cols), list(syms), cons)


# ------------------------------------------------------------------ MAD

def mad_decode(y, A: DictionaryMatrix, K: int, scheme: Scheme,
               constellation: ConstellationArg, partial: SparseCodeword | None = None,
               *, gram: bool | None = None, trace: list | None = None) -> SparseCodeword:
    """Match-and-decode.

    Each iteration picks the (column, symbol) pair maximising
    ``Re{c_i b_m^*} - |b_m|^2 / 2`` over columns outside the discarded set,
    subtracts it from the residual and discards the column (SFE) or its
    sub-block (SSE). ``gram=None`` uses the gram-matrix recursion for the
    correlations when the dictionary fits the gram budget; ``gram=False``
    recomputes ``A^H r`` every iteration. Passing a list as ``trace`` fills it
    with one :class:`DecoderState` per iteration.
    """
    plan = _setup(A, K, scheme, constellation)
    y, AH, c = _work(A, plan, y)
    excluded = np.zeros(plan.n_groups, dtype=np.bool_)
    cols = np.full(K, -1, dtype=np.int64)
    syms = np.full(K, -1, dtype=np.int64)
    metrics = np.full(K, np.nan)
    r = y.copy()
    t0 = 0
    if partial is not None and partial.K:
        t0 = partial.K
        if t0 >= K:
            raise ValueError(f"partial estimate has {t0} columns; must be fewer than K={K}")
        groups = [plan.group_of(i) for i in partial.support]
        if min(groups) < 0:
            raise ValueError("partial estimate uses a discarded column")
        if len(set(groups)) != len(groups):
            raise ValueError("partial estimate has two columns in one discard group")
        cols[:t0] = partial.support
        syms[:t0] = partial.symbol_indices
        for i, m in zip(partial.support, partial.symbol_indices):
            r -= plan.table[plan.set_of[i], m] * A.columns[:, i]
        excluded[groups] = True
        c = A.correlate(r).astype(y.dtype, copy=False)
    G, use_gram = _gram_array(A, gram, y.dtype)
    filled = _kernels.mad_run(c, r, AH, G, use_gram, plan.group, excluded, plan.set_of,
                              plan.table, plan.sizes, t0, K - t0, cols, syms, metrics)
    if filled < K:
        raise ConfigError(f"only {filled} columns could be detected for K={K}")
    if trace is not None:
        trace.extend(_replay(y, A, plan, cols, syms, metrics, t0))
    return _finish(A, plan, cols, syms)


def _replay(y, A, plan: _Plan, cols, syms, metrics, t0) -> list[DecoderState]:
    states = []
    r = y.astype(np.complex128)
    discarded: set = set()
    for t in range(len(cols)):
        if t >= t0:
            states.append(DecoderState(
                t=t, residual=r.copy(), support=tuple(int(v) for v in cols[:t]),
                symbol_indices=tuple(int(v) for v in syms[:t]),
                discarded_groups=frozenset(discarded), correlations=A.correlate(r),
                metric=float(metrics[t]),
            ))
        r = r - plan.table[plan.set_of[cols[t]], syms[t]] * A.columns[:, cols[t]]
        discarded.add(plan.group_of(int(cols[t])))
    states.append(DecoderState(
        t=len(cols), residual=r.copy(), support=tuple(int(v) for v in cols),
        symbol_indices=tuple(int(v) for v in syms), discarded_groups=frozenset(discarded),
        correlations=A.correlate(r),
    ))
    return states


# ------------------------------------------------------------------ PMAD

def pmad_seeds(c, plan: _Plan, T: int):
    """Top-``T`` first-iteration candidates with distinct columns, each paired
    with its best symbol; ordered by metric, lowest column first on ties."""
    metric = np.empty(c.shape[0])
    sym = np.empty(c.shape[0], dtype=np.int64)
    excluded = np.zeros(plan.n_groups, dtype=np.bool_)
    _kernels.best_per_column(c, plan.group, excluded, plan.set_of, plan.table, plan.sizes,
                             metric, sym)
    eligible = int(np.count_nonzero(np.isfinite(metric)))
    if T > eligible:
        warnings.warn(f"T={T} exceeds the {eligible} eligible columns; clamped")
        T = eligible
    order = np.argsort(-metric, kind="stable")[:T]
    return order.astype(np.int64), sym[order], metric[order]


def pmad_decode(y, A: DictionaryMatrix, K: int, scheme: Scheme,
                constellation: ConstellationArg, T: int, *,
                gram: bool | None = None, paths: list | None = None) -> SparseCodeword:
    """Parallel MAD: ``T`` MAD runs, each seeded with one of the top-``T``
    first-iteration candidates, keeping the estimate closest to ``y``.

    ``paths`` (a list) receives ``(SparseCodeword, distance)`` for every path.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    plan = _setup(A, K, scheme, constellation)
    y, AH, c0 = _work(A, plan, y)
    seed_cols, seed_syms, seed_metrics = pmad_seeds(c0, plan, T)
    T = seed_cols.shape[0]
    G, use_gram = _gram_array(A, gram, y.dtype)
    cols = np.full((T, K), -1, dtype=np.int64)
    syms = np.full((T, K), -1, dtype=np.int64)
    metrics = np.full((T, K), np.nan)
    dist = np.empty(T)
    _kernels.pmad_run(c0, y, AH, G, use_gram, plan.group,
                      np.zeros(plan.n_groups, dtype=np.bool_), plan.set_of, plan.table,
                      plan.sizes, seed_cols, seed_syms, seed_metrics, K, cols, syms,
                      metrics, dist)
    best = int(np.argmin(dist))
    if not np.isfinite(dist[best]):
        raise ConfigError(f"no PMAD path could detect K={K} columns")
    if paths is not None:
        for n in range(T):
            if np.isfinite(dist[n]):
                paths.append((_finish(A, plan, cols[n], syms[n]), float(dist[n])))
    return _finish(A, plan, cols[best], syms[best])


# ------------------------------------------------------------------ OMP

def omp_decode(y, A: DictionaryMatrix, K: int, scheme: Scheme,
               constellation: ConstellationArg) -> SparseCodeword:
    """Orthogonal matching pursuit for ``K`` iterations, then per-column
    quantisation of the least-squares coefficients to the nearest symbol.

    Selection maximises ``|<r, a_i>|`` under the same discard rule as MAD.
    The support's least-squares fit is maintained with an incremental QR
    factorisation; a numerically dependent column switches to the
    pseudo-inverse.
    """
    plan = _setup(A, K, scheme, constellation)
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (A.N,):
        raise ValueError(f"observation must have shape ({A.N},), got {y.shape}")
    cols_all = A.columns
    eligible = plan.group >= 0
    excluded = np.zeros(plan.n_groups, dtype=bool)
    support: list[int] = []
    Q = np.zeros((A.N, K), dtype=np.complex128)
    R = np.zeros((K, K), dtype=np.complex128)
    deficient = False
    r = y.copy()
    for t in range(K):
        mag = np.abs(A.correlate(r))
        mask = eligible & ~excluded[np.where(eligible, plan.group, 0)]
        mag = np.where(mask, mag, -1.0)
        i = int(np.argmax(mag))
        if mag[i] < 0:
            raise ConfigError(f"only {t} columns could be detected for K={K}")
        support.append(i)
        excluded[plan.group[i]] = True
        a = cols_all[:, i].astype(np.complex128)
        if not deficient:
            coef = Q[:, :t].conj().T @ a
            q = a - Q[:, :t] @ coef
            coef2 = Q[:, :t].conj().T @ q  # second pass keeps Q orthonormal
            q -= Q[:, :t] @ coef2
            nrm = np.linalg.norm(q)
            if nrm < 1e-10:
                deficient = True
            else:
                Q[:, t] = q / nrm
                R[:t, t] = coef + coef2
                R[t, t] = nrm
        if deficient:
            As = cols_all[:, support]
            r = y - As @ (np.linalg.pinv(As) @ y)
        else:
            Qt = Q[:, :t + 1]
            r = y - Qt @ (Qt.conj().T @ y)
    if deficient:
        x = np.linalg.pinv(cols_all[:, support]) @ y
    else:
        from scipy.linalg import solve_triangular
        x = solve_triangular(R, Q.conj().T @ y)
    syms = [plan.sets[plan.set_of[i]].nearest(x[k]) for k, i in enumerate(support)]
    return _finish(A, plan, support, syms)


# ------------------------------------------------------------------ ML (K = 1)

def ml_decode_k1(y, A: DictionaryMatrix, constellation: Constellation,
                 columns: int | None = None) -> SparseCodeword:
    """Exhaustive minimum-distance decoding over all single-column codewords
    ``b a_i`` (the first ``columns`` columns if given); ties go to the lowest
    column, then the lowest symbol index."""
    y = np.asarray(y)
    L = A.L if columns is None else columns
    cand = A.columns[:, :L, None] * constellation.symbols[None, None, :]
    dist = np.sum(np.abs(y[:, None, None] - cand) ** 2, axis=0)
    i, m = np.unravel_index(int(np.argmin(dist)), dist.shape)
    return make_codeword(A, [int(i)], [int(m)], [constellation])


# ------------------------------------------------------------------ dispatch

def decode(y, A: DictionaryMatrix, K: int, scheme: Scheme, constellation: ConstellationArg,
           spec: DecoderSpec, *, gram: bool | None = None) -> SparseCodeword:
    if spec.algorithm == "mad":
        return mad_decode(y, A, K, scheme, constellation, gram=gram)
    if spec.algorithm == "pmad":
        return pmad_decode(y, A, K, scheme, constellation, spec.T, gram=gram)
    if spec.algorithm == "omp":
        return omp_decode(y, A, K, scheme, constellation)
    if K != 1:
        raise ConfigError("the exhaustive ML decoder only supports K = 1")
    cons = per_block(constellation, 1)[0] if isinstance(scheme, SubBlockPartition) \
        else constellation
    cols = scheme.sizes[0] if isinstance(scheme, SubBlockPartition) else None
    return ml_decode_k1(y, A, cons, columns=cols)
