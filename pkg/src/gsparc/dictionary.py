"""Deterministic dictionary matrices: Gold codes and mutually unbiased bases.

A dictionary is an ``N x L`` matrix with unit-norm columns. Two constructions
are provided:

* ``build_gold_dictionary(n)``: every circular shift of the 2^n + 1 Gold
  sequences of length ``N = 2^n - 1`` (entries ``+-1/sqrt(N)``) followed by one
  standard basis column, so ``L = 2^(2n)``.
* ``build_mub_dictionary(n)``: ``N = 2^n`` mutually unbiased orthonormal bases
  of ``C^N`` stacked side by side, ``L = N^2``, with entries in
  ``{+-1, +-j}/sqrt(N)``.
"""
from __future__ import annotations

import os
import warnings
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .errors import ConfigError, GramBudgetError
from .sequences import gf_tables, gold_family, gold_t, periodic_correlations

GOLD_SUPPORTED = (3, 5, 7, 9)
MUB_MAX_N = 8  # dense N x N^2 storage; n = 9 would need 2 GiB

DEFAULT_GRAM_BUDGET = int(os.environ.get("GSPARC_GRAM_BUDGET", 2**25))

_NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Dense ``L x L`` matrix with ``entries[p, q] = <a_p, a_q> = a_q^H a_p``."""

    entries: np.ndarray

    @property
    def L(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class DictionaryMatrix:
    """Immutable column-normalised dictionary.

    ``kind`` is ``"gold"``, ``"mub"`` or ``"custom"``; ``n`` is the construction
    order for the first two. ``gold_sequences`` (0/1 rows) is kept for Gold
    dictionaries so coherence and census can use the shift structure instead of
    a dense L x L scan. ``identity_columns`` counts trailing standard-basis
    columns appended to the construction.
    """

    columns: np.ndarray
    kind: str = "custom"
    n: int | None = None
    identity_columns: int = 0
    gold_sequences: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        cols = np.asarray(self.columns)
        if cols.ndim != 2:
            raise ConfigError("dictionary must be a 2-D array")
        if not np.iscomplexobj(cols):
            cols = cols.astype(np.float64, copy=False)
        else:
            cols = cols.astype(np.complex128, copy=False)
        norms = np.linalg.norm(cols, axis=0)
        if np.any(norms == 0):
            raise ConfigError("dictionary has an all-zero column")
        if np.max(np.abs(norms - 1.0)) > _NORM_TOL:
            cols = cols / norms
        cols = np.ascontiguousarray(cols)
        cols.setflags(write=False)
        object.__setattr__(self, "columns", cols)

    @classmethod
    def custom(cls, matrix) -> "DictionaryMatrix":
        return cls(np.array(matrix, copy=True), kind="custom")

    @property
    def N(self) -> int:
        return self.columns.shape[0]

    @property
    def L(self) -> int:
        return self.columns.shape[1]

    @property
    def field(self) -> str:
        return "complex" if np.iscomplexobj(self.columns) else "real"

    @property
    def label(self) -> str:
        if self.kind == "custom":
            return "custom"
        return f"{self.kind}({self.n})"

    @cached_property
    def adjoint(self) -> np.ndarray:
        """Contiguous ``A^H`` (L x N), the layout used for correlations."""
        out = np.ascontiguousarray(self.columns.conj().T)
        out.setflags(write=False)
        return out

    @cached_property
    def mu(self) -> float:
        return coherence(self)

    def correlate(self, r: np.ndarray) -> np.ndarray:
        """``c_i = <r, a_i> = a_i^H r`` for every column."""
        return self.adjoint @ r

    def gram_fits(self, max_entries: int | None = None) -> bool:
        budget = DEFAULT_GRAM_BUDGET if max_entries is None else max_entries
        return self.L * self.L <= budget

    def gram(self, max_entries: int | None = None) -> GramMatrix:
        """Cached dense gram matrix, refused when ``L^2`` exceeds the budget."""
        if not self.gram_fits(max_entries):
            budget = DEFAULT_GRAM_BUDGET if max_entries is None else max_entries
            raise GramBudgetError(
                f"gram matrix of {self.label} needs {self.L**2} entries "
                f"(budget {budget}); decode with on-the-fly correlation instead "
                "(gram=False) or raise GSPARC_GRAM_BUDGET"
            )
        cached = self.__dict__.get("_gram")
        if cached is None:
            entries = (self.adjoint @ self.columns).conj()
            # exact Hermitian symmetry and unit diagonal
            entries = np.triu(entries) + np.triu(entries, 1).conj().T
            np.fill_diagonal(entries, 1.0)
            entries.setflags(write=False)
            cached = GramMatrix(entries)
            self.__dict__["_gram"] = cached
        return cached

    def to_bytes(self) -> bytes:
        """Row-major little-endian float64 dump (complex as (re, im) pairs)."""
        cols = self.columns
        if np.iscomplexobj(cols):
            cols = np.stack([cols.real, cols.imag], axis=-1)
        return np.ascontiguousarray(cols, dtype="<f8").tobytes()

    def head(self, L: int) -> "DictionaryMatrix":
        """Dictionary made of the first ``L`` columns."""
        if not 1 <= L <= self.L:
            raise ConfigError(f"column count {L} outside [1, {self.L}]")
        if L == self.L:
            return self
        return DictionaryMatrix(
            self.columns[:, :L].copy(), kind=self.kind, n=self.n,
            identity_columns=max(0, L - (self.L - self.identity_columns)),
            gold_sequences=self.gold_sequences if L >= self.L - self.identity_columns else None,
        )

    def with_identity_columns(self, count: int) -> "DictionaryMatrix":
        """Append the first ``count`` standard basis columns."""
        if count == 0:
            return self
        if not 0 < count <= self.N:
            raise ConfigError(f"identity column count {count} outside [0, {self.N}]")
        eye = np.eye(self.N, count, dtype=self.columns.dtype)
        return DictionaryMatrix(
            np.hstack([self.columns, eye]), kind=self.kind, n=self.n,
            identity_columns=self.identity_columns + count,
            gold_sequences=self.gold_sequences,
        )


@lru_cache(maxsize=8)
def build_gold_dictionary(n: int) -> DictionaryMatrix:
    """Gold-code dictionary with ``N = 2^n - 1`` rows and ``L = 2^(2n)`` columns.

    Column ``s*N + tau`` is Gold sequence ``s`` circularly shifted left by
    ``tau``; the final column is ``e_0``.
    """
    if n not in GOLD_SUPPORTED:
        raise ConfigError(
            f"Gold dictionary not available for n={n}; supported n: {list(GOLD_SUPPORTED)}"
        )
    seqs = gold_family(n)
    N = seqs.shape[1]
    x = 1.0 - 2.0 * seqs.astype(np.float64)
    # shifted[s, tau, k] = x[s, (k + tau) mod N]
    idx = (np.arange(N)[:, None] + np.arange(N)[None, :]) % N
    shifted = x[:, idx]
    cols = shifted.reshape(-1, N).T / np.sqrt(N)
    eye = np.zeros((N, 1))
    eye[0, 0] = 1.0
    cols = np.hstack([cols, eye])
    seqs.setflags(write=False)
    return DictionaryMatrix(cols, kind="gold", n=n, identity_columns=1, gold_sequences=seqs)


def mub_quadratic_forms(n: int) -> np.ndarray:
    """``Q[b, x] = x^T S_b x mod 4`` with ``S_b[s, t] = Tr(b x^s x^t)`` over GF(2^n)."""
    N = 1 << n
    mul, tr = gf_tables(n)
    bits = (np.arange(N)[:, None] >> np.arange(n)) & 1
    basis = 1 << np.arange(n)
    mono = mul[basis[:, None], basis[None, :]]  # x^s * x^t
    forms = np.empty((N, N), dtype=np.int64)
    for b in range(N):
        S = tr[mul[b][mono]]
        forms[b] = ((bits @ S) * bits).sum(axis=1) % 4
    return forms


@lru_cache(maxsize=8)
def build_mub_dictionary(n: int) -> DictionaryMatrix:
    """``N = 2^n`` mutually unbiased bases of ``C^N`` as ``A = [U_0 ... U_{N-1}]``.

    Basis ``b`` (an element of GF(2^n)) has columns
    ``U_b[x, a] = j^{Q_b(x)} (-1)^{a.x} / sqrt(N)``. For ``b != b'`` the forms
    differ by a non-degenerate quadratic form, which makes the bases unbiased.
    """
    if n < 2:
        raise ConfigError(f"MUB dictionary needs n >= 2, got n={n}")
    if n > MUB_MAX_N:
        raise ConfigError(f"MUB dictionary limited to n <= {MUB_MAX_N}, got n={n}")
    N = 1 << n
    forms = mub_quadratic_forms(n)
    ar = np.arange(N)
    parity = np.array([bin(v).count("1") & 1 for v in range(N)])
    walsh = 1.0 - 2.0 * parity[np.bitwise_and.outer(ar, ar)]
    quarter = np.array([1, 1j, -1, -1j])
    cols = np.empty((N, N * N), dtype=np.complex128)
    for b in range(N):
        cols[:, b * N:(b + 1) * N] = quarter[forms[b]][:, None] * walsh
    cols /= np.sqrt(N)
    A = DictionaryMatrix(cols, kind="mub", n=n)
    if N <= 512:
        bad = _mub_phase_violations(n, forms)
        if bad:
            warnings.warn(f"mub({n}): {bad} cross-basis products outside the expected root set")
    return A


def mub_root_set(n: int) -> np.ndarray:
    """Allowed cross-basis inner products for ``N = 2^n``."""
    N = 1 << n
    order = 8 if n % 2 else 4
    return np.exp(2j * np.pi * np.arange(order) / order) / np.sqrt(N)


def mub_cross_products(n: int, forms: np.ndarray | None = None):
    """Yield ``(b, P)`` with ``P[c, b2] = sqrt(N) <u_{b,a}, u_{b2,a'}>`` for
    ``c = a xor a'``; the product only depends on ``a xor a'``, so a Walsh
    transform of ``j^{Q_b - Q_b2}`` gives every cross-basis value."""
    if forms is None:
        forms = mub_quadratic_forms(n)
    N = 1 << n
    ar = np.arange(N)
    parity = np.array([bin(v).count("1") & 1 for v in range(N)])
    walsh = 1.0 - 2.0 * parity[np.bitwise_and.outer(ar, ar)]
    quarter = np.array([1, 1j, -1, -1j])
    for b in range(N):
        w = quarter[(forms[b][:, None] - forms.T) % 4]  # w[x, b2]
        P = (walsh @ w.real + 1j * (walsh @ w.imag)) / np.sqrt(N)
        yield b, P


def _mub_phase_violations(n: int, forms: np.ndarray, tol: float = 1e-12) -> int:
    order = 8 if n % 2 else 4
    roots = np.exp(2j * np.pi * np.arange(order) / order)
    bad = 0
    for b, P in mub_cross_products(n, forms):
        vals = np.delete(P, b, axis=1).ravel()
        dist = np.min(np.abs(vals[:, None] - roots[None, :]), axis=1)
        bad += int(np.count_nonzero(dist > tol))
    return bad


def _iter_gram_blocks(A: DictionaryMatrix, block: int = 512):
    for j0 in range(0, A.L, block):
        j1 = min(A.L, j0 + block)
        blk = A.adjoint[j0:j1] @ A.columns  # blk[p, q] = a_p^H a_q
        yield j0, j1, blk


def coherence(A: DictionaryMatrix) -> float:
    """Maximum ``|<a_p, a_q>|`` over distinct columns (columns are unit norm)."""
    if A.L < 2:
        raise ConfigError("coherence needs at least two columns")
    if A.kind == "gold" and A.gold_sequences is not None and A.identity_columns <= 1 \
            and A.L == A.gold_sequences.shape[0] * A.N + A.identity_columns:
        corr = _gold_off_peak(A.gold_sequences)
        mu = np.max(np.abs(corr)) / A.N
        if A.identity_columns:
            mu = max(mu, 1.0 / np.sqrt(A.N))
        return float(mu)
    best = 0.0
    for j0, j1, blk in _iter_gram_blocks(A):
        mag = np.abs(blk)
        mag[np.arange(j1 - j0), np.arange(j0, j1)] = 0.0
        best = max(best, float(mag.max()))
    return best


def gram(A: DictionaryMatrix, max_entries: int | None = None) -> GramMatrix:
    return A.gram(max_entries)


def _gold_off_peak(seqs: np.ndarray) -> np.ndarray:
    corr = periodic_correlations(seqs)
    mask = np.ones(corr.shape, dtype=bool)
    mask[np.arange(corr.shape[0]), np.arange(corr.shape[0]), 0] = False
    return corr[mask]


def gold_correlation_values(A: DictionaryMatrix) -> Counter:
    """Census of inner products among Gold-derived columns, keyed by the integer
    correlation ``N * <a_p, a_q>`` and counting each unordered pair once."""
    if A.gold_sequences is None:
        raise ConfigError("not a Gold dictionary")
    corr = periodic_correlations(A.gold_sequences)
    P, _, N = corr.shape
    census: Counter = Counter()
    # pair (seq a, shift i) with (seq b, shift j) correlates at lag j - i;
    # each lag occurs N times per ordered sequence pair
    for a in range(P):
        for b in range(P):
            vals, counts = np.unique(corr[a, b], return_counts=True)
            for v, c in zip(vals.tolist(), counts.tolist()):
                census[v] += c * N
    census[N] -= P * N  # self pairs (a == b, lag 0)
    if census[N] == 0:
        del census[N]
    return Counter({k: v // 2 for k, v in census.items()})


def correlation_census(A: DictionaryMatrix, decimals: int = 10) -> dict:
    """Distinct off-diagonal inner products ``<a_p, a_q>`` (p < q) with counts.

    Keys are strings of the rounded value; Gold dictionaries report exact
    ``k/N`` fractions for the Gold-derived columns.
    """
    if A.kind == "gold" and A.gold_sequences is not None:
        N = A.N
        out = {f"{k}/{N}": int(v) for k, v in sorted(gold_correlation_values(A).items())}
        if A.identity_columns:
            gold_cols = A.L - A.identity_columns
            key_p, key_m = f"+1/sqrt({N})", f"-1/sqrt({N})"
            e = A.columns[:, gold_cols:]
            vals = np.rint(A.columns[:, :gold_cols].T @ e * np.sqrt(N)).astype(int)
            out[key_p] = int(np.count_nonzero(vals > 0))
            out[key_m] = int(np.count_nonzero(vals < 0))
        return out
    census: Counter = Counter()
    for j0, j1, blk in _iter_gram_blocks(A):
        rows = np.arange(j0, j1)
        keep = rows[:, None] < np.arange(A.L)[None, :]
        vals = blk[keep]
        if np.iscomplexobj(vals):
            re = np.round(vals.real, decimals) + 0.0
            im = np.round(vals.imag, decimals) + 0.0
            uniq, counts = np.unique(np.stack([re, im], axis=1), axis=0, return_counts=True)
            for (r, i), c in zip(uniq.tolist(), counts.tolist()):
                census[f"{r:+.{decimals}f}{i:+.{decimals}f}j"] += c
        else:
            uniq, counts = np.unique(np.round(vals, decimals) + 0.0, return_counts=True)
            for v, c in zip(uniq.tolist(), counts.tolist()):
                census[f"{v:+.{decimals}f}"] += c
    return dict(sorted(census.items()))


def entry_alphabet(A: DictionaryMatrix, decimals: int = 12) -> list[str]:
    """Distinct entries of the dictionary scaled by ``sqrt(N)``."""
    vals = np.unique(np.round(A.columns.ravel() * np.sqrt(A.N), decimals) + 0.0)
    return [str(complex(v)) if np.iscomplexobj(vals) else str(float(v)) for v in vals]


def dictionary_shape(kind: str, n: int, columns: int | None = None,
                     identity_columns: int = 0) -> tuple[int, int]:
    """``(N, L)`` of :func:`build_dictionary` without constructing it."""
    if kind == "gold":
        if n not in GOLD_SUPPORTED:
            raise ConfigError(
                f"Gold dictionary not available for n={n}; supported n: {list(GOLD_SUPPORTED)}"
            )
        N, L = 2**n - 1, 4**n
    elif kind == "mub":
        if not 2 <= n <= MUB_MAX_N:
            raise ConfigError(f"MUB dictionary needs 2 <= n <= {MUB_MAX_N}, got n={n}")
        N, L = 2**n, 4**n
    else:
        raise ConfigError(f"unknown dictionary kind {kind!r}; expected 'gold' or 'mub'")
    if columns is not None:
        if not 1 <= columns <= L:
            raise ConfigError(f"columns must lie in [1, {L}], got {columns}")
        L = columns
    if identity_columns < 0 or identity_columns > N:
        raise ConfigError(f"identity_columns must lie in [0, {N}]")
    return N, L + identity_columns


def build_dictionary(kind: str, n: int, columns: int | None = None,
                     identity_columns: int = 0) -> DictionaryMatrix:
    """Build a dictionary by name, optionally truncated and/or extended."""
    if kind == "gold":
        A = build_gold_dictionary(n)
    elif kind == "mub":
        A = build_mub_dictionary(n)
    else:
        raise ConfigError(f"unknown dictionary kind {kind!r}; expected 'gold' or 'mub'")
    if columns is not None:
        A = A.head(columns)
    return A.with_identity_columns(identity_columns)
