"""Bit-to-sparse-signal maps for sub-block structured (SSE) and sub-block free
(SFE) encoding.

Bit layout
----------
SSE: for sub-block k = 0..K-1 in column order, ``log2 L_k`` column-index bits
(big-endian) followed by ``log2 M_k`` Gray-coded symbol bits.

SFE: ``floor(log2 C(L, K))`` bits giving the lexicographic rank of the support
(big-endian), then ``log2 M`` Gray-coded symbol bits per active column in
increasing column order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from .errors import ConfigError


def is_power_of_2(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


def log2_exact(x: int) -> int:
    if not is_power_of_2(x):
        raise ConfigError(f"{x} is not a power of 2")
    return x.bit_length() - 1


# ---------------------------------------------------------------- bit helpers

def as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise ValueError("bit array must contain only 0 and 1")
    return arr


def bits_to_int(bits) -> int:
    out = 0
    for b in as_bits(bits).tolist():
        out = (out << 1) | b
    return out


def int_to_bits(value: int, width: int) -> np.ndarray:
    if value < 0 or value >> width:
        raise ValueError(f"{value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - k)) & 1 for k in range(width)], dtype=np.uint8)


def hex_to_bits(text: str, width: int) -> np.ndarray:
    """Parse a hex string holding the integer value of a ``width``-bit message."""
    text = text.strip().lower()
    if text.startswith("0x"):
        text = text[2:]
    try:
        value = int(text, 16) if text else 0
    except ValueError:
        raise ValueError(f"not a hex string: {text!r}") from None
    return int_to_bits(value, width)


def bits_to_hex(bits) -> str:
    bits = as_bits(bits)
    digits = max(1, (bits.size + 3) // 4)
    return f"{bits_to_int(bits):0{digits}x}"


def gray(m: int) -> int:
    return m ^ (m >> 1)


def inverse_gray(g: int) -> int:
    m = 0
    while g:
        m ^= g
        g >>= 1
    return m


# ------------------------------------------------------------- partitioning

@dataclass(frozen=True)
class SubBlockPartition:
    """Power-of-two sub-block sizes laid out smallest-first from column 0."""

    sizes: tuple[int, ...]
    L: int

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if not sizes:
            raise ConfigError("partition needs at least one sub-block")
        if any(not is_power_of_2(s) for s in sizes):
            raise ConfigError(f"sub-block sizes must be powers of 2: {sizes}")
        if sum(sizes) > self.L:
            raise ConfigError(f"sub-blocks {sizes} exceed L={self.L}")
        if list(sizes) != sorted(sizes):
            raise ConfigError(f"sub-block sizes must be non-decreasing: {sizes}")

    @property
    def K(self) -> int:
        return len(self.sizes)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(v) for v in np.cumsum((0,) + self.sizes[:-1]))

    @property
    def unused(self) -> int:
        return self.L - sum(self.sizes)

    @cached_property
    def index_bits(self) -> tuple[int, ...]:
        return tuple(log2_exact(s) for s in self.sizes)

    def block_of(self, column: int) -> int:
        """Sub-block holding ``column``, or -1 for a discarded trailing column."""
        if not 0 <= column < self.L:
            raise IndexError(column)
        for k, (o, s) in enumerate(zip(self.offsets, self.sizes)):
            if o <= column < o + s:
                return k
        return -1

    def column_blocks(self) -> np.ndarray:
        out = np.full(self.L, -1, dtype=np.int64)
        for k, (o, s) in enumerate(zip(self.offsets, self.sizes)):
            out[o:o + s] = k
        return out

    def to_dict(self) -> dict:
        return {"sizes": list(self.sizes), "offsets": list(self.offsets), "unused": self.unused}


def partition_subblocks(L: int, K: int) -> SubBlockPartition:
    """Split ``L`` columns into ``K`` power-of-two sub-blocks maximising the
    total number of index bits: ``L_k`` is the largest power of two not above
    ``(L - sum of previous sizes) / (K - k + 1)``."""
    if not 1 <= K <= L:
        raise ConfigError(f"need 1 <= K <= L, got K={K}, L={L}")
    sizes = []
    left = L
    for k in range(K):
        share = left // (K - k)  # floor(log2(a/b)) == floor(log2(a // b))
        size = 1 << (share.bit_length() - 1)
        sizes.append(size)
        left -= size
    return SubBlockPartition(tuple(sizes), L)


# ------------------------------------------------------------- constellations

@dataclass(frozen=True, eq=False)
class Constellation:
    """PSK alphabet; symbol ``m`` carries the Gray label ``m ^ (m >> 1)``.

    ``gain`` is a known channel coefficient already applied to ``symbols``
    (see :meth:`scaled`); plain alphabets have gain 1 and unit modulus.
    """

    symbols: np.ndarray
    name: str = "psk"
    gain: complex = 1.0

    def __post_init__(self):
        sym = np.asarray(self.symbols, dtype=np.complex128).ravel().copy()
        if not is_power_of_2(sym.size):
            raise ConfigError(f"constellation size must be a power of 2, got {sym.size}")
        if self.gain == 0:
            raise ConfigError("constellation gain must be non-zero")
        if np.max(np.abs(np.abs(sym) - abs(self.gain))) > 1e-12 * max(1.0, abs(self.gain)):
            raise ConfigError("only unit-modulus (PSK) constellations are supported")
        sym.setflags(write=False)
        object.__setattr__(self, "symbols", sym)

    @property
    def M(self) -> int:
        return self.symbols.size

    @cached_property
    def bits_per_symbol(self) -> int:
        return log2_exact(self.M)

    @cached_property
    def is_real(self) -> bool:
        return bool(np.all(np.abs(self.symbols.imag) < 1e-15))

    @cached_property
    def gamma(self) -> float:
        """``max_{i != m} Re{b_i^* b_m}``; -1 by convention for a single symbol."""
        if self.M == 1:
            return -1.0
        u = self.symbols / abs(self.gain)
        g = (u.conj()[:, None] * u[None, :]).real
        np.fill_diagonal(g, -np.inf)
        return float(g.max())

    @property
    def d_min(self) -> float:
        if self.M == 1:
            return math.inf
        d = np.abs(self.symbols[:, None] - self.symbols[None, :])
        np.fill_diagonal(d, np.inf)
        return float(d.min())

    def symbol_for_label(self, label: int) -> int:
        if not 0 <= label < self.M:
            raise ValueError(f"label {label} outside [0, {self.M})")
        return inverse_gray(label)

    def label_of(self, index: int) -> int:
        return gray(index)

    def scaled(self, h: complex) -> "Constellation":
        """The alphabet seen through a channel gain ``h`` (same labels)."""
        h = complex(h)
        return Constellation(self.symbols * h, f"{self.name}*{h:g}", self.gain * h)

    def nearest(self, z: complex) -> int:
        """Index of the closest symbol (lowest index on ties)."""
        return int(np.argmin(np.abs(self.symbols - z)))


def make_psk(M: int, phase: float = 0.0, name: str | None = None) -> Constellation:
    """``M``-PSK ``b_m = exp(j(2 pi m / M + phase))``; M=1 is the fixed symbol."""
    if M == 2 and phase == 0.0:
        sym = np.array([1.0, -1.0], dtype=np.complex128)
    elif M == 4 and phase == 0.0:
        sym = np.array([1.0, 1j, -1.0, -1j])
    else:
        sym = np.exp(1j * (2 * np.pi * np.arange(M) / M + phase))
    return Constellation(sym, name or {1: "unit", 2: "bpsk", 4: "qpsk"}.get(M, f"{M}psk"))


def make_offset_qpsk(K: int) -> tuple[Constellation, ...]:
    """QPSK for sub-block k (1-based) rotated counter-clockwise by (k-1) pi / (2K)."""
    if K < 1:
        raise ConfigError("K must be positive")
    return tuple(
        make_psk(4, phase=(k - 1) * np.pi / (2 * K), name=f"qpsk+{k - 1}pi/{2 * K}")
        for k in range(1, K + 1)
    )


ConstellationArg = Union[Constellation, Sequence[Constellation]]


def per_block(constellation: ConstellationArg, K: int) -> tuple[Constellation, ...]:
    if isinstance(constellation, Constellation):
        return (constellation,) * K
    cons = tuple(constellation)
    if len(cons) != K:
        raise ConfigError(f"expected {K} per-block constellations, got {len(cons)}")
    return cons


# ------------------------------------------------------------- bit budgets

def sse_bit_budget(partition: SubBlockPartition, M: int | Sequence[int]) -> int:
    Ms = [M] * partition.K if isinstance(M, (int, np.integer)) else list(M)
    if len(Ms) != partition.K:
        raise ConfigError("one constellation size per sub-block required")
    return sum(log2_exact(int(m)) for m in Ms) + sum(partition.index_bits)


def sfe_index_bits(L: int, K: int) -> int:
    total = math.comb(L, K)
    if total < 1:
        raise ConfigError(f"C({L},{K}) is zero")
    return total.bit_length() - 1


def sfe_bit_budget(L: int, K: int, M: int) -> int:
    return K * log2_exact(M) + sfe_index_bits(L, K)


# ------------------------------------------------------------- codewords

@dataclass(frozen=True, eq=False)
class SparseCodeword:
    """K-sparse signal ``x`` (support + symbols) and optionally ``s = A x``.

    ``support`` is sorted increasingly; ``symbol_indices[k]`` indexes the
    constellation used at ``support[k]``.
    """

    support: tuple[int, ...]
    symbol_indices: tuple[int, ...]
    symbols: np.ndarray
    s: np.ndarray | None = field(default=None, repr=False)

    @property
    def K(self) -> int:
        return len(self.support)

    def x(self, L: int) -> np.ndarray:
        out = np.zeros(L, dtype=np.complex128)
        out[list(self.support)] = self.symbols
        return out

    def same_message(self, other: "SparseCodeword") -> bool:
        return self.support == other.support and self.symbol_indices == other.symbol_indices


def synthesize(A, support: Sequence[int], symbols: Sequence[complex]) -> np.ndarray:
    """``sum_k beta_k a_{alpha_k}`` accumulated in increasing column order.

    The fixed order makes superpositions of several users' sparse signals
    bit-identical to encoding their union as one codeword.
    """
    cols = A.columns if hasattr(A, "columns") else np.asarray(A)
    order = np.argsort(np.asarray(support), kind="stable")
    sym = np.asarray(symbols)
    real = not np.iscomplexobj(cols) and np.all(np.imag(sym) == 0)
    s = np.zeros(cols.shape[0], dtype=np.float64 if real else np.complex128)
    for j in order:
        b = sym[j].real if real else sym[j]
        s = s + b * cols[:, support[j]]
    return s


def make_codeword(A, support, symbol_indices, constellations) -> SparseCodeword:
    """Sort the support and attach symbol values and the codeword."""
    order = np.argsort(support, kind="stable")
    support = tuple(int(support[j]) for j in order)
    symbol_indices = tuple(int(symbol_indices[j]) for j in order)
    cons = [constellations[j] for j in order]
    symbols = np.array([c.symbols[m] for c, m in zip(cons, symbol_indices)], dtype=np.complex128)
    s = synthesize(A, support, symbols) if A is not None else None
    return SparseCodeword(support, symbol_indices, symbols, s)


def sse_encode(bits, A, partition: SubBlockPartition, constellation: ConstellationArg) -> SparseCodeword:
    """Select one column and one symbol per sub-block from the message bits."""
    cons = per_block(constellation, partition.K)
    bits = as_bits(bits)
    need = sse_bit_budget(partition, [c.M for c in cons])
    if bits.size != need:
        raise ValueError(f"SSE message needs {need} bits, got {bits.size}")
    support, syms = [], []
    pos = 0
    for k in range(partition.K):
        w = partition.index_bits[k]
        support.append(partition.offsets[k] + bits_to_int(bits[pos:pos + w]))
        pos += w
        w = cons[k].bits_per_symbol
        syms.append(cons[k].symbol_for_label(bits_to_int(bits[pos:pos + w])))
        pos += w
    return make_codeword(A, support, syms, cons)


def _sse_block_assignment(support, partition: SubBlockPartition) -> list[int]:
    blocks = [partition.block_of(int(i)) for i in support]
    if -1 in blocks:
        raise ValueError("support uses a discarded column")
    if sorted(blocks) != list(range(partition.K)):
        raise ValueError("SSE support must have exactly one column per sub-block")
    return blocks


def sse_decode_bits(codeword: SparseCodeword, partition: SubBlockPartition,
                    constellation: ConstellationArg) -> np.ndarray:
    """Inverse of :func:`sse_encode`."""
    cons = per_block(constellation, partition.K)
    blocks = _sse_block_assignment(codeword.support, partition)
    fields: list[np.ndarray] = [None] * partition.K  # type: ignore[list-item]
    for col, m, k in zip(codeword.support, codeword.symbol_indices, blocks):
        idx = int_to_bits(col - partition.offsets[k], partition.index_bits[k])
        lab = int_to_bits(cons[k].label_of(m), cons[k].bits_per_symbol)
        fields[k] = np.concatenate([idx, lab])
    return np.concatenate(fields).astype(np.uint8)


# ------------------------------------------------------------- SFE ranking

def _first_element_estimate(d: int, L: int, K: int, total: int) -> int:
    if K == 1:
        return d
    frac = d / total  # exact-rounded big-int division
    shrink = -math.expm1(math.log1p(-frac) / K) if frac < 1 else 1.0
    est = math.floor((L - (K - 1) / 2) * shrink)
    return min(max(est, 0), L - K)


def sfe_unrank(d: int, L: int, K: int, steps: list | None = None) -> tuple[int, ...]:
    """The ``d``-th K-subset of ``range(L)`` in lexicographic order.

    Each element is located by a closed-form upper estimate on its offset,
    then corrected against the exact window
    ``C(L,K) - C(L-i,K) <= d < C(L,K) - C(L-i-1,K)``. If ``steps`` is given,
    the correction applied at every position (estimate minus final value) is
    appended to it.
    """
    d = int(d)
    if not 1 <= K <= L:
        raise ValueError(f"need 1 <= K <= L, got K={K}, L={L}")
    total = math.comb(L, K)
    if not 0 <= d < total:
        raise ValueError(f"index {d} outside [0, C({L},{K})={total})")
    out = []
    base = 0
    while K > 0:
        total = math.comb(L, K)
        i = est = _first_element_estimate(d, L, K, total)
        while total - math.comb(L - i, K) > d:
            i -= 1
        while d >= total - math.comb(L - i - 1, K):
            i += 1
        if steps is not None:
            steps.append(est - i)
        d -= total - math.comb(L - i, K)
        out.append(base + i)
        base += i + 1
        L -= i + 1
        K -= 1
    return tuple(out)


def sfe_rank(combination: Sequence[int], L: int, K: int) -> int:
    """Lexicographic index of a strictly increasing K-subset of ``range(L)``."""
    b = [int(v) for v in combination]
    if len(b) != K or K < 1:
        raise ValueError(f"expected {K} elements, got {len(b)}")
    if any(v < 0 or v >= L for v in b) or any(x >= y for x, y in zip(b, b[1:])):
        raise ValueError(f"not a strictly increasing combination of range({L}): {b}")
    d = math.comb(L, K)
    for k in range(K - 1):
        d -= math.comb(L - b[k] - 1, K - k)
    return d - (L - b[-1])


def sfe_encode(bits, A, L: int, K: int, constellation: Constellation) -> SparseCodeword:
    """Map ``floor(log2 C(L,K)) + K log2 M`` bits to a K-subset and K symbols."""
    bits = as_bits(bits)
    ib = sfe_index_bits(L, K)
    need = ib + K * constellation.bits_per_symbol
    if bits.size != need:
        raise ValueError(f"SFE message needs {need} bits, got {bits.size}")
    support = sfe_unrank(bits_to_int(bits[:ib]), L, K)
    w = constellation.bits_per_symbol
    syms = [constellation.symbol_for_label(bits_to_int(bits[ib + k * w: ib + (k + 1) * w]))
            for k in range(K)]
    return make_codeword(A, support, syms, [constellation] * K)


def sfe_decode_bits(codeword: SparseCodeword, L: int, K: int,
                    constellation: Constellation) -> np.ndarray:
    """Inverse of :func:`sfe_encode`; raises ValueError if the support's rank
    is not a valid message index."""
    ib = sfe_index_bits(L, K)
    d = sfe_rank(codeword.support, L, K)
    if d >> ib:
        raise ValueError(f"support rank {d} is outside the {ib}-bit message range")
    parts = [int_to_bits(d, ib)]
    for m in codeword.symbol_indices:
        parts.append(int_to_bits(constellation.label_of(m), constellation.bits_per_symbol))
    return np.concatenate(parts).astype(np.uint8)
