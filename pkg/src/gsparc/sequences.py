"""Binary field arithmetic, LFSR m-sequences and Gold sequence sets."""
from __future__ import annotations

from functools import lru_cache
from math import gcd

import numpy as np

from .errors import ConfigError

# Primitive polynomials over GF(2), bit j is the coefficient of x^j.
PRIMITIVE_POLYS = {
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0b100011101,
    9: 0b1000010001,
    10: 0b10000001001,
}


def primitive_poly(n: int) -> int:
    try:
        return PRIMITIVE_POLYS[n]
    except KeyError:
        raise ConfigError(
            f"no primitive polynomial tabulated for n={n}; "
            f"supported: {sorted(PRIMITIVE_POLYS)}"
        ) from None


def gf_mul(a: int, b: int, n: int, poly: int | None = None) -> int:
    """Multiply two elements of GF(2^n) in polynomial basis."""
    if poly is None:
        poly = primitive_poly(n)
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> n:
            a ^= poly
    return out


@lru_cache(maxsize=None)
def gf_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Full multiplication table and absolute trace of GF(2^n).

    Returns ``(mul, trace)`` with ``mul[a, b] = a*b`` and ``trace[z]`` in {0, 1}.
    """
    size = 1 << n
    poly = primitive_poly(n)
    mul = np.zeros((size, size), dtype=np.int64)
    for a in range(size):
        for b in range(a, size):
            mul[a, b] = mul[b, a] = gf_mul(a, b, n, poly)
    trace = np.zeros(size, dtype=np.int64)
    for z in range(size):
        acc, p = 0, z
        for _ in range(n):
            acc ^= p
            p = mul[p, p]
        # the trace lands in the prime subfield {0, 1}
        assert acc in (0, 1)
        trace[z] = acc
    mul.setflags(write=False)
    trace.setflags(write=False)
    return mul, trace


def m_sequence(n: int, poly: int | None = None, seed: int = 1) -> np.ndarray:
    """One period (length 2^n - 1) of the LFSR sequence for ``poly`` as 0/1 bytes.

    The output obeys ``u[k+n] = sum_j c_j u[k+j]`` where ``poly = x^n + sum_j c_j x^j``.
    Raises ConfigError if the polynomial is not primitive (period too short).
    """
    if poly is None:
        poly = primitive_poly(n)
    period = (1 << n) - 1
    taps = [j for j in range(n) if (poly >> j) & 1]
    state = [(seed >> j) & 1 for j in range(n)]
    if not any(state):
        raise ConfigError("LFSR seed must be non-zero")
    out = np.empty(period, dtype=np.uint8)
    for k in range(period):
        out[k] = state[0]
        fb = 0
        for j in taps:
            fb ^= state[j]
        state = state[1:] + [fb]
    if any(state[j] != ((seed >> j) & 1) for j in range(n)):
        raise ConfigError(f"polynomial {poly:#b} is not primitive")
    for p in range(1, period):
        if period % p == 0 and np.array_equal(out, np.roll(out, p)):
            raise ConfigError(f"polynomial {poly:#b} is not primitive")
    return out


def decimate(seq: np.ndarray, q: int) -> np.ndarray:
    period = seq.shape[0]
    return seq[(q * np.arange(period)) % period]


def gold_t(n: int) -> int:
    """Peak off-phase correlation magnitude t(n) of a Gold family."""
    return 1 + 2 ** ((n + 1) // 2) if n % 2 else 1 + 2 ** ((n + 2) // 2)


def preferred_pair(n: int) -> tuple[np.ndarray, np.ndarray]:
    """m-sequence and its preferred companion via decimation by 2^((n+1)/2)+1."""
    if n % 2 == 0:
        raise ConfigError(f"Gold construction needs odd n, got n={n}")
    u = m_sequence(n)
    q = 2 ** ((n + 1) // 2) + 1
    assert gcd(q, (1 << n) - 1) == 1
    return u, decimate(u, q)


def gold_family(n: int) -> np.ndarray:
    """The 2^n + 1 Gold sequences of length 2^n - 1 as a 0/1 array.

    Row order: u, v, then u xor (v shifted left by tau) for tau = 0..N-1.
    """
    u, v = preferred_pair(n)
    period = u.shape[0]
    rows = [u, v] + [u ^ np.roll(v, -tau) for tau in range(period)]
    return np.array(rows, dtype=np.uint8)


def periodic_correlations(seqs: np.ndarray) -> np.ndarray:
    """Integer periodic correlations of +/-1 sequences.

    ``out[a, b, tau] = sum_k x_a[k] x_b[k + tau]`` for rows of ``seqs`` (0/1 input).
    """
    x = 1.0 - 2.0 * seqs.astype(np.float64)
    period = x.shape[1]
    out = np.empty((x.shape[0], x.shape[0], period), dtype=np.int32)
    for tau in range(period):
        out[:, :, tau] = np.rint(x @ np.roll(x, -tau, axis=1).T)
    return out
