"""AWGN channel, Monte-Carlo BLER estimation and multi-user experiments.

Reproducibility: trial ``t`` of a run with seed ``seed`` draws everything from
``numpy.random.default_rng([seed, t])`` in a fixed order (message bits, then
unit-variance noise for each receiver). The same unit noise is scaled to every
Eb/N0 point, so points of a sweep and different decoders see common random
numbers. Results depend only on (seed, configuration), never on scheduling.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .code import CodeInstance
from .decoding import DecoderSpec, decode
from .dictionary import DictionaryMatrix
from .encoding import SparseCodeword, SubBlockPartition, make_codeword, synthesize
from .errors import ConfigError

DEFAULT_MAX_ERRORS = 200
_CHUNK = 64


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("GSPARC_THREADS", "1")))
    except ValueError:
        raise ConfigError("GSPARC_THREADS must be an integer") from None


# ------------------------------------------------------------------ channel

@dataclass(frozen=True)
class ChannelConfig:
    """Eb/N0 calibration with codeword energy ``E_s = K``."""

    ebn0_db: float
    N_b: int
    K: int
    field: str = "complex"

    @property
    def Eb(self) -> float:
        return self.K / self.N_b

    @property
    def N0(self) -> float:
        return self.Eb * 10.0 ** (-self.ebn0_db / 10.0)

    @property
    def noise_variance_per_real_dim(self) -> float:
        return self.N0 / 2.0

    @property
    def sigma(self) -> float:
        return math.sqrt(self.noise_variance_per_real_dim)


def unit_noise(N: int, field: str, rng: np.random.Generator) -> np.ndarray:
    """Standard normal noise, one unit-variance draw per real dimension."""
    if field == "real":
        return rng.standard_normal(N)
    z = rng.standard_normal((2, N))
    return z[0] + 1j * z[1]


def awgn(s: np.ndarray, cfg: ChannelConfig, rng: np.random.Generator) -> np.ndarray:
    """``y = s + v`` with ``v`` i.i.d. Gaussian of variance ``N0/2`` per real dimension."""
    if np.isinf(cfg.ebn0_db) and cfg.ebn0_db > 0:
        return np.array(s, copy=True)
    return s + cfg.sigma * unit_noise(s.shape[0], cfg.field, rng)


# ------------------------------------------------------------------ records

CSV_VERSION = "gsparc-sim-records/1"
CSV_COLUMNS = ("scheme", "dict", "N", "L", "K", "M", "decoder", "T", "ebn0_db", "trials",
               "errors", "bler", "seed", "mode", "digest", "max_trials", "max_errors",
               "per_user_errors")


@dataclass
class SimRecord:
    config_digest: str
    ebn0_db: float
    trials: int
    block_errors: int
    seed: int
    scheme: str = ""
    dict: str = ""
    N: int = 0
    L: int = 0
    K: int = 0
    M: int = 0
    decoder: str = ""
    T: int = 1
    mode: str = "single"
    max_trials: int = 0
    max_errors: int | None = None
    per_user_errors: tuple[int, ...] | None = None
    wall_time_s: float = 0.0

    def __post_init__(self):
        if not 0 <= self.block_errors <= self.trials:
            raise ValueError("block_errors must lie in [0, trials]")

    @property
    def bler(self) -> float:
        return self.block_errors / self.trials if self.trials else float("nan")

    def interval(self, level: float = 0.95) -> tuple[float, float]:
        return clopper_pearson(self.block_errors, self.trials, level)

    def csv_row(self) -> list[str]:
        per_user = "" if self.per_user_errors is None else ";".join(map(str, self.per_user_errors))
        return [self.scheme, self.dict, str(self.N), str(self.L), str(self.K), str(self.M),
                self.decoder, str(self.T), repr(float(self.ebn0_db)), str(self.trials),
                str(self.block_errors), repr(self.bler), str(self.seed), self.mode,
                self.config_digest, str(self.max_trials),
                "" if self.max_errors is None else str(self.max_errors), per_user]

    @classmethod
    def from_csv_row(cls, row: Sequence[str]) -> "SimRecord":
        d = dict(zip(CSV_COLUMNS, row))
        return cls(
            config_digest=d["digest"], ebn0_db=float(d["ebn0_db"]), trials=int(d["trials"]),
            block_errors=int(d["errors"]), seed=int(d["seed"]), scheme=d["scheme"],
            dict=d["dict"], N=int(d["N"]), L=int(d["L"]), K=int(d["K"]), M=int(d["M"]),
            decoder=d["decoder"], T=int(d["T"]), mode=d["mode"],
            max_trials=int(d["max_trials"]),
            max_errors=int(d["max_errors"]) if d["max_errors"] else None,
            per_user_errors=tuple(int(v) for v in d["per_user_errors"].split(";"))
            if d["per_user_errors"] else None,
        )

    def to_json(self) -> dict:
        out = asdict(self)
        out["bler"] = self.bler
        if self.per_user_errors is not None:
            out["per_user_errors"] = list(self.per_user_errors)
        return out


def clopper_pearson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Exact two-sided binomial confidence interval for ``k`` errors in ``n`` trials."""
    alpha = 1.0 - level
    lo = 0.0 if k == 0 else float(stats.beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


def bler_greater(k1: int, n1: int, k2: int, n2: int, level: float = 0.95) -> bool:
    """One-sided test that the first error rate exceeds the second.

    Conditioning on the total error count turns the comparison into an exact
    binomial test (the conditional form of Fisher's test)."""
    total = k1 + k2
    if total == 0:
        return False
    p = n1 / (n1 + n2)
    pvalue = float(stats.binom.sf(k1 - 1, total, p))
    return pvalue < 1.0 - level


def code_digest(payload: dict) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# ------------------------------------------------------------------ multi-user

@dataclass(frozen=True)
class MultiUserConfig:
    """Assignment of the K sub-blocks to P users.

    ``assignment[i]`` is the ordered list of sub-block indices owned by user
    ``i``; ``M`` optionally gives each user's alphabet size. ``gains[i][j]`` is
    the gain from transmitter ``j`` to receiver ``i`` (interference mode;
    ``gains[i][i]`` must be 1). ``noise_offsets_db[i]`` shifts receiver ``i``'s
    Eb/N0 (broadcast/interference). ``shared_noise`` reuses one noise
    realisation for every receiver.
    """

    assignment: tuple[tuple[int, ...], ...]
    mode: str = "mac"
    M: tuple[int, ...] | None = None
    gains: tuple[tuple[complex, ...], ...] | None = None
    noise_offsets_db: tuple[float, ...] | None = None
    shared_noise: bool = False

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(tuple(int(k) for k in a) for a in self.assignment))
        if self.mode not in ("mac", "broadcast", "interference"):
            raise ConfigError(f"unknown multi-user mode {self.mode!r}")
        if any(len(a) == 0 for a in self.assignment):
            raise ConfigError("every user needs at least one sub-block")
        if self.M is not None:
            object.__setattr__(self, "M", tuple(int(m) for m in self.M))
            if len(self.M) != self.P:
                raise ConfigError("one alphabet size per user required")
        if self.gains is not None:
            g = tuple(tuple(complex(v) for v in row) for row in self.gains)
            object.__setattr__(self, "gains", g)
            if len(g) != self.P or any(len(row) != self.P for row in g):
                raise ConfigError(f"gain matrix must be {self.P} x {self.P}")
            if any(g[i][i] != 1 for i in range(self.P)):
                raise ConfigError("direct gains h[i][i] must equal 1")
        if self.noise_offsets_db is not None:
            object.__setattr__(self, "noise_offsets_db", tuple(float(v) for v in self.noise_offsets_db))
            if len(self.noise_offsets_db) != self.P:
                raise ConfigError("one noise offset per receiver required")

    @property
    def P(self) -> int:
        return len(self.assignment)

    @classmethod
    def even(cls, K: int, P: int, **kw) -> "MultiUserConfig":
        """Contiguous split of sub-blocks 0..K-1 into P nearly equal groups."""
        if not 1 <= P <= K:
            raise ConfigError(f"need 1 <= P <= K, got P={P}, K={K}")
        bounds = [round(i * K / P) for i in range(P + 1)]
        return cls(tuple(tuple(range(bounds[i], bounds[i + 1])) for i in range(P)), **kw)

    def validate(self, K: int) -> None:
        flat = [k for a in self.assignment for k in a]
        if sorted(flat) != list(range(K)):
            raise ConfigError(f"assignment {self.assignment} must partition sub-blocks 0..{K - 1}")

    def user_of_block(self, K: int) -> list[int]:
        out = [0] * K
        for i, a in enumerate(self.assignment):
            for k in a:
                out[k] = i
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.gains is not None:
            d["gains"] = [[[v.real, v.imag] for v in row] for row in self.gains]
        return d


class MultiUserCode:
    """SSE code whose sub-blocks are shared among users."""

    def __init__(self, code: CodeInstance, mu: MultiUserConfig):
        if code.spec.scheme != "sse":
            raise ConfigError("multi-user operation requires the SSE scheme")
        mu.validate(code.K)
        if mu.M is not None:
            blocks = [0] * code.K
            for i, a in enumerate(mu.assignment):
                for k in a:
                    blocks[k] = mu.M[i]
            code = CodeInstance(replace(code.spec, block_M=tuple(blocks)))
        self.code = code
        self.mu = mu
        part = code.partition
        cons = code.block_constellations
        # bit field of sub-block k inside the single-user message
        widths = [part.index_bits[k] + cons[k].bits_per_symbol for k in range(code.K)]
        starts = np.concatenate([[0], np.cumsum(widths)]).astype(int)
        self._fields = [(int(starts[k]), int(starts[k + 1])) for k in range(code.K)]
        self.block_user = mu.user_of_block(code.K)

    @property
    def user_bits(self) -> list[int]:
        """Per-user budgets ``K_i log M_i + sum_k log L_{i,k}``."""
        return [sum(self._fields[k][1] - self._fields[k][0] for k in a) for a in self.mu.assignment]

    def split_bits(self, bits: np.ndarray) -> list[np.ndarray]:
        return [np.concatenate([bits[slice(*self._fields[k])] for k in a]).astype(np.uint8)
                for a in self.mu.assignment]

    def join_bits(self, user_bits: Sequence[np.ndarray]) -> np.ndarray:
        out = np.empty(self.code.n_bits, dtype=np.uint8)
        for a, ub in zip(self.mu.assignment, user_bits):
            pos = 0
            for k in a:
                lo, hi = self._fields[k]
                out[lo:hi] = ub[pos:pos + hi - lo]
                pos += hi - lo
        return out

    def encode_user(self, i: int, bits: np.ndarray) -> SparseCodeword:
        """User ``i`` picks one column and symbol in each of its own sub-blocks."""
        part = self.code.partition
        cons = self.code.block_constellations
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.size != self.user_bits[i]:
            raise ValueError(f"user {i} sends {self.user_bits[i]} bits, got {bits.size}")
        support, syms, ucons = [], [], []
        pos = 0
        for k in self.mu.assignment[i]:
            w = part.index_bits[k]
            support.append(part.offsets[k] + int("".join(map(str, bits[pos:pos + w])) or "0", 2))
            pos += w
            w = cons[k].bits_per_symbol
            syms.append(cons[k].symbol_for_label(int("".join(map(str, bits[pos:pos + w])) or "0", 2)))
            pos += w
            ucons.append(cons[k])
        return make_codeword(self.code.A, support, syms, ucons)

    def superpose(self, codewords: Sequence[SparseCodeword],
                  gains: Sequence[complex] | None = None) -> np.ndarray:
        """``sum_i g_i s_i`` evaluated as one sum over the union of active
        columns in column order (so it matches the single-user codeword)."""
        support, symbols = [], []
        for i, cw in enumerate(codewords):
            g = 1 if gains is None else gains[i]
            support.extend(cw.support)
            symbols.extend(g * cw.symbols if g != 1 else cw.symbols)
        return synthesize(self.code.A, support, np.array(symbols))


# ------------------------------------------------------------------ harness

TrialFn = Callable[[int, Sequence[int]], list]


def _run_trials(trial_fn: TrialFn, n_points: int, max_trials: int,
                max_errors: int | None, threads: int) -> list[list]:
    """Evaluate trials in order until each point hits its budget.

    ``trial_fn(t, points)`` returns, for each requested point, a tuple
    ``(block_error, per_user_errors_or_None)``. Each point keeps the outcomes
    of trials ``0..n_p-1`` where ``n_p`` stops at ``max_trials`` or at the
    trial producing the ``max_errors``-th error.
    """
    outcomes: list[list] = [[] for _ in range(n_points)]
    errors = [0] * n_points
    active = list(range(n_points))
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        t = 0
        while active and t < max_trials:
            chunk = range(t, min(max_trials, t + _CHUNK * threads))
            pts = tuple(active)
            if pool is None:
                results = [trial_fn(i, pts) for i in chunk]
            else:
                results = list(pool.map(lambda i: trial_fn(i, pts), chunk))
            for res in results:
                for p, out in zip(pts, res):
                    if p not in active:
                        continue
                    outcomes[p].append(out)
                    errors[p] += bool(out[0])
                    if max_errors is not None and errors[p] >= max_errors:
                        active.remove(p)
            t = chunk.stop
    finally:
        if pool is not None:
            pool.shutdown()
    return outcomes


def _records(code: CodeInstance, decoder: DecoderSpec, ebn0_sweep, outcomes, seed,
             max_trials, max_errors, mode, digest, wall) -> list[SimRecord]:
    recs = []
    for ebn0, outs in zip(ebn0_sweep, outcomes):
        per_user = None
        if outs and outs[0][1] is not None:
            per_user = tuple(int(v) for v in np.sum([o[1] for o in outs], axis=0))
        recs.append(SimRecord(
            config_digest=digest, ebn0_db=float(ebn0), trials=len(outs),
            block_errors=sum(bool(o[0]) for o in outs), seed=seed,
            scheme=code.spec.scheme, dict=code.A.label, N=code.N, L=code.L, K=code.K,
            M=code.spec.M, decoder=decoder.algorithm, T=decoder.T, mode=mode,
            max_trials=max_trials, max_errors=max_errors, per_user_errors=per_user,
            wall_time_s=wall,
        ))
    return recs


def _decoded_bits(code: CodeInstance, y, decoder: DecoderSpec, gram) -> np.ndarray | None:
    cw = code.decode(y, decoder, gram=gram)
    try:
        return code.decode_bits(cw)
    except ValueError:
        return None  # estimate is not a valid codeword


def _digest(code: CodeInstance, decoder: DecoderSpec, seed: int, extra: dict | None = None) -> str:
    payload = {"code": code.spec.to_dict(), "decoder": asdict(decoder), "seed": seed}
    if extra:
        payload.update(extra)
    return code_digest(payload)


def run_bler(code: CodeInstance, decoder: DecoderSpec, ebn0_sweep: Sequence[float],
             max_trials: int, max_errors: int | None = DEFAULT_MAX_ERRORS, seed: int = 0,
             *, threads: int | None = None, gram: bool | None = None) -> list[SimRecord]:
    """Single-user BLER versus Eb/N0 (a block error is any message-bit error)."""
    ebn0_sweep = [float(v) for v in ebn0_sweep]
    if not ebn0_sweep:
        raise ConfigError("empty Eb/N0 sweep")
    threads = thread_count() if threads is None else threads
    sigmas = [ChannelConfig(e, code.n_bits, code.K, code.field).sigma if np.isfinite(e) else 0.0
              for e in ebn0_sweep]

    def trial(t: int, points):
        rng = np.random.default_rng([seed, t])
        bits = rng.integers(0, 2, code.n_bits, dtype=np.uint8)
        s = code.encode(bits).s
        z = unit_noise(code.N, code.field, rng)
        out = []
        for p in points:
            got = _decoded_bits(code, s + sigmas[p] * z, decoder, gram)
            out.append((got is None or not np.array_equal(got, bits), None))
        return out

    t0 = time.perf_counter()
    outcomes = _run_trials(trial, len(ebn0_sweep), max_trials, max_errors, threads)
    wall = time.perf_counter() - t0
    return _records(code, decoder, ebn0_sweep, outcomes, seed, max_trials, max_errors,
                    "single", _digest(code, decoder, seed), wall)


def mac_simulate(code: CodeInstance, mu: MultiUserConfig, decoder: DecoderSpec,
                 ebn0_sweep: Sequence[float], max_trials: int,
                 max_errors: int | None = DEFAULT_MAX_ERRORS, seed: int = 0, *,
                 threads: int | None = None, gram: bool | None = None,
                 observe: Callable | None = None) -> list[SimRecord]:
    """Multiple-access channel: users encode independently, the receiver sees
    the superposition plus noise and decodes all users jointly.

    ``block_errors`` counts trials where at least one user is wrong;
    ``per_user_errors`` counts each user's own message errors. ``observe``, if
    given, is called as ``observe(t, point, y)`` with every received vector.
    """
    if mu.mode != "mac":
        raise ConfigError("mac_simulate needs mode 'mac'")
    mcode = MultiUserCode(code, mu)
    code = mcode.code
    threads = thread_count() if threads is None else threads
    ebn0_sweep = [float(v) for v in ebn0_sweep]
    sigmas = [ChannelConfig(e, code.n_bits, code.K, code.field).sigma if np.isfinite(e) else 0.0
              for e in ebn0_sweep]

    def trial(t: int, points):
        rng = np.random.default_rng([seed, t])
        bits = rng.integers(0, 2, code.n_bits, dtype=np.uint8)
        user_bits = mcode.split_bits(bits)
        s = mcode.superpose([mcode.encode_user(i, b) for i, b in enumerate(user_bits)])
        z = unit_noise(code.N, code.field, rng)
        out = []
        for p in points:
            y = s + sigmas[p] * z
            if observe is not None:
                observe(t, p, y)
            got = _decoded_bits(code, y, decoder, gram)
            if got is None:
                per = [True] * mu.P
            else:
                per = [not np.array_equal(g, b) for g, b in zip(mcode.split_bits(got), user_bits)]
            out.append((any(per), per))
        return out

    t0 = time.perf_counter()
    outcomes = _run_trials(trial, len(ebn0_sweep), max_trials, max_errors, threads)
    wall = time.perf_counter() - t0
    return _records(code, decoder, ebn0_sweep, outcomes, seed, max_trials, max_errors, "mac",
                    _digest(code, decoder, seed, {"multiuser": mu.to_dict()}), wall)


class _Receiver:
    """Joint decoder for the transmitters receiver ``i`` hears (non-zero gain).

    With unit gains from every transmitter the receiver is the single-user
    decoder of the full code. Otherwise it decodes over the sub-dictionary of
    the audible users' sub-blocks, with each alphabet scaled by the known
    gain."""

    def __init__(self, mcode: MultiUserCode, gains_row):
        code = mcode.code
        mu = mcode.mu
        self.code = code
        self.heard = [j for j in range(mu.P) if gains_row is None or gains_row[j] != 0]
        self.full = len(self.heard) == mu.P and (gains_row is None or all(g == 1 for g in gains_row))
        if self.full:
            return
        part = code.partition
        blocks = sorted(k for j in self.heard for k in mu.assignment[j])
        self.blocks = blocks
        cols = np.concatenate([np.arange(part.offsets[k], part.offsets[k] + part.sizes[k])
                               for k in blocks])
        self.cols = cols
        self.A = DictionaryMatrix(code.A.columns[:, cols], kind="custom")
        self.part = SubBlockPartition(tuple(part.sizes[k] for k in blocks), int(cols.size))
        cons = code.block_constellations
        owner = mcode.block_user
        self.cons = tuple(cons[k].scaled(gains_row[owner[k]]) for k in blocks)

    def ok(self, y, cws: Sequence[SparseCodeword], bits, decoder: DecoderSpec, gram) -> bool:
        if self.full:
            got = _decoded_bits(self.code, y, decoder, gram)
            return got is not None and np.array_equal(got, bits)
        est = decode(y, self.A, len(self.blocks), self.part, self.cons, decoder, gram=gram)
        found = {int(self.cols[c]): m for c, m in zip(est.support, est.symbol_indices)}
        for j in self.heard:
            for c, m in zip(cws[j].support, cws[j].symbol_indices):
                if found.get(c) != m:
                    return False
        return True


def interference_simulate(code: CodeInstance, mu: MultiUserConfig, decoder: DecoderSpec,
                          ebn0_sweep: Sequence[float], max_trials: int,
                          max_errors: int | None = DEFAULT_MAX_ERRORS, seed: int = 0, *,
                          threads: int | None = None, gram: bool | None = None) -> list[SimRecord]:
    """Interference or broadcast channel with one receiver per user.

    Receiver ``i`` observes ``sum_j h[i][j] s_j + n_i`` (broadcast: all gains
    1, i.e. the common transmit signal) and jointly decodes the codewords of
    every transmitter it hears (``h[i][j] != 0``), knowing the gains; it
    succeeds when all of them are recovered. ``per_user_errors[i]`` counts
    receiver ``i``'s failures and ``block_errors`` the trials where any
    receiver failed.
    """
    if mu.mode not in ("interference", "broadcast"):
        raise ConfigError("interference_simulate needs mode 'interference' or 'broadcast'")
    if mu.mode == "broadcast" and mu.gains is not None:
        raise ConfigError("broadcast mode has a common transmit signal; gains are not allowed")
    mcode = MultiUserCode(code, mu)
    code = mcode.code
    P = mu.P
    threads = thread_count() if threads is None else threads
    ebn0_sweep = [float(v) for v in ebn0_sweep]
    offsets = mu.noise_offsets_db or (0.0,) * P
    sigmas = [[ChannelConfig(e + offsets[i], code.n_bits, code.K, code.field).sigma
               if np.isfinite(e) else 0.0 for i in range(P)] for e in ebn0_sweep]
    gains = mu.gains
    receivers = [_Receiver(mcode, None if gains is None else gains[i]) for i in range(P)]

    def trial(t: int, points):
        rng = np.random.default_rng([seed, t])
        bits = rng.integers(0, 2, code.n_bits, dtype=np.uint8)
        user_bits = mcode.split_bits(bits)
        cws = [mcode.encode_user(i, b) for i, b in enumerate(user_bits)]
        z0 = unit_noise(code.N, code.field, rng)
        zs = [z0] * P if mu.shared_noise else [z0] + [unit_noise(code.N, code.field, rng)
                                                      for _ in range(P - 1)]
        if gains is None:
            common = mcode.superpose(cws)
            signals = [common] * P
        else:
            signals = [mcode.superpose(cws, gains[i]) for i in range(P)]
        out = []
        for p in points:
            per = [not receivers[i].ok(signals[i] + sigmas[p][i] * zs[i], cws, bits, decoder, gram)
                   for i in range(P)]
            out.append((any(per), per))
        return out

    t0 = time.perf_counter()
    outcomes = _run_trials(trial, len(ebn0_sweep), max_trials, max_errors, threads)
    wall = time.perf_counter() - t0
    return _records(code, decoder, ebn0_sweep, outcomes, seed, max_trials, max_errors, mu.mode,
                    _digest(code, decoder, seed, {"multiuser": mu.to_dict()}), wall)


def interpolate_ebn0_at(records: Sequence[SimRecord], target: float) -> float:
    """Eb/N0 where the BLER curve crosses ``target`` (linear in log BLER).

    Uses the first pair of consecutive points bracketing the target; returns
    NaN if no pair does.
    """
    pts = sorted((r.ebn0_db, r.bler) for r in records)
    for (x0, b0), (x1, b1) in zip(pts, pts[1:]):
        if b0 >= target >= b1 and b0 > 0:
            if b1 <= 0:
                return x1
            if b0 == b1:
                return x0
            f = (math.log10(b0) - math.log10(target)) / (math.log10(b0) - math.log10(b1))
            return x0 + f * (x1 - x0)
    return float("nan")


def monotone_within_ci(records: Sequence[SimRecord], level: float = 0.95) -> bool:
    """BLER is non-increasing in Eb/N0 up to the confidence intervals."""
    recs = sorted(records, key=lambda r: r.ebn0_db)
    for a, b in zip(recs, recs[1:]):
        if b.bler > a.bler and b.interval(level)[0] > a.interval(level)[1]:
            return False
    return True
