import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsparc.code import CodeInstance, CodeSpec
from gsparc.decoding import (
    DecoderSpec,
    check_recovery_guarantee,
    decode,
    mad_decode,
    ml_decode_k1,
    omp_decode,
    pmad_decode,
)
from gsparc.dictionary import DictionaryMatrix, build_dictionary
from gsparc.encoding import (
    make_codeword,
    make_psk,
    partition_subblocks,
    sse_bit_budget,
    sse_encode,
)
from gsparc.errors import ConfigError


def noisy(s, sigma, rng):
    if np.iscomplexobj(s):
        return s + sigma * (rng.standard_normal(s.shape) + 1j * rng.standard_normal(s.shape))
    return s + sigma * rng.standard_normal(s.shape)


def reference_omp(y, A, K, part, cons):
    """Textbook OMP with a fresh least-squares solve per iteration."""
    cols = A.columns
    blocks = part.column_blocks()
    support, used = [], set()
    r = y.astype(complex)
    for _ in range(K):
        score = np.abs(cols.conj().T @ r)
        ok = np.array([b >= 0 and b not in used for b in blocks])
        score[~ok] = -1
        i = int(np.argmax(score))
        support.append(i)
        used.add(blocks[i])
        coef, *_ = np.linalg.lstsq(cols[:, support], y, rcond=None)
        r = y - cols[:, support] @ coef
    syms = [int(np.argmin(np.abs(cons.symbols - c))) for c in coef]
    order = np.argsort(support)
    return tuple(int(support[j]) for j in order), tuple(syms[j] for j in order)


@pytest.fixture(scope="module")
def mub4():
    return build_dictionary("mub", 4)


@pytest.fixture(scope="module")
def mub6_code():
    return CodeInstance(CodeSpec("mub", 6, "sse", 6, 4, offset=True))


# ---------------------------------------------------------------- K = 1

@pytest.mark.parametrize("kind,n,M", [("mub", 4, 4), ("gold", 5, 2), ("mub", 3, 8)])
def test_mad_matches_exhaustive_ml_k1(kind, n, M):
    A = build_dictionary(kind, n)
    cons = make_psk(M)
    part = partition_subblocks(A.L, 1)
    rng = np.random.default_rng(5)
    cand = A.columns[:, :part.sizes[0], None] * cons.symbols[None, None, :]
    for _ in range(2000):
        i = rng.integers(part.sizes[0])
        m = rng.integers(M)
        y = noisy(cons.symbols[m] * A.columns[:, i], 0.8, rng)
        mad = mad_decode(y, A, 1, part, cons)
        d = np.sum(np.abs(y[:, None, None] - cand) ** 2, axis=0)
        bi, bm = np.unravel_index(np.argmin(d), d.shape)
        assert mad.support == (bi,) and mad.symbol_indices == (bm,)
        ml = ml_decode_k1(y, A, cons, part.sizes[0])
        assert ml.same_message(mad)


# ---------------------------------------------------------------- noiseless recovery

def test_guarantee_values():
    rep = check_recovery_guarantee(1 / 8, 0.0, 4)
    assert rep.bound == pytest.approx(4.5) and rep.guaranteed
    assert not check_recovery_guarantee(1 / 8, 0.0, 5).guaranteed
    rep = check_recovery_guarantee(17 / 127, -1.0, 4)
    assert rep.bound == pytest.approx(144 / 34)
    # gamma close to 1 tightens the second term
    rep = check_recovery_guarantee(0.1, 0.9, 1)
    assert rep.bound == pytest.approx((1 + 0.2 - 0.9) / 0.2)
    with pytest.raises(ValueError):
        check_recovery_guarantee(0.0, 0.0, 1)
    with pytest.raises(ValueError):
        check_recovery_guarantee(0.5, 1.0, 1)


@pytest.mark.parametrize("spec", [
    CodeSpec("mub", 6, "sse", 4, 4),
    CodeSpec("mub", 6, "sse", 4, 4, offset=True),
    CodeSpec("mub", 4, "sfe", 2, 4, identity_columns=1),
    CodeSpec("mub", 5, "sse", 1, 8),
])
def test_noiseless_recovery_within_bound(spec):
    code = CodeInstance(spec)
    assert check_recovery_guarantee(code.A.mu, code.gamma, code.K).guaranteed
    rng = np.random.default_rng(17)
    for _ in range(1000):
        bits = rng.integers(0, 2, code.n_bits, dtype=np.uint8)
        cw = code.encode(bits)
        for dec in (DecoderSpec("mad"), DecoderSpec("pmad", 4)):
            assert np.array_equal(code.decode_bits(code.decode(cw.s, dec)), bits)


def test_noiseless_recovery_gold_recompute():
    code = CodeInstance(CodeSpec("gold", 7, "sse", 4, 2))
    assert check_recovery_guarantee(code.A.mu, code.gamma, code.K).guaranteed
    rng = np.random.default_rng(4)
    for _ in range(100):
        bits = rng.integers(0, 2, code.n_bits, dtype=np.uint8)
        cw = code.encode(bits)
        assert np.array_equal(code.decode_bits(code.decode(cw.s, DecoderSpec("mad"))), bits)


# ---------------------------------------------------------------- MAD internals

def test_gram_and_recompute_agree(mub6_code):
    code = mub6_code
    rng = np.random.default_rng(1)
    for _ in range(300):
        cw = code.encode(rng.integers(0, 2, code.n_bits, dtype=np.uint8))
        y = noisy(cw.s, 0.35, rng)
        for dec in (DecoderSpec("mad"), DecoderSpec("pmad", 8)):
            a = code.decode(y, dec, gram=True)
            b = code.decode(y, dec, gram=False)
            assert a.same_message(b)


def test_pmad_t1_equals_mad(mub6_code):
    code = mub6_code
    rng = np.random.default_rng(2)
    for _ in range(300):
        cw = code.encode(rng.integers(0, 2, code.n_bits, dtype=np.uint8))
        y = noisy(cw.s, 0.4, rng)
        assert code.decode(y, DecoderSpec("pmad", 1)).same_message(
            code.decode(y, DecoderSpec("mad")))


def test_pmad_never_farther_than_mad(mub6_code):
    code = mub6_code
    rng = np.random.default_rng(3)
    for _ in range(300):
        cw = code.encode(rng.integers(0, 2, code.n_bits, dtype=np.uint8))
        y = noisy(cw.s, 0.4, rng)
        p = code.decode(y, DecoderSpec("pmad", 16))
        m = code.decode(y, DecoderSpec("mad"))
        assert np.linalg.norm(y - p.s) <= np.linalg.norm(y - m.s) + 1e-12


def test_pmad_paths_distinct_seeds(mub6_code):
    code = mub6_code
    rng = np.random.default_rng(4)
    cw = code.encode(rng.integers(0, 2, code.n_bits, dtype=np.uint8))
    y = noisy(cw.s, 0.4, rng)
    paths = []
    best = pmad_decode(y, code.A, code.K, code.scheme, code.constellation, 10, paths=paths)
    assert len(paths) == 10
    dists = [d for _, d in paths]
    assert np.linalg.norm(y - best.s) == pytest.approx(min(dists))
    for cwp, d in paths:
        assert np.linalg.norm(y - cwp.s) == pytest.approx(d)


def test_pmad_clamps_t():
    A = build_dictionary("mub", 2)
    part = partition_subblocks(A.L, 2)
    cons = make_psk(4)
    cw = sse_encode(np.zeros(sse_bit_budget(part, 4), np.uint8), A, part, cons)
    with pytest.warns(UserWarning, match="clamped"):
        out = pmad_decode(cw.s, A, 2, part, cons, 100)
    assert out.support == cw.support


def test_trace_matches_definition(mub4):
    part = partition_subblocks(mub4.L, 3)
    cons = make_psk(4)
    rng = np.random.default_rng(8)
    cw = sse_encode(rng.integers(0, 2, sse_bit_budget(part, 4)), mub4, part, cons)
    y = noisy(cw.s, 0.2, rng)
    trace = []
    out = mad_decode(y, mub4, 3, part, cons, trace=trace)
    assert [st.t for st in trace] == [0, 1, 2, 3]
    for st in trace[:-1]:
        # metric of the detected pair equals the maximum over eligible pairs
        c = mub4.columns.conj().T @ st.residual
        assert np.allclose(c, st.correlations)
        blocks = part.column_blocks()
        ok = np.array([b >= 0 and b not in st.discarded_groups for b in blocks])
        p = (c[:, None] * cons.symbols.conj()[None, :]).real - 0.5
        assert st.metric == pytest.approx(p[ok].max())
    assert np.allclose(trace[-1].residual, y - out.s)


def test_partial_estimate_resumes(mub4):
    part = partition_subblocks(mub4.L, 3)
    cons = make_psk(4)
    rng = np.random.default_rng(9)
    for _ in range(50):
        cw = sse_encode(rng.integers(0, 2, sse_bit_budget(part, 4)), mub4, part, cons)
        y = noisy(cw.s, 0.3, rng)
        trace = []
        full = mad_decode(y, mub4, 3, part, cons, trace=trace)
        first = trace[1]
        partial = make_codeword(mub4, first.support, first.symbol_indices, [cons])
        assert mad_decode(y, mub4, 3, part, cons, partial).same_message(full)


def test_partial_estimate_validation(mub4):
    part = partition_subblocks(mub4.L, 2)
    cons = make_psk(4)
    bad = make_codeword(mub4, [0, 1], [0, 0], [cons, cons])
    with pytest.raises(ValueError):
        mad_decode(np.zeros(16), mub4, 2, part, cons, bad)


def test_tie_break_lowest_column_then_symbol():
    A = build_dictionary("mub", 3)
    qpsk = make_psk(4)
    # y = 0: every (column, symbol) pair scores -1/2
    out = mad_decode(np.zeros(8, complex), A, 1, "sfe", qpsk)
    assert out.support == (0,) and out.symbol_indices == (0,)
    # y = a_3 + a_5 (orthogonal): columns 3 and 5 tie, the lower goes first
    trace = []
    y = A.columns[:, 3] + A.columns[:, 5]
    out = mad_decode(y, A, 2, "sfe", qpsk, trace=trace)
    assert trace[1].support == (3,)
    assert out.support == (3, 5) and out.symbol_indices == (0, 0)


def test_k_larger_than_blocks_rejected(mub4):
    part = partition_subblocks(mub4.L, 2)
    with pytest.raises(ConfigError):
        mad_decode(np.zeros(16), mub4, 3, part, make_psk(4))


def test_real_dictionary_real_arithmetic():
    A = build_dictionary("gold", 5)
    part = partition_subblocks(A.L, 2)
    cons = make_psk(2)
    cw = sse_encode(np.zeros(sum(part.index_bits) + 2, np.uint8), A, part, cons)
    assert not np.iscomplexobj(cw.s)
    assert mad_decode(cw.s, A, 2, part, cons).same_message(cw)


# ---------------------------------------------------------------- OMP

def test_omp_matches_reference(mub6_code):
    code = mub6_code
    A = code.A
    cons = make_psk(4)
    rng = np.random.default_rng(12)
    for _ in range(200):
        cw = sse_encode(rng.integers(0, 2, code.n_bits, dtype=np.uint8), A, code.partition, cons)
        y = noisy(cw.s, 0.3, rng)
        out = omp_decode(y, A, code.K, code.partition, cons)
        assert (out.support, out.symbol_indices) == reference_omp(y, A, code.K, code.partition, cons)


def test_omp_rank_deficient_dictionary():
    # duplicated column forces the pseudo-inverse fallback
    cols = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    A = DictionaryMatrix.custom(cols)
    out = omp_decode(np.array([1.0, 1.0]), A, 2, "sfe", make_psk(2))
    assert len(set(out.support)) == 2


# ---------------------------------------------------------------- dispatch / SFE

def test_decode_dispatch_and_ml_restriction(mub4):
    cons = make_psk(4)
    with pytest.raises(ConfigError):
        decode(np.zeros(16), mub4, 2, "sfe", cons, DecoderSpec("ml"))
    with pytest.raises(ConfigError):
        DecoderSpec("amp")
    y = mub4.columns[:, 7] * 1j
    assert decode(y, mub4, 1, "sfe", cons, DecoderSpec("ml")).support == (7,)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**19 - 1))
def test_sfe_noiseless_roundtrip(v):
    code = CodeInstance(CodeSpec("mub", 4, "sfe", 2, 4, identity_columns=1))
    bits = np.array([int(b) for b in format(v, "019b")], dtype=np.uint8)
    cw = code.encode(bits)
    assert np.array_equal(code.decode_bits(code.decode(cw.s, DecoderSpec("mad"))), bits)


def test_decoder_deterministic(mub6_code):
    code = mub6_code
    rng = np.random.default_rng(13)
    cw = code.encode(rng.integers(0, 2, code.n_bits, dtype=np.uint8))
    y = noisy(cw.s, 0.5, rng)
    outs = {code.decode(y.copy(), DecoderSpec("pmad", 16)).support for _ in range(5)}
    assert len(outs) == 1
