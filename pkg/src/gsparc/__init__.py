"""Generalized sparse regression codes with deterministic dictionaries."""
__version__ = "0.1.0"

from .errors import ConfigError, GramBudgetError
from .dictionary import DictionaryMatrix, GramMatrix, build_dictionary, coherence, gram
from .encoding import (
    Constellation,
    SparseCodeword,
    SubBlockPartition,
    make_offset_qpsk,
    make_psk,
    partition_subblocks,
    sfe_encode,
    sfe_rank,
    sfe_unrank,
    sse_encode,
)
from .decoding import (
    DecoderSpec,
    check_recovery_guarantee,
    decode,
    mad_decode,
    ml_decode_k1,
    omp_decode,
    pmad_decode,
)
from .code import CodeInstance, CodeSpec
from .channel import (
    ChannelConfig,
    MultiUserConfig,
    SimRecord,
    awgn,
    interference_simulate,
    mac_simulate,
    run_bler,
)
