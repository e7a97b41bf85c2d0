"""A concrete GSPARC code: dictionary + scheme + constellation(s)."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from .decoding import DecoderSpec, decode
from .dictionary import DictionaryMatrix, build_dictionary
from .encoding import (
    Constellation,
    SparseCodeword,
    is_power_of_2,
    make_offset_qpsk,
    make_psk,
    partition_subblocks,
    sfe_bit_budget,
    sfe_decode_bits,
    sfe_encode,
    sse_bit_budget,
    sse_decode_bits,
    sse_encode,
    SubBlockPartition,
)
from .errors import ConfigError


@dataclass(frozen=True)
class CodeSpec:
    """JSON-friendly description of a code instance.

    ``columns`` truncates the dictionary to its first columns (e.g. 8 MUB bases
    of C^64 give a 64 x 512 dictionary); ``identity_columns`` appends standard
    basis columns (16 x 256 MUB + one gives 16 x 257). ``block_M`` gives a
    per-sub-block alphabet size and overrides ``M`` for SSE.
    """

    dict: str
    n: int
    scheme: str = "sse"
    K: int = 1
    M: int = 4
    offset: bool = False
    columns: int | None = None
    identity_columns: int = 0
    block_M: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.scheme not in ("sse", "sfe"):
            raise ConfigError(f"scheme must be 'sse' or 'sfe', got {self.scheme!r}")
        if self.K < 1:
            raise ConfigError(f"K must be positive, got {self.K}")
        if not is_power_of_2(self.M):
            raise ConfigError(f"M must be a power of 2, got {self.M}")
        if self.offset and (self.scheme != "sse" or self.M != 4):
            raise ConfigError("offset constellations need scheme 'sse' and M = 4")
        if self.block_M is not None:
            object.__setattr__(self, "block_M", tuple(int(m) for m in self.block_M))
            if self.scheme != "sse" or len(self.block_M) != self.K:
                raise ConfigError("block_M needs scheme 'sse' and one entry per sub-block")
            if not all(is_power_of_2(m) for m in self.block_M):
                raise ConfigError(f"block_M entries must be powers of 2: {self.block_M}")

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["block_M"] is not None:
            d["block_M"] = list(d["block_M"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CodeSpec":
        return cls(**d)


@dataclass(eq=False)
class CodeInstance:
    spec: CodeSpec
    A: DictionaryMatrix = field(init=False, repr=False)

    def __post_init__(self):
        s = self.spec
        self.A = build_dictionary(s.dict, s.n, s.columns, s.identity_columns)
        if s.K > self.A.L:
            raise ConfigError(f"K={s.K} exceeds L={self.A.L}")

    @classmethod
    def from_dict(cls, d: dict) -> "CodeInstance":
        return cls(CodeSpec.from_dict(d))

    @property
    def K(self) -> int:
        return self.spec.K

    @property
    def N(self) -> int:
        return self.A.N

    @property
    def L(self) -> int:
        return self.A.L

    @cached_property
    def partition(self) -> SubBlockPartition | None:
        return partition_subblocks(self.L, self.K) if self.spec.scheme == "sse" else None

    @property
    def scheme(self):
        return self.partition if self.spec.scheme == "sse" else "sfe"

    @cached_property
    def constellation(self) -> Constellation | tuple[Constellation, ...]:
        s = self.spec
        if s.block_M is not None:
            rot = make_offset_qpsk(s.K) if s.offset else None
            return tuple(rot[k] if (rot is not None and m == 4) else make_psk(m)
                         for k, m in enumerate(s.block_M))
        if s.offset:
            return make_offset_qpsk(s.K)
        return make_psk(s.M)

    @property
    def block_constellations(self) -> tuple[Constellation, ...]:
        c = self.constellation
        return c if isinstance(c, tuple) else (c,) * self.K

    @cached_property
    def n_bits(self) -> int:
        if self.spec.scheme == "sse":
            return sse_bit_budget(self.partition, [c.M for c in self.block_constellations])
        return sfe_bit_budget(self.L, self.K, self.spec.M)

    @property
    def field(self) -> str:
        real = self.A.field == "real" and all(c.is_real for c in self.block_constellations)
        return "real" if real else "complex"

    @property
    def real_channel_uses(self) -> int:
        return self.N if self.field == "real" else 2 * self.N

    @property
    def rate(self) -> float:
        """Bits per real channel use."""
        return self.n_bits / self.real_channel_uses

    @property
    def label(self) -> str:
        return f"({self.real_channel_uses},{self.n_bits})"

    @property
    def gamma(self) -> float:
        return max(c.gamma for c in self.block_constellations)

    def encode(self, bits) -> SparseCodeword:
        if self.spec.scheme == "sse":
            return sse_encode(bits, self.A, self.partition, self.constellation)
        return sfe_encode(bits, self.A, self.L, self.K, self.constellation)

    def decode_bits(self, codeword: SparseCodeword) -> np.ndarray:
        if self.spec.scheme == "sse":
            return sse_decode_bits(codeword, self.partition, self.constellation)
        return sfe_decode_bits(codeword, self.L, self.K, self.constellation)

    def decode(self, y, decoder: DecoderSpec, *, gram: bool | None = None) -> SparseCodeword:
        return decode(y, self.A, self.K, self.scheme, self.constellation, decoder, gram=gram)

    def describe(self) -> dict:
        out = {
            "code": self.spec.to_dict(),
            "N": self.N,
            "L": self.L,
            "n_bits": self.n_bits,
            "field": self.field,
            "label": self.label,
            "rate_bpcu": self.rate,
        }
        if self.partition is not None:
            out["partition"] = self.partition.to_dict()
        return out
