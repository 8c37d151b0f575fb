"""
Huffman coding of deadzone resolutions and the variable-rate codeword

Both ends share one code, frozen after a histogram pass over simulated
resolutions. The code always contains an ESCAPE symbol; a resolution the
histogram never saw is sent as ESCAPE followed by its value in RAW_BITS bits.

Variable-rate codeword, for each complex dimension the real part then the
imaginary part:

    [huffman(l_ij)] [sign] [m_1 ... m_{l_ij+2}]

Scheme D in variable mode prefixes its stopping message with one mode bit:

    [1] [variable-rate codeword]    or    [0] [fixed-rate codeword]

The variable-rate codeword is self-delimiting given dim; the fixed-rate one
has 2 dim (l+3) bits, so its length after the mode bit gives l.
"""

import heapq
from collections import Counter
from dataclasses import dataclass, field
from itertools import count
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from src.components.quantizer import (
    BitString,
    QuantizedBeamformer,
    ResolutionMatrix,
    decode_beamformer,
    decode_scalar,
    encode_scalar,
)

ESCAPE = -1
RAW_BITS = 8


@dataclass(frozen=True)
class HuffmanCode:
    """Canonical prefix code over resolution values plus ESCAPE"""

    lengths: Dict[int, int]
    codewords: Dict[int, Tuple[int, ...]] = field(default_factory=dict)

    def kraft_sum(self) -> float:
        return sum(2.0 ** -length for length in self.lengths.values())


def _code_lengths(weights: Mapping[int, int]) -> Dict[int, int]:
    tiebreak = count()
    heap = [(weight, next(tiebreak), [symbol]) for symbol, weight in sorted(weights.items())]
    heapq.heapify(heap)
    lengths = {symbol: 0 for symbol in weights}

    while len(heap) > 1:
        w1, _, lo = heapq.heappop(heap)
        w2, _, hi = heapq.heappop(heap)
        for symbol in lo + hi:
            lengths[symbol] += 1
        heapq.heappush(heap, (w1 + w2, next(tiebreak), lo + hi))

    return lengths


def _canonical(lengths: Mapping[int, int]) -> Dict[int, Tuple[int, ...]]:
    codewords: Dict[int, Tuple[int, ...]] = {}
    code = 0
    previous = 0
    for symbol, length in sorted(lengths.items(), key=lambda item: (item[1], item[0])):
        code <<= length - previous
        codewords[symbol] = tuple(int(c) for c in format(code, f"0{length}b"))
        code += 1
        previous = length
    return codewords


def huffman_build(histogram: Mapping[int, int]) -> HuffmanCode:
    """
    Build the shared resolution code

    Args:
        histogram: Resolution value to number of occurrences

    Returns:
        HuffmanCode: Code over the observed values and ESCAPE
    """
    weights = {int(value): int(n) for value, n in histogram.items() if n > 0}
    if not weights:
        raise ValueError("histogram must contain at least one observed resolution")
    if any(value < 0 for value in weights):
        raise ValueError("resolutions are nonnegative")

    weights[ESCAPE] = 1
    lengths = _code_lengths(weights)
    return HuffmanCode(lengths=lengths, codewords=_canonical(lengths))


def huffman_len(code: HuffmanCode, value: int) -> int:
    """
    Header bits needed to send one resolution

    Args:
        code: Shared code
        value: Resolution

    Returns:
        int: Codeword length, or ESCAPE length plus RAW_BITS for unseen values
    """
    if value in code.lengths and value != ESCAPE:
        return code.lengths[value]
    if not 0 <= value < (1 << RAW_BITS):
        raise ValueError(f"resolution {value} does not fit the {RAW_BITS}-bit escape field")
    return code.lengths[ESCAPE] + RAW_BITS


def merge_histograms(*histograms: Mapping[int, int]) -> Counter:
    """Sum resolution histograms; order does not matter"""
    total: Counter = Counter()
    for histogram in histograms:
        total.update(histogram)
    return total


def variable_rate_cost(ell_matrix: ResolutionMatrix, code: HuffmanCode) -> int:
    """Bits in a variable-rate codeword: header + sign + (l_ij + 2) per real part"""
    return sum(huffman_len(code, int(ell)) + 1 + int(ell) + 2 for ell in np.ravel(ell_matrix))


def _encode_resolution(code: HuffmanCode, value: int) -> List[int]:
    if value in code.codewords and value != ESCAPE:
        return list(code.codewords[value])
    huffman_len(code, value)
    return list(code.codewords[ESCAPE]) + [int(c) for c in format(value, f"0{RAW_BITS}b")]


def _decode_resolution(code: HuffmanCode, bits: Tuple[int, ...], pos: int) -> Tuple[int, int]:
    lookup = {word: symbol for symbol, word in code.codewords.items()}
    word: Tuple[int, ...] = ()
    while pos < len(bits):
        word += (bits[pos],)
        pos += 1
        if word in lookup:
            symbol = lookup[word]
            if symbol != ESCAPE:
                return symbol, pos
            if pos + RAW_BITS > len(bits):
                break
            raw = bits[pos : pos + RAW_BITS]
            return int("".join(str(b) for b in raw), 2), pos + RAW_BITS
    raise ValueError("codeword ended inside a resolution header")


def encode_variable_beamformer(
    q: QuantizedBeamformer, ell_matrix: ResolutionMatrix, code: HuffmanCode
) -> BitString:
    """
    Serialize a variable-rate quantized vector

    Args:
        q: Vector produced by q_v at ell_matrix
        ell_matrix: dim x 2 resolutions
        code: Shared resolution code

    Returns:
        BitString: variable_rate_cost(ell_matrix, code) bits
    """
    ell_matrix = np.asarray(ell_matrix, dtype=np.int64)
    if ell_matrix.shape != (q.dim, 2):
        raise ValueError(f"resolution matrix must be {q.dim}x2, got {ell_matrix.shape}")

    bits: List[int] = []
    for i, value in enumerate(q.vector):
        for part, ell in ((value.real, ell_matrix[i, 0]), (value.imag, ell_matrix[i, 1])):
            bits.extend(_encode_resolution(code, int(ell)))
            bits.extend(encode_scalar(float(part), int(ell)))
    return BitString(tuple(bits))


def decode_variable_beamformer(
    b: BitString, dim: int, code: HuffmanCode
) -> Tuple[QuantizedBeamformer, ResolutionMatrix]:
    """
    Parse a variable-rate codeword

    Args:
        b: Bits produced by encode_variable_beamformer
        dim: Number of complex dimensions
        code: Shared resolution code

    Returns:
        Tuple[QuantizedBeamformer, ResolutionMatrix]: Vector and its resolutions
    """
    ell_matrix = np.zeros((dim, 2), dtype=np.int64)
    parts: List[float] = []
    pos = 0
    for index in range(2 * dim):
        ell, pos = _decode_resolution(code, b.bits, pos)
        width = ell + 3
        if pos + width > len(b):
            raise ValueError("codeword ended inside a magnitude field")
        parts.append(decode_scalar(b.bits[pos : pos + width], ell))
        ell_matrix[index // 2, index % 2] = ell
        pos += width
    if pos != len(b):
        raise ValueError(f"{len(b) - pos} trailing bits after the last component")

    vector = np.array(parts[0::2]) + 1j * np.array(parts[1::2])
    return QuantizedBeamformer(vector=vector, bit_cost=len(b)), ell_matrix


def encode_stage_payload(fixed: BitString, variable: Optional[BitString] = None) -> BitString:
    """
    Variable-mode stopping message: a mode bit, then the codeword it names

    Args:
        fixed: Fixed-rate codeword of q(h_hat; L)
        variable: Variable-rate codeword, or None to send the fixed one

    Returns:
        BitString: 1 + len(variable), or 1 + len(fixed) when variable is None
    """
    if variable is None:
        return BitString((0,)) + fixed
    return BitString((1,)) + variable


def decode_stage_payload(b: BitString, dim: int, code: HuffmanCode) -> QuantizedBeamformer:
    """
    Parse a variable-mode stopping message

    Args:
        b: Bits produced by encode_stage_payload
        dim: Number of trained antennas
        code: Shared resolution code

    Returns:
        QuantizedBeamformer: The beamformer the message carries
    """
    if len(b) < 2:
        raise ValueError("stopping message needs a mode bit and a codeword")
    body = BitString(b.bits[1:])
    if b.bits[0]:
        q, _ = decode_variable_beamformer(body, dim, code)
        return q
    width, rest = divmod(len(body), 2 * dim)
    if rest or width < 3:
        raise ValueError(f"{len(body)} bits is not a fixed-rate codeword for {dim} dimensions")
    return decode_beamformer(body, dim, width - 3)
