"""
Deadzone quantizers for beamforming vectors

q(x; l) = sign(x) floor(|x| 2^(l+1)) / 2^(l+1) keeps the leading l+2 binary digits
(b0.b1...b_{l+1}) of |x|. A complex vector is quantized part by part, either at
one resolution for every part (fixed rate) or with a t x 2 resolution matrix
(variable rate, column 0 = real parts, column 1 = imaginary parts).

Wire format of a fixed-rate codeword, for each complex dimension the real part
then the imaginary part, each real scalar written as

    [sign] [m_1 ... m_{l+2}]

sign is 1 only for strictly negative values. The l+2 magnitude bits are the
fractional digits b1..b_{l+2} of |q|; since |q| is a multiple of 2^-(l+1) the
last digit is always 0, which frees the all-ones pattern to stand for the one
magnitude whose leading digit b0 is 1, namely |q| = 1.
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from src.components.channel_model import ChannelState

Resolution = int
ResolutionMatrix = np.ndarray

# Slack allowed on ||x|| <= 1 for vectors produced by normalization
NORM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class BitString:
    """A finite feedback message"""

    bits: Tuple[int, ...] = ()

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bit strings hold only 0 and 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        return cls(tuple(int(c) for c in text))

    def __len__(self) -> int:
        return len(self.bits)

    def __add__(self, other: "BitString") -> "BitString":
        return BitString(self.bits + other.bits)

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True)
class QuantizedBeamformer:
    """A feasible quantized beamforming vector and its exact feedback cost"""

    vector: np.ndarray
    bit_cost: int

    def __post_init__(self):
        vector = np.asarray(self.vector, dtype=np.complex128).reshape(-1)
        if np.linalg.norm(vector) > 1.0 + NORM_TOLERANCE:
            raise ValueError("quantized beamformer must have norm <= 1")
        if self.bit_cost < 0:
            raise ValueError("bit cost must be nonnegative")
        object.__setattr__(self, "vector", vector)

    @property
    def dim(self) -> int:
        return self.vector.size


def _check_resolution(ell) -> None:
    if np.any(np.asarray(ell) < 0):
        raise ValueError(f"resolution must be >= 0, got {ell}")


def _deadzone(values: np.ndarray, ell) -> np.ndarray:
    """Elementwise q(x; l) on real arrays; l may broadcast"""
    scale = np.ldexp(1.0, np.asarray(ell, dtype=np.int64) + 1)
    magnitude = np.floor(np.abs(values) * scale) / scale
    # sign(0) = +1, and adding 0.0 turns -0.0 into +0.0
    return np.where(values < 0, -magnitude, magnitude) + 0.0


def deadzone_scalar(x: float, ell: Resolution) -> float:
    """
    Deadzone scalar quantizer q(x; l)

    Args:
        x: Value in [-1, 1]
        ell: Resolution l >= 0

    Returns:
        float: sign(x) floor(|x| 2^(l+1)) / 2^(l+1)
    """
    if abs(x) > 1:
        raise ValueError(f"deadzone input must lie in [-1, 1], got {x}")
    _check_resolution(ell)
    return float(_deadzone(np.float64(x), ell))


def quantize_parts(x: np.ndarray, ell_matrix: ResolutionMatrix) -> np.ndarray:
    """q_v(x; l): real and imaginary parts at their own resolutions"""
    x = np.asarray(x, dtype=np.complex128).reshape(-1)
    ell_matrix = np.asarray(ell_matrix, dtype=np.int64)
    if ell_matrix.shape != (x.size, 2):
        raise ValueError(f"resolution matrix must be {x.size}x2, got {ell_matrix.shape}")
    _check_resolution(ell_matrix)
    re = _deadzone(np.clip(x.real, -1.0, 1.0), ell_matrix[:, 0])
    im = _deadzone(np.clip(x.imag, -1.0, 1.0), ell_matrix[:, 1])
    return re + 1j * im


def _check_unit_ball(x: np.ndarray) -> None:
    norm = float(np.linalg.norm(x))
    if norm > 1.0 + NORM_TOLERANCE:
        raise ValueError(f"beamforming vector must have norm <= 1, got {norm}")


def deadzone_vector(x: Sequence[complex], ell: Resolution) -> QuantizedBeamformer:
    """
    Fixed-rate deadzone quantizer q(x; l)

    Args:
        x: Complex vector with ||x|| <= 1
        ell: Common resolution

    Returns:
        QuantizedBeamformer: Quantized vector, costing 2 dim (l+3) bits
    """
    x = np.asarray(x, dtype=np.complex128).reshape(-1)
    _check_unit_ball(x)
    _check_resolution(ell)
    ell_matrix = np.full((x.size, 2), ell, dtype=np.int64)
    vector = quantize_parts(x, ell_matrix)
    return QuantizedBeamformer(vector=vector, bit_cost=fixed_rate_cost(x.size, ell))


def fixed_rate_cost(dim: int, ell: Resolution) -> int:
    """Bits in a fixed-rate codeword: 2 dim (l+3)"""
    return 2 * dim * (ell + 3)


def ceil_log2(n: int) -> int:
    """Exact ceil(log2 n) for integers n >= 1"""
    if n < 1:
        raise ValueError(f"ceil_log2 needs n >= 1, got {n}")
    return (n - 1).bit_length()


def sufficient_resolution(h: Union[ChannelState, np.ndarray], alpha: float) -> Resolution:
    """
    Resolution L(h) at which q(h/||h||; L) is guaranteed to avoid outage

    L(h) = max{ceil(log2 4k), ceil(log2(4 k alpha / (||h||^2 - alpha)))} for a
    k-dimensional h.

    Args:
        h: Channel state or prefix h_k
        alpha: Outage threshold

    Returns:
        int: L(h)
    """
    coeffs = h.coeffs if isinstance(h, ChannelState) else np.asarray(h, dtype=np.complex128)
    k = coeffs.size
    norm_sq = float(np.vdot(coeffs, coeffs).real)
    if norm_sq <= alpha:
        raise ValueError(f"||h||^2 = {norm_sq} does not exceed alpha = {alpha}")

    floor_term = ceil_log2(4 * k)
    ratio = 4 * k * alpha / (norm_sq - alpha)
    return max(floor_term, math.ceil(math.log2(ratio)))


def array_gain_of(vector: np.ndarray, h: np.ndarray) -> float:
    """|<x, h>|^2"""
    return float(abs(np.vdot(vector, h)) ** 2)


def encode_scalar(value: float, ell: int) -> List[int]:
    """Sign bit plus l+2 magnitude bits for one real part"""
    scale = 1 << (ell + 1)
    mantissa = abs(value) * scale
    m = int(mantissa)
    if m != mantissa or m > scale:
        raise ValueError(f"{value} is not representable at resolution {ell}")

    bits = [1 if value < 0 else 0]
    if m == scale:
        bits.extend([1] * (ell + 2))
    else:
        bits.extend(int(c) for c in format(m, f"0{ell + 1}b"))
        bits.append(0)
    return bits


def decode_scalar(bits: Sequence[int], ell: int) -> float:
    """Inverse of encode_scalar"""
    sign, mantissa = bits[0], bits[1:]
    if all(mantissa):
        magnitude = 1.0
    elif mantissa[-1]:
        raise ValueError("magnitude field has a nonzero last digit")
    else:
        m = int("".join(str(b) for b in mantissa[:-1]), 2)
        magnitude = m / (1 << (ell + 1))
    # Zero is always written with sign 0; a set sign bit on zero decodes to +0
    if sign and magnitude:
        return -magnitude
    return magnitude


def _parts(vector: np.ndarray) -> Iterable[float]:
    for value in vector:
        yield float(value.real)
        yield float(value.imag)


def encode_beamformer(q: QuantizedBeamformer, ell: Resolution) -> BitString:
    """
    Serialize a fixed-rate quantized vector

    Args:
        q: Quantized vector whose parts are multiples of 2^-(l+1)
        ell: Resolution it was quantized at

    Returns:
        BitString: Exactly 2 dim (l+3) bits
    """
    _check_resolution(ell)
    bits: List[int] = []
    for value in _parts(q.vector):
        bits.extend(encode_scalar(value, ell))
    return BitString(tuple(bits))


def decode_beamformer(b: BitString, dim: int, ell: Resolution) -> QuantizedBeamformer:
    """
    Parse a fixed-rate codeword

    Args:
        b: Bits produced by encode_beamformer
        dim: Number of complex dimensions
        ell: Resolution

    Returns:
        QuantizedBeamformer: The decoded vector
    """
    _check_resolution(ell)
    expected = fixed_rate_cost(dim, ell)
    if len(b) != expected:
        raise ValueError(f"codeword has {len(b)} bits, expected {expected}")

    width = ell + 3
    values = [
        decode_scalar(b.bits[pos : pos + width], ell) for pos in range(0, expected, width)
    ]
    vector = np.array(values[0::2]) + 1j * np.array(values[1::2])
    return QuantizedBeamformer(vector=vector, bit_cost=expected)


def variable_rate_quantize(
    h_k: Union[ChannelState, np.ndarray], alpha: float, delta: int = 1
) -> Tuple[QuantizedBeamformer, ResolutionMatrix]:
    """
    Greedy rate allocation for the deadzone quantizer

    Starting from an all-zero resolution matrix, each step tries raising every
    part by delta, keeps the single increment with the largest gain in
    Re/Im(h_hat) * Re/Im(e) and charges delta bits, until the array gain reaches
    alpha or the charged bits reach the fixed-rate budget 2k(L(h_k)+3).
    Ties between the two columns go to the imaginary part; within a column the
    smallest index wins.

    Only the resolutions are capped: sum l stays within the budget, but the
    full codeword (sum l + 6k plus headers) can exceed the fixed-rate cost. A
    step whose increments are all zero still spends delta bits, so parts too
    small to register at the next resolution can leave the loop stalled below
    alpha until the budget runs out. Callers check the returned gain.

    Args:
        h_k: Channel prefix with ||h_k||^2 > alpha
        alpha: Outage threshold
        delta: Bits added per step

    Returns:
        Tuple[QuantizedBeamformer, ResolutionMatrix]: q_v(h_hat; l) and l. The
        vector's bit_cost counts sign and magnitude bits only (sum l + 6k);
        resolution headers are charged by the Huffman layer.
    """
    coeffs = h_k.coeffs if isinstance(h_k, ChannelState) else np.asarray(h_k, dtype=np.complex128)
    if delta < 1:
        raise ValueError(f"delta must be >= 1, got {delta}")
    budget_ell = sufficient_resolution(coeffs, alpha)

    k = coeffs.size
    h_hat = coeffs / math.sqrt(float(np.vdot(coeffs, coeffs).real))
    budget = fixed_rate_cost(k, budget_ell)
    ell = np.zeros((k, 2), dtype=np.int64)
    count = 0

    current = quantize_parts(h_hat, ell)
    while count < budget and array_gain_of(current, coeffs) < alpha:
        e = quantize_parts(h_hat, ell + delta) - current
        d1 = h_hat.real * e.real
        d2 = h_hat.imag * e.imag
        i = int(np.argmax(d1))
        j = int(np.argmax(d2))
        if d1[i] > d2[j]:
            ell[i, 0] += delta
        else:
            ell[j, 1] += delta
        count += delta
        current = quantize_parts(h_hat, ell)

    bit_cost = int(ell.sum()) + 3 * 2 * k
    return QuantizedBeamformer(vector=current, bit_cost=bit_cost), ell
