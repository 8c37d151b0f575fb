"""
Per-channel-state execution of every training and feedback protocol

Scheme ids:
    F        full CSI, beamform along h (infinite feedback)
    G        open loop, uniform power over the first kappa antennas
    A        conventional antenna selection (train all, send the best index)
    B        interleaved antenna selection (train one by one, stop at the first good one)
    B_unary  train all, send the first good index as a unary codeword
    C        conventional deadzone beamforming C_t (train all, send q(h_hat; L(h)))
    D        interleaved deadzone beamforming (stop once ||h_i||^2 > alpha)
    Bprime   interleaved selection over groups of K antennas with per-stage cost epsilon
"""

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Dict, Literal, Optional, Tuple, Union

import numpy as np

from src.components.channel_model import ChannelState, SystemParams, kappa
from src.components.huffman import (
    HuffmanCode,
    encode_stage_payload,
    encode_variable_beamformer,
    variable_rate_cost,
)
from src.components.quantizer import (
    NORM_TOLERANCE,
    BitString,
    QuantizedBeamformer,
    array_gain_of,
    ceil_log2,
    deadzone_vector,
    encode_beamformer,
    sufficient_resolution,
    variable_rate_quantize,
)

QuantizerMode = Literal["fixed", "variable"]


@dataclass(frozen=True)
class Beamform:
    """Transmit along a vector with norm <= 1"""

    vector: np.ndarray

    def __post_init__(self):
        vector = np.asarray(self.vector, dtype=np.complex128).reshape(-1)
        if np.linalg.norm(vector) > 1.0 + NORM_TOLERANCE:
            raise ValueError("beamforming vector must have norm <= 1")
        object.__setattr__(self, "vector", vector)


@dataclass(frozen=True)
class UniformSubset:
    """Covariance I_k / k on the first k antennas"""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"subset size must be >= 1, got {self.k}")


@dataclass(frozen=True)
class FixedAntenna:
    """Transmit on one antenna (1-based index), i.e. beamform along e_index"""

    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"antenna index is 1-based, got {self.index}")


TransmissionStrategy = Union[Beamform, UniformSubset, FixedAntenna]


@dataclass(frozen=True)
class SchemeOutcome:
    """What one scheme did on one channel state"""

    strategy: TransmissionStrategy
    antennas_trained: int
    feedback_bits: Optional[int]
    outage: bool


def array_gain(strategy: TransmissionStrategy, h: ChannelState) -> float:
    """
    Effective SNR factor of a strategy on h

    Args:
        strategy: Transmission strategy
        h: Channel state

    Returns:
        float: |<x,h>|^2, ||h_k||^2 / k or |h_i|^2
    """
    if isinstance(strategy, Beamform):
        if strategy.vector.size != h.t:
            raise ValueError(f"vector has {strategy.vector.size} entries, channel has {h.t}")
        return array_gain_of(strategy.vector, h.coeffs)
    if isinstance(strategy, UniformSubset):
        if strategy.k > h.t:
            raise ValueError(f"subset of {strategy.k} antennas on a {h.t}-antenna channel")
        return h.prefix(strategy.k).norm_sq() / strategy.k
    if isinstance(strategy, FixedAntenna):
        if strategy.index > h.t:
            raise ValueError(f"antenna {strategy.index} on a {h.t}-antenna channel")
        return float(abs(h.coeffs[strategy.index - 1]) ** 2)
    raise TypeError(f"unknown strategy {strategy!r}")


def modified_threshold(params: SystemParams) -> float:
    """
    Outage threshold beta once t/K stages each cost epsilon of the codeword time

    beta = ((1 + alpha P)^(1 / (1 - (t/K) epsilon)^+) - 1) / P, and +inf (certain
    outage) when no transmission time is left.
    """
    share = 1.0 - (params.t / params.K) * params.epsilon
    if share <= 0:
        return math.inf
    if share == 1.0:
        return params.alpha
    try:
        return math.expm1(math.log1p(params.alpha * params.P) / share) / params.P
    except OverflowError:
        return math.inf


def _basis(t: int, index: int = 1) -> np.ndarray:
    vector = np.zeros(t, dtype=np.complex128)
    vector[index - 1] = 1.0
    return vector


def run_F(h: ChannelState, params: SystemParams) -> SchemeOutcome:
    """Full CSI: beamform along h/||h||; feedback rate is infinite"""
    norm_sq = h.norm_sq()
    vector = h.coeffs / math.sqrt(norm_sq) if norm_sq > 0 else _basis(h.t)
    return SchemeOutcome(
        strategy=Beamform(vector),
        antennas_trained=h.t,
        feedback_bits=None,
        outage=norm_sq < params.alpha,
    )


def run_G(h: ChannelState, params: SystemParams) -> SchemeOutcome:
    """Open loop: uniform power over the first kappa antennas, no feedback"""
    k = kappa(h.t, params.alpha)
    return SchemeOutcome(
        strategy=UniformSubset(k),
        antennas_trained=k,
        feedback_bits=0,
        outage=h.prefix(k).norm_sq() < k * params.alpha,
    )


def run_A(h: ChannelState, params: SystemParams) -> SchemeOutcome:
    """Conventional antenna selection: train all, feed back the strongest index"""
    gains = h.gains()
    tau = int(np.argmax(gains)) + 1
    return SchemeOutcome(
        strategy=FixedAntenna(tau),
        antennas_trained=h.t,
        feedback_bits=ceil_log2(h.t),
        outage=gains[tau - 1] < params.alpha,
    )


def _first_good_antenna(h: ChannelState, alpha: float) -> Optional[int]:
    hits = np.flatnonzero(h.gains() >= alpha)
    return int(hits[0]) + 1 if hits.size else None


def run_B(h: ChannelState, params: SystemParams) -> SchemeOutcome:
    """
    Interleaved antenna selection

    Antenna i is trained and answered with one bit: 1 if |h_i|^2 >= alpha (stop
    and use it), 0 otherwise. With no good antenna all t are trained and antenna 1
    is used.
    """
    first = _first_good_antenna(h, params.alpha)
    if first is None:
        return SchemeOutcome(FixedAntenna(1), h.t, h.t, outage=True)
    return SchemeOutcome(FixedAntenna(first), first, first, outage=False)


def run_B_unary(h: ChannelState, params: SystemParams) -> SchemeOutcome:
    """
    Fixed training, unary feedback

    With upsilon antennas failing before the first good one, the codeword is
    upsilon ones followed by a zero, capped at t bits (t ones when none is good).
    """
    first = _first_good_antenna(h, params.alpha)
    upsilon = h.t if first is None else first - 1
    return SchemeOutcome(
        strategy=FixedAntenna(first or 1),
        antennas_trained=h.t,
        feedback_bits=min(upsilon + 1, h.t),
        outage=first is None,
    )


def run_Ck(h_k: ChannelState, alpha: float) -> Tuple[BitString, Optional[QuantizedBeamformer]]:
    """
    Conventional deadzone feedback for a k-antenna channel

    Args:
        h_k: Channel (or prefix) known at the receiver
        alpha: Outage threshold

    Returns:
        Tuple[BitString, Optional[QuantizedBeamformer]]: The 2k(L+3)-bit codeword
        of q(h_hat; L(h_k)), or the one-bit message "0" and None when outage is
        unavoidable (the transmitter then falls back to antenna 1)
    """
    norm_sq = h_k.norm_sq()
    if norm_sq <= alpha:
        return BitString((0,)), None
    ell = sufficient_resolution(h_k, alpha)
    q = deadzone_vector(h_k.coeffs / math.sqrt(norm_sq), ell)
    return encode_beamformer(q, ell), q


def run_C(h: ChannelState, params: SystemParams) -> SchemeOutcome:
    """Scheme C_t: train every antenna, then send the deadzone codeword once"""
    bits, q = run_Ck(h, params.alpha)
    if q is None:
        return SchemeOutcome(FixedAntenna(1), h.t, len(bits), outage=True)
    return SchemeOutcome(Beamform(q.vector), h.t, len(bits), outage=False)


def _stop_stage(h: ChannelState, alpha: float) -> Optional[int]:
    for i in range(1, h.t + 1):
        if h.prefix(i).norm_sq() > alpha:
            return i
    return None


def run_D(
    h: ChannelState,
    params: SystemParams,
    quantizer_mode: QuantizerMode = "fixed",
    code: Optional[HuffmanCode] = None,
) -> SchemeOutcome:
    """
    Interleaved deadzone beamforming

    After training antenna i the receiver answers "0" while ||h_i||^2 <= alpha
    and otherwise stops with C_i(h_i), padded with zeros to t entries. Feedback
    is (i-1) request bits plus the payload: 2i(L(h_i)+3) bits in fixed mode. In
    variable mode the payload is a mode bit followed by the Huffman-coded q_v
    codeword, or by the fixed codeword when q_v stalls below alpha or would
    not be shorter (see encode_stage_payload).

    Args:
        h: Channel state
        params: System parameters (alpha, delta)
        quantizer_mode: "fixed" or "variable"
        code: Shared resolution code, required in variable mode

    Returns:
        SchemeOutcome: Outcome of the protocol
    """
    if quantizer_mode not in ("fixed", "variable"):
        raise ValueError(f"unknown quantizer mode {quantizer_mode!r}")
    if quantizer_mode == "variable" and code is None:
        raise ValueError("variable quantizer mode needs a Huffman code")

    i = _stop_stage(h, params.alpha)
    if i is None:
        return SchemeOutcome(Beamform(_basis(h.t)), h.t, h.t, outage=True)

    bits, vector = stopping_payload(h.prefix(i), params, quantizer_mode, code)
    padded = np.zeros(h.t, dtype=np.complex128)
    padded[:i] = vector
    return SchemeOutcome(Beamform(padded), i, (i - 1) + len(bits), outage=False)


def stopping_payload(
    prefix: ChannelState,
    params: SystemParams,
    quantizer_mode: QuantizerMode = "fixed",
    code: Optional[HuffmanCode] = None,
) -> Tuple[BitString, np.ndarray]:
    """
    Message Scheme D sends once ||h_i||^2 > alpha, and the beamformer it carries

    Args:
        prefix: Trained channel prefix h_i
        params: System parameters (alpha, delta)
        quantizer_mode: "fixed" or "variable"
        code: Shared resolution code, required in variable mode

    Returns:
        Tuple[BitString, np.ndarray]: The message and the i-entry vector
    """
    bits, q = run_Ck(prefix, params.alpha)
    if q is None:
        raise ValueError("no stopping message for a prefix with ||h_i||^2 <= alpha")
    if quantizer_mode == "fixed":
        return bits, q.vector
    if code is None:
        raise ValueError("variable quantizer mode needs a Huffman code")

    qv, ell = variable_rate_quantize(prefix, params.alpha, params.delta)
    shorter = variable_rate_cost(ell, code) < len(bits)
    if shorter and array_gain_of(qv.vector, prefix.coeffs) >= params.alpha:
        return encode_stage_payload(bits, encode_variable_beamformer(qv, ell, code)), qv.vector
    return encode_stage_payload(bits), q.vector


def stopping_resolutions(h: ChannelState, params: SystemParams) -> Counter:
    """
    Resolutions the greedy allocation assigns at Scheme D's stopping stage

    Feeds the histogram pass that builds the shared Huffman code; empty when
    no stage avoids outage.
    """
    i = _stop_stage(h, params.alpha)
    if i is None:
        return Counter()
    _, ell = variable_rate_quantize(h.prefix(i), params.alpha, params.delta)
    return Counter(int(value) for value in ell.ravel())


def run_Bprime(h: ChannelState, params: SystemParams) -> SchemeOutcome:
    """
    Grouped interleaved antenna selection

    Antennas are trained K at a time; after each group the receiver sends
    ceil(log2(1+m)) bits naming the first antenna of the m-antenna group with
    |h_i|^2 > beta, or none. A trailing group of t mod K antennas is handled the
    same way with m = t mod K.
    """
    beta = modified_threshold(params)
    gains = h.gains()
    trained = 0
    bits = 0
    for start in range(0, h.t, params.K):
        group = gains[start : start + params.K]
        trained += group.size
        bits += ceil_log2(1 + group.size)
        hits = np.flatnonzero(group > beta)
        if hits.size:
            return SchemeOutcome(FixedAntenna(start + int(hits[0]) + 1), trained, bits, outage=False)
    return SchemeOutcome(FixedAntenna(1), trained, bits, outage=True)


SchemeRunner = Callable[..., SchemeOutcome]

SCHEMES: Dict[str, SchemeRunner] = {
    "F": run_F,
    "G": run_G,
    "A": run_A,
    "B": run_B,
    "B_unary": run_B_unary,
    "C": run_C,
    "D": run_D,
    "Bprime": run_Bprime,
}


def run_scheme(
    scheme_id: str,
    h: ChannelState,
    params: SystemParams,
    quantizer_mode: QuantizerMode = "fixed",
    code: Optional[HuffmanCode] = None,
) -> SchemeOutcome:
    """
    Dispatch one channel state to a scheme by id

    Args:
        scheme_id: One of SCHEMES
        h: Channel state
        params: System parameters
        quantizer_mode: Quantizer for Scheme D
        code: Huffman code for Scheme D in variable mode

    Returns:
        SchemeOutcome: The scheme's outcome
    """
    if scheme_id not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme_id!r}; choose from {sorted(SCHEMES)}")
    if scheme_id == "D":
        return run_D(h, params, quantizer_mode, code)
    return SCHEMES[scheme_id](h, params)


def outage_threshold(scheme_id: str, params: SystemParams) -> float:
    """Gain below which the scheme's strategy is in outage (beta for Bprime)"""
    return modified_threshold(params) if scheme_id == "Bprime" else params.alpha
