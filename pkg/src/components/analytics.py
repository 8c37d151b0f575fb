"""
Closed forms, bounds and asymptotic labels for every scheme

These are the oracles the Monte Carlo estimates are checked against.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple, Union

from src.components.channel_model import SystemParams, gamma_tail, kappa, poisson_pmf
from src.components.quantizer import ceil_log2
from src.components.schemes import modified_threshold


class Rate(Enum):
    """Marker for a rate that is not a finite number"""

    INFINITE = "inf"

    def __str__(self) -> str:
        return self.value


class Validity(Enum):
    """How a reported figure relates to the true value"""

    EXACT = "exact"
    UPPER_BOUND = "upper-bound"
    LOWER_BOUND = "lower-bound"
    ASYMPTOTIC = "asymptotic"
    APPROXIMATE = "approximate"


RateValue = Union[float, Rate]


@dataclass(frozen=True)
class AnalyticReport:
    """Analytic outage, training length and feedback rate of one scheme"""

    scheme: str
    outage: float
    tl: float
    fr: RateValue
    validity: Validity = Validity.EXACT
    outage_bounds: Optional[Tuple[float, float]] = None
    asymptotic: Optional[str] = None


def _check(t: int, alpha: float) -> None:
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")


def full_csi_sandwich(t: int, alpha: float) -> Tuple[float, float]:
    """alpha^t e^-alpha / t! <= P(||h||^2 <= alpha) <= alpha^t / t!"""
    upper = math.exp(t * math.log(alpha) - math.lgamma(t + 1))
    return upper * math.exp(-alpha), upper


def proposition1_bounds(t: int, alpha: float) -> Dict[str, Tuple[float, float]]:
    """
    Bound pairs behind the t-asymptotics of the full-CSI and open-loop outage

    Returns:
        Dict[str, Tuple[float, float]]: "full_csi" always; "open_loop" (bounds
        on P(||h||^2 <= t alpha)) only for alpha < 1
    """
    _check(t, alpha)
    bounds = {"full_csi": full_csi_sandwich(t, alpha)}
    if alpha < 1:
        lower = poisson_pmf(t, t * alpha)
        bounds["open_loop"] = (lower, lower / (1 - alpha))
    return bounds


def analytic_A_B(t: int, alpha: float) -> Dict[str, AnalyticReport]:
    """
    Antenna selection, conventional (A), interleaved (B) and unary-feedback

    out = (1 - e^-alpha)^t for all three; tl(B) = fr(B) = fr(B_unary) =
    e^alpha (1 - (1 - e^-alpha)^t); tl(A) = tl(B_unary) = t; fr(A) = ceil(log2 t).

    Returns:
        Dict[str, AnalyticReport]: Reports keyed "A", "B" and "B_unary"
    """
    _check(t, alpha)
    miss = -math.expm1(-alpha)
    outage = miss**t
    interleaved = math.exp(alpha) * (1 - outage)
    return {
        "A": AnalyticReport("A", outage, float(t), float(ceil_log2(t))),
        "B": AnalyticReport("B", outage, interleaved, interleaved),
        "B_unary": AnalyticReport("B_unary", outage, float(t), interleaved),
    }


def analytic_F(t: int, alpha: float) -> AnalyticReport:
    """Full CSI: out = P(||h||^2 <= alpha), every antenna trained, infinite feedback"""
    _check(t, alpha)
    return AnalyticReport(
        "F",
        gamma_tail(t, alpha),
        float(t),
        Rate.INFINITE,
        outage_bounds=full_csi_sandwich(t, alpha),
        asymptotic="Theta(alpha^t / t!)",
    )


def analytic_G(t: int, alpha: float) -> AnalyticReport:
    """Open loop: out = P(||h_kappa||^2 < kappa alpha), tl = kappa, fr = 0"""
    _check(t, alpha)
    k = kappa(t, alpha)
    if alpha < 1:
        label = "Theta((t alpha)^t e^(-alpha t) / t!)"
    else:
        label = "Theta(1)"
    return AnalyticReport("G", gamma_tail(k, k * alpha), float(k), 0.0, asymptotic=label)


def analytic_Bprime(t: int, alpha: float, P: float, epsilon: float, K: int) -> AnalyticReport:
    """
    Grouped interleaved selection with per-stage cost epsilon

    With p = 1 - e^-beta: out = p^t, tl = K (1 - p^t) / (1 - p^K) and
    fr = ceil(log2(1+K)) (1 - p^t) / (1 - p^K). The closed forms assume K | t;
    otherwise the report is marked approximate.
    """
    _check(t, alpha)
    if not 1 <= K <= t:
        raise ValueError(f"group size K={K} outside 1..{t}")
    params = SystemParams(t=t, P=P, alpha=alpha, epsilon=epsilon, K=K)
    beta = modified_threshold(params)

    miss = 1.0 if math.isinf(beta) else -math.expm1(-beta)
    outage = miss**t
    if miss >= 1.0:
        groups = t / K
    else:
        groups = (1 - outage) / (1 - miss**K)
    validity = Validity.EXACT if t % K == 0 else Validity.APPROXIMATE
    return AnalyticReport("Bprime", outage, K * groups, ceil_log2(1 + K) * groups, validity)


def theorem2_bounds(alpha: float) -> Tuple[float, float]:
    """Upper bounds (1 + alpha, 92 (1 + alpha^3)) on tl(D) and fr(D)"""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return 1 + alpha, 92 * (1 + alpha**3)


def appendixB_stage_probs(alpha: float, i: int) -> float:
    """
    P(Scheme D stops right after training antenna i)

    = P(||h_{i-1}||^2 <= alpha < ||h_i||^2) = alpha^(i-1) e^-alpha / (i-1)!
    """
    if i < 1:
        raise ValueError(f"stage index is 1-based, got {i}")
    return poisson_pmf(i - 1, alpha)


def appendixB_training_length(t: int, alpha: float) -> float:
    """Exact tl(D) = sum_i i P(A_i) + t P(||h||^2 <= alpha)"""
    _check(t, alpha)
    stops = sum(i * appendixB_stage_probs(alpha, i) for i in range(1, t + 1))
    return stops + t * gamma_tail(t, alpha)


def analytic_D(t: int, alpha: float) -> AnalyticReport:
    """Interleaved beamforming: exact outage and tl, fr as its 92(1+alpha^3) bound"""
    _check(t, alpha)
    _, fr_bound = theorem2_bounds(alpha)
    return AnalyticReport(
        "D",
        gamma_tail(t, alpha),
        appendixB_training_length(t, alpha),
        fr_bound,
        Validity.UPPER_BOUND,
    )


def analytic_C(t: int, alpha: float) -> AnalyticReport:
    """Conventional deadzone scheme: exact outage, tl = t, fr >= P(out) + 6t P(no out)"""
    _check(t, alpha)
    outage = gamma_tail(t, alpha)
    return AnalyticReport("C", outage, float(t), outage + 6 * t * (1 - outage), Validity.LOWER_BOUND)


def analytic_report(scheme_id: str, params: SystemParams) -> Optional[AnalyticReport]:
    """
    Closed form for a scheme at given parameters

    Args:
        scheme_id: Scheme id
        params: System parameters

    Returns:
        Optional[AnalyticReport]: The report, or None when no closed form exists
    """
    t, alpha = params.t, params.alpha
    if scheme_id in ("A", "B", "B_unary"):
        return analytic_A_B(t, alpha)[scheme_id]
    if scheme_id == "F":
        return analytic_F(t, alpha)
    if scheme_id == "G":
        return analytic_G(t, alpha)
    if scheme_id == "C":
        return analytic_C(t, alpha)
    if scheme_id == "D":
        return analytic_D(t, alpha)
    if scheme_id == "Bprime":
        return analytic_Bprime(t, alpha, params.P, params.epsilon, params.K)
    return None
