"""Distillation analysis: block statistics, information rates, thresholds.

Classical advantage distillation (CAD) processes blocks of L matched-basis
letters into single distilled letters.  This module evaluates, in closed
form, the mutual information between the honest parties and between Alice
and an optimal coherent attacker as a function of the block length, and the
noise thresholds below which distillation can win.

All information quantities are expressed in nits, i.e. with base-n
logarithms, so a perfectly correlated pair of n-valued letters carries 1.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass

from .channel import ChannelParams

__all__ = [
    "BlockStats",
    "EveStats",
    "InfoReport",
    "ThresholdRow",
    "distilled_betas",
    "srm_success_closed",
    "eve_guess_probs",
    "info_alice_bob",
    "info_alice_eve",
    "info_deficits",
    "asymptotic_infos",
    "security_margin",
    "min_secure_block_length",
    "qed_threshold",
    "cad_threshold_closed",
    "cad_threshold_numeric",
    "threshold_table",
]

# interior points probed on (0, 1) before bisecting the numeric threshold
PRESCAN_POINTS = 64

_GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class BlockStats:
    """Distilled letter statistics after one CAD round on blocks of length L.

    ``beta0L`` is the probability that Alice's and Bob's distilled letters
    agree given the block was accepted, ``beta1L`` the probability of each
    particular disagreement, and ``p_accept`` the acceptance probability of
    the block.
    """

    beta0L: float
    beta1L: float
    p_accept: float


@dataclass(frozen=True)
class EveStats:
    """Attacker guessing probabilities for an accepted identical block.

    ``eta0L`` is the probability that the attacker's measurement identifies
    Alice's distilled letter, ``eta1L`` the probability of each particular
    wrong letter; ``eta0L + (n - 1) * eta1L = 1``.
    """

    eta0L: float
    eta1L: float


@dataclass(frozen=True)
class InfoReport:
    """Exact and asymptotic information rates at one block length.

    ``margin = i_ab - i_ae``; positive margin means secret-key distillation
    is possible at this block length.  The asymptotic fields are NaN when the
    noise parameter is exactly 0 or 1, where the large-L expansions are
    undefined.
    """

    L: int
    i_ab: float
    i_ae: float
    margin: float
    i_ab_asym: float
    i_ae_asym: float


@dataclass(frozen=True)
class ThresholdRow:
    n: int
    e_qed: float
    e_cad: float


def _check_block_length(L: int) -> int:
    L = operator.index(L)
    if L < 1:
        raise ValueError(f"block length must be at least 1, got {L}")
    return L


def _ratio_power(params: ChannelParams, L: int) -> float:
    # (beta1/beta0)^L through the exponent so deep blocks degrade gracefully
    if params.beta1 == 0.0:
        return 0.0
    return math.exp(L * math.log(params.beta1 / params.beta0))


def _overlap_power(params: ChannelParams, L: int) -> float:
    if params.lam == 0.0:
        return 0.0
    return math.exp(L * math.log(params.lam))


def distilled_betas(params: ChannelParams, L: int) -> BlockStats:
    """Letter statistics of the distilled pair for blocks of length L.

    The conditional agreement probabilities renormalize the L-th powers of
    the single-letter probabilities, and the ratio ``beta1L / beta0L`` equals
    ``(beta1 / beta0) ** L``.  The acceptance probability is
    ``beta0**L + (n - 1) * beta1**L``.
    """
    L = _check_block_length(L)
    n = params.n
    x = _ratio_power(params, L)
    denom = 1.0 + (n - 1) * x
    beta0L = 1.0 / denom
    beta1L = x / denom
    # log-domain product; underflow here means the probability is genuinely ~0
    p_accept = math.exp(L * math.log(params.beta0) + math.log1p((n - 1) * x))
    return BlockStats(beta0L, beta1L, p_accept)


def srm_success_closed(n: int, overlap: float) -> float:
    """Success probability of the square-root measurement, closed form.

    For n equiprobable symmetric pure states with common pairwise overlap
    ``g`` the optimal discrimination succeeds with probability
    ``((sqrt(1 + (n-1)g) + (n-1) sqrt(1 - g)) / n) ** 2``.
    """
    n = operator.index(n)
    if n < 2:
        raise ValueError(f"dimension must be at least 2, got {n}")
    if not 0.0 <= overlap <= 1.0:
        raise ValueError(f"overlap must lie in [0, 1], got {overlap}")
    s = math.sqrt(1.0 + (n - 1) * overlap)
    t = math.sqrt(1.0 - overlap)
    return ((s + (n - 1) * t) / n) ** 2


def _eta_pair(n: int, overlap: float) -> tuple[float, float]:
    s = math.sqrt(1.0 + (n - 1) * overlap)
    t = math.sqrt(1.0 - overlap)
    eta0 = ((s + (n - 1) * t) / n) ** 2
    # (s - t)/n rationalized to (overlap)/(s + t): no cancellation at small overlap
    eta1 = (overlap / (s + t)) ** 2
    return eta0, eta1


def eve_guess_probs(params: ChannelParams, L: int) -> EveStats:
    """Attacker guessing probabilities for an accepted identical block.

    The attacker holds L copies of an ancilla whose pairwise overlap between
    letter hypotheses is ``lam ** L``.  The optimal collective measurement is
    the square-root measurement on those symmetric states.
    """
    L = _check_block_length(L)
    g = _overlap_power(params, L)
    eta0, eta1 = _eta_pair(params.n, g)
    return EveStats(eta0, eta1)


def info_deficits(params: ChannelParams, L: int) -> tuple[float, float]:
    """Information deficits ``(1 - i_ab, 1 - i_ae)`` evaluated stably.

    The complements of the information rates decay geometrically in L and
    fall below floating-point resolution of ``1 - x`` near machine epsilon.
    This form carries the deficit itself so threshold searches remain exact
    for deep blocks; ``info_alice_bob`` and ``info_alice_eve`` are its
    complements.
    """
    L = _check_block_length(L)
    n = params.n
    ln_n = math.log(n)

    x = _ratio_power(params, L)
    denom = 1.0 + (n - 1) * x
    beta0L = 1.0 / denom
    beta1L = x / denom
    if x == 0.0:
        d_ab = 0.0
    else:
        # -beta0L*ln(beta0L) - (1-beta0L)*ln(beta1L), with -ln(beta1L) split
        # into the large L*ln(beta0/beta1) part and a log1p correction
        d_ab = (
            beta0L * math.log1p((n - 1) * x)
            + (n - 1)
            * beta1L
            * (L * math.log(params.beta0 / params.beta1) + math.log1p((n - 1) * x))
        ) / ln_n

    g = _overlap_power(params, L)
    if g == 0.0:
        d_ae = 0.0
    else:
        s = math.sqrt(1.0 + (n - 1) * g)
        t = math.sqrt(1.0 - g)
        eta0 = ((s + (n - 1) * t) / n) ** 2
        eta1 = (g / (s + t)) ** 2
        if eta1 == 0.0:
            d_ae = 0.0
        else:
            ent = -eta0 * math.log1p(-(n - 1) * eta1) + (n - 1) * eta1 * 2.0 * (
                L * math.log(1.0 / params.lam) + math.log(s + t)
            )
            d_ae = beta0L * ent / ln_n
    return d_ab, d_ae


def info_alice_bob(params: ChannelParams, L: int) -> float:
    """Mutual information, in nits, between the distilled letters of Alice
    and Bob for accepted blocks of length L.

    Equals ``1 + beta0L log_n beta0L + (1 - beta0L) log_n beta1L`` with the
    convention ``0 log 0 = 0``; 1 at zero noise and 0 at pure noise.
    """
    return 1.0 - info_deficits(params, L)[0]


def info_alice_eve(params: ChannelParams, L: int) -> float:
    """Mutual information, in nits, between Alice's distilled letter and the
    attacker's record for accepted blocks of length L.

    Equals ``1 + beta0L (eta0L log_n eta0L + (1 - eta0L) log_n eta1L)``: the
    attacker resolves non-identical accepted blocks perfectly and guesses
    identical ones through the square-root measurement.
    """
    return 1.0 - info_deficits(params, L)[1]


def asymptotic_infos(params: ChannelParams, L: int) -> tuple[float, float]:
    """Large-L expansions of the two information rates.

    Returns ``(i_ab_asym, i_ae_asym)`` where the deficits are
    ``(n-1) (beta1/beta0)^L log_n (beta0/beta1)^L`` and
    ``(1/4)(n-1) lam^(2L) log_n (1/lam)^(2L)``.  Undefined at noise 0 or 1,
    where one of the logarithms degenerates.
    """
    L = _check_block_length(L)
    if params.epsilon == 0.0 or params.epsilon == 1.0:
        raise ValueError("asymptotic forms are undefined at noise 0 or 1")
    n = params.n
    ln_n = math.log(n)
    x = _ratio_power(params, L)
    i_ab = 1.0 - (n - 1) * x * L * math.log(params.beta0 / params.beta1) / ln_n
    g2 = math.exp(2.0 * L * math.log(params.lam))
    i_ae = 1.0 - 0.5 * (n - 1) * g2 * L * math.log(1.0 / params.lam) / ln_n
    return i_ab, i_ae


def security_margin(params: ChannelParams, L: int) -> InfoReport:
    """Bundle exact and asymptotic rates at one block length.

    The margin is computed from the stable deficits, so it keeps its sign
    even when both rates round to 1.
    """
    d_ab, d_ae = info_deficits(params, L)
    if 0.0 < params.epsilon < 1.0:
        i_ab_asym, i_ae_asym = asymptotic_infos(params, L)
    else:
        i_ab_asym = i_ae_asym = math.nan
    return InfoReport(
        L=operator.index(L),
        i_ab=1.0 - d_ab,
        i_ae=1.0 - d_ae,
        margin=d_ae - d_ab,
        i_ab_asym=i_ab_asym,
        i_ae_asym=i_ae_asym,
    )


def min_secure_block_length(params: ChannelParams, l_max: int) -> int | None:
    """Smallest block length L <= l_max with positive margin, or None.

    The margin is not monotone in L (it rises through zero and decays back
    toward it), so the scan is exhaustive from L = 1.
    """
    l_max = operator.index(l_max)
    if l_max < 1:
        raise ValueError(f"l_max must be at least 1, got {l_max}")
    for L in range(1, l_max + 1):
        d_ab, d_ae = info_deficits(params, L)
        if d_ae - d_ab > 0.0:
            return L
    return None


def qed_threshold(n: int) -> float:
    """Noise threshold n/(n+1) below which quantum distillation can win."""
    n = operator.index(n)
    if n < 2:
        raise ValueError(f"dimension must be at least 2, got {n}")
    return n / (n + 1.0)


def cad_threshold_closed(n: int) -> float:
    """Asymptotic noise threshold n/(n + golden mean) for CAD.

    Strictly below the quantum distillation threshold for every n, since the
    golden mean exceeds 1.
    """
    n = operator.index(n)
    if n < 2:
        raise ValueError(f"dimension must be at least 2, got {n}")
    return n / (n + _GOLDEN)


def cad_threshold_numeric(n: int, l_max: int = 200, tol: float = 1e-6) -> float:
    """Largest noise level at which some block length L <= l_max is secure.

    Numerically inverts the exact finite-L criterion that the closed form
    summarizes asymptotically: the supremum of the noise levels where
    ``min_secure_block_length`` succeeds.  A pre-scan over interior grid
    points brackets the last secure-to-insecure transition (guarding the
    monotonicity the bisection assumes), then bisection refines the bracket
    to ``tol``.  At finite l_max the result sits slightly below the closed
    form, approaching it as l_max grows.
    """
    n = operator.index(n)
    if n < 2:
        raise ValueError(f"dimension must be at least 2, got {n}")
    l_max = operator.index(l_max)
    if l_max < 1:
        raise ValueError(f"l_max must be at least 1, got {l_max}")
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")

    from .channel import channel_from_noise

    def secure(eps: float) -> bool:
        return min_secure_block_length(channel_from_noise(n, eps), l_max) is not None

    grid = [k / (PRESCAN_POINTS + 1.0) for k in range(1, PRESCAN_POINTS + 1)]
    flags = [secure(e) for e in grid]
    true_idx = [i for i, f in enumerate(flags) if f]
    if not true_idx:
        raise ValueError(
            f"no secure noise level found on the pre-scan grid for n={n}, l_max={l_max}"
        )
    last = true_idx[-1]
    lo = grid[last]
    hi = grid[last + 1] if last + 1 < len(grid) else 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if secure(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def threshold_table(n_min: int, n_max: int) -> list[ThresholdRow]:
    """Closed-form thresholds for every dimension in [n_min, n_max]."""
    n_min = operator.index(n_min)
    n_max = operator.index(n_max)
    if n_min < 2:
        raise ValueError(f"dimension must be at least 2, got {n_min}")
    if n_max < n_min:
        raise ValueError(f"need n_min <= n_max, got {n_min} > {n_max}")
    return [ThresholdRow(n, qed_threshold(n), cad_threshold_closed(n)) for n in range(n_min, n_max + 1)]
