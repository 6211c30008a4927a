"""Channel model for tomographic qunit key distribution.

A symmetric noisy channel on an n-dimensional carrier is summarized by a
single noise parameter ``epsilon`` in [0, 1]: 0 is a noiseless channel, 1 is
pure noise.  On matched-basis rounds Alice and Bob agree with probability
``beta0`` and land on each of the n - 1 other letters with probability
``beta1``, normalized as ``beta0 + (n - 1) * beta1 = 1``.  The pairwise
overlap ``lam`` of the attacker's ancilla states attached to agreeing rounds
is determined by the same parameter.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass

__all__ = [
    "ChannelParams",
    "channel_from_noise",
    "channel_from_betas",
    "ancilla_overlap",
]

# coherence of the redundantly stored fields, checked once at construction
INTERNAL_TOL = 1e-12
# slack accepted on user-supplied (beta0, beta1) pairs
INPUT_TOL = 1e-9


def _lam_closed(n: int, epsilon: float) -> float:
    # equals 1 - beta1/beta0, written so the endpoints come out exact
    return (1.0 - epsilon) / (1.0 - (1.0 - 1.0 / n) * epsilon)


@dataclass(frozen=True)
class ChannelParams:
    """Scalar description of one symmetric channel.

    All five fields are stored redundantly and validated against each other at
    construction, so downstream code may use whichever form is convenient
    without re-deriving anything.

    Attributes
    ----------
    n : int
        Carrier dimension, at least 2.
    epsilon : float
        Noise parameter in [0, 1].
    beta0 : float
        Probability that Alice's and Bob's letters agree on a matched basis.
    beta1 : float
        Probability of each particular disagreement letter.
    lam : float
        Overlap of the attacker's ancilla states for agreeing letters;
        1 at zero noise, 0 at pure noise.
    """

    n: int
    epsilon: float
    beta0: float
    beta1: float
    lam: float

    def __post_init__(self) -> None:
        n = operator.index(self.n)
        if n < 2:
            raise ValueError(f"dimension must be at least 2, got {n}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"noise parameter must lie in [0, 1], got {self.epsilon}")
        if not 0.0 <= self.beta1 <= self.beta0 <= 1.0:
            raise ValueError(
                f"need 0 <= beta1 <= beta0 <= 1, got beta0={self.beta0}, beta1={self.beta1}"
            )
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"ancilla overlap must lie in [0, 1], got {self.lam}")
        errs = (
            abs(self.beta0 + (n - 1) * self.beta1 - 1.0),
            abs(self.epsilon - n * self.beta1),
            abs(self.lam - _lam_closed(n, self.epsilon)),
            abs(self.lam - (1.0 - self.beta1 / self.beta0)) if self.beta0 > 0.0 else 0.0,
        )
        if max(errs) > INTERNAL_TOL:
            raise ValueError(
                "inconsistent channel fields: normalization or overlap off by "
                f"{max(errs):.3e} (tolerance {INTERNAL_TOL})"
            )


def channel_from_noise(n: int, epsilon: float) -> ChannelParams:
    """Build channel parameters from the dimension and the noise parameter."""
    n = operator.index(n)
    if n < 2:
        raise ValueError(f"dimension must be at least 2, got {n}")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"noise parameter must lie in [0, 1], got {epsilon}")
    beta1 = epsilon / n
    beta0 = 1.0 - (n - 1) * epsilon / n
    return ChannelParams(n, float(epsilon), beta0, beta1, _lam_closed(n, epsilon))


def channel_from_betas(n: int, beta0: float, beta1: float) -> ChannelParams:
    """Build channel parameters from the matched-basis letter probabilities.

    The pair is accepted when ``beta0 + (n - 1) * beta1`` is within 1e-9 of 1
    and ``beta1 <= beta0``; the result is canonicalized through the noise
    parameter ``epsilon = n * beta1``, so it is identical to the equivalent
    ``channel_from_noise`` call.
    """
    n = operator.index(n)
    if n < 2:
        raise ValueError(f"dimension must be at least 2, got {n}")
    if beta1 < -INPUT_TOL or beta0 < 0.0:
        raise ValueError(f"probabilities must be nonnegative, got beta0={beta0}, beta1={beta1}")
    if beta1 > beta0 + INPUT_TOL:
        raise ValueError(f"beta1 must not exceed beta0, got beta0={beta0}, beta1={beta1}")
    norm = beta0 + (n - 1) * beta1
    if abs(norm - 1.0) > INPUT_TOL:
        raise ValueError(f"beta0 + (n-1)*beta1 = {norm!r} is not normalized (tolerance {INPUT_TOL})")
    epsilon = min(1.0, max(0.0, n * beta1))
    return channel_from_noise(n, epsilon)


def ancilla_overlap(params: ChannelParams) -> float:
    """Overlap of the attacker's ancilla states for agreeing letters.

    Agrees with ``1 - beta1 / beta0`` to within 1e-12; equals 1 only at zero
    noise and 0 only at pure noise.
    """
    return _lam_closed(params.n, params.epsilon)
