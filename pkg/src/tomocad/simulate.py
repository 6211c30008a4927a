"""Monte Carlo model of the CAD post-processing protocol.

Blocks of L matched-basis letters are processed one CAD round: Alice draws a
random addend, announces the letterwise sum, Bob accepts when the
announcement minus his own block is constant, and the attacker either reads
the distilled letters exactly (shifted blocks) or measures her ancillas
(identical blocks).  The per-block randomness comes from a counter-based
generator so results are reproducible block by block and independent of how
the blocks are batched.

Stream layout contract: block i consumes the doubles
``[i * words_per_block, (i + 1) * words_per_block)`` of the value stream,
where ``words_per_block`` is ``2 L + 2`` rounded up to a multiple of 4.
Within a block the slots are: L letters for Alice, L channel shifts for Bob,
one addend, one attacker draw, then padding.  The value stream and the
sifting stream are the two children of ``SeedSequence(seed)``.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .analysis import EveStats, eve_guess_probs
from .channel import ChannelParams

__all__ = [
    "SimConfig",
    "SimResult",
    "RawBlockPair",
    "BlockOutcome",
    "sample_sifted_key",
    "cad_encode",
    "cad_decide",
    "classify_block",
    "eve_candidates",
    "sample_eve_guess",
    "process_block",
    "run_cad_experiment",
    "plugin_mutual_information",
    "estimate_noise",
]

# doubles drawn per chunk are capped around this budget to bound memory
_CHUNK_BUDGET = 4_000_000


def _check_seed(seed: int) -> int:
    seed = operator.index(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo run: channel, block length, block count, seed."""

    params: ChannelParams
    block_length: int
    n_blocks: int
    seed: int
    simulate_sifting: bool = False

    def __post_init__(self) -> None:
        if operator.index(self.block_length) < 1:
            raise ValueError(f"block length must be at least 1, got {self.block_length}")
        if operator.index(self.n_blocks) < 1:
            raise ValueError(f"number of blocks must be at least 1, got {self.n_blocks}")
        _check_seed(self.seed)


@dataclass(frozen=True)
class RawBlockPair:
    """Alice's and Bob's letters for one block, before any announcement."""

    alice: tuple[int, ...]
    bob: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.alice) != len(self.bob):
            raise ValueError("block halves must have equal length")
        if not self.alice:
            raise ValueError("blocks must be nonempty")


@dataclass(frozen=True)
class BlockOutcome:
    """Result of one CAD round on one block.

    ``shift`` is the constant letterwise difference (bob - alice) mod n of an
    accepted block: 0 means the halves were identical and the attacker had to
    measure, nonzero means she knew both distilled letters exactly.  All
    fields after ``good`` are None for rejected blocks.
    """

    good: bool
    shift: int | None
    alice_distilled: int | None
    bob_distilled: int | None
    eve_guess: int | None


@dataclass(frozen=True)
class SimResult:
    """Aggregated counts and plug-in estimates of one experiment.

    ``joint_ab`` counts (alice_distilled, bob_distilled) over accepted
    blocks, ``joint_ae`` counts (alice_distilled, eve_guess), and
    ``joint_ae_case1`` is the part of ``joint_ae`` from identical blocks.
    ``i_ae_hat`` feeds the case-resolved n x 2n table to the plug-in
    estimator: the attacker's record is the pair (case, guess), and
    collapsing the two cases first would discard her certainty about shifted
    blocks and systematically undershoot the closed form.
    """

    n: int
    block_length: int
    n_blocks: int
    seed: int
    sifting: bool
    accepted: int
    rejected: int
    case1: int
    case2: int
    joint_ab: np.ndarray
    joint_ae: np.ndarray
    joint_ae_case1: np.ndarray
    beta0L_hat: float
    p_accept_hat: float
    i_ab_hat: float
    i_ae_hat: float
    sift_kept: int
    sift_total: int


def _letters_from_uniform(u: np.ndarray, n: int) -> np.ndarray:
    return np.minimum((u * n).astype(np.int64), n - 1)


def _shifts_from_uniform(u: np.ndarray, p0: float, p1: float, n: int) -> np.ndarray:
    # 0 with probability p0, each of 1..n-1 with probability p1
    if p1 == 0.0:
        return np.zeros(u.shape, dtype=np.int64)
    tail = 1 + np.minimum(((u - p0) / p1).astype(np.int64), n - 2)
    return np.where(u < p0, 0, tail)


def sample_sifted_key(params: ChannelParams, length: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Matched-basis letter pairs drawn from the channel distribution.

    Alice's letters are uniform; Bob's agree with probability beta0 and land
    on each particular other letter with probability beta1.  The same seed
    reproduces the same pair of arrays exactly.
    """
    length = operator.index(length)
    if length < 1:
        raise ValueError(f"length must be at least 1, got {length}")
    rng = Generator(Philox(SeedSequence(_check_seed(seed))))
    u = rng.random((length, 2))
    alice = _letters_from_uniform(u[:, 0], params.n)
    shift = _shifts_from_uniform(u[:, 1], params.beta0, params.beta1, params.n)
    return alice, (alice + shift) % params.n


def _check_block(block, n: int) -> tuple[int, ...]:
    letters = tuple(operator.index(v) for v in block)
    if not letters:
        raise ValueError("blocks must be nonempty")
    if any(not 0 <= v < n for v in letters):
        raise ValueError(f"letters must lie in [0, {n}), got {letters}")
    return letters


def _check_letter(v: int, n: int, name: str) -> int:
    v = operator.index(v)
    if not 0 <= v < n:
        raise ValueError(f"{name} must lie in [0, {n}), got {v}")
    return v


def cad_encode(block, addend: int, n: int) -> tuple[int, ...]:
    """Alice's public announcement: the letterwise sum with her addend."""
    letters = _check_block(block, n)
    addend = _check_letter(addend, n, "addend")
    return tuple((v + addend) % n for v in letters)


def cad_decide(announced, block, n: int) -> int | None:
    """Bob's acceptance rule for one announced block.

    He subtracts his own letters from the announcement; when the difference
    is the same at every position that value is his distilled letter, and
    the return value.  A non-constant difference rejects the block (None).
    """
    announced = _check_block(announced, n)
    letters = _check_block(block, n)
    if len(announced) != len(letters):
        raise ValueError("announced block and own block must have equal length")
    diffs = {(a - b) % n for a, b in zip(announced, letters)}
    if len(diffs) == 1:
        return diffs.pop()
    return None


def classify_block(alice_block, bob_block, n: int) -> int | None:
    """Constant letterwise shift (bob - alice) mod n of a block pair.

    Returns 0 when the halves are identical, the common nonzero shift when
    they differ by a constant, and None when the shift is not constant.  A
    block is accepted by ``cad_decide`` exactly when this is not None.
    """
    alice = _check_block(alice_block, n)
    bob = _check_block(bob_block, n)
    if len(alice) != len(bob):
        raise ValueError("block halves must have equal length")
    shifts = {(b - a) % n for a, b in zip(alice, bob)}
    if len(shifts) == 1:
        return shifts.pop()
    return None


def eve_candidates(announced, n: int) -> list[tuple[tuple[int, ...], int]]:
    """All (block, addend) pairs consistent with one announcement.

    Each addend v in [0, n) pairs with the block obtained by subtracting v
    letterwise, so the announcement alone narrows Alice's block to n equally
    structured candidates.
    """
    announced = _check_block(announced, n)
    return [(tuple((a - v) % n for a in announced), v) for v in range(n)]


def sample_eve_guess(shift: int, alice_distilled: int, eve_stats: EveStats, n: int, rng) -> int:
    """The attacker's guess of Alice's distilled letter for an accepted block.

    A nonzero shift identifies the letter exactly.  For identical blocks
    (shift 0) the square-root measurement returns the true letter with
    probability eta0L and each particular other letter with probability
    eta1L, consuming one uniform draw from ``rng``.
    """
    if shift is None:
        raise ValueError("rejected blocks carry no guess")
    n = operator.index(n)
    shift = _check_letter(shift, n, "shift")
    alice_distilled = _check_letter(alice_distilled, n, "alice_distilled")
    if shift != 0:
        return alice_distilled
    u = rng.random()
    if eve_stats.eta1L == 0.0 or u < eve_stats.eta0L:
        offset = 0
    else:
        offset = 1 + min(int((u - eve_stats.eta0L) / eve_stats.eta1L), n - 2)
    return (alice_distilled + offset) % n


def process_block(alice_block, bob_block, addend: int, eve_stats: EveStats, n: int, rng) -> BlockOutcome:
    """Run one full CAD round on one block pair."""
    announced = cad_encode(alice_block, addend, n)
    decided = cad_decide(announced, bob_block, n)
    shift = classify_block(alice_block, bob_block, n)
    if shift is None:
        return BlockOutcome(False, None, None, None, None)
    guess = sample_eve_guess(shift, addend, eve_stats, n, rng)
    return BlockOutcome(True, shift, addend, decided, guess)


def _value_generator(ss_values: SeedSequence, start_block: int, words_per_block: int) -> Generator:
    bg = Philox(ss_values)
    # the counter advances in blocks of 4 doubles; words_per_block is a multiple of 4
    bg.advance(start_block * (words_per_block // 4))
    return Generator(bg)


def _simulate_sifting(ss_sift: SeedSequence, n: int, target: int) -> int:
    # raw pairs survive sifting with probability 1/(n+1); count the trials
    # needed for `target` survivors
    p = 1.0 / (n + 1)
    rng = Generator(Philox(ss_sift))
    total = 0
    remaining = target
    while remaining > 0:
        m = max(1024, min(1 << 20, int(remaining * (n + 1) * 1.2)))
        kept = np.cumsum(rng.random(m) < p)
        if kept[-1] >= remaining:
            total += int(np.searchsorted(kept, remaining)) + 1
            remaining = 0
        else:
            total += m
            remaining -= int(kept[-1])
    return total


def run_cad_experiment(config: SimConfig, chunk_blocks: int | None = None) -> SimResult:
    """Simulate one CAD round over many blocks and aggregate the counts.

    Blocks are processed in batches, but each block's draws come from its
    own fixed slice of the value stream (see the module docstring), so the
    result is bit-identical for any ``chunk_blocks`` and reproducible from
    (seed, block index) alone.  Plug-in information estimates are NaN when
    no block was accepted.
    """
    params = config.params
    n = params.n
    L = operator.index(config.block_length)
    blocks = operator.index(config.n_blocks)
    eve = eve_guess_probs(params, L)

    payload = 2 * L + 2
    words = -(-payload // 4) * 4
    ss_values, ss_sift = SeedSequence(_check_seed(config.seed)).spawn(2)

    if chunk_blocks is None:
        chunk_blocks = max(1, min(blocks, _CHUNK_BUDGET // words))
    elif operator.index(chunk_blocks) < 1:
        raise ValueError(f"chunk_blocks must be at least 1, got {chunk_blocks}")

    joint_ab = np.zeros((n, n), dtype=np.int64)
    joint_ae1 = np.zeros((n, n), dtype=np.int64)
    joint_ae2 = np.zeros((n, n), dtype=np.int64)
    accepted = 0
    case1 = 0

    start = 0
    while start < blocks:
        m = min(chunk_blocks, blocks - start)
        u = _value_generator(ss_values, start, words).random((m, words))
        shifts = _shifts_from_uniform(u[:, L : 2 * L], params.beta0, params.beta1, n)
        addend = _letters_from_uniform(u[:, 2 * L], n)
        u_eve = u[:, 2 * L + 1]

        good = np.all(shifts == shifts[:, :1], axis=1)
        idx = np.nonzero(good)[0]
        d = shifts[idx, 0]
        v = addend[idx]
        bob = (v - d) % n
        is_case1 = d == 0
        offs = _shifts_from_uniform(u_eve[idx], eve.eta0L, eve.eta1L, n)
        guess = np.where(is_case1, (v + offs) % n, v)

        np.add.at(joint_ab, (v, bob), 1)
        np.add.at(joint_ae1, (v[is_case1], guess[is_case1]), 1)
        np.add.at(joint_ae2, (v[~is_case1], guess[~is_case1]), 1)
        accepted += len(idx)
        case1 += int(is_case1.sum())
        start += m

    if config.simulate_sifting:
        sift_kept = blocks * L
        sift_total = _simulate_sifting(ss_sift, n, sift_kept)
    else:
        sift_kept = sift_total = 0

    joint_ae = joint_ae1 + joint_ae2
    if accepted > 0:
        beta0L_hat = case1 / accepted
        i_ab_hat = plugin_mutual_information(joint_ab, n)
        i_ae_hat = plugin_mutual_information(np.concatenate([joint_ae1, joint_ae2], axis=1), n)
    else:
        beta0L_hat = math.nan
        i_ab_hat = math.nan
        i_ae_hat = math.nan

    return SimResult(
        n=n,
        block_length=L,
        n_blocks=blocks,
        seed=config.seed,
        sifting=config.simulate_sifting,
        accepted=accepted,
        rejected=blocks - accepted,
        case1=case1,
        case2=accepted - case1,
        joint_ab=joint_ab,
        joint_ae=joint_ae,
        joint_ae_case1=joint_ae1,
        beta0L_hat=beta0L_hat,
        p_accept_hat=accepted / blocks,
        i_ab_hat=i_ab_hat,
        i_ae_hat=i_ae_hat,
        sift_kept=sift_kept,
        sift_total=sift_total,
    )


def plugin_mutual_information(joint_counts, n: int) -> float:
    """Plug-in mutual information of a count table, in base-n logarithms.

    The empirical joint distribution is used directly, without bias
    correction; the estimator approaches the true rate from above at a bias
    of order (cells / samples).  Rejects empty tables.
    """
    n = operator.index(n)
    if n < 2:
        raise ValueError(f"log base must be at least 2, got {n}")
    c = np.asarray(joint_counts, dtype=float)
    if c.ndim != 2:
        raise ValueError(f"joint counts must be a 2-d table, got shape {c.shape}")
    if (c < 0).any():
        raise ValueError("counts must be nonnegative")
    total = c.sum()
    if not total > 0:
        raise ValueError("count table is empty")
    p = c / total
    marg = np.outer(p.sum(axis=1), p.sum(axis=0))
    nz = p > 0
    return float((p[nz] * np.log(p[nz] / marg[nz])).sum() / math.log(n))


def estimate_noise(alice, bob, n: int) -> float:
    """Noise parameter estimated from the mismatch frequency of a sifted key.

    The per-letter mismatch probability is (n-1)/n times the noise
    parameter, so the estimate is ``f * n / (n - 1)``, clamped into [0, 1].
    """
    n = operator.index(n)
    if n < 2:
        raise ValueError(f"dimension must be at least 2, got {n}")
    a = np.asarray(alice)
    b = np.asarray(bob)
    if a.shape != b.shape:
        raise ValueError(f"key halves must have equal shape, got {a.shape} and {b.shape}")
    if a.size == 0:
        raise ValueError("keys must be nonempty")
    f = float(np.mean(a != b))
    return min(1.0, f * n / (n - 1))
