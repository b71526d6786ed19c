"""Synthetic corpora for experiments and tests.

Embedding-side: vMF mixtures with controllable means, concentrations and
cluster weights (including deliberately imbalanced "one giant cap plus
small caps" layouts that stress collapse behaviour). Text-side: documents
drawn from per-cluster vocabularies mixed with a shared noise vocabulary,
so cluster identity is recoverable from tokens alone.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, SizeMismatchError
from .geometry import normalize, sample_uniform_sphere, sample_vmf


def mixture_means(k: int, d: int, seed: int, arrangement: str = "orthogonal") -> np.ndarray:
    """k unit mean directions: mutually orthogonal (requires k <= d) or
    uniform random."""
    rng = np.random.default_rng(seed)
    if arrangement == "orthogonal":
        if k > d:
            raise DimensionMismatchError(f"cannot fit {k} orthogonal means in d={d}")
        q, _ = np.linalg.qr(rng.standard_normal((d, k)))
        return q.T.copy()
    if arrangement == "random":
        return sample_uniform_sphere(k, d, rng)
    raise ValueError(f"unknown arrangement {arrangement!r}")


def sample_mixture(
    n: int,
    means: np.ndarray,
    kappas: np.ndarray,
    weights: np.ndarray | None = None,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw n points from the vMF mixture; returns (X, true labels).

    weights default to uniform; they are normalized if they do not sum
    to 1. Component draws use child seeds split from the master seed, so
    the overall draw is deterministic.
    """
    means = normalize(np.asarray(means, dtype=np.float64))
    kappas = np.asarray(kappas, dtype=np.float64)
    k = means.shape[0]
    if kappas.shape != (k,):
        raise SizeMismatchError(f"{k} means but kappas shape {kappas.shape}")
    if weights is None:
        weights = np.full(k, 1.0 / k)
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (k,):
            raise SizeMismatchError(f"{k} means but weights shape {weights.shape}")
        if np.any(weights < 0) or weights.sum() <= 0:
            raise ValueError("weights must be nonnegative with positive sum")
        weights = weights / weights.sum()

    seq = np.random.SeedSequence(seed)
    label_rng = np.random.default_rng(seq.spawn(1)[0])
    labels = label_rng.choice(k, size=n, p=weights)
    X = np.empty((n, means.shape[1]))
    comp_seeds = seq.spawn(k + 1)[1:]
    for j in range(k):
        rows = np.flatnonzero(labels == j)
        if rows.size == 0:
            continue
        X[rows] = sample_vmf(
            means[j], float(kappas[j]), rows.size, np.random.default_rng(comp_seeds[j])
        )
    return X, labels


def make_text_corpus(
    labels: np.ndarray,
    k: int,
    seed: int = 0,
    words_per_cluster: int = 40,
    noise_words: int = 60,
    noise_rate: float = 0.3,
    doc_len: int = 30,
) -> list[str]:
    """One document per label: doc_len tokens, each drawn from the label's
    private vocabulary with probability 1 - noise_rate, else from the
    shared noise vocabulary. Token spellings encode nothing beyond the
    vocabulary id."""
    if not 0.0 <= noise_rate <= 1.0:
        raise ValueError(f"noise_rate must lie in [0, 1], got {noise_rate}")
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValueError("labels must lie in [0, k)")
    rng = np.random.default_rng(seed)
    vocab = [
        [f"w{c}x{j}" for j in range(words_per_cluster)] for c in range(k)
    ]
    noise = [f"zq{j}" for j in range(noise_words)]
    docs = []
    for lab in labels:
        own = vocab[int(lab)]
        use_noise = rng.random(doc_len) < noise_rate
        own_ids = rng.integers(len(own), size=doc_len)
        noise_ids = rng.integers(len(noise), size=doc_len)
        tokens = [
            noise[noise_ids[t]] if use_noise[t] else own[own_ids[t]]
            for t in range(doc_len)
        ]
        docs.append(" ".join(tokens))
    return docs


def collapse_stress_corpus(
    n: int,
    k: int,
    d: int,
    seed: int,
    giant_share: float = 0.7,
    giant_kappa: float = 30.0,
    small_kappa: float = 10.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Anisotropy-stressed layout: one dominant dense cap holding
    giant_share of the mass plus k - 1 small diffuse caps. Euclidean
    k-means parks a single center on the dense cap and inherits its full
    share; adaptive concentrations shrink the dense component's catchment
    and a balance penalty splits it outright."""
    if k < 2:
        raise ValueError(f"need k >= 2, got {k}")
    if not 0.0 < giant_share < 1.0:
        raise ValueError(f"giant_share must lie in (0, 1), got {giant_share}")
    means = mixture_means(k, d, seed, arrangement="orthogonal" if k <= d else "random")
    kappas = np.full(k, small_kappa)
    kappas[0] = giant_kappa
    weights = np.full(k, (1.0 - giant_share) / (k - 1))
    weights[0] = giant_share
    return sample_mixture(n, means, kappas, weights, seed=seed)


def crowded_trio_corpus(
    n: int,
    d: int,
    seed: int,
    tilt: float = 0.45,
    crowd_kappa: float = 60.0,
    spread_kappa: float = 8.0,
    crowd_share: float = 0.6,
) -> tuple[np.ndarray, np.ndarray]:
    """Merge-stressed layout with k = 6: three tight caps crowded around a
    shared axis (tilt controls their angular spread) plus three mutually
    orthogonal diffuse caps. Distance-based clustering tends to fuse the
    crowded trio into one blob and shave the diffuse caps apart; telling
    the trio apart requires concentration-aware assignments."""
    if d < 6:
        raise ValueError(f"need d >= 6, got {d}")
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((d, 6)))
    q = q.T
    trio = normalize(
        np.stack(
            [
                q[0] + tilt * q[1],
                q[0] + tilt * q[2],
                q[0] - tilt * (q[1] + q[2]) / np.sqrt(2.0),
            ]
        )
    )
    means = np.vstack([trio, q[3:6]])
    kappas = np.array([crowd_kappa] * 3 + [spread_kappa] * 3)
    weights = np.array([crowd_share / 3] * 3 + [(1.0 - crowd_share) / 3] * 3)
    return sample_mixture(n, means, kappas, weights, seed=seed)
