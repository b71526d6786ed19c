"""Teacher-student distillation into a hashed n-gram linear classifier.

The fitted mixture (teacher) pseudo-labels a balanced, influence-ranked
subset of the corpus; a multinomial logistic regression over hashed
word uni+bigram counts (student) then learns to reproduce the partition
from raw text alone, at constant cost per document.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptySetError,
    MissingDocumentError,
    SingleClassError,
    SizeMismatchError,
)
from .gis import GisConfig, select_representatives
from .objective import MixtureParams

DEFAULT_BUCKETS = 1 << 21


@dataclass(frozen=True)
class FeaturizerSpec:
    """Hashed bag-of-n-grams layout; fixed at training time and stored
    with the model so prediction is reproducible anywhere."""

    buckets: int = DEFAULT_BUCKETS
    ngram_max: int = 2
    hash_seed: int = 0

    def validate(self) -> "FeaturizerSpec":
        if self.buckets < 1:
            raise ValueError(f"buckets must be >= 1, got {self.buckets}")
        if not 1 <= self.ngram_max <= 8:
            raise ValueError(f"ngram_max must lie in [1, 8], got {self.ngram_max}")
        if not 0 <= self.hash_seed < 2**32:
            raise ValueError("hash_seed must fit in u32")
        return self


@dataclass(frozen=True)
class PseudoLabeledSet:
    """Balanced pseudo-labeled records: raw texts with teacher cluster ids.

    source_ids trace each record back to its corpus index; k is the number
    of teacher clusters (labels live in [0, k))."""

    texts: list[str]
    labels: np.ndarray
    source_ids: np.ndarray
    k: int

    def __len__(self) -> int:
        return len(self.texts)

    @property
    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def validate(self) -> "PseudoLabeledSet":
        if not (len(self.texts) == self.labels.size == self.source_ids.size):
            raise SizeMismatchError("texts, labels and source_ids must be parallel")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.k):
            raise ValueError("labels must lie in [0, k)")
        pairs = set(zip(self.source_ids.tolist(), self.labels.tolist()))
        if len(pairs) != self.labels.size:
            raise ValueError("duplicate (source_id, label) records")
        return self

    def subset(self, rows: np.ndarray) -> "PseudoLabeledSet":
        return PseudoLabeledSet(
            texts=[self.texts[int(r)] for r in rows],
            labels=self.labels[rows],
            source_ids=self.source_ids[rows],
            k=self.k,
        )


@dataclass
class StudentModel:
    """Linear softmax classifier over hashed n-gram features.

    Weights and bias are float32: the serialized form is float32, and
    keeping the live model in the same precision makes save -> load ->
    predict bit-identical to predicting before the save. loss_trace is
    training metadata only and is not serialized.
    """

    weights: np.ndarray  # (buckets, k), float32
    bias: np.ndarray     # (k,), float32
    featurizer: FeaturizerSpec
    loss_trace: np.ndarray | None = field(default=None, compare=False)

    @property
    def k(self) -> int:
        return self.bias.shape[0]


def _hash_token(token: str, seed: int) -> int:
    h = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, key=seed.to_bytes(4, "little")
    )
    return int.from_bytes(h.digest(), "little")


def featurize(text: str, spec: FeaturizerSpec) -> dict[int, float]:
    """Sparse ell_2-normalized hashed n-gram counts for one document.

    Lowercases, splits on whitespace, emits word n-grams up to
    spec.ngram_max (bigrams joined with '_'), hashes each into
    [0, buckets), accumulates counts per bucket, then normalizes. Empty
    text gives an empty (zero) vector.
    """
    tokens = text.lower().split()
    counts: dict[int, float] = {}
    for order in range(1, spec.ngram_max + 1):
        for j in range(len(tokens) - order + 1):
            gram = "_".join(tokens[j : j + order])
            b = _hash_token(gram, spec.hash_seed) % spec.buckets
            counts[b] = counts.get(b, 0.0) + 1.0
    if not counts:
        return counts
    norm = np.sqrt(sum(v * v for v in counts.values()))
    return {b: v / norm for b, v in counts.items()}


def build_pseudo_labeled(
    theta: MixtureParams,
    gamma: np.ndarray,
    X: np.ndarray,
    texts: list[str],
    m_distill: int,
    gis_cfg: GisConfig,
    seed: int = 0,
) -> PseudoLabeledSet:
    """Balanced training set: each cluster's top-m_distill samples by
    influence score (all members when the cluster is smaller), with hard
    teacher labels, shuffled deterministically by seed."""
    if len(texts) != X.shape[0]:
        raise MissingDocumentError(
            f"{X.shape[0]} embeddings but {len(texts)} documents"
        )
    reps = select_representatives(
        X, gamma, theta,
        GisConfig(
            beta=gis_cfg.beta, eps=gis_cfg.eps,
            m_neighbors=gis_cfg.m_neighbors, s=m_distill,
        ),
    )
    ids: list[int] = []
    labs: list[int] = []
    for k in range(reps.k):
        for i in reps.indices[k]:
            ids.append(int(i))
            labs.append(k)
    order = np.random.default_rng(seed).permutation(len(ids))
    ids_arr = np.asarray(ids, dtype=np.int64)[order]
    labs_arr = np.asarray(labs, dtype=np.int64)[order]
    return PseudoLabeledSet(
        texts=[texts[int(i)] for i in ids_arr],
        labels=labs_arr,
        source_ids=ids_arr,
        k=theta.k,
    ).validate()


def balanced_random_sample(
    labels: np.ndarray, texts: list[str], k: int, m_per_class: int, seed: int
) -> PseudoLabeledSet:
    """Baseline curation: m random members per hard cluster (all members
    when smaller). Used for teachers that provide labels but no scores."""
    labels = np.asarray(labels)
    if labels.size != len(texts):
        raise MissingDocumentError(f"{labels.size} labels but {len(texts)} documents")
    rng = np.random.default_rng(seed)
    ids: list[int] = []
    labs: list[int] = []
    for c in range(k):
        members = np.flatnonzero(labels == c)
        if members.size > m_per_class:
            members = rng.choice(members, size=m_per_class, replace=False)
        for i in np.sort(members):
            ids.append(int(i))
            labs.append(c)
    order = rng.permutation(len(ids))
    ids_arr = np.asarray(ids, dtype=np.int64)[order]
    labs_arr = np.asarray(labs, dtype=np.int64)[order]
    return PseudoLabeledSet(
        texts=[texts[int(i)] for i in ids_arr],
        labels=labs_arr,
        source_ids=ids_arr,
        k=k,
    ).validate()


def split_dataset(
    ds: PseudoLabeledSet,
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> tuple[PseudoLabeledSet, PseudoLabeledSet, PseudoLabeledSet]:
    """Shuffled train/validation/test split by the given fractions."""
    if abs(sum(fractions) - 1.0) > 1e-9 or any(f < 0 for f in fractions):
        raise ValueError(f"fractions must be nonnegative and sum to 1, got {fractions}")
    n = len(ds)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    return (
        ds.subset(order[:n_train]),
        ds.subset(order[n_train : n_train + n_val]),
        ds.subset(order[n_train + n_val :]),
    )


def _scores_for(features: dict[int, float], model: StudentModel) -> np.ndarray:
    s = model.bias.astype(np.float64).copy()
    for b, v in features.items():
        s += model.weights[b].astype(np.float64) * v
    return s


def _softmax(s: np.ndarray) -> np.ndarray:
    e = np.exp(s - s.max())
    return e / e.sum()


def train_student(
    ds: PseudoLabeledSet,
    epochs: int = 10,
    lr: float = 0.1,
    seed: int = 0,
    spec: FeaturizerSpec = FeaturizerSpec(),
) -> StudentModel:
    """Multinomial logistic regression by SGD with a linearly decaying rate.

    One sample per step, reshuffled each epoch, deterministic for a fixed
    seed. The returned model carries the per-epoch mean cross-entropy in
    loss_trace. Weights accumulate in float64 during training and are cast
    to float32 at the end (the serialized precision).
    """
    ds = ds.validate()
    if len(ds) == 0:
        raise EmptySetError("cannot train on an empty dataset")
    if np.unique(ds.labels).size < 2:
        raise SingleClassError("training needs at least two distinct classes")
    spec = spec.validate()
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    if not lr > 0.0:
        raise ValueError(f"lr must be > 0, got {lr}")

    feats = [featurize(t, spec) for t in ds.texts]
    k = ds.k
    w = np.zeros((spec.buckets, k), dtype=np.float64)
    b = np.zeros(k, dtype=np.float64)
    rng = np.random.default_rng(seed)
    n = len(ds)
    total_steps = epochs * n
    step = 0
    losses = []
    for _ in range(epochs):
        for i in rng.permutation(n):
            rate = lr * (1.0 - step / total_steps)
            step += 1
            f = feats[i]
            s = b.copy()
            for bucket, v in f.items():
                s += w[bucket] * v
            p = _softmax(s)
            p[ds.labels[i]] -= 1.0  # gradient of CE wrt scores
            b -= rate * p
            for bucket, v in f.items():
                w[bucket] -= rate * v * p
        losses.append(_mean_ce(feats, ds.labels, w, b))
    return StudentModel(
        weights=w.astype(np.float32),
        bias=b.astype(np.float32),
        featurizer=spec,
        loss_trace=np.asarray(losses),
    )


def _mean_ce(feats, labels, w, b) -> float:
    total = 0.0
    for f, y in zip(feats, labels):
        s = b.copy()
        for bucket, v in f.items():
            s += w[bucket] * v
        s -= s.max()
        total += float(np.log(np.exp(s).sum()) - s[y])
    return total / len(feats)


def predict_student(model: StudentModel, text: str) -> tuple[np.ndarray, int]:
    """Class probabilities and argmax label for one document.

    Cost depends only on the document length, never on training-corpus
    size. Empty text scores as the softmax of the bias alone. Ties resolve
    to the lowest index.
    """
    probs = _softmax(_scores_for(featurize(text, model.featurizer), model))
    return probs, int(np.argmax(probs))


def evaluate_student(
    model: StudentModel, held_out: PseudoLabeledSet
) -> tuple[float, np.ndarray]:
    """Top-1 accuracy and (k, k) confusion counts, rows = true label."""
    held_out = held_out.validate()
    if len(held_out) == 0:
        raise EmptySetError("cannot evaluate on an empty dataset")
    confusion = np.zeros((held_out.k, held_out.k), dtype=np.int64)
    hits = 0
    for text, label in zip(held_out.texts, held_out.labels):
        _, pred = predict_student(model, text)
        confusion[label, pred] += 1
        hits += int(pred == label)
    return hits / len(held_out), confusion
