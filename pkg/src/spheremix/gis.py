"""Representative selection by geometric influence.

A sample's influence for its cluster combines three log-domain terms:
assignment certainty log(gamma_ik + eps), directional coherence (the vMF
log-density under the cluster's component), and beta-weighted local
support log(rho + eps), where rho is the mean cosine to the M nearest
same-cluster neighbors. Top-scoring samples become the cluster's
representatives and can be exported as taxonomy-labelling prompt files.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MissingDocumentError, SizeMismatchError
from .geometry import vmf_log_density
from .objective import MixtureParams, check_responsibilities

PROMPT_TEMPLATE = """You are an expert data taxonomist.
I will provide you with {n_docs} documents that belong to the same semantic cluster.
Your task is to:
1. Summarize the common theme and content of these documents in 2-3 sentences.
2. Based on the summary, assign a single, concise, and high-quality 'Topic Label' (2-5 words) that best describes this cluster.
3. Describe the topic in a sentence.

Documents:
{docs_content}

Please strictly follow the output format:
Summary: {{summary content}}
Topic: {{topic label}}
Description: {{topic description}}
"""


@dataclass(frozen=True)
class GisConfig:
    """beta weights the local-support term; m_neighbors is the kNN size;
    s is how many representatives each cluster keeps."""

    beta: float = 1.0
    eps: float = 1e-8
    m_neighbors: int = 16
    s: int = 5

    def validate(self) -> "GisConfig":
        if self.beta < 0.0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if not self.eps > 0.0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.m_neighbors < 1 or self.s < 1:
            raise ValueError("m_neighbors and s must be >= 1")
        return self


@dataclass(frozen=True)
class RepresentativeSet:
    """Per-cluster representatives: parallel index/score lists, each sorted
    by descending score (ties broken by lower index). Clusters with no hard
    members get empty arrays."""

    indices: list[np.ndarray]
    scores: list[np.ndarray]

    @property
    def k(self) -> int:
        return len(self.indices)


def local_density(
    i: int, k: int, X: np.ndarray, hard_labels: np.ndarray, m_neighbors: int
) -> tuple[float, bool]:
    """Mean cosine from x_i to its m nearest neighbors within cluster k.

    Neighbors are restricted to points hard-assigned to the same cluster;
    a nearer point in another cluster is ignored. When the cluster has
    fewer than m other members, all of them are used. A singleton cluster
    has no neighbors: returns (0.0, True), the flag marking the degenerate
    case instead of raising.
    """
    X = np.asarray(X, dtype=np.float64)
    hard_labels = np.asarray(hard_labels)
    if hard_labels.shape[0] != X.shape[0]:
        raise SizeMismatchError(
            f"{X.shape[0]} points vs {hard_labels.shape[0]} labels"
        )
    members = np.flatnonzero(hard_labels == k)
    members = members[members != i]
    if members.size == 0:
        return 0.0, True
    cos = X[members] @ X[i]
    if members.size > m_neighbors:
        cos = np.sort(cos)[-m_neighbors:]
    return float(np.mean(cos)), False


def gis_score(
    i: int,
    k: int,
    X: np.ndarray,
    gamma: np.ndarray,
    theta: MixtureParams,
    rho: float,
    cfg: GisConfig,
) -> float:
    """Influence of sample i for cluster k given its precomputed rho.

    log(gamma_ik + eps) + log f(x_i | mu_k, kappa_k) + beta log(rho + eps).
    beta = 0 removes the support term entirely (even when rho + eps <= 0);
    otherwise a non-positive rho + eps makes the score -inf, so
    semantically isolated points sort last rather than raising.
    """
    certainty = math.log(float(gamma[i, k]) + cfg.eps)
    coherence = float(vmf_log_density(X[i], theta.means[k], float(theta.kappas[k])))
    if cfg.beta == 0.0:
        support = 0.0
    else:
        shifted = rho + cfg.eps
        support = cfg.beta * math.log(shifted) if shifted > 0.0 else -math.inf
    return certainty + coherence + support


def select_representatives(
    X: np.ndarray, gamma: np.ndarray, theta: MixtureParams, cfg: GisConfig
) -> RepresentativeSet:
    """Top-s samples of every cluster by influence score.

    Clusters are the hard argmax assignment of gamma (ties to the lowest
    index via argmax). Within a cluster every member is scored; the top s
    survive, sorted by descending score with index as the tie-breaker.
    An empty cluster yields an empty list rather than an error.
    """
    cfg = cfg.validate()
    gamma = check_responsibilities(gamma)
    X = np.asarray(X, dtype=np.float64)
    if gamma.shape[0] != X.shape[0]:
        raise SizeMismatchError(f"{X.shape[0]} points vs {gamma.shape[0]} rows")
    labels = np.argmax(gamma, axis=1)
    indices: list[np.ndarray] = []
    scores: list[np.ndarray] = []
    for k in range(theta.k):
        members = np.flatnonzero(labels == k)
        if members.size == 0:
            indices.append(np.empty(0, dtype=np.int64))
            scores.append(np.empty(0, dtype=np.float64))
            continue
        vals = np.array(
            [
                gis_score(
                    int(i), k, X, gamma, theta,
                    local_density(int(i), k, X, labels, cfg.m_neighbors)[0],
                    cfg,
                )
                for i in members
            ]
        )
        # Sort by (-score, index): descending score, lower index on ties.
        order = np.lexsort((members, -vals))[: cfg.s]
        indices.append(members[order])
        scores.append(vals[order])
    return RepresentativeSet(indices=indices, scores=scores)


def _render_docs(texts: list[str]) -> str:
    parts = [f"[Document {j + 1}]\n{t}" for j, t in enumerate(texts)]
    return "\n\n".join(parts)


def export_taxonomy_prompts(
    reps: RepresentativeSet, texts: list[str], out_dir: str | Path
) -> list[Path]:
    """Write one prompt file per non-empty cluster into out_dir.

    Files are named cluster_{k:03}.prompt.txt. A cluster with no
    representatives gets a warning and no file. Raises MissingDocumentError
    when a representative index has no document text.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for k in range(reps.k):
        idx = reps.indices[k]
        if idx.size == 0:
            warnings.warn(f"cluster {k} has no representatives; skipping prompt")
            continue
        docs = []
        for i in idx:
            if i < 0 or i >= len(texts):
                raise MissingDocumentError(f"no document for sample index {int(i)}")
            docs.append(texts[int(i)])
        body = PROMPT_TEMPLATE.format(n_docs=len(docs), docs_content=_render_docs(docs))
        path = out_dir / f"cluster_{k:03}.prompt.txt"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(body, encoding="utf-8")
        tmp.replace(path)
        written.append(path)
    return written


_DOCS_HEAD = "Documents:\n"
_DOCS_TAIL = "\n\nPlease strictly follow the output format:"
_DOC_MARK = re.compile(r"(?:^|\n\n)\[Document (\d+)\]\n", re.S)


def parse_taxonomy_prompt(text: str) -> list[str]:
    """Recover the document payloads from an exported prompt.

    Inverse of export_taxonomy_prompts for documents that do not themselves
    contain the '[Document j]' separator lines or the template's closing
    section.
    """
    start = text.index(_DOCS_HEAD) + len(_DOCS_HEAD)
    end = text.index(_DOCS_TAIL, start)
    section = text[start:end]
    marks = list(_DOC_MARK.finditer(section))
    if not marks:
        return []
    docs = []
    for j, m in enumerate(marks):
        stop = marks[j + 1].start() if j + 1 < len(marks) else len(section)
        docs.append(section[m.end() : stop])
    return docs
