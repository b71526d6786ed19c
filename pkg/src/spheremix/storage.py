"""On-disk formats: binary embeddings, binary student models, JSON mixture
models, and the escaped TSV used for labels, texts and datasets.

Embeddings and student weights ship as little-endian float32; computation
upstream stays float64. All writers go through a temp-file rename so a
partial output is never observable.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path
from typing import Iterator

import numpy as np

from .distill import FeaturizerSpec, StudentModel
from .errors import (
    BadMagicError,
    NormFlagViolationError,
    SizeMismatchError,
    TruncatedPayloadError,
)
from .inference import FitConfig
from .objective import MixtureParams

EMB_MAGIC = b"GEMEMB1"
EMB_VERSION = 1
STUDENT_MAGIC = b"GEMSTU1"
MODEL_FORMAT = "GEMMODEL1"
_UNIT_TOL = 1e-5


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# ---------------------------------------------------------------- embeddings

def write_embeddings(X: np.ndarray, path: str | Path, normalized: bool | None = None) -> None:
    """Serialize (n, d) vectors as f32 rows under the GEMEMB1 header.

    normalized = None auto-detects whether every f32 row is unit length
    within 1e-5 and sets the header flag accordingly; passing True with
    non-unit rows raises NormFlagViolationError.
    """
    X32 = np.ascontiguousarray(np.asarray(X), dtype="<f4")
    if X32.ndim != 2:
        raise SizeMismatchError(f"expected (n, d) array, got shape {X32.shape}")
    n, d = X32.shape
    unit = bool(
        np.all(np.abs(np.linalg.norm(X32.astype(np.float64), axis=1) - 1.0) <= _UNIT_TOL)
    )
    if normalized is None:
        normalized = unit
    elif normalized and not unit:
        raise NormFlagViolationError("normalized flag requested but rows are not unit")
    header = EMB_MAGIC + struct.pack("<IQIB", EMB_VERSION, n, d, int(normalized))
    atomic_write_bytes(path, header + X32.tobytes())


def read_embeddings(path: str | Path) -> np.ndarray:
    """Read a GEMEMB1 file into float64 rows (f32 values exactly widened)."""
    blob = Path(path).read_bytes()
    if blob[: len(EMB_MAGIC)] != EMB_MAGIC:
        raise BadMagicError(f"{path}: expected magic {EMB_MAGIC!r}")
    off = len(EMB_MAGIC)
    try:
        version, n, d, flag = struct.unpack_from("<IQIB", blob, off)
    except struct.error as exc:
        raise TruncatedPayloadError(f"{path}: header truncated") from exc
    if version != EMB_VERSION:
        raise BadMagicError(f"{path}: unsupported version {version}")
    off += struct.calcsize("<IQIB")
    need = n * d * 4
    if len(blob) - off < need:
        raise TruncatedPayloadError(
            f"{path}: payload holds {len(blob) - off} bytes, header declares {need}"
        )
    X = np.frombuffer(blob, dtype="<f4", count=n * d, offset=off).reshape(n, d)
    X = X.astype(np.float64)
    if flag:
        norms = np.linalg.norm(X, axis=1)
        if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
            bad = int(np.argmax(np.abs(norms - 1.0)))
            raise NormFlagViolationError(
                f"{path}: normalized flag set but row {bad} has norm {norms[bad]:.6f}"
            )
    return X


# ---------------------------------------------------------------- mixture model

def model_to_json(theta: MixtureParams, lam: float, meta: dict) -> str:
    """Human-readable model document; floats use repr so f64 round-trips
    losslessly."""
    doc = {
        "format": MODEL_FORMAT,
        "k": theta.k,
        "d": theta.d,
        "lambda": lam,
        "components": [
            {"mu": theta.means[j].tolist(), "kappa": float(theta.kappas[j])}
            for j in range(theta.k)
        ],
        "meta": meta,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_model(path: str | Path, theta: MixtureParams, lam: float, meta: dict) -> None:
    atomic_write_text(path, model_to_json(theta, lam, meta))


def load_model(path: str | Path) -> tuple[MixtureParams, float, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT:
        raise BadMagicError(f"{path}: expected format {MODEL_FORMAT!r}")
    comps = doc["components"]
    theta = MixtureParams(
        means=np.array([c["mu"] for c in comps], dtype=np.float64),
        kappas=np.array([c["kappa"] for c in comps], dtype=np.float64),
    )
    if theta.k != doc["k"] or theta.d != doc["d"]:
        raise SizeMismatchError(f"{path}: header k/d disagree with components")
    return theta.validate(), float(doc["lambda"]), doc.get("meta", {})


def config_echo(cfg: FitConfig) -> dict:
    return {
        "k": cfg.k,
        "lambda": cfg.lam,
        "max_iters": cfg.max_iters,
        "stop_tol": cfg.stop_tol,
        "eps": cfg.eps,
        "kappa_init": cfg.kappa_init,
        "estep_sweeps": cfg.estep_sweeps,
        "estep_step": cfg.estep_step,
        "seed": cfg.seed,
    }


# ---------------------------------------------------------------- student model

def save_student(path: str | Path, model: StudentModel) -> None:
    """GEMSTU1 binary: u32 {buckets, k, ngram_max, hash_seed}, then f32
    bias[k], then f32 weights[buckets][k] row-major, all little-endian."""
    spec = model.featurizer.validate()
    if model.weights.shape != (spec.buckets, model.k):
        raise SizeMismatchError(
            f"weights shape {model.weights.shape} vs buckets={spec.buckets}, k={model.k}"
        )
    header = STUDENT_MAGIC + struct.pack(
        "<IIII", spec.buckets, model.k, spec.ngram_max, spec.hash_seed
    )
    bias = np.ascontiguousarray(model.bias, dtype="<f4")
    weights = np.ascontiguousarray(model.weights, dtype="<f4")
    atomic_write_bytes(path, header + bias.tobytes() + weights.tobytes())


def load_student(path: str | Path) -> StudentModel:
    blob = Path(path).read_bytes()
    if blob[: len(STUDENT_MAGIC)] != STUDENT_MAGIC:
        raise BadMagicError(f"{path}: expected magic {STUDENT_MAGIC!r}")
    off = len(STUDENT_MAGIC)
    try:
        buckets, k, ngram_max, hash_seed = struct.unpack_from("<IIII", blob, off)
    except struct.error as exc:
        raise TruncatedPayloadError(f"{path}: header truncated") from exc
    off += struct.calcsize("<IIII")
    need = (k + buckets * k) * 4
    if len(blob) - off < need:
        raise TruncatedPayloadError(
            f"{path}: payload holds {len(blob) - off} bytes, header declares {need}"
        )
    bias = np.frombuffer(blob, dtype="<f4", count=k, offset=off).copy()
    off += k * 4
    weights = (
        np.frombuffer(blob, dtype="<f4", count=buckets * k, offset=off)
        .reshape(buckets, k)
        .copy()
    )
    return StudentModel(
        weights=weights,
        bias=bias,
        featurizer=FeaturizerSpec(buckets=buckets, ngram_max=ngram_max, hash_seed=hash_seed),
    )


# ---------------------------------------------------------------- escaped TSV

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}


def escape_field(s: str) -> str:
    for raw, esc in _ESCAPES.items():
        s = s.replace(raw, esc)
    return s


def unescape_field(s: str) -> str:
    out = []
    i = 0
    while i < len(s):
        c = s[i]
        if c == "\\" and i + 1 < len(s):
            nxt = s[i + 1]
            mapped = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt)
            if mapped is not None:
                out.append(mapped)
                i += 2
                continue
        out.append(c)
        i += 1
    return "".join(out)


def write_dataset_tsv(path: str | Path, labels: np.ndarray, texts: list[str]) -> None:
    """Rows of label<TAB>escaped-text; exact inverse of read_dataset_tsv."""
    if len(texts) != np.asarray(labels).size:
        raise SizeMismatchError(f"{np.asarray(labels).size} labels vs {len(texts)} texts")
    lines = [
        f"{int(lab)}\t{escape_field(txt)}\n" for lab, txt in zip(labels, texts)
    ]
    atomic_write_text(path, "".join(lines))


def read_dataset_tsv(path: str | Path) -> tuple[np.ndarray, list[str]]:
    labels: list[int] = []
    texts: list[str] = []
    for line in _read_lines(path):
        lab, _, rest = line.partition("\t")
        labels.append(int(lab))
        texts.append(unescape_field(rest))
    return np.asarray(labels, dtype=np.int64), texts


def write_labels(path: str | Path, labels: np.ndarray) -> None:
    atomic_write_text(path, "".join(f"{int(v)}\n" for v in labels))


def read_labels(path: str | Path) -> np.ndarray:
    return np.asarray([int(line) for line in _read_lines(path)], dtype=np.int64)


def write_texts(path: str | Path, texts: list[str]) -> None:
    atomic_write_text(path, "".join(escape_field(t) + "\n" for t in texts))


def read_texts(path: str | Path) -> list[str]:
    return [unescape_field(line) for line in _read_lines(path)]


def _read_lines(path: str | Path) -> Iterator[str]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for line in fh:
            yield line.rstrip("\n")
