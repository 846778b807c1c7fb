"""Deterministic text classifier backing classifier-kind rules.

Logistic regression over hashed bag-of-words features, trained from scratch
with full-batch gradient descent. Everything is bit-reproducible: features
use FNV-1a (fixed 64-bit hash, standard offset basis as the seed), weights
start at zero, and updates run in a fixed order, so the same dataset and
config always produce byte-identical model files.

Model file layout (little-endian):

    magic    8 bytes   b"GGCLSF01"
    version  uint32    1
    dim      uint32    feature dimension (65536)
    bias     float64
    weights  dim * float64
    fingerprint  32 bytes  SHA-256 of the canonical dataset bytes

Dataset files are UTF-8 lines of ``label<TAB>text`` with label ``allow`` or
``deny``.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyDataset, GuardgateError, ModelFormatError, SingleClassDataset

FEATURE_DIM = 65536

_MAGIC = b"GGCLSF01"
_VERSION = 1

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_U64 = (1 << 64) - 1


class Label(str, Enum):
    ALLOW = "allow"
    DENY = "deny"


class Provenance(str, Enum):
    USER_UPLOADED = "user-uploaded"
    PUBLIC = "public"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class LabeledExample:
    text: str
    label: Label

    def __post_init__(self):
        if not self.text:
            raise GuardgateError("dataset texts must be non-empty")


@dataclass(frozen=True)
class LabeledDataset:
    examples: tuple[LabeledExample, ...]
    provenance: Provenance = Provenance.USER_UPLOADED

    def fingerprint(self) -> bytes:
        """SHA-256 of the canonical ``label<TAB>text`` serialization."""
        h = hashlib.sha256()
        for ex in self.examples:
            h.update(f"{ex.label.value}\t{ex.text}\n".encode("utf-8"))
        return h.digest()


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 200
    seed: int = 0  # recorded only; zero-init training is already deterministic


@dataclass(frozen=True)
class ClassifierModel:
    feature_dim: int
    weights: tuple[float, ...]
    bias: float
    train_config: TrainConfig | None
    dataset_fingerprint: bytes
    loss_history: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.feature_dim != FEATURE_DIM:
            raise GuardgateError(f"feature_dim must be {FEATURE_DIM}")
        if len(self.weights) != self.feature_dim:
            raise GuardgateError("weight vector length does not match feature_dim")


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash; the offset basis is the fixed seed."""
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _U64
    return h


def featurize(text: str) -> dict[int, float]:
    """Hash lowercased word unigrams and bigrams into FEATURE_DIM buckets.

    Tokens are whitespace-separated, so runs of spaces do not change the
    features. Values are occurrence counts. Empty text gives a zero vector.
    """
    tokens = text.lower().split()
    features: dict[int, float] = {}
    for tok in tokens:
        bucket = fnv1a64(tok.encode("utf-8")) % FEATURE_DIM
        features[bucket] = features.get(bucket, 0.0) + 1.0
    for first, second in zip(tokens, tokens[1:]):
        bucket = fnv1a64(f"{first} {second}".encode("utf-8")) % FEATURE_DIM
        features[bucket] = features.get(bucket, 0.0) + 1.0
    return features


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _logistic_loss(logit: float, y: float) -> float:
    # log(1 + e^logit) - y*logit, computed without overflow
    if logit > 0:
        return logit * (1.0 - y) + math.log1p(math.exp(-logit))
    return -y * logit + math.log1p(math.exp(logit))


def train(data: LabeledDataset, config: TrainConfig = TrainConfig()) -> ClassifierModel:
    """Full-batch gradient descent on mean logistic loss (Deny = 1).

    Weights start at zero and updates are applied in a fixed order, so the
    result is a pure function of (dataset bytes, config). The per-epoch
    training loss is recorded on the model as ``loss_history``.
    """
    if not data.examples:
        raise EmptyDataset("cannot train on an empty dataset")
    labels = {ex.label for ex in data.examples}
    if len(labels) < 2:
        only = next(iter(labels)).value
        raise SingleClassDataset(f"dataset contains only {only!r} examples")

    featurized = [(featurize(ex.text), 1.0 if ex.label is Label.DENY else 0.0)
                  for ex in data.examples]
    n = len(featurized)
    weights = [0.0] * FEATURE_DIM
    bias = 0.0
    lr = config.learning_rate
    losses = []

    for _ in range(config.epochs):
        grad: dict[int, float] = {}
        grad_bias = 0.0
        epoch_loss = 0.0
        for feats, y in featurized:
            logit = bias + sum(weights[b] * v for b, v in feats.items())
            epoch_loss += _logistic_loss(logit, y)
            err = _sigmoid(logit) - y
            grad_bias += err
            for b, v in feats.items():
                grad[b] = grad.get(b, 0.0) + err * v
        for b, g in grad.items():
            weights[b] -= lr * g / n
        bias -= lr * grad_bias / n
        losses.append(epoch_loss / n)

    return ClassifierModel(
        feature_dim=FEATURE_DIM,
        weights=tuple(weights),
        bias=bias,
        train_config=config,
        dataset_fingerprint=data.fingerprint(),
        loss_history=tuple(losses),
    )


def predict(model: ClassifierModel, text: str, threshold: float = 0.5) -> tuple[str, float]:
    """Deny probability and the thresholded label.

    Returns ("deny", p) when p >= threshold else ("allow", p). The
    probability is clamped into the open interval (0, 1).
    """
    feats = featurize(text)
    logit = model.bias + sum(model.weights[b] * v for b, v in feats.items())
    p = min(max(_sigmoid(logit), 1e-12), 1.0 - 1e-12)
    return (Label.DENY.value if p >= threshold else Label.ALLOW.value), p


# --------------------------------------------------------------------------
# synthetic augmentation
# --------------------------------------------------------------------------

# Label-preserving surface rewrites, applied round-robin.
_SYNONYMS = {
    "good": "great",
    "bad": "awful",
    "happy": "glad",
    "quick": "fast",
    "help": "assist",
    "buy": "purchase",
    "big": "large",
    "small": "tiny",
}


def _perturb_case_upper(text: str) -> str:
    return text.upper()


def _perturb_case_lower(text: str) -> str:
    return text.lower()


def _perturb_case_title(text: str) -> str:
    return text.title()


def _perturb_punctuation(text: str) -> str:
    if text and text[-1] in ".!?":
        return text[:-1] + "!"
    return text + "."


def _perturb_synonyms(text: str) -> str:
    words = text.split(" ")
    for i, w in enumerate(words):
        replacement = _SYNONYMS.get(w.lower())
        if replacement is not None:
            words[i] = replacement
            break
    return " ".join(words)


_PERTURBATIONS = (
    _perturb_case_upper,
    _perturb_case_lower,
    _perturb_case_title,
    _perturb_punctuation,
    _perturb_synonyms,
)


def generate_synthetic_stub(seeds: Sequence[LabeledExample], n: int) -> LabeledDataset:
    """Deterministic offline stand-in for LLM-generated few-shot examples.

    Produces ``n`` label-preserving surface perturbations (case changes,
    synonym substitutions, punctuation jitter) cycling over the seeds and
    a fixed perturbation table. Same seeds and n always give the same
    output.
    """
    if n < 0:
        raise GuardgateError("n must be >= 0")
    if not seeds:
        return LabeledDataset(examples=(), provenance=Provenance.SYNTHETIC)
    out = []
    for i in range(n):
        seed = seeds[i % len(seeds)]
        op = _PERTURBATIONS[(i // len(seeds) + i) % len(_PERTURBATIONS)]
        out.append(LabeledExample(text=op(seed.text), label=seed.label))
    return LabeledDataset(examples=tuple(out), provenance=Provenance.SYNTHETIC)


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def serialize_model(model: ClassifierModel) -> bytes:
    header = struct.pack("<8sIId", _MAGIC, _VERSION, model.feature_dim, model.bias)
    body = struct.pack(f"<{model.feature_dim}d", *model.weights)
    return header + body + model.dataset_fingerprint


def deserialize_model(blob: bytes) -> ClassifierModel:
    head_size = struct.calcsize("<8sIId")
    if len(blob) < head_size:
        raise ModelFormatError("model file truncated")
    magic, version, dim, bias = struct.unpack_from("<8sIId", blob, 0)
    if magic != _MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise ModelFormatError(f"unsupported model version {version}")
    expected = head_size + dim * 8 + 32
    if len(blob) != expected:
        raise ModelFormatError(f"model file has {len(blob)} bytes, expected {expected}")
    weights = struct.unpack_from(f"<{dim}d", blob, head_size)
    fingerprint = blob[head_size + dim * 8 :]
    return ClassifierModel(
        feature_dim=dim,
        weights=weights,
        bias=bias,
        train_config=None,
        dataset_fingerprint=fingerprint,
    )


def save_model(model: ClassifierModel, path: str | Path) -> None:
    Path(path).write_bytes(serialize_model(model))


def load_model(path: str | Path) -> ClassifierModel:
    return deserialize_model(Path(path).read_bytes())


# --------------------------------------------------------------------------
# dataset files
# --------------------------------------------------------------------------

def parse_dataset(
    lines: Iterable[str], provenance: Provenance = Provenance.USER_UPLOADED
) -> LabeledDataset:
    """Parse ``label<TAB>text`` lines into a dataset."""
    examples = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.rstrip("\n")
        if not stripped:
            continue
        label_str, sep, text = stripped.partition("\t")
        if not sep:
            raise GuardgateError(f"dataset line {lineno}: expected label<TAB>text")
        try:
            label = Label(label_str)
        except ValueError:
            raise GuardgateError(
                f"dataset line {lineno}: label must be 'allow' or 'deny', got {label_str!r}"
            ) from None
        examples.append(LabeledExample(text=text, label=label))
    return LabeledDataset(examples=tuple(examples), provenance=provenance)


def load_dataset(path: str | Path) -> LabeledDataset:
    with open(path, encoding="utf-8") as f:
        return parse_dataset(f)
