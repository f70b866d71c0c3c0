"""Evaluation measures: classification F1, bag-of-tokens span F1, the
four rationale quality metrics, and paired t-test significance.

Documented conventions (all metrics are undefined without them):

* Span token normalization: lowercase, strip punctuation characters,
  split on whitespace. English article removal ("a", "an", "the") is
  available behind ``remove_articles`` and off by default.
* TF-IDF for coherence: term frequency is the raw count, idf is
  ln((1+N)/(1+df)) + 1 over the two-document collection, vectors are
  L2-normalized before the cosine.
* Flesch-Kincaid: sentences split on runs of .!? followed by whitespace
  or end of text; syllables counted as vowel groups (aeiouy) with one
  subtracted for a silent trailing 'e', minimum one per word.
* Readability is reported both as the raw grade and normalized to [0,1]
  via clamp((18 - grade) / 18).
* Two-sided p-values come from the Student t CDF evaluated with the
  continued-fraction regularized incomplete beta (target accuracy 1e-10).
"""

from __future__ import annotations

import math
import re
import string
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .corpus import Label
from .errors import (
    EmbedderFailure,
    EmptyInputError,
    EmptyTextError,
    LengthMismatchError,
    ZeroVarianceError,
)

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)
_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")


@dataclass(frozen=True)
class Prediction:
    """Parsed model output for one post."""

    label: Label
    cm_spans: tuple[str, ...] = ()
    si_spans: tuple[str, ...] = ()
    rationale: str = ""
    meta: dict = field(default_factory=dict, compare=False)


def normalize_tokens(text: str, remove_articles: bool = False) -> list[str]:
    """Bag-of-tokens normalization for span overlap."""
    text = text.lower()
    if remove_articles:
        text = _ARTICLE_RE.sub(" ", text)
    text = text.translate(_PUNCT_TABLE)
    return text.split()


def classification_f1(
    preds: Sequence[Label],
    golds: Sequence[Label],
    positive: Label = Label.SELF_HARM,
    macro: bool = False,
) -> float:
    """F1 on the positive class (or macro over both classes)."""
    if len(preds) != len(golds):
        raise LengthMismatchError(f"{len(preds)} predictions vs {len(golds)} golds")
    if not preds:
        raise EmptyInputError("no predictions")
    if macro:
        scores = [
            classification_f1(preds, golds, positive=lbl, macro=False)
            for lbl in Label
        ]
        return sum(scores) / len(scores)
    tp = sum(1 for p, g in zip(preds, golds) if p == positive and g == positive)
    fp = sum(1 for p, g in zip(preds, golds) if p == positive and g != positive)
    fn = sum(1 for p, g in zip(preds, golds) if p != positive and g == positive)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def token_f1(pred: str, gold: str, remove_articles: bool = False) -> float:
    """Bag-of-tokens F1 between one predicted and one gold span."""
    pred_tokens = Counter(normalize_tokens(pred, remove_articles))
    gold_tokens = Counter(normalize_tokens(gold, remove_articles))
    if not pred_tokens and not gold_tokens:
        return 1.0
    if not pred_tokens or not gold_tokens:
        return 0.0
    overlap = sum((pred_tokens & gold_tokens).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(pred_tokens.values())
    recall = overlap / sum(gold_tokens.values())
    return 2 * precision * recall / (precision + recall)


def span_set_f1(
    preds: Sequence[str], golds: Sequence[str], remove_articles: bool = False
) -> float:
    """Per predicted span, best token F1 over the golds, averaged.

    Both sides empty scores 1.0 (correct abstention); exactly one side
    empty scores 0.0.
    """
    if not preds and not golds:
        return 1.0
    if not preds or not golds:
        return 0.0
    best = [
        max(token_f1(p, g, remove_articles) for g in golds) for p in preds
    ]
    return sum(best) / len(best)


def relevance(rationale: str, cm_spans: Sequence[str], si_spans: Sequence[str]) -> int:
    """1 iff every span occurs in the rationale, case-insensitively."""
    hay = rationale.lower()
    for span in list(cm_spans) + list(si_spans):
        if span.lower() not in hay:
            return 0
    return 1


def _tfidf_cosine(doc_a: list[str], doc_b: list[str]) -> float:
    vocab = sorted(set(doc_a) | set(doc_b))
    if not vocab:
        return 0.0
    n_docs = 2
    vecs = []
    for doc in (doc_a, doc_b):
        counts = Counter(doc)
        vec = np.array(
            [
                counts[w]
                * (math.log((1 + n_docs) / (1 + (w in doc_a) + (w in doc_b))) + 1)
                for w in vocab
            ],
            dtype=float,
        )
        norm = np.linalg.norm(vec)
        if norm == 0:
            return 0.0
        vecs.append(vec / norm)
    return float(np.dot(vecs[0], vecs[1]))


def coherence(
    rationale: str, cm_spans: Sequence[str], si_spans: Sequence[str]
) -> float:
    """TF-IDF cosine between the combined spans and the rationale."""
    combined = " ".join(list(cm_spans) + list(si_spans))
    doc_a = normalize_tokens(combined)
    doc_b = normalize_tokens(rationale)
    if not doc_a or not doc_b:
        return 0.0
    return _tfidf_cosine(doc_a, doc_b)


_SENTENCE_RE = re.compile(r"[.!?]+(?:\s+|$)")
_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")


def count_syllables(word: str) -> int:
    """Vowel-group heuristic: one per aeiouy run, silent trailing 'e'
    subtracted, minimum one."""
    w = "".join(ch for ch in word.lower() if ch.isalpha())
    if not w:
        return 0
    groups = _VOWEL_GROUP_RE.findall(w)
    n = len(groups)
    if w.endswith("e") and not w.endswith(("le", "ee")) and n > 1:
        n -= 1
    return max(1, n)


def count_sentences(text: str) -> int:
    n = len(_SENTENCE_RE.findall(text))
    if n == 0:
        # no terminal punctuation: treat the whole text as one sentence
        return 1
    tail = _SENTENCE_RE.split(text)[-1]
    if tail.strip():
        n += 1
    return n


@dataclass(frozen=True)
class ReadabilityScore:
    grade: float
    normalized: float

    def to_dict(self) -> dict:
        return {"grade": self.grade, "normalized": self.normalized}


def readability(rationale: str) -> ReadabilityScore:
    """Flesch-Kincaid grade level of the rationale, plus a [0,1] mapping.

    grade = 0.39 * words/sentences + 11.8 * syllables/words - 15.59
    normalized = clamp((18 - grade) / 18, 0, 1)
    """
    text = rationale.strip()
    if not text:
        raise EmptyTextError("readability of empty text is undefined")
    words = [w for w in text.split() if any(ch.isalpha() for ch in w)]
    if not words:
        raise EmptyTextError("no words in text")
    sentences = count_sentences(text)
    syllables = sum(count_syllables(w) for w in words)
    grade = 0.39 * (len(words) / sentences) + 11.8 * (syllables / len(words)) - 15.59
    normalized = min(1.0, max(0.0, (18.0 - grade) / 18.0))
    return ReadabilityScore(grade=grade, normalized=normalized)


class EmbeddingProvider(Protocol):
    """Maps text to a fixed-length real vector."""

    supports_concurrency: bool

    def embed(self, text: str) -> np.ndarray: ...


class HashingEmbedder:
    """Deterministic bag-of-words embedder for offline testing.

    Tokens are hashed into a fixed number of buckets with a stable
    digest; the vector holds bucket counts.
    """

    supports_concurrency = True

    def __init__(self, dim: int = 256):
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        import hashlib

        vec = np.zeros(self.dim, dtype=float)
        for token in normalize_tokens(text):
            digest = hashlib.md5(token.encode("utf-8")).digest()
            vec[int.from_bytes(digest[:4], "big") % self.dim] += 1.0
        return vec


def semantic_similarity(
    rationale: str,
    cm_spans: Sequence[str],
    si_spans: Sequence[str],
    embedder: EmbeddingProvider,
) -> float:
    """Cosine between embeddings of the combined spans and the rationale."""
    combined = " ".join(list(cm_spans) + list(si_spans))
    try:
        a = np.asarray(embedder.embed(combined), dtype=float)
        b = np.asarray(embedder.embed(rationale), dtype=float)
    except Exception as exc:
        raise EmbedderFailure(f"embedding failed: {exc}") from exc
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def _betacf(a: float, b: float, x: float, eps: float = 1e-12, max_iter: int = 500):
    """Continued fraction for the regularized incomplete beta function."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    return h


def _incbeta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log(1.0 - x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: int) -> float:
    """One-sided survival function P(T > t) of Student's t."""
    x = df / (df + t * t)
    p = 0.5 * _incbeta(df / 2.0, 0.5, x)
    return p if t >= 0 else 1.0 - p


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p_two_sided: float

    def to_dict(self) -> dict:
        return {"t": self.t, "df": self.df, "p_two_sided": self.p_two_sided}


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Two-sided paired t-test on elementwise differences."""
    if len(a) != len(b):
        raise LengthMismatchError(f"{len(a)} vs {len(b)} samples")
    n = len(a)
    if n < 2:
        raise EmptyInputError("need at least two pairs")
    diffs = [x - y for x, y in zip(a, b)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        raise ZeroVarianceError("all paired differences are equal")
    t = mean / math.sqrt(var / n)
    df = n - 1
    p = 2.0 * student_t_sf(abs(t), df)
    return TTestResult(t=t, df=df, p_two_sided=min(1.0, p))


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    variance: float
    per_sample: tuple[float, ...]

    @classmethod
    def from_samples(cls, samples: Sequence[float]) -> "MetricSummary":
        xs = list(samples)
        if not xs:
            return cls(mean=0.0, variance=0.0, per_sample=())
        mean = sum(xs) / len(xs)
        var = sum((x - mean) ** 2 for x in xs) / len(xs)
        return cls(mean=mean, variance=var, per_sample=tuple(xs))

    def consistent(self, tol: float = 1e-9) -> bool:
        if not self.per_sample:
            return True
        return abs(self.mean - sum(self.per_sample) / len(self.per_sample)) <= tol

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "variance": self.variance,
            "per_sample": list(self.per_sample),
        }


@dataclass
class EvalReport:
    metrics: dict[str, MetricSummary]
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "metrics": {k: v.to_dict() for k, v in self.metrics.items()},
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "EvalReport":
        return cls(
            metrics={
                k: MetricSummary(
                    mean=v["mean"],
                    variance=v["variance"],
                    per_sample=tuple(v["per_sample"]),
                )
                for k, v in obj["metrics"].items()
            },
            metadata=obj.get("metadata", {}),
        )

    @staticmethod
    def now_timestamp() -> str:
        return time.strftime("%Y-%m-%dT%H:%M:%S")
