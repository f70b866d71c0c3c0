"""Inter-annotator agreement: Fleiss' kappa for categorical labels and
pairwise symmetrized span F1 for span annotations."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateDistributionError, MisalignedIdsError
from .metrics import span_set_f1


@dataclass(frozen=True)
class RatingMatrix:
    """Items x categories matrix of rating counts; every row sums to the
    number of raters."""

    counts: np.ndarray
    raters_per_item: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=int)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 2 or counts.shape[0] < 1 or counts.shape[1] < 2:
            raise ValueError(
                f"need a matrix of >=1 items x >=2 categories, got {counts.shape}"
            )
        if self.raters_per_item < 2:
            raise ValueError("need at least two raters")
        row_sums = counts.sum(axis=1)
        if not np.all(row_sums == self.raters_per_item):
            bad = int(np.argmax(row_sums != self.raters_per_item))
            raise ValueError(
                f"row {bad} sums to {int(row_sums[bad])}, "
                f"expected {self.raters_per_item}"
            )

    @classmethod
    def from_labels(cls, items: Sequence[Sequence], categories=None) -> "RatingMatrix":
        """Build from per-item lists of rater labels."""
        if not items:
            raise ValueError("no items")
        n = len(items[0])
        if categories is None:
            categories = sorted({lbl for row in items for lbl in row}, key=str)
        index = {c: i for i, c in enumerate(categories)}
        counts = np.zeros((len(items), len(categories)), dtype=int)
        for i, row in enumerate(items):
            if len(row) != n:
                raise ValueError(f"item {i} has {len(row)} ratings, expected {n}")
            for lbl in row:
                counts[i, index[lbl]] += 1
        return cls(counts=counts, raters_per_item=n)


def fleiss_kappa(matrix: RatingMatrix) -> float:
    """Chance-corrected multi-rater agreement.

    kappa = (P_bar - Pe_bar) / (1 - Pe_bar), with per-item agreement
    P_i = (sum_j n_ij^2 - n) / (n (n-1)) and chance agreement
    Pe_bar = sum_j p_j^2 over category proportions p_j.
    """
    counts = matrix.counts.astype(float)
    n = matrix.raters_per_item
    n_items = counts.shape[0]

    p_i = (np.sum(counts**2, axis=1) - n) / (n * (n - 1))
    p_bar = float(np.mean(p_i))
    p_j = counts.sum(axis=0) / (n_items * n)
    pe_bar = float(np.sum(p_j**2))

    if pe_bar >= 1.0:
        raise DegenerateDistributionError(
            "all ratings fall in a single category; kappa is undefined"
        )
    return (p_bar - pe_bar) / (1.0 - pe_bar)


def span_agreement_f1(
    annotations: Mapping[str, Mapping[str, Sequence[str]]],
) -> float:
    """Mean pairwise span agreement across annotators.

    ``annotations`` maps annotator name -> post id -> list of span texts.
    For every unordered annotator pair and post, the span set F1 is
    computed in both directions and averaged; pair scores are averaged
    over posts, then over pairs. All annotators must cover the same ids.
    """
    names = sorted(annotations)
    if len(names) < 2:
        raise ValueError("need at least two annotators")
    id_sets = {name: set(annotations[name]) for name in names}
    reference = id_sets[names[0]]
    for name in names[1:]:
        if id_sets[name] != reference:
            missing = reference.symmetric_difference(id_sets[name])
            raise MisalignedIdsError(
                f"annotator {name!r} covers different ids (e.g. {sorted(missing)[:3]})"
            )
    if not reference:
        raise ValueError("no posts")

    pair_scores = []
    for a, b in combinations(names, 2):
        post_scores = []
        for post_id in sorted(reference):
            sa = list(annotations[a][post_id])
            sb = list(annotations[b][post_id])
            post_scores.append(0.5 * (span_set_f1(sa, sb) + span_set_f1(sb, sa)))
        pair_scores.append(sum(post_scores) / len(post_scores))
    return sum(pair_scores) / len(pair_scores)
