"""Prompt construction for the five prompt families and few-shot
exemplar selection.

Instruction texts are fixed constants; the structured ``input`` object
carries the post text, the per-emoji enrichment list, and (depending on
the mode) the classification, spans, or exemplars. Fine-tuning instances
additionally carry the expected output object; all other modes leave it
empty. Serialization is JSON with ``instruction`` / ``input`` /
``output`` keys, one instance per JSONL line.
"""

from __future__ import annotations

import enum
import json
import random
import warnings
from dataclasses import dataclass

from .corpus import Corpus, Label, Post
from .errors import (
    EmptyExemplarsError,
    InsufficientExemplarsError,
    MissingBodyError,
    MissingPredictionError,
)
from .lexicon import Lexicon
from .metrics import Prediction

FINETUNE_INSTRUCTION = (
    "Analyze the following social media post to determine if it is related "
    "to self-harm. Identify spans related to casual mention and serious "
    "intent regarding self-harm."
)

RATIONALE_INSTRUCTION = (
    "Using the provided classification and extracted spans, generate a "
    "rationale explaining why the post is classified as self-harm or "
    "non-self-harm. Consider the spans and the emoji meanings provided."
)

ZEROSHOT_INSTRUCTION = (
    "You are tasked with evaluating social media posts to classify them as "
    "self-harm or non self-harm. Review the post below and provide your "
    "classification. Additionally, write a detailed rationale that explains "
    "your decision, taking into account the content and context of the post."
)

FEWSHOT_INSTRUCTION = (
    "You are tasked with evaluating social media posts to classify them as "
    "self-harm or non self-harm. Review the following posts and "
    "classifications to understand the task. Then classify the new post and "
    "write a detailed rationale that explains your decision, taking into "
    "account the content and context of the post."
)

SYNTHETIC_SH_INSTRUCTION = (
    "Create a Reddit post where the author reflects on their experiences "
    "with self-harm. The post should express a real person's emotions and "
    "thoughts, incorporating past incidents, current struggles, or stories "
    "related to their journey. Encourage the author to discuss their "
    "feelings, the impact on their life, or how they've tried to cope with "
    "their condition. The language should be varied and natural, avoiding "
    "repetition."
)

SYNTHETIC_NSH_INSTRUCTION = (
    "Create a Reddit post containing phrases which indicate self harm in a "
    "joking or casual way. Phrases will be containing the self-harm "
    "intentions in a sarcastic way where the author is not actually going "
    "to harm himself or herself. It can show the irritation, stress, anger "
    "or disgrace just to express the situation. The author should be in a "
    "light mood to express his/her thoughts."
)

SYNTHETIC_SH_EXAMPLES = [
    {
        "post": (
            "I keep finding myself tracing the scars on my skin, a reminder "
            "of the war inside my head. The urge to self-harm is like a "
            "shadow that never leaves, lurking in the corners of my mind. "
            "It's a battle between wanting to feel something and wanting the "
            "pain to stop. Sometimes the blade feels like the only friend "
            "who understands. But deep down, I know it's not the answer. "
            "Trying to hold on to hope like a fragile thread in a storm. One "
            "day at a time, one breath at a time. We're warriors fighting "
            "invisible battles, and our scars tell stories of survival."
        ),
        "serious_intent_spans": [
            "tracing the scars on my skin",
            "urge to self-harm",
            "the blade feels like the only friend",
        ],
        "rationale": (
            'The reference of "urge to self-harm" and "the blade feels like '
            'the only friend" is unquestionably an indication of the '
            "author's genuine resolve to cause physical harm to themselves."
        ),
    },
    {
        "post": (
            "It's been years since I last hurt myself, but yesterday, I had "
            "the strongest urge to do it again. I found an old blade in my "
            "drawer and just sat there holding it, trying to convince myself "
            "not to use it. I didn't, but it was so hard."
        ),
        "serious_intent_spans": [
            "since I last hurt myself",
            "strongest urge to do it again",
        ],
        "rationale": (
            'The use of phrases like "strongest urge to do it again" by the '
            "user exhibit a definite intention of causing self-injury, "
            "combined with the context of the post."
        ),
    },
]

SYNTHETIC_NSH_EXAMPLES = [
    {
        "post": (
            "Great, my boss just gave me another pointless task. Guess I'll "
            "just bang my head against the wall."
        ),
        "casual_intent_spans": ["bang my head against the wall"],
        "rationale": (
            'The mention of "bang my head against the wall" is a violent '
            "expression suggesting intention to hurt themselves, but, with "
            "the context of the situation, it is clearly just a metaphorical "
            "expression for frustration and does not show an actual desire "
            "for self harm."
        ),
    },
    {
        "post": (
            "Lost all my progress because of a glitch. Might as well just "
            "throw myself off a cliff."
        ),
        "casual_intent_spans": ["throw myself off a cliff."],
        "rationale": (
            'The mention of "throw myself off a cliff" shows exasperation of '
            "author about loosing his work, but it is clear looking at the "
            "emojis that it is definitely not said in a serious intent of "
            "harming themselves."
        ),
    },
]

# Output vocabulary for the classification field.
LABEL_TO_TEXT = {
    Label.SELF_HARM: "self-harm",
    Label.NON_SELF_HARM: "non self-harm",
}


class PromptMode(enum.Enum):
    FINETUNE = "finetune"
    RATIONALE = "rationale"
    ZEROSHOT = "zeroshot"
    FEWSHOT = "fewshot"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class PromptInstance:
    mode: PromptMode
    instruction: str
    input: dict
    expected_output: dict | None = None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "instruction": self.instruction,
            "input": self.input,
            "output": self.expected_output,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, obj: dict) -> "PromptInstance":
        return cls(
            mode=PromptMode(obj["mode"]),
            instruction=obj["instruction"],
            input=obj["input"],
            expected_output=obj.get("output"),
        )

    @classmethod
    def from_json(cls, text: str) -> "PromptInstance":
        return cls.from_dict(json.loads(text))


def emoji_enrichment(post: Post, lexicon: Lexicon) -> list[dict]:
    """One enrichment record per unique emoji grapheme in the post, in
    order of first appearance. Emoji unknown to the lexicon are listed
    with empty meanings so the model still sees the glyph."""
    records = []
    seen: set[str] = set()
    for glyph in post.emoji_graphemes():
        entry = lexicon.lookup(glyph)
        key = entry.glyph if entry is not None else glyph
        if key in seen:
            continue
        seen.add(key)
        if entry is not None:
            records.append(
                {
                    "emoji": entry.glyph,
                    "usual_meaning": entry.usual_meaning,
                    "contextual_meaning": entry.contextual_meaning,
                    "casual mention chance": str(entry.cm_chance),
                    "serious intent chance": str(entry.si_chance),
                }
            )
        else:
            warnings.warn(
                f"emoji {glyph!r} not in lexicon; enrichment left empty",
                stacklevel=2,
            )
            records.append(
                {
                    "emoji": glyph,
                    "usual_meaning": "",
                    "contextual_meaning": "",
                    "casual mention chance": "",
                    "serious intent chance": "",
                }
            )
    return records


def build_finetune(post: Post, lexicon: Lexicon) -> PromptInstance:
    """Training instance: post text plus enrichment in, gold label and
    span lists out."""
    return PromptInstance(
        mode=PromptMode.FINETUNE,
        instruction=FINETUNE_INSTRUCTION,
        input={
            "post text": post.full_text(),
            "emojis": emoji_enrichment(post, lexicon),
        },
        expected_output={
            "classification": LABEL_TO_TEXT[post.label],
            "casual_mention_spans": [s.text for s in post.cm_spans],
            "serious_intent_spans": [s.text for s in post.si_spans],
        },
    )


def build_rationale(
    post: Post, prediction: Prediction, lexicon: Lexicon
) -> PromptInstance:
    """Rationale generation instance for an existing prediction."""
    if prediction is None:
        raise MissingPredictionError("rationale prompt requires a prediction")
    return PromptInstance(
        mode=PromptMode.RATIONALE,
        instruction=RATIONALE_INSTRUCTION,
        input={
            "post text": post.full_text(),
            "classification": LABEL_TO_TEXT[prediction.label],
            "casual_mention_spans": list(prediction.cm_spans),
            "serious_intent_spans": list(prediction.si_spans),
            "emojis": emoji_enrichment(post, lexicon),
        },
        expected_output=None,
    )


def build_zeroshot(post: Post) -> PromptInstance:
    if not post.body.strip():
        raise MissingBodyError(f"post {post.id!r} has an empty body")
    return PromptInstance(
        mode=PromptMode.ZEROSHOT,
        instruction=ZEROSHOT_INSTRUCTION,
        input={"post text": post.full_text()},
        expected_output=None,
    )


def _rationale_stub(post: Post) -> str:
    spans = [s.text for s in post.cm_spans] + [s.text for s in post.si_spans]
    if not spans:
        return (
            "The overall tone of the post supports the classification of "
            f"{LABEL_TO_TEXT[post.label]}."
        )
    quoted = ", ".join(f'"{s}"' for s in spans)
    return (
        f"The mention of {quoted} supports the classification of "
        f"{LABEL_TO_TEXT[post.label]}."
    )


def build_fewshot(post: Post, exemplars: list[Post]) -> PromptInstance:
    """Few-shot instance: labeled exemplar blocks followed by the query
    post, exemplar order preserved."""
    if not exemplars:
        raise EmptyExemplarsError("few-shot prompt requires exemplars")
    if not post.body.strip():
        raise MissingBodyError(f"post {post.id!r} has an empty body")
    examples = [
        {
            "post": ex.full_text(),
            "classification": LABEL_TO_TEXT[ex.label],
            "rationale": _rationale_stub(ex),
        }
        for ex in exemplars
    ]
    return PromptInstance(
        mode=PromptMode.FEWSHOT,
        instruction=FEWSHOT_INSTRUCTION,
        input={"examples": examples, "new post text": post.full_text()},
        expected_output=None,
    )


def is_borderline(post: Post) -> bool:
    """Default borderline predicate: carries both a CM and an SI span."""
    return bool(post.cm_spans) and bool(post.si_spans)


def select_exemplars(
    corpus: Corpus, k: int, seed: int, borderline=is_borderline
) -> list[Post]:
    """Pick few-shot exemplars deterministically under the seed.

    k=2: one CM-bearing non-self-harm post and one SI-bearing self-harm
    post. k=5: two of each plus one borderline post (both span kinds
    present, falling back to a self-harm post with only CM spans).
    """
    if k not in (2, 5):
        raise ValueError(f"k must be 2 or 5, got {k}")
    rng = random.Random(seed)

    cm_pool = [
        p for p in corpus if p.label is Label.NON_SELF_HARM and p.cm_spans
    ]
    si_pool = [p for p in corpus if p.label is Label.SELF_HARM and p.si_spans]

    n_cm, n_si = (2, 2) if k == 5 else (1, 1)

    def take(pool: list[Post], n: int, category: str, excluded: set[str]):
        candidates = sorted(
            (p for p in pool if p.id not in excluded), key=lambda p: p.id
        )
        if len(candidates) < n:
            raise InsufficientExemplarsError(category, n, len(candidates))
        return rng.sample(candidates, n)

    chosen: list[Post] = []
    used: set[str] = set()
    for p in take(cm_pool, n_cm, "casual-mention", used):
        chosen.append(p)
        used.add(p.id)
    for p in take(si_pool, n_si, "serious-intent", used):
        chosen.append(p)
        used.add(p.id)
    if k == 5:
        border_pool = [p for p in corpus if borderline(p)]
        if not any(p.id not in used for p in border_pool):
            border_pool = [
                p
                for p in corpus
                if p.label is Label.SELF_HARM and p.cm_spans and not p.si_spans
            ]
        for p in take(border_pool, 1, "borderline", used):
            chosen.append(p)
            used.add(p.id)
    return chosen


def build_synthetic(label: Label) -> PromptInstance:
    """Generation prompt for synthetic posts of the given label."""
    if label is Label.SELF_HARM:
        instruction = SYNTHETIC_SH_INSTRUCTION
        examples = SYNTHETIC_SH_EXAMPLES
    else:
        instruction = SYNTHETIC_NSH_INSTRUCTION
        examples = SYNTHETIC_NSH_EXAMPLES
    return PromptInstance(
        mode=PromptMode.SYNTHETIC,
        instruction=instruction,
        input={"examples": [dict(e) for e in examples]},
        expected_output=None,
    )
