"""Emoji-sensitive self-harm text analysis toolkit."""

__version__ = "0.1.0"

from .corpus import Corpus, Label, Post, Span  # noqa: F401
from .lexicon import ChanceLevel, EmojiEntry, Lexicon  # noqa: F401
from .metrics import EvalReport, Prediction  # noqa: F401
from .prompts import PromptInstance, PromptMode  # noqa: F401
