import json

import pytest

from cesmkit.corpus import Corpus, Label
from cesmkit.errors import (
    EmptyExemplarsError,
    InsufficientExemplarsError,
    MissingBodyError,
    MissingPredictionError,
)
from cesmkit.metrics import Prediction
from cesmkit.prompts import (
    LABEL_TO_TEXT,
    PromptInstance,
    PromptMode,
    build_fewshot,
    build_finetune,
    build_rationale,
    build_synthetic,
    build_zeroshot,
    emoji_enrichment,
    is_borderline,
    select_exemplars,
)
from conftest import make_post


def test_enrichment_order_and_dedup(small_lexicon):
    post = make_post(
        "e", "pain \U0001f494 strength \U0001f4aa again \U0001f494", "sh"
    )
    records = emoji_enrichment(post, small_lexicon)
    assert [r["emoji"] for r in records] == ["\U0001f494", "\U0001f4aa"]
    assert records[0]["usual_meaning"] == "Broken heart"
    assert records[0]["casual mention chance"] == "Medium"
    assert records[0]["serious intent chance"] == "High"


def test_enrichment_unknown_emoji_left_empty(small_lexicon):
    post = make_post("e", "hi \U0001f940", "nsh")
    with pytest.warns(UserWarning):
        records = emoji_enrichment(post, small_lexicon)
    assert records == [
        {
            "emoji": "\U0001f940",
            "usual_meaning": "",
            "contextual_meaning": "",
            "casual mention chance": "",
            "serious intent chance": "",
        }
    ]


def test_enrichment_vs16_variant_uses_lexicon_glyph(cesm100):
    post = make_post("e", "love ❤", "nsh")
    records = emoji_enrichment(post, cesm100)
    assert records[0]["usual_meaning"] == "Red heart"


def test_finetune_instance(small_lexicon):
    post = make_post(
        "f1", "thinking about cutting \U0001f52a", "sh",
        si=["thinking about cutting"],
    )
    inst = build_finetune(post, small_lexicon)
    assert inst.mode is PromptMode.FINETUNE
    assert inst.input["post text"] == post.body
    assert inst.input["emojis"][0]["emoji"] == "\U0001f52a"
    assert inst.expected_output == {
        "classification": "self-harm",
        "casual_mention_spans": [],
        "serious_intent_spans": ["thinking about cutting"],
    }


def test_finetune_includes_title(small_lexicon):
    post = make_post("f2", "body text", "nsh", title="a title")
    inst = build_finetune(post, small_lexicon)
    assert inst.input["post text"] == "a title\nbody text"


def test_zeroshot_has_no_expected_output():
    post = make_post("z", "some text", "nsh")
    inst = build_zeroshot(post)
    assert inst.mode is PromptMode.ZEROSHOT
    assert inst.expected_output is None
    assert inst.input == {"post text": "some text"}


def test_zeroshot_empty_body_raises():
    post = make_post("z", "   ", "nsh")
    with pytest.raises(MissingBodyError):
        build_zeroshot(post)


def test_rationale_requires_prediction(small_lexicon):
    post = make_post("r", "text", "nsh")
    with pytest.raises(MissingPredictionError):
        build_rationale(post, None, small_lexicon)
    pred = Prediction(label=Label.NON_SELF_HARM, cm_spans=("text",))
    inst = build_rationale(post, pred, small_lexicon)
    assert inst.input["classification"] == "non self-harm"
    assert inst.input["casual_mention_spans"] == ["text"]


def test_fewshot_preserves_exemplar_order(demo_corpus):
    exemplars = select_exemplars(demo_corpus, 2, seed=0)
    query = demo_corpus.by_id("p06")
    inst = build_fewshot(query, exemplars)
    assert inst.mode is PromptMode.FEWSHOT
    assert [e["post"] for e in inst.input["examples"]] == [
        p.full_text() for p in exemplars
    ]
    assert inst.input["new post text"] == query.full_text()
    for e in inst.input["examples"]:
        assert e["classification"] in LABEL_TO_TEXT.values()
        assert e["rationale"]


def test_fewshot_requires_exemplars(demo_corpus):
    with pytest.raises(EmptyExemplarsError):
        build_fewshot(demo_corpus.by_id("p06"), [])


def test_select_exemplars_k2(demo_corpus):
    exemplars = select_exemplars(demo_corpus, 2, seed=1)
    assert len(exemplars) == 2
    nsh, sh = exemplars
    assert nsh.label is Label.NON_SELF_HARM and nsh.cm_spans
    assert sh.label is Label.SELF_HARM and sh.si_spans


def test_select_exemplars_k5(demo_corpus):
    exemplars = select_exemplars(demo_corpus, 5, seed=1)
    assert len(exemplars) == 5
    labels = [p.label for p in exemplars]
    assert labels[:2] == [Label.NON_SELF_HARM] * 2
    assert labels[2:4] == [Label.SELF_HARM] * 2
    # fifth slot: a borderline post, or the documented fallback of a
    # self-harm post carrying only CM spans
    fifth = exemplars[4]
    assert is_borderline(fifth) or (
        fifth.label is Label.SELF_HARM and fifth.cm_spans and not fifth.si_spans
    )
    assert len({p.id for p in exemplars}) == 5


def test_select_exemplars_deterministic(demo_corpus):
    a = select_exemplars(demo_corpus, 5, seed=42)
    b = select_exemplars(demo_corpus, 5, seed=42)
    assert [p.id for p in a] == [p.id for p in b]


def test_select_exemplars_k_validated(demo_corpus):
    with pytest.raises(ValueError):
        select_exemplars(demo_corpus, 3, seed=0)


def test_select_exemplars_insufficient():
    corpus = Corpus((make_post("only", "text", "nsh", cm=["text"]),))
    with pytest.raises(InsufficientExemplarsError):
        select_exemplars(corpus, 2, seed=0)


def test_is_borderline(demo_corpus):
    assert is_borderline(demo_corpus.by_id("p07"))
    assert not is_borderline(demo_corpus.by_id("p01"))


def test_synthetic_prompts_differ_by_label():
    sh = build_synthetic(Label.SELF_HARM)
    nsh = build_synthetic(Label.NON_SELF_HARM)
    assert sh.instruction != nsh.instruction
    assert sh.mode is PromptMode.SYNTHETIC
    assert len(sh.input["examples"]) == 2
    assert len(nsh.input["examples"]) == 2
    assert "serious_intent_spans" in sh.input["examples"][0]
    assert "casual_intent_spans" in nsh.input["examples"][0]


def test_instance_json_roundtrip(small_lexicon):
    post = make_post("j", "round trip \U0001f494", "sh", si=["round trip"])
    inst = build_finetune(post, small_lexicon)
    again = PromptInstance.from_json(inst.to_json())
    assert again == inst
    obj = json.loads(inst.to_json())
    assert set(obj) == {"mode", "instruction", "input", "output"}
