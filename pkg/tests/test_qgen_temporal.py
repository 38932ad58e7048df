from __future__ import annotations

import pytest

from recipeqg.amr import parse_penman, read_penman_file, unknown_count
from recipeqg.flowgraph import load_flowgraph, mixtures, order_pairs
from recipeqg.qgen_temporal import (
    ActionAmr,
    BadPlaceholderCount,
    DuplicateTemplateId,
    MissingActionAmr,
    TemporalError,
    extract_action_amrs,
    gen_mixture_questions,
    gen_next_prev_questions,
    gen_order_questions,
    ingredients_answer,
    instantiate,
    load_templates,
    name_to_amr,
)


@pytest.fixture(scope="module")
def pie(fixtures_dir):
    return load_flowgraph(fixtures_dir / "shepherd_pie.flow.json")


@pytest.fixture(scope="module")
def pie_amrs(fixtures_dir):
    graphs = read_penman_file(fixtures_dir / "shepherd_pie.penman")
    return {int(g.metadata["id"].rsplit(".", 1)[1]): g for g in graphs}


@pytest.fixture(scope="module")
def templates():
    return load_templates()


@pytest.fixture(scope="module")
def pie_actions(pie, pie_amrs):
    return extract_action_amrs(pie, pie_amrs)


def by_name(graph, name):
    return next(m for m in mixtures(graph) if m.name == name)


# --- template loading ---

def test_default_templates_load(templates):
    assert len(templates) == 17
    ids = [t.id for t in templates]
    assert len(set(ids)) == 17
    by_category = {}
    for t in templates:
        by_category.setdefault(t.category, []).append(t)
    assert len(by_category["temporal_mixture"]) == 12
    assert len(by_category["temporal_next"]) == 2
    assert len(by_category["temporal_prev"]) == 1
    assert len(by_category["temporal_order"]) == 2
    for t in templates:
        assert t.surface_hint


def test_template_slot_counts(templates):
    for t in templates:
        if t.category == "temporal_mixture":
            assert t.slots == 1
        elif t.category == "temporal_order":
            assert t.slots == 2
    contextfree = next(t for t in templates if t.id == "next-contextfree")
    assert contextfree.slots == 0


def test_every_template_asks_exactly_one_thing(templates):
    for t in templates:
        assert unknown_count(t.pattern_amr) == 1


def test_load_templates_from_path(tmp_path, templates):
    copy = tmp_path / "templates.penman"
    copy.write_text(
        "# ::id only\n# ::category temporal_prev\n# ::surface Before {action}?\n"
        "(d / do-02\n    :ARG1 (a / amr-unknown)\n    :time (b / before\n        :op1 (s / slot-1)))\n"
    )
    loaded = load_templates(copy)
    assert [t.id for t in loaded] == ["only"]
    assert loaded[0].category == "temporal_prev"


def test_load_rejects_bad_slot_count(tmp_path):
    bad = tmp_path / "bad.penman"
    bad.write_text(
        "# ::id two-slot-mixture\n# ::category temporal_mixture\n# ::surface What is in {a} and {b}?\n"
        "(ii / ingredient\n    :domain (a / amr-unknown)\n    :poss (s / slot-1)\n    :part (s2 / slot-2))\n"
    )
    with pytest.raises(BadPlaceholderCount):
        load_templates(bad)


def test_load_rejects_gapped_slot_numbers(tmp_path):
    bad = tmp_path / "bad.penman"
    bad.write_text(
        "# ::id gapped\n# ::category temporal_order\n# ::surface {a} or {b}?\n"
        "(o / or\n    :op1 (s / slot-1)\n    :op2 (s2 / slot-3)\n    :polarity (a / amr-unknown))\n"
    )
    with pytest.raises(BadPlaceholderCount):
        load_templates(bad)


def test_load_rejects_duplicate_ids(tmp_path):
    bad = tmp_path / "bad.penman"
    block = (
        "# ::id twin\n# ::category temporal_prev\n# ::surface Before {action}?\n"
        "(d / do-02\n    :ARG1 (a / amr-unknown)\n    :time (b / before\n        :op1 (s / slot-1)))\n"
    )
    bad.write_text(block + "\n" + block)
    with pytest.raises(DuplicateTemplateId):
        load_templates(bad)


def test_load_rejects_missing_headers(tmp_path):
    bad = tmp_path / "bad.penman"
    bad.write_text("# ::id headless\n(d / do-02 :ARG1 (a / amr-unknown))\n")
    with pytest.raises(TemporalError):
        load_templates(bad)


# --- instantiation ---

def test_instantiate_matches_published_mixture_questions(templates, listings):
    filler = name_to_amr("vegetables")
    type2 = next(t for t in templates if t.id == "mixture-02")
    type4 = next(t for t in templates if t.id == "mixture-04")
    assert instantiate(type2, [filler]) == listings["mixture-type2"]
    assert instantiate(type4, [filler]) == listings["mixture-type4"]


def test_instantiate_checks_filler_count(templates):
    type2 = next(t for t in templates if t.id == "mixture-02")
    with pytest.raises(ValueError):
        instantiate(type2, [])
    with pytest.raises(ValueError):
        instantiate(type2, [name_to_amr("salt"), name_to_amr("flour")])


def test_instantiate_leaves_no_placeholders(templates):
    fillers = [name_to_amr("salt"), name_to_amr("flour")]
    for t in templates:
        filled = instantiate(t, fillers[: t.slots])
        assert not any(
            c.startswith("slot-") for cs in filled.nodes.values() for c in cs
        )


def test_instantiate_does_not_mutate_template_or_filler(templates):
    t = next(t for t in templates if t.id == "order-or")
    before = t.pattern_amr.copy()
    filler = name_to_amr("chopped carrots")
    filler_before = filler.copy()
    instantiate(t, [filler, filler])
    assert t.pattern_amr == before
    assert filler == filler_before


# --- ingredient name parsing ---

def test_name_to_amr_plain_noun():
    assert name_to_amr("salt") == parse_penman("(s / salt)")
    assert name_to_amr("turnips") == parse_penman("(t / turnip)")
    assert name_to_amr("the potatoes") == parse_penman("(p / potato)")


def test_name_to_amr_keeps_modifier_nouns():
    assert name_to_amr("chicken broth") == parse_penman("(b / broth :mod (c / chicken))")
    assert name_to_amr("tomato paste") == parse_penman("(p / paste :mod (t / tomato))")


def test_name_to_amr_maps_participles_to_frames():
    assert name_to_amr("chopped carrots") == parse_penman(
        "(c / carrot :ARG1-of (c2 / chop-01))")
    assert name_to_amr("grated cheddar cheese") == parse_penman(
        "(c / cheese :mod (c2 / cheddar) :ARG1-of (g / grate-02))")


def test_name_to_amr_reads_counts():
    assert name_to_amr("two chopped onions") == parse_penman(
        "(o / onion :quant 2 :ARG1-of (c / chop-01))")
    assert name_to_amr("3 eggs") == parse_penman("(e / egg :quant 3)")


def test_name_to_amr_singularization_exceptions():
    assert name_to_amr("cheese") == parse_penman("(c / cheese)")
    assert name_to_amr("molasses") == parse_penman("(m / molasses)")


# --- mixture answers ---

def test_ingredients_answer_hoists_leading_participle(pie, listings):
    answer = ingredients_answer(pie, by_name(pie, "vegetables"))
    assert answer == listings["mixture-answer"]


def test_ingredients_answer_single_ingredient(pie):
    answer = ingredients_answer(pie, by_name(pie, "potatoes"))
    assert answer == parse_penman("(p / potato)")


def test_ingredients_answer_plain_compound(pie):
    answer = ingredients_answer(pie, by_name(pie, "mashed potatoes"))
    assert answer == parse_penman(
        "(a / and :op1 (p / potato) :op2 (b / butter) :op3 (s / salt))")


def test_ingredients_answer_deep_expansion(pie):
    answer = ingredients_answer(pie, by_name(pie, "lamb mixture"))
    assert answer == parse_penman(
        "(c / chop-01 :ARG1 (a / and"
        " :op1 (c2 / carrot) :op2 (t / turnip) :op3 (f / flour)"
        " :op4 (b / broth :mod (c3 / chicken))"
        " :op5 (p / paste :mod (t2 / tomato))"
        " :op6 (t3 / thyme :ARG1-of (c4 / chop-01))"
        " :op7 (c5 / cinnamon) :op8 (l / lamb)))")


# --- action graph extraction ---

def test_extract_action_amrs_one_action_per_sentence(pie, pie_amrs):
    acts = extract_action_amrs(pie, pie_amrs)
    assert sorted(acts) == list(range(11))
    assert acts[7].amr == pie_amrs[7]
    assert acts[7].realized == "Chop the potatoes."
    assert acts[10].realized.startswith("Spread mashed potatoes")


def test_extract_action_amrs_splits_conjoined_sentences():
    doc = [{
        "sent_index": 0,
        "sent": "Chop the onions and heat the pan.",
        "actions": [
            {"act_id": 0, "action": "chop", "input": {"onions": -1},
             "cookware": {}, "next_action": 1},
            {"act_id": 1, "action": "heat", "input": {}, "cookware": {"pan": -1}},
        ],
    }]
    graph = load_flowgraph(doc)
    sentence = parse_penman(
        "(a / and"
        " :op1 (c / chop-01 :ARG1 (o / onion))"
        " :op2 (h / heat-01 :ARG1 (p / pan)))")
    acts = extract_action_amrs(graph, {0: sentence})
    assert acts[0].amr == parse_penman("(c / chop-01 :ARG1 (o / onion))")
    assert acts[1].amr == parse_penman("(h / heat-01 :ARG1 (p / pan))")
    assert acts[0].realized == acts[1].realized == "Chop the onions and heat the pan."


def test_extract_action_amrs_falls_back_to_whole_sentence():
    doc = [{
        "sent_index": 0,
        "sent": "Chop the onions, then the pan.",
        "actions": [
            {"act_id": 0, "action": "chop", "input": {"onions": -1},
             "cookware": {}, "next_action": 1},
            {"act_id": 1, "action": "heat", "input": {}, "cookware": {"pan": -1}},
        ],
    }]
    graph = load_flowgraph(doc)
    sentence = parse_penman("(c / chop-01 :ARG1 (o / onion))")
    with pytest.warns(UserWarning):
        acts = extract_action_amrs(graph, {0: sentence})
    assert acts[0].amr == sentence
    assert acts[1].amr == sentence


def test_extract_action_amrs_requires_every_sentence(pie):
    with pytest.raises(MissingActionAmr):
        extract_action_amrs(pie, {})


# --- mixture questions ---

def test_mixture_questions_cover_every_named_mixture(pie, templates):
    out = gen_mixture_questions(pie, templates)
    assert len(out) == 4 * 12
    for cand in out:
        assert cand.category == "temporal_mixture"
        assert unknown_count(cand.question_amr) == 1
        assert cand.answer_amr is not None
        assert not any(
            c.startswith("slot-")
            for cs in cand.question_amr.nodes.values() for c in cs)


def test_mixture_questions_match_published_forms(pie, templates, listings):
    out = gen_mixture_questions(pie, templates)
    questions = [c.question_amr for c in out]
    assert listings["mixture-type2"] in questions
    assert listings["mixture-type4"] in questions
    vegetable_cands = [
        c for c in out if c.question_amr == listings["mixture-type2"]]
    assert all(c.answer_amr == listings["mixture-answer"] for c in vegetable_cands)


def test_mixture_question_provenance_lists_expansion_sentences(pie, templates):
    out = gen_mixture_questions(pie, templates)
    lamb = [c for c in out if c.provenance == (1, 2, 3, 4, 5, 6)]
    assert len(lamb) == 12
    vegetables = [c for c in out if c.provenance == (1,)]
    assert len(vegetables) == 12


# --- next and previous questions ---

def test_next_prev_counts(pie, templates, pie_actions):
    out = gen_next_prev_questions(pie, templates, pie_actions)
    nexts = [c for c in out if c.category == "temporal_next"]
    prevs = [c for c in out if c.category == "temporal_prev"]
    assert len(nexts) == 24
    assert len(prevs) == 11


def test_next_question_matches_published_form(pie, templates, pie_actions, listings):
    out = gen_next_prev_questions(pie, templates, pie_actions)
    after_chop = [c for c in out if c.question_amr == listings["next-after"]]
    assert len(after_chop) == 1
    assert after_chop[0].answer_amr == listings["next-answer"]
    assert after_chop[0].provenance == (7, 8)


def test_contextfree_next_variant(pie, templates, pie_actions, listings):
    out = gen_next_prev_questions(pie, templates, pie_actions)
    contextfree = [
        c for c in out if c.question_amr == listings["next-contextfree"]]
    assert len(contextfree) == 12
    mash_answers = [
        c for c in contextfree if c.answer_amr == listings["next-answer"]]
    assert len(mash_answers) == 1
    assert mash_answers[0].provenance == (7, 8)


def test_prev_question_matches_published_form(pie, templates, pie_actions, listings, pie_amrs):
    out = gen_next_prev_questions(pie, templates, pie_actions)
    before_spread = [c for c in out if c.question_amr == listings["prev-before"]]
    assert len(before_spread) == 2
    assert {c.answer_amr for c in before_spread} == {pie_amrs[8], pie_amrs[9]}
    # focus sentence first, answer sentence last
    assert {c.provenance for c in before_spread} == {(10, 8), (10, 9)}


def test_next_prev_answers_keep_imperative_shape(pie, templates, pie_actions):
    out = gen_next_prev_questions(pie, templates, pie_actions)
    for cand in out:
        modes = [e for e in cand.answer_amr.top_edges(":mode")]
        assert len(modes) == 1


def test_next_prev_requires_action_graphs(pie, templates):
    with pytest.raises(MissingActionAmr):
        gen_next_prev_questions(pie, templates, {})


# --- order questions ---

def test_order_counts_four_per_pair(pie, templates, pie_actions):
    out = gen_order_questions(pie, templates, pie_actions)
    assert len(out) == 4 * len(order_pairs(pie))
    assert all(c.category == "temporal_order" for c in out)


def test_order_questions_match_published_forms(pie, templates, pie_actions, listings):
    out = gen_order_questions(pie, templates, pie_actions)
    first_pair = [c for c in out if c.provenance == (0, 1)]
    assert len(first_pair) == 4
    questions = [c.question_amr for c in first_pair]
    assert listings["order-or"] in questions
    # The published amr-choice graph, with the questioned polarity made
    # explicit so the choice frame asks exactly one thing too.
    expected_choice = parse_penman(
        "(a / amr-choice"
        " :op1 (a3 / add-02"
        "    :ARG1 (a2 / and"
        "        :op1 (o / oil)"
        "        :op2 (o2 / onion :quant 2 :ARG1-of (c / chop-01)))"
        "    :ARG2 (p / pan))"
        " :op2 (c4 / cook-01"
        "    :ARG1 (a4 / and"
        "        :op1 (c2 / carrot :ARG1-of (c3 / chop-03))"
        "        :op2 (t / turnip))"
        "    :location (p2 / pan))"
        " :polarity (a5 / amr-unknown)"
        " :ord (o3 / ordinal-entity :value 1))")
    assert expected_choice in questions
    assert all(c.answer_amr == listings["order-answer"] for c in first_pair)


def test_order_answer_invariant_under_slot_swap(pie, templates, pie_actions):
    out = gen_order_questions(pie, templates, pie_actions)
    for start in range(0, len(out), 4):
        chunk = out[start:start + 4]
        assert len({c.answer_amr for c in chunk}) == 1
        assert len({c.provenance for c in chunk}) == 1
        assert len({c.question_amr for c in chunk}) == 4


def test_order_questions_ask_exactly_one_thing(pie, templates, pie_actions):
    out = gen_order_questions(pie, templates, pie_actions)
    for cand in out:
        assert unknown_count(cand.question_amr) == 1


def test_order_requires_action_graphs(pie, templates):
    with pytest.raises(MissingActionAmr):
        gen_order_questions(pie, templates, {})


def test_action_amr_records_fields(pie_amrs):
    act = ActionAmr(7, pie_amrs[7], "Chop the potatoes.")
    assert act.act_id == 7
    assert act.realized == "Chop the potatoes."
