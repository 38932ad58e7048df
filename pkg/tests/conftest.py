from __future__ import annotations

import json
import pathlib
import shutil
import types

import pytest

from recipeqg.amr import read_penman_file

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

BEAN_SOUP_STEPS = ["Add beans to the pot.", "Cook the beans in the pot."]

BEAN_SOUP_AMRS = """\
# ::id bean-soup.0
# ::snt Add beans to the pot.
(a / add-02
    :mode imperative
    :ARG0 (y / you)
    :ARG1 (b / bean)
    :ARG2 (p / pot))

# ::id bean-soup.1
# ::snt Cook the beans in the pot.
(c / cook-01
    :mode imperative
    :ARG0 (y / you)
    :ARG1 (b / bean)
    :location (p / pot))
"""

BEAN_SOUP_FLOW = [
    {"sent_index": 0, "sent": BEAN_SOUP_STEPS[0], "actions": [
        {"act_id": 0, "action": "add", "input": {"beans": -1},
         "cookware": {"pot": -1}, "next_action": 1}]},
    {"sent_index": 1, "sent": BEAN_SOUP_STEPS[1], "actions": [
        {"act_id": 1, "action": "cook", "input": {"beans": 0},
         "cookware": {"pot": 0}}]},
]


@pytest.fixture(scope="session")
def listings():
    graphs = read_penman_file(FIXTURES / "listings" / "listings.penman")
    return {g.metadata["id"]: g for g in graphs}


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """Two-recipe input tree: recipes, AMR sidecar and flow graph files."""
    root = tmp_path_factory.mktemp("corpus")
    flow = json.loads((FIXTURES / "shepherd_pie.flow.json").read_text())
    pie_steps = [s["sent"] for s in flow]
    docs = [
        {"id": "bean-soup", "title": "Bean Soup",
         "ingredients": ["beans"], "steps": BEAN_SOUP_STEPS},
        {"id": "shepherd-pie", "title": "Shepherd's Pie",
         "ingredients": ["oil", "onions", "carrots", "turnips", "lamb",
                         "thyme", "cinnamon", "flour", "chicken broth",
                         "tomato paste", "potatoes", "butter", "salt",
                         "cheddar cheese"],
         "steps": pie_steps},
    ]
    recipes = root / "recipes.jsonl"
    recipes.write_text("".join(json.dumps(d) + "\n" for d in docs))
    flows = root / "flows"
    flows.mkdir()
    shutil.copy(FIXTURES / "shepherd_pie.flow.json", flows / "shepherd-pie.json")
    (flows / "bean-soup.json").write_text(json.dumps(BEAN_SOUP_FLOW))
    amrs = root / "amrs.penman"
    amrs.write_text((FIXTURES / "shepherd_pie.penman").read_text()
                    + "\n" + BEAN_SOUP_AMRS)
    return types.SimpleNamespace(root=root, recipes=recipes, flows=flows,
                                 amrs=amrs, pie_steps=pie_steps)
