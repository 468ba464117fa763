import json
from pathlib import Path

import pytest

from cefg import load_game

GAMES = Path(__file__).resolve().parent.parent / "games"


@pytest.fixture(scope="session")
def abortion():
    return load_game(GAMES / "abortion.game")


@pytest.fixture(scope="session")
def example2():
    return load_game(GAMES / "example2.game")


@pytest.fixture(scope="session")
def example2_modified():
    return load_game(GAMES / "example2-modified.game")


def game_path(name: str) -> Path:
    return GAMES / name


def make_game_text(nodes, players=3, root=None, feasible="all",
                   combinator="min", info_sets=None, chance=None,
                   synergies=None, utility=None):
    """Compact builder for inline test games.

    `nodes` maps id -> {"player": i, "actions": {...}} or a payoff list.
    """
    body = {}
    for nid, spec in nodes.items():
        if isinstance(spec, (list, tuple)):
            body[nid] = {"payoffs": list(spec)}
        else:
            body[nid] = spec
    doc = {
        "format_version": 1,
        "players": [f"P{i}" for i in range(1, players + 1)],
        "root": root or next(iter(nodes)),
        "nodes": body,
        "coalitions": {"feasible": feasible,
                       "utility": utility or {"combinator": combinator}},
    }
    if info_sets:
        doc["info_sets"] = info_sets
    if chance:
        doc["chance"] = chance
    if synergies:
        doc["synergies"] = synergies
    return json.dumps(doc)
