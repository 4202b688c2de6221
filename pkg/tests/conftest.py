import os

import pytest

from coopcore.mbc import MbcLibrary
from coopcore.model import Game, load_game

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


@pytest.fixture(scope="session")
def library() -> MbcLibrary:
    """Shared MBC stores; n <= 5 generated eagerly, larger on demand."""
    lib = MbcLibrary()
    lib.get(5)
    return lib


@pytest.fixture(scope="session")
def store3(library):
    return library.get(3)


@pytest.fixture(scope="session")
def store4(library):
    return library.get(4)


@pytest.fixture(scope="session")
def store5(library):
    return library.get(5)


@pytest.fixture(scope="session")
def store6(library):
    """The 200214-collection store; generated once per session (~1 min)."""
    import time

    started = time.perf_counter()
    store = library.get(6)
    elapsed = time.perf_counter() - started
    store.cache("generation-seconds", lambda: elapsed)
    return store


@pytest.fixture(scope="session")
def three_player_a5() -> Game:
    return load_game(fixture_path("three_player_a5.json"))


@pytest.fixture(scope="session")
def three_player_pairs8() -> Game:
    return load_game(fixture_path("three_player_pairs8.json"))


@pytest.fixture(scope="session")
def min_additive_five() -> Game:
    return load_game(fixture_path("min_additive_five.json"))


@pytest.fixture(scope="session")
def four_person_06() -> Game:
    return load_game(fixture_path("four_person_06.json"))


@pytest.fixture(scope="session")
def six_player_unstable() -> Game:
    return load_game(fixture_path("six_player_unstable.json"))


@pytest.fixture(scope="session")
def blind_spot_three() -> Game:
    return load_game(fixture_path("blind_spot_three.json"))


def names_to_mask(game: Game, text: str) -> int:
    names = game.players or [chr(ord("a") + i) for i in range(game.n)]
    return sum(1 << names.index(ch) for ch in text)
