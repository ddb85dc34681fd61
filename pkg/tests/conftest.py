"""Shared fixtures: toy maps, the office map, and one trained model per session."""

import time

import pytest

from groundnav.datagen import generate_dataset
from groundnav.grounder import ModelParams
from groundnav.language import Lexicon
from groundnav.mapmodel import Area, AreaMap
from groundnav.sample_map import build_office_map
from groundnav.trainer import TrainConfig, evaluate, split_holdout, train


def _square(x0, y0, w, h):
    return ((x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h))


@pytest.fixture(scope="session")
def office_map():
    return build_office_map()


@pytest.fixture(scope="session")
def office_lexicon(office_map):
    return Lexicon.build(office_map)


@pytest.fixture(scope="session")
def toy2_map():
    # normalized centroids at x = 0.2 and 0.8, min x-projection 0
    boundary = _square(0, 0, 10, 10)
    areas = [
        Area.create("1", "room", _square(1, 4, 2, 2), subcategory="meeting"),
        Area.create("2", "room", _square(7, 4, 2, 2), subcategory="phone"),
    ]
    return AreaMap(boundary, areas, resolution=1.0)


@pytest.fixture(scope="session")
def toy3_map():
    # three areas stacked in y with equal x (gamma monotonicity in y)
    boundary = _square(0, 0, 10, 12)
    areas = [
        Area.create("a", "room", _square(4, 1, 2, 2), name="alpha"),
        Area.create("b", "room", _square(4, 5, 2, 2), name="bravo"),
        Area.create("c", "exit", _square(4, 9, 2, 2)),
    ]
    return AreaMap(boundary, areas, resolution=1.0)


@pytest.fixture(scope="session")
def toy4_map():
    boundary = _square(0, 0, 12, 12)
    areas = [
        Area.create("nw", "room", _square(1, 7, 3, 3), subcategory="meeting"),
        Area.create("ne", "room", _square(8, 7, 3, 3), subcategory="phone"),
        Area.create("sw", "printer", _square(1, 1, 3, 3)),
        Area.create("se", "area", _square(8, 1, 3, 3), subcategory="working"),
    ]
    return AreaMap(boundary, areas, resolution=1.0)


@pytest.fixture(scope="session")
def toy_maps(toy2_map, toy3_map, toy4_map):
    return [toy2_map, toy3_map, toy4_map]


@pytest.fixture()
def toy2_lexicon(toy2_map):
    return Lexicon.build(toy2_map)


@pytest.fixture()
def toy2_params(toy2_lexicon):
    return ModelParams(toy2_lexicon, seed=0)


@pytest.fixture(scope="session")
def trained(office_map, office_lexicon):
    """One full gen + train + eval run shared by every test that needs it."""
    t0 = time.monotonic()
    samples = generate_dataset(office_map, office_lexicon, k=10, seed=0)
    gen_seconds = time.monotonic() - t0
    config = TrainConfig(seed=0)
    t0 = time.monotonic()
    params, report = train(samples, office_map, config, lexicon=office_lexicon)
    train_seconds = time.monotonic() - t0
    _, holdout = split_holdout(samples, config)
    t0 = time.monotonic()
    report = evaluate(params, holdout, office_map)
    eval_seconds = time.monotonic() - t0
    return {
        "params": params,
        "report": report,
        "samples": samples,
        "holdout": holdout,
        "config": config,
        "seconds": gen_seconds + train_seconds + eval_seconds,
    }


@pytest.fixture(scope="session")
def model_file(trained, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "model.json"
    trained["params"].save(str(path))
    return str(path)
