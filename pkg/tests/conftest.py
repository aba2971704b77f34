import logging

import pytest

from outerspacekit.axes import Axis
from outerspacekit.graphs import point_from_dict, rose
from outerspacekit.traintrack import GraphSelfMap, pf_metric

logging.getLogger("outerspacekit").setLevel(logging.ERROR)


def golden_selfmaps():
    """x -> xy, y -> x on the rank-2 rose, and its inverse x -> y, y -> Yx."""
    fwd = GraphSelfMap(rose(2), {0: 0}, {1: (1, 2), 2: (1,)})
    bwd = GraphSelfMap(rose(2), {0: 0}, {1: (2,), 2: (-2, 1)})
    return fwd, bwd


def tribo_selfmaps():
    """x -> y, y -> z, z -> xy on the rank-3 rose, and its inverse."""
    fwd = GraphSelfMap(rose(3), {0: 0}, {1: (2,), 2: (3,), 3: (1, 2)})
    bwd = GraphSelfMap(rose(3), {0: 0}, {1: (3, -1), 2: (1,), 3: (2,)})
    return fwd, bwd


THETA_DICT = {
    "rank": 2,
    "vertices": ["u", "v"],
    "edges": [
        {"id": "e1", "from": "u", "to": "v", "length": "1/3"},
        {"id": "e2", "from": "u", "to": "v", "length": "1/3"},
        {"id": "e3", "from": "u", "to": "v", "length": "1/3"},
    ],
    "marking": {"x": ["e1", "~e2"], "y": ["e2", "~e3"]},
    "basepoint": "u",
}

# rose(1/2, 1/2) -> theta(1/3 each): image of e1 crosses 2 edges, image of
# e2 crosses 6, realizing the slope pair (4/3, 4) with Lip = 4
FIG1_TARGET_DICT = {
    "rank": 2,
    "vertices": ["u", "v"],
    "edges": [
        {"id": "a1", "from": "u", "to": "v", "length": "1/3"},
        {"id": "a2", "from": "u", "to": "v", "length": "1/3"},
        {"id": "a3", "from": "u", "to": "v", "length": "1/3"},
    ],
    "marking": {"x": ["a2", "~a1"], "y": ["a2", "~a1", "a2", "~a1", "a3", "~a1"]},
    "basepoint": "u",
}
FIG1_EDGE_IMAGES = {1: (2, -1), 2: (2, -1, 2, -1, 3, -1)}

DUMBBELL_DICT = {
    "rank": 2,
    "vertices": ["u", "v"],
    "edges": [
        {"id": "p", "from": "u", "to": "u", "length": 0.375},
        {"id": "bar", "from": "u", "to": "v", "length": 0.25},
        {"id": "q", "from": "v", "to": "v", "length": 0.375},
    ],
    "marking": {"x": ["p"], "y": ["bar", "q", "~bar"]},
    "basepoint": "u",
}


@pytest.fixture(scope="session")
def golden_tt():
    return pf_metric(golden_selfmaps()[0])


@pytest.fixture(scope="session")
def golden_inv_tt():
    return pf_metric(golden_selfmaps()[1])


@pytest.fixture(scope="session")
def golden_axis(golden_tt, golden_inv_tt):
    return Axis(golden_tt, golden_inv_tt)


@pytest.fixture(scope="session")
def tribo_tt():
    return pf_metric(tribo_selfmaps()[0])


@pytest.fixture(scope="session")
def tribo_inv_tt():
    return pf_metric(tribo_selfmaps()[1])


@pytest.fixture()
def theta_point():
    return point_from_dict(THETA_DICT)


@pytest.fixture()
def dumbbell_point():
    return point_from_dict(DUMBBELL_DICT)
