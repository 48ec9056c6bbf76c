from __future__ import annotations

import pickle

import pytest

from plpcontrol.errors import (
    DegenerateCollectionError,
    DivergenceError,
    InfeasibleLocalityError,
    ModelMismatchError,
    NotPersistentlyExcitingError,
    UncontrollableModeError,
)


@pytest.mark.parametrize(
    "error, attributes",
    [
        (DivergenceError(7), {"step": 7}),
        (DivergenceError(3, "blew up"), {"step": 3}),
        (ModelMismatchError(12), {"step": 12}),
        (DegenerateCollectionError("singular gain", 1e13), {"condition": 1e13, "reason": "singular gain"}),
        (InfeasibleLocalityError(2, 0.25), {"column": 2, "residual": 0.25}),
        (NotPersistentlyExcitingError(order=3, rank=5, required=8), {"order": 3, "rank": 5, "required": 8}),
        (UncontrollableModeError(1), {"mode": 1}),
    ],
)
def test_errors_survive_pickling(error, attributes):
    restored = pickle.loads(pickle.dumps(error))

    assert type(restored) is type(error)
    assert str(restored) == str(error)
    for name, value in attributes.items():
        assert getattr(restored, name) == value
