import json
import random

import pytest

from verexp.errors import InputShapeError, ParameterError
from verexp.hash_commit import commit, hash_instance, sponge_hash, verify_commit
from verexp.params import DEFAULT_P

from conftest import FIXTURES


def test_frozen_vectors():
    doc = json.loads((FIXTURES / "hash_vectors.json").read_text())
    inst = hash_instance(doc["hash_id"], int(doc["p"]))
    for v in doc["vectors"]:
        assert sponge_hash([int(x) for x in v["input"]], inst) == int(v["output"])


def test_order_and_length_separation():
    assert sponge_hash([1, 2]) == sponge_hash([1, 2])
    assert sponge_hash([1, 2]) != sponge_hash([2, 1])
    assert sponge_hash([7]) != sponge_hash([7, 0])


def test_empty_and_unreduced():
    with pytest.raises(InputShapeError):
        sponge_hash([])
    with pytest.raises(InputShapeError):
        sponge_hash([DEFAULT_P])


def test_commit_open():
    c = commit(5, 7)
    assert verify_commit(c, 5, 7)
    assert not verify_commit(c, 6, 7)
    assert not verify_commit(c, 5, 8)
    assert 0 <= c.value < DEFAULT_P


def test_commit_collision_sweep():
    rng = random.Random(11)
    seen = set()
    for _ in range(10_000):
        seen.add(commit(3, rng.randrange(DEFAULT_P)).value)
    assert len(seen) == 10_000


def test_instance_constants_deterministic():
    a = hash_instance("poseidon-x5-t3-f8-p57-v1", DEFAULT_P)
    assert a.descriptor() == hash_instance("poseidon-x5-t3-f8-p57-v1", DEFAULT_P).descriptor()
    assert hash_instance(p=97).descriptor()["constants_sha256"] != a.descriptor()["constants_sha256"]
    with pytest.raises(ParameterError):
        hash_instance("unknown")
