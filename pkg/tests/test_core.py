import json
from math import comb

import numpy as np
import pytest

from tritype.core import (
    ConfigError,
    ModelConfig,
    SimplexPoint,
    count_vector_index,
    enumerate_count_vectors,
    n_count_vectors,
    simplex_from_weights,
)


def test_simplex_from_weights_examples():
    assert simplex_from_weights(24, 24, 24).as_tuple() == (1 / 3, 1 / 3, 1 / 3)
    assert simplex_from_weights(1, 0, 0).as_tuple() == (1.0, 0.0, 0.0)
    assert simplex_from_weights(2, 1, 1).as_tuple() == (0.5, 0.25, 0.25)


def test_simplex_rejects_degenerate_input():
    with pytest.raises(ValueError):
        simplex_from_weights(0, 0, 0)
    with pytest.raises(ValueError):
        simplex_from_weights(-1, 1, 1)
    with pytest.raises(ValueError):
        SimplexPoint(0.5, 0.6, 0.2)
    with pytest.raises(ValueError):
        SimplexPoint(1.2, -0.1, -0.1)


def test_simplex_coordinates_resum_to_one():
    rng = np.random.default_rng(0)
    for _ in range(500):
        w = rng.uniform(0, 100, size=3)
        p = simplex_from_weights(*w)
        assert abs(p.x + p.y + p.z - 1.0) <= 1e-12


def test_enumerate_count_vectors_small_cases():
    assert enumerate_count_vectors(1) == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    assert len(enumerate_count_vectors(2)) == 6
    assert len(enumerate_count_vectors(4)) == 15


def test_enumerate_count_vectors_complete_and_ordered():
    for m in range(1, 9):
        vecs = enumerate_count_vectors(m)
        assert len(vecs) == comb(m + 2, 2) == n_count_vectors(m)
        assert len(set(vecs)) == len(vecs)
        assert all(sum(u) == m and min(u) >= 0 for u in vecs)
        # ordered from (m,0,0) down to (0,0,m)
        assert vecs == sorted(vecs, key=lambda u: (-u[0], -u[1]))


def test_count_vector_index_matches_enumeration():
    for m in (1, 2, 4, 7):
        for i, u in enumerate(enumerate_count_vectors(m)):
            assert count_vector_index(u, m) == i
    with pytest.raises(ValueError):
        count_vector_index((1, 1, 1), 2)


CONFIG_DOC = {
    "rule": {"name": "perturbed_rps", "h": 0.05},
    "initial": {"vertex_counts": [3, 3, 3], "degree_sums": [24, 24, 24]},
    "steps": 1000,
    "seed": 7,
    "mode": "aggregate",
    "record_interval": 10,
}


def test_model_config_json_round_trip():
    cfg = ModelConfig.from_json(json.dumps(CONFIG_DOC))
    assert cfg.rule_name == "perturbed_rps"
    assert cfg.h == 0.05
    assert cfg.vertex_counts == (3, 3, 3)
    assert cfg.degree_sums == (24, 24, 24)
    assert ModelConfig.from_json(cfg.to_json()) == cfg


def test_model_config_defaults():
    cfg = ModelConfig.from_dict({"rule": {"name": "rps"}, "steps": 5, "seed": 1})
    assert cfg.vertex_counts == (3, 3, 3)
    assert cfg.degree_sums == (24, 24, 24)
    assert cfg.mode == "aggregate"


@pytest.mark.parametrize("mutate, message", [
    (lambda d: d.pop("steps"), "steps"),
    (lambda d: d.pop("seed"), "seed"),
    (lambda d: d.update(rule={"name": "nope"}), "unknown rule"),
    (lambda d: d.update(rule={"h": 0.1}), "name"),
    (lambda d: d.update(extra=1), "unknown config keys"),
    (lambda d: d.update(steps=-1), "steps"),
    (lambda d: d.update(record_interval=0), "record_interval"),
    (lambda d: d.update(mode="turbo"), "mode"),
    (lambda d: d["initial"].update(vertex_counts=[1, 2]), "vertex_counts"),
    (lambda d: d["initial"].update(degree_sums=[1, -2, 3]), "degree_sums"),
])
def test_model_config_rejects_bad_documents(mutate, message):
    doc = json.loads(json.dumps(CONFIG_DOC))
    mutate(doc)
    with pytest.raises(ConfigError, match=message):
        ModelConfig.from_dict(doc)


def test_model_config_rejects_bad_json_text():
    with pytest.raises(ConfigError, match="not valid JSON"):
        ModelConfig.from_json("{nope")


def test_perturbed_rule_requires_h_and_custom_requires_path():
    with pytest.raises(ConfigError, match="requires h"):
        ModelConfig(rule_name="perturbed_rps", steps=1, seed=1)
    with pytest.raises(ConfigError, match="table_path"):
        ModelConfig(rule_name="custom", steps=1, seed=1)


def test_missing_type_warns_but_is_permitted():
    with pytest.warns(UserWarning, match="missing a type"):
        cfg = ModelConfig(rule_name="rps", steps=1, seed=1,
                          vertex_counts=(3, 3, 0), degree_sums=(24, 24, 0))
    assert cfg.degree_sums == (24, 24, 0)


def test_degrees_without_vertices_rejected():
    with pytest.raises(ConfigError, match="no vertices"):
        ModelConfig(rule_name="rps", steps=1, seed=1,
                    vertex_counts=(3, 3, 0), degree_sums=(24, 24, 24))
