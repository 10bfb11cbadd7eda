"""Tree parsing, validation, probabilities and serialization round-trips."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import desk1_doc, desk2_doc
from powerhedge import tree as tm


def parse(doc, **kw):
    return tm.parse_tree(json.dumps(doc), **kw)


class TestParse:
    def test_minimal_one_child(self):
        doc = {"times": [0, 1], "nodes": [
            {"id": "a", "time_index": 0, "parent": None, "cond_prob": 1.0,
             "pi12": 2.0, "pi21": 1.0},
            {"id": "b", "time_index": 1, "parent": "a", "cond_prob": 1.0,
             "pi12": 2.0, "pi21": 1.0}]}
        tree = parse(doc)
        assert len(tree.nodes) == 2
        assert tree.root == "a"

    def test_efficient_frictions_boundary(self):
        doc = desk1_doc()
        doc["nodes"][1]["pi12"] = 1.0
        doc["nodes"][1]["pi21"] = 1.0
        with pytest.raises(tm.InvariantError) as err:
            parse(doc)
        assert err.value.code == "efficient frictions"
        assert err.value.node == "up"

    def test_probability_normalization(self):
        doc = desk1_doc()
        doc["nodes"][1]["cond_prob"] = 0.4
        with pytest.raises(tm.InvariantError) as err:
            parse(doc)
        assert err.value.code == "probability-sum"
        assert err.value.node == "root"

    def test_missing_field(self):
        doc = desk1_doc()
        del doc["nodes"][0]["pi12"]
        with pytest.raises(tm.SchemaError):
            parse(doc)

    def test_wrong_type(self):
        doc = desk1_doc()
        doc["nodes"][0]["pi12"] = "2.0"
        with pytest.raises(tm.SchemaError):
            parse(doc)

    def test_two_roots(self):
        doc = desk1_doc()
        doc["nodes"][1]["parent"] = None
        with pytest.raises(tm.SchemaError):
            parse(doc)

    def test_nan_token_rejected(self):
        with pytest.raises(tm.TreeSyntaxError):
            tm.parse_tree('{"times": [0, NaN], "nodes": []}')

    def test_infinity_token_rejected(self):
        with pytest.raises(tm.TreeSyntaxError):
            tm.parse_tree('{"times": [0, Infinity], "nodes": []}')

    def test_invalid_json(self):
        with pytest.raises(tm.TreeSyntaxError):
            tm.parse_tree("{not json")

    def test_claim_requires_every_leaf(self):
        doc = desk1_doc()
        del doc["claim"]["payoffs"]["down"]
        with pytest.raises(tm.InvariantError) as err:
            parse(doc)
        assert err.value.code == "claim"

    def test_claim_kappa_solvency(self):
        doc = desk1_doc()
        doc["claim"]["payoffs"]["up"] = [0.0, -5.0]   # kappa (0,1) cannot cover
        with pytest.raises(tm.InvariantError) as err:
            parse(doc)
        assert err.value.code == "claim"


class TestValidateReport:
    def test_desk_instances_clean(self):
        assert tm.validate(parse(desk1_doc())).ok
        assert tm.validate(parse(desk2_doc())).ok

    def test_negative_capacity(self):
        doc = desk2_doc()
        for node in doc["nodes"][1:]:
            node["plant"]["capacity"] = -1.0
            node["plant"]["maintenance"] = [[0.0, -1.0], [-1.0, -0.5]]
        report = tm.validate(parse(doc, check=False))
        assert any("capacity" in v.message for v in report.violations)

    def test_increasing_maintenance_slopes(self):
        doc = desk2_doc()
        for node in doc["nodes"][1:]:
            node["plant"]["maintenance"] = [[0.0, -10.0], [5.0, -9.0], [10.0, -1.0]]
        report = tm.validate(parse(doc, check=False))
        assert any("nonincreasing" in v.message for v in report.violations)

    def test_production_step_uniformity(self):
        doc = desk2_doc()
        del doc["nodes"][2]["plant"]
        report = tm.validate(parse(doc, check=False))
        assert any(v.code == "plant" for v in report.violations)

    def test_negative_spot_at_production_node(self):
        doc = desk2_doc()
        doc["nodes"][1]["spot_power"] = -4.0
        report = tm.validate(parse(doc, check=False))
        assert any(v.code == "spot" for v in report.violations)

    def test_negative_spot_without_plant_is_fine(self):
        doc = desk1_doc()
        doc["nodes"][1]["spot_power"] = -40.0
        assert tm.validate(parse(doc)).ok


class TestProbability:
    def test_root_is_one(self):
        tree = parse(desk1_doc())
        assert tm.node_probability(tree, "root") == 1.0

    def test_path_product(self):
        doc = {"times": [0, 1, 2], "nodes": [
            {"id": "a", "time_index": 0, "parent": None, "cond_prob": 1.0,
             "pi12": 2.0, "pi21": 1.0},
            {"id": "b", "time_index": 1, "parent": "a", "cond_prob": 0.5,
             "pi12": 2.0, "pi21": 1.0},
            {"id": "b2", "time_index": 1, "parent": "a", "cond_prob": 0.5,
             "pi12": 2.0, "pi21": 1.0},
            {"id": "c", "time_index": 2, "parent": "b", "cond_prob": 0.5,
             "pi12": 2.0, "pi21": 1.0},
            {"id": "c2", "time_index": 2, "parent": "b", "cond_prob": 0.5,
             "pi12": 2.0, "pi21": 1.0},
            {"id": "c3", "time_index": 2, "parent": "b2", "cond_prob": 1.0,
             "pi12": 2.0, "pi21": 1.0}]}
        tree = parse(doc)
        assert tm.node_probability(tree, "c") == pytest.approx(0.25)

    def test_unknown_node(self):
        tree = parse(desk1_doc())
        with pytest.raises(tm.UnknownNode):
            tm.node_probability(tree, "ghost")

    def test_levels_sum_to_one(self, rng_tree):
        for idx in range(rng_tree.horizon + 1):
            total = sum(tm.node_probability(rng_tree, n.id)
                        for n in rng_tree.nodes_at(idx))
            assert total == pytest.approx(1.0, abs=1e-10)


@pytest.fixture
def rng_tree():
    from conftest import random_instance
    return random_instance(np.random.default_rng(11), periods=3)


class TestRoundTrip:
    def test_desk_documents(self):
        for doc in (desk1_doc(), desk2_doc()):
            tree = parse(doc)
            again = tm.parse_tree(json.dumps(tm.serialize_tree(tree)))
            assert tm.serialize_tree(again) == tm.serialize_tree(tree)

    def test_random_instances_with_plant(self):
        from conftest import random_instance
        rng = np.random.default_rng(5)
        for _ in range(5):
            tree = random_instance(rng, production=True)
            blob = json.dumps(tm.serialize_tree(tree))
            again = tm.parse_tree(blob)
            for nid, node in tree.nodes.items():
                other = again.nodes[nid]
                assert other.cond_prob == node.cond_prob
                assert other.pi12 == node.pi12 and other.pi21 == node.pi21
                assert other.spot_power == node.spot_power
                assert other.plant == node.plant


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(0.1, 2.0))
def test_inefficient_frictions_always_rejected(pi12, pi21):
    if pi12 * pi21 > 1.0:
        pi21 = 1.0 / pi12 * 0.95   # force a free round trip
    doc = desk1_doc()
    doc["nodes"][2]["pi12"] = pi12
    doc["nodes"][2]["pi21"] = pi21
    with pytest.raises(tm.InvariantError):
        parse(doc)


def test_reweighted_keeps_structure(rng_tree):
    rng = np.random.default_rng(7)
    weights = {nid: float(rng.uniform(0.2, 2.0)) for nid in rng_tree.nodes}
    other = tm.reweighted(rng_tree, weights)
    assert tm.validate(other).ok
    assert set(other.nodes) == set(rng_tree.nodes)
    for node in other.nodes.values():
        if node.parent is not None:
            assert node.cond_prob > 0.0
