import json

import numpy as np
import pytest

from bilevel_procurement.instances import (
    LARGE_SUITE_SHAPES,
    SMALL_SUITE_SHAPES,
    InstanceFormatError,
    due_window,
    generate_instance,
    instance_from_dict,
    instance_to_dict,
    large_suite,
    micro_suite,
    read_instance,
    small_suite,
    tiny_bilevel_instance,
    write_instance,
)
from bilevel_procurement.model import validate_instance
from bilevel_procurement.oracle import feasible_columns


def test_generated_instances_validate():
    for s in range(1000):
        inst = generate_instance(1 + s % 5, 1 + s % 7, s)
        assert validate_instance(inst) == [], s


def test_generation_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_instance(generate_instance(3, 2, 11), a)
    write_instance(generate_instance(3, 2, 11), b)
    assert a.read_bytes() == b.read_bytes()
    write_instance(generate_instance(3, 2, 12), b)
    assert a.read_bytes() != b.read_bytes()


def test_round_trip(tmp_path):
    inst = generate_instance(4, 3, 5)
    path = tmp_path / "inst.json"
    write_instance(inst, path)
    back = read_instance(path)
    assert instance_to_dict(back) == instance_to_dict(inst)
    assert back.horizon == inst.horizon
    assert np.array_equal(back.buyer.q_max, inst.buyer.q_max)


def test_horizon_is_optional():
    doc = instance_to_dict(generate_instance(2, 2, 1))
    doc.pop("horizon", None)
    assert instance_from_dict(doc).horizon >= 1


def test_unknown_key_reports_path():
    doc = instance_to_dict(generate_instance(2, 1, 1))
    doc["buyer"]["colour"] = "blue"
    with pytest.raises(InstanceFormatError, match="buyer"):
        instance_from_dict(doc)


def test_wrong_type_reports_path():
    doc = instance_to_dict(generate_instance(2, 1, 1))
    doc["suppliers"][1]["vehicles"] = "three"
    with pytest.raises(InstanceFormatError, match="suppliers"):
        instance_from_dict(doc)


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "buyer": {\n    "demand": [1,\n  }\n}\n')
    with pytest.raises(InstanceFormatError, match="line 4"):
        read_instance(path)


def test_due_window():
    assert due_window(10) == (5, 8)
    assert due_window(1) == (1, 2)


def test_suite_shapes():
    assert [(i.supplier_count, i.item_count) for i in small_suite()] == list(SMALL_SUITE_SHAPES)
    assert [(i.supplier_count, i.item_count) for i in large_suite()] == list(LARGE_SUITE_SHAPES)
    assert len(SMALL_SUITE_SHAPES) == 14 and len(LARGE_SUITE_SHAPES) == 4


def test_micro_suite_limits():
    for lane, q, T, lt in micro_suite(200, seed=0):
        assert T <= 3 and q <= 8 and lane.vehicles <= 2
        assert max(lane.ord_units, lane.ot_units, lane.vcap, lane.incap) <= 5


def test_tiny_bilevel_lattice():
    for seed in range(20):
        inst = tiny_bilevel_instance(seed)
        b = inst.buyer
        cols = list(feasible_columns(int(b.demand[0]), b.q_min[:, 0], b.q_max[:, 0]))
        assert inst.supplier_count == 2 and inst.item_count == 1
        assert 2 <= len(cols) <= 10
        assert validate_instance(inst) == []


def test_generated_file_is_plain_json(tmp_path):
    path = tmp_path / "x.json"
    write_instance(generate_instance(2, 2, 3), path)
    doc = json.loads(path.read_text())
    assert set(doc) >= {"buyer", "suppliers"}
