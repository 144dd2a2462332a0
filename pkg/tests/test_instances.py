import json

import numpy as np
import pytest

from wsrp_elites.decoder import decode
from wsrp_elites.domain import Genotype
from wsrp_elites.errors import InstanceError
from wsrp_elites.instances import (
    GeneratorConfig, dumps_instance, generate_instance, generate_instance_report, instance_to_dict,
    load_instance, save_instance,
)


def test_two_windows_split_the_day():
    inst = generate_instance(GeneratorConfig(60, "2", 1))
    assert inst.n == 60
    assert {(v.window_start, v.window_end) for v in inst.visits} == {(0, 240), (240, 480)}
    assert all(v.service_duration == 30 for v in inst.visits)
    assert inst.name == "Lon-2-s1"


def test_single_visit_single_window():
    inst = generate_instance(GeneratorConfig(1, "1", 0))
    assert [(v.window_start, v.window_end) for v in inst.visits] == [(0, 480)]


@pytest.mark.parametrize("scheme,widths", [("1", {480}), ("4", {120}), ("8", {60}), ("rnd", {480, 240, 120, 60})])
def test_window_grids(scheme, widths):
    inst = generate_instance(GeneratorConfig(110, scheme, 3))
    seen = {v.window_end - v.window_start for v in inst.visits}
    assert seen <= widths
    for v in inst.visits:
        w = v.window_end - v.window_start
        assert v.window_start % w == 0 and v.window_end <= 480
    if scheme == "rnd":
        assert seen == widths


def test_generation_is_byte_identical():
    cfg = GeneratorConfig(110, "rnd", 7)
    assert dumps_instance(generate_instance(cfg)) == dumps_instance(generate_instance(cfg))


def test_seeds_change_locations():
    for s in range(100):
        a = generate_instance(GeneratorConfig(5, "1", s)).travel.distance_m
        b = generate_instance(GeneratorConfig(5, "1", s + 1000)).travel.distance_m
        assert not np.array_equal(a, b)


def test_matrices_follow_geometry():
    inst = generate_instance(GeneratorConfig(30, "4", 2))
    d, t = inst.travel.distance_m, inst.travel.time_min
    assert np.array_equal(d[0], d[0].T)
    assert np.array_equal(d[1], np.rint(d[0] * 1.4).astype(np.int64))
    assert np.array_equal(t[0], np.ceil(d[0] * 60 / 25000).astype(np.int32))
    assert np.array_equal(t[1], np.ceil(d[1] * 60 / 17000).astype(np.int32))


@pytest.mark.parametrize("scheme", ["1", "2", "4", "8", "rnd"])
def test_all_car_singletons_are_feasible(scheme):
    for seed in range(5):
        inst, _ = generate_instance_report(GeneratorConfig(60, scheme, seed))
        # a car singleton never fails for generated instances
        n = inst.n
        for v in range(n):
            ph = decode(inst, Genotype.from_lists([v] + [u for u in range(n) if u != v], [0] * n))
            assert ph.journeys[0].visit_sequence[0] == v
            assert ph.journeys[0].mode == 0


def test_windows_are_redrawn_when_unreachable():
    # a huge area makes far visits miss early 1-hour windows
    inst, retries = generate_instance_report(GeneratorConfig(20, "8", 3, area_extent_km=150.0))
    assert retries > 0
    t = inst.travel.time_min[0, 0]
    assert all(t[v.location] <= v.window_end for v in inst.visits)


def test_config_rejects_nonsense():
    with pytest.raises(InstanceError):
        GeneratorConfig(0)
    with pytest.raises(InstanceError):
        GeneratorConfig(5, car_speed_kmh=0)
    with pytest.raises(InstanceError):
        GeneratorConfig(5, "3")


def test_save_load_round_trip(tmp_path, lon2):
    p = tmp_path / "i.json"
    save_instance(lon2, p)
    back = load_instance(p)
    assert back == lon2
    assert dumps_instance(back) == p.read_text()


def _doc(inst):
    return json.loads(json.dumps(instance_to_dict(inst)))


def test_load_rejects_wrong_matrix_shape(tmp_path, small_rnd):
    doc = _doc(small_rnd)
    doc["travel"]["car"]["time"].pop()
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(InstanceError) as e:
        load_instance(p)
    assert e.value.path == "travel/car/time"


def test_load_rejects_inverted_window(tmp_path, small_rnd):
    doc = _doc(small_rnd)
    doc["visits"][4]["windowStart"] = doc["visits"][4]["windowEnd"]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(InstanceError, match=r"visits\[4\]"):
        load_instance(p)


def test_load_reports_schema_path(tmp_path, small_rnd):
    doc = _doc(small_rnd)
    doc["visits"][2]["serviceDuration"] = "thirty"
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(InstanceError) as e:
        load_instance(p)
    assert e.value.path == "visits/2/serviceDuration"


def test_load_rejects_negative_entry(tmp_path, small_rnd):
    doc = _doc(small_rnd)
    doc["travel"]["pt"]["distance"][1][2] = -0.5
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(InstanceError, match="negative"):
        load_instance(p)
