import json

import pytest

import pdha_sim as ps
from pdha_sim.errors import ModelFileError

MINIMAL = {
    "schema": 1,
    "name": "plain-rod",
    "domain": {"lower": 0.0, "upper": 1.0},
    "modes": [{"name": "only", "flow": {"kind": "diffusion", "alpha": 0.5}}],
    "boundary": {"left": {"kind": "mirror"}, "right": {"kind": "mirror"}},
    "regions": [
        {"interval": [0.0, 1.0], "closed_left": True, "closed_right": True, "mode": "only"}
    ],
    "init": {"constant": 0.25},
    "discretization": {"m": 5},
}


def write(tmp_path, doc, name="model.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2))
    return path


def test_minimal_single_mode_file(tmp_path):
    model = ps.load_model(write(tmp_path, MINIMAL))
    assert len(model.modes) == 1
    a = ps.discretize_model(model, m=model.discretization.m)
    assert a.m == 5 and a.n_modes == 1


def test_round_trip_equality(tmp_path):
    first = ps.load_model(write(tmp_path, MINIMAL))
    out = tmp_path / "second.json"
    ps.save_model(first, out)
    second = ps.load_model(out)
    assert first == second


def test_round_trip_builtins(tmp_path):
    for desc in (ps.heater_description(), ps.traffic_description()):
        path = tmp_path / f"{desc.name}.json"
        ps.save_model(desc, path)
        again = ps.load_model(path)
        assert again == desc


def test_undeclared_region_mode_reported(tmp_path):
    doc = json.loads(json.dumps(MINIMAL))
    doc["regions"][0]["mode"] = "ghost-mode"
    with pytest.raises(ModelFileError) as err:
        ps.load_model(write(tmp_path, doc))
    assert "ghost-mode" in str(err.value)


def test_unknown_keys_rejected(tmp_path):
    doc = json.loads(json.dumps(MINIMAL))
    doc["extra_top"] = 1
    doc["modes"][0]["colour"] = "red"
    with pytest.raises(ModelFileError) as err:
        ps.load_model(write(tmp_path, doc))
    msg = str(err.value)
    assert "extra_top" in msg and "colour" in msg


def test_all_violations_listed_not_fail_fast(tmp_path):
    doc = json.loads(json.dumps(MINIMAL))
    doc["regions"][0]["mode"] = "ghost"
    doc["guards"] = [
        {"mode": "only", "event": "e", "direction": "sideways", "threshold": 0.5, "target": "only"}
    ]
    with pytest.raises(ModelFileError) as err:
        ps.load_model(write(tmp_path, doc))
    assert len(err.value.problems) >= 3


def test_parse_error_reports_location(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"schema": 1,\n  "name": oops}\n')
    with pytest.raises(ModelFileError) as err:
        ps.load_model(path)
    assert "line 2" in str(err.value)


def test_h_based_discretization(tmp_path):
    doc = json.loads(json.dumps(MINIMAL))
    doc["discretization"] = {"h": 0.25, "scheme": "second_central"}
    model = ps.load_model(write(tmp_path, doc))
    assert model.discretization.m == 5


def test_schema_version_enforced(tmp_path):
    doc = json.loads(json.dumps(MINIMAL))
    doc["schema"] = 2
    with pytest.raises(ModelFileError):
        ps.load_model(write(tmp_path, doc))


def test_init_requires_exactly_one_kind(tmp_path):
    doc = json.loads(json.dumps(MINIMAL))
    doc["init"] = {"constant": 0.2, "expression": "x"}
    with pytest.raises(ModelFileError):
        ps.load_model(write(tmp_path, doc))
