import json

import numpy as np
import pytest

from pivotplan import shapes
from pivotplan.errors import ModelMismatch, ParseError
from pivotplan.graph import plan_online
from pivotplan.storage import load_config, load_offline, load_plan, load_problem, mesh_hash, save_offline, \
    save_plan, save_problem, save_report
from pivotplan.validate import replay


def test_mesh_hash_is_stable():
    assert mesh_hash(shapes.cube(60.0)) == mesh_hash(shapes.cube(60.0))
    assert mesh_hash(shapes.cube(60.0)) != mesh_hash(shapes.cube(61.0))


def test_offline_round_trip(cube_offline, tmp_path):
    path = tmp_path / "off.json"
    save_offline(path, cube_offline)
    back = load_offline(path)
    assert back.mesh_hash == mesh_hash(cube_offline.mesh)
    assert set(back.grasps) == set(cube_offline.grasps)
    for gid, g in cube_offline.grasps.items():
        assert np.array_equal(back.grasps[gid].p_left, g.p_left)
        assert [(iv.lo, iv.hi) for iv in back.intervals[gid]] == [(iv.lo, iv.hi) for iv in cube_offline.intervals[gid]]
    assert np.array_equal(back.adjacency, cube_offline.adjacency)
    assert back.placement_grasps == cube_offline.placement_grasps
    assert back.config == cube_offline.config


def test_tampered_mesh_rejected(cube_offline, tmp_path):
    path = tmp_path / "off.json"
    save_offline(path, cube_offline)
    doc = json.loads(path.read_text())
    doc["mesh"]["vertices"][0][0] += 1.0
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelMismatch):
        load_offline(path)


@pytest.mark.parametrize("edit", [{"version": 99}, {"format": "something-else"}])
def test_version_and_format_checked(cube_offline, tmp_path, edit):
    path = tmp_path / "off.json"
    save_offline(path, cube_offline)
    doc = json.loads(path.read_text())
    doc.update(edit)
    path.write_text(json.dumps(doc))
    with pytest.raises(ParseError):
        load_offline(path)


def test_not_json(tmp_path):
    path = tmp_path / "x.json"
    path.write_text("{nope")
    with pytest.raises(ParseError):
        load_plan(path)


def test_plan_round_trip_replays_identically(cube_offline, cfg, tmp_path):
    off = cube_offline
    s = off.placement_pose(5, 0.3, (10, 10))
    f = off.placement_pose(3, -1.0, (-20, 30))
    plan = plan_online(s, f, off)
    path = tmp_path / "plan.json"
    save_plan(path, plan, off.mesh_hash, cfg)
    back, h, config = load_plan(path)
    assert h == off.mesh_hash and config == cfg
    for a, b in zip(plan.segments, back.segments):
        assert a.grasp_id == b.grasp_id and a.modes == b.modes
        for sa, sb in zip(a.steps, b.steps):
            assert np.array_equal(sa.gripper.position, sb.gripper.position)
            assert np.array_equal(sa.gripper.orientation, sb.gripper.orientation)
    r1 = replay(plan, off.model, off.grasps, cfg).to_dict()
    r2 = replay(back, off.model, off.grasps, cfg).to_dict()
    assert r1 == r2 and r1["passed"]
    save_report(tmp_path / "rep.json", replay(back, off.model, off.grasps, cfg))
    assert json.loads((tmp_path / "rep.json").read_text())["passed"]


def test_problem_spec(cube_offline, cfg, tmp_path):
    s = cube_offline.placement_pose(0)
    save_problem(tmp_path / "p.json", "cube.obj", s, s, mu=0.8, limits={"theta_max_deg": 30})
    spec = load_problem(tmp_path / "p.json")
    assert spec.mesh == str(tmp_path / "cube.obj")
    assert np.array_equal(spec.initial.position, s.position)
    c = spec.config(cfg)
    assert c.mu == 0.8 and c.limits.theta_max == pytest.approx(np.deg2rad(30))
    assert c.limits.box_max == cfg.limits.box_max


def test_problem_spec_rejects_bad_input(tmp_path):
    with pytest.raises(ValueError):
        save_problem(tmp_path / "p.json", "m.obj", None, None, colour="red")
    (tmp_path / "q.json").write_text(json.dumps({"format": "pivotplan-problem", "version": 1,
                                                 "initial": {"q": [1, 0, 0, 0], "p": [0, 0, 0]}}))
    with pytest.raises(ParseError):
        load_problem(tmp_path / "q.json")


def test_config_file(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"mu": 0.7, "n_steps": 20}))
    c = load_config(tmp_path / "c.json")
    assert c.mu == 0.7 and c.n_steps == 20
    (tmp_path / "bad.json").write_text(json.dumps({"mu": "high"}))
    with pytest.raises(ParseError):
        load_config(tmp_path / "bad.json")
