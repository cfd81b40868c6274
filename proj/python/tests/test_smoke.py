import json
import math
from pathlib import Path

import numpy as np
import pytest

import nbvplan

DEMO = Path(__file__).resolve().parents[2] / "data" / "demo_scene.json"
K = nbvplan.Intrinsics(fx=60, fy=60, cx=32, cy=32, width=64, height=64)


def test_mesh_round_trip():
    sphere = nbvplan.icosphere(2)
    assert sphere.face_count == 320
    assert sphere.vertices.shape == (sphere.vertex_count, 3)
    again = nbvplan.Mesh(sphere.vertices, sphere.faces.astype(np.int64))
    assert again.face_count == 320
    hit = sphere.first_hit((3.0, 0.0, 0.0), (-1.0, 0.0, 0.0))
    assert hit is not None
    assert hit[1] == pytest.approx(2.0, abs=0.05)
    assert sphere.first_hit((3.0, 0.0, 0.0), (1.0, 0.0, 0.0)) is None


def test_bad_mesh_is_value_error():
    with pytest.raises(ValueError):
        nbvplan.Mesh(np.zeros((3, 2)), np.array([[0, 1, 2]]))
    with pytest.raises(nbvplan.InputError):
        nbvplan.load_mesh("/nonexistent/mesh.ply")


def test_render_is_deterministic():
    sphere = nbvplan.icosphere(2)
    cam = nbvplan.look_at("c", K, (3.0, 0.0, 0.0), (0.0, 0.0, 0.0))
    a = nbvplan.render(sphere, cam, supersample=2)
    assert a.shape == (64, 64)
    assert a.min() >= 0.0 and a.max() <= 1.0
    assert a[32, 32] > 0.0 and a[0, 0] == 0.0
    np.testing.assert_array_equal(a, nbvplan.render(sphere, cam, supersample=2, threads=3))


def test_pri_and_selection():
    sphere = nbvplan.icosphere(2)
    cams = [
        nbvplan.look_at(f"v{i}", K, (3 * math.cos(a), 3 * math.sin(a), 0.0), (0.0, 0.0, 0.0))
        for i, a in enumerate(np.radians([-20.0, 0.0, 20.0]))
    ]
    images = [nbvplan.render(sphere, c) for c in cams]
    cfg = nbvplan.config(metric="ncc", k=5)
    report = nbvplan.worst_facets(sphere, cams, images, cfg)
    assert len(report.facets) == sphere.face_count
    assert len(report.worst_facets) == 5
    assert any(f.defined for f in report.facets)
    assert json.loads(report.to_json())["metric"] == "ncc"

    ring = nbvplan.candidate_ring((0.0, 0.0, 0.0), 3.0, 8, 0.0, K)
    sel = nbvplan.select_best(sphere, cams, report, ring, cfg)
    assert sel.winner in {c.id for c in ring}
    assert len(sel.ranking) == 8
    totals = [c.total for c in sel.ranking]
    assert totals == sorted(totals, reverse=True)


def test_config_precedence(tmp_path):
    f = tmp_path / "cfg.json"
    f.write_text('{"weights": {"mu1": 1, "mu2": 1, "mu3": 1, "mu4": 1}, "K": 4}')
    assert nbvplan.config().weights == (0.6, 1.6, 2.1, 0.6)
    assert nbvplan.config(f).weights == (1.0, 1.0, 1.0, 1.0)
    c = nbvplan.config(f, weights="2,2,2,2")
    assert c.weights == (2.0, 2.0, 2.0, 2.0)
    assert c.k == 4
    with pytest.raises(ValueError):
        nbvplan.config(metric="sad")
    with pytest.raises(ValueError):
        nbvplan.config(bogus=1)


def test_simulate(tmp_path):
    log = nbvplan.simulate(DEMO, tmp_path, iterations=1, initial_views=3)
    assert len(log) == 1
    assert log[0]["winner"].startswith("cand_")
    for name in ("cameras.json", "mesh.ply", "pri.json", "log.jsonl"):
        assert (tmp_path / name).exists()
    with pytest.raises(ValueError):
        nbvplan.simulate(DEMO, tmp_path, iterations=0)
