import json

import numpy as np
import pytest

import decompal

SMALL = """
dataset:
  n_images: 6
  n_test_images: 2
  height: 24
  width: 24
  voronoi_seeds: 6
model:
  epochs: 10
experiment:
  strategies: [decomp, rand]
  n_image: 2
  n_region: 2
  region_size: 6
  max_cycles: 2
  stop_at_target: false
"""


def test_confidence_and_weights():
    labels = np.array([[1, 1, 1, 0]], dtype=np.uint16)
    max_prob = np.array([[0.8, 0.6, 0.9, 0.75]], dtype=np.float32)
    sigma = decompal.class_confidence(labels, max_prob, num_classes=3, tau=0.7)
    assert sigma == pytest.approx([1.0, 2.0 / 3.0, 0.0])
    w = decompal.sampling_weights(sigma)
    assert sum(w) == pytest.approx(1.0, abs=1e-12)
    assert w[2] > w[1] > w[0]
    assert decompal.sampling_weights([1.0, 1.0]) == [0.5, 0.5]


def test_selection_and_score():
    labels = np.zeros((16, 16), dtype=np.uint16)
    labels[:, 8:] = 1
    regions = decompal.decomp_select(labels, [0.0, 1.0], n_region=2, side=4, seed=3)
    assert len(regions) == 2
    for y, x, side in regions:
        assert side == 4 and x >= 8
    assert decompal.image_score(labels, [0.5, 0.5], cap=10) == pytest.approx(10.0)


def test_window_argmax():
    grid = np.zeros((8, 8))
    grid[4, 4] = 1.0
    assert decompal.window_argmax(grid, 3) == (2, 2, 1.0)


def test_run_and_errors(tmp_path):
    csv, summary = decompal.run(SMALL)
    assert csv.startswith("strategy,repeat,seed,cycle")
    assert len(csv.strip().splitlines()) == 1 + 2 * 2
    assert json.loads(summary)["repeats"][0]["strategies"]["decomp"]["cycles"] == 2
    assert decompal.run(SMALL, threads=2)[0] == csv
    with pytest.raises(ValueError):
        decompal.run(SMALL, ["experiment.tau=3"])
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(SMALL)
    assert decompal.main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "cycles.csv").read_text() == csv
    assert decompal.main(["run", "--config", str(tmp_path / "missing.yaml"), "--out", "x"]) == 2
