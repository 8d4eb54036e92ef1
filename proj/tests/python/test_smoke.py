"""Smoke tests for the python bindings."""

import json

import numpy as np
import pytest

import scotti


def test_version_and_actions():
    assert scotti.__version__ == "0.1.0"
    assert len(scotti.actions) == 8
    assert scotti.actions[0] == "squatting"
    assert scotti.actions[7] == "walking"


def test_generate_shapes_and_determinism():
    a = scotti.generate("walking", n_cycles=3, frames_per_cycle=16, seed=5)
    b = scotti.generate("walking", n_cycles=3, frames_per_cycle=16, seed=5)
    assert a["tactile"].shape == (48, 32, 44)
    assert a["pose"].shape == (48, 19, 3)
    assert a["progress"].shape == (48,)
    assert np.array_equal(a["tactile"], b["tactile"])
    assert np.array_equal(a["pose"], b["pose"])
    assert a["tactile"].min() >= 0.0
    assert a["tactile"].max() <= 1.0
    c = scotti.generate("walking", n_cycles=3, frames_per_cycle=16, seed=6)
    assert not np.array_equal(a["tactile"], c["tactile"])
    with pytest.raises(scotti.ConfigError):
        scotti.generate("moonwalk")


def test_label_progress_recovers_phase():
    gen = scotti.generate("squatting", n_cycles=6, frames_per_cycle=16, seed=1)
    labels = scotti.label_progress(gen["pose"], "squatting")
    valid = labels["valid"]
    assert valid.sum() > 48
    err = np.abs(labels["progress"][valid] - gen["progress"][valid])
    err = np.minimum(err, 1.0 - err)  # progress is a phase: 0 and 1 coincide
    assert err.max() <= 2.0 / 16.0


def test_metrics():
    pose = np.random.default_rng(3).normal(size=(19, 3)) * 100
    assert scotti.mpjpe(pose, pose) == 0.0
    shifted = pose + np.array([1.0, 0.0, 0.0])
    assert abs(scotti.mpjpe(shifted, pose) - 1.0) < 1e-9
    assert scotti.mpjae_deg(2.0 * pose, pose) < 1e-4

    z = np.random.default_rng(4).uniform(size=20000)
    out = scotti.app(z, z)
    assert abs(out["app"] - 0.995) < 1e-9
    uniform = np.random.default_rng(5).uniform(size=20000)
    out2 = scotti.app(np.full_like(uniform, 0.5), uniform)
    assert abs(out2["app"] - 0.75) < 0.02


def test_model_forward_and_checkpoint(tmp_path):
    cfg = json.loads(scotti.default_config())
    cfg.update(window=4, embed_dim=16, conv1_channels=4, conv2_channels=8,
               layers=1, heads=2, ff_mult=2, head_hidden=8)
    model = scotti.Model.init(json.dumps(cfg), seed=3)
    assert model.param_count > 0

    rng = np.random.default_rng(7)
    windows = rng.uniform(size=(2, 4, 32, 44)).astype(np.float32)
    out = model.forward(windows)
    assert out["pose"].shape == (2, 19, 3)
    assert out["logits"].shape == (2, 8)
    assert out["progress"].shape == (2,)
    assert out["shared"].shape == (2, 16)
    assert np.all(out["progress"] > 0.0) and np.all(out["progress"] < 1.0)

    again = model.forward(windows)
    assert np.array_equal(out["pose"], again["pose"])

    path = str(tmp_path / "model.ckpt")
    model.save(path)
    loaded = scotti.Model.load(path)
    re = loaded.forward(windows)
    assert np.array_equal(out["pose"], re["pose"])
    assert json.loads(loaded.config_json)["embed_dim"] == 16
