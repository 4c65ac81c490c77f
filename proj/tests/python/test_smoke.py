import math

import numpy as np
import pytest

import pagan

TINY = """
name = py_tiny
dataset.train_size = 64
dataset.test_size = 32
generator.layers = dense:8,relu,dense:2
discriminator.layers = dense:8,lrelu,dense:1
optimizer.batch_size = 8
scheduler.kid_samples = 16
scheduler.eval_interval = 10
train.iterations = 30
"""


def js(p, q):
    m = 0.5 * (p + q)
    kl = lambda a: float(np.sum(np.where(a > 0, a * np.log(np.where(a > 0, a, 1) / m), 0.0)))
    return 0.5 * kl(p) + 0.5 * kl(q)


def test_level_joints_keep_divergence():
    pd, pg = [0.6, 0.3, 0.1], [0.2, 0.2, 0.6]
    base = js(np.array(pd), np.array(pg))
    for level in range(1, 4):
        p, q = pagan.build_level_joints(pd, pg, level)
        assert p.shape == (3, 2**level)
        assert p.sum() == pytest.approx(1.0)
        assert pagan.js_divergence(p, q) == pytest.approx(base, abs=1e-12)
        assert js(p.ravel(), q.ravel()) == pytest.approx(base, abs=1e-12)


def test_checksum_and_bits():
    assert pagan.checksum_label(0, []) == "TRUE"
    assert pagan.checksum_label(0, [1, 1, 0]) == "TRUE"
    assert pagan.checksum_label(1, [1, 0]) == "TRUE"
    bits = pagan.sample_bits(4, 0.5, 100, seed=3)
    assert bits.shape == (100, 4)
    assert set(np.unique(bits)) <= {0.0, 1.0}
    with pytest.raises(ValueError):
        pagan.sample_bits(2, 0.7, 4)


def test_minibatch_pairs_rows():
    real, fake = np.zeros((2, 2)), np.ones((2, 2))
    samples, labels = pagan.minibatch_labels(real, fake, [[0], [1]])
    assert samples.shape == (4, 2)
    assert labels == ["TRUE", "FAKE", "FAKE", "TRUE"]


def test_kid_matches_numpy():
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(6, 3)), rng.normal(0.5, 1.0, size=(5, 3))
    k = lambda a, b: (a @ b.T / a.shape[1] + 1.0) ** 3
    kxx, kyy, kxy = k(x, x), k(y, y), k(x, y)
    m, n = len(x), len(y)
    expected = ((kxx.sum() - np.trace(kxx)) / (m * (m - 1)) + (kyy.sum() - np.trace(kyy)) / (n * (n - 1))
                - 2 * kxy.mean())
    assert pagan.kid_unbiased(x, y) == pytest.approx(expected, abs=1e-12)


def test_frechet_and_diversity():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(50, 2))
    assert pagan.frechet_distance(x, x) == pytest.approx(0.0, abs=1e-10)
    d = pagan.frechet_from_stats(np.zeros(2), np.eye(2), np.array([3.0, 4.0]), np.eye(2))
    assert d == pytest.approx(25.0)
    r = pagan.gradient_diversity(np.eye(4, 6))
    assert r["gamma_bar"] == pytest.approx(1.0)
    assert not r["degenerate"]


def test_spectral_normalize():
    w = np.diag([3.0, 1.0])
    normalized, sigma, degenerate = pagan.spectral_normalize(w)
    assert sigma == pytest.approx(3.0, rel=1e-6)
    assert not degenerate
    assert np.linalg.svd(normalized, compute_uv=False)[0] == pytest.approx(1.0, rel=1e-6)


def test_scheduler():
    decision, level, history = pagan.progression_decision([0.10, 0.11], 0.104, max_level=4)
    assert (decision, level, history) == ("level_up", 1, [])
    assert pagan.progression_decision([0.20, 0.18], 0.15)[0] == "hold"
    decision, lr = pagan.lr_adapt_decision([0.10, 0.11], 0.104)
    assert decision == "decay_lr" and lr == pytest.approx(3.2e-4)
    assert pagan.warmup_controller("bit_prob_ramp", 0, 2500) == (False, 0.25)


def test_run_and_reload(tmp_path):
    out = tmp_path / "run"
    r = pagan.run_experiment(TINY, str(out))
    assert r["exit_code"] == 0
    assert [row["iteration"] for row in r["records"]] == [10, 20, 30]
    assert pagan.read_metrics(str(out)) == r["records"]
    again = pagan.run_experiment(TINY, overrides={"train.iterations": "30"})
    assert again["records"] == r["records"]
    samples = pagan.generate_samples(str(out), 16, seed=2)
    assert samples.shape == (16, 2) and np.all(np.isfinite(samples))


def test_config_errors():
    with pytest.raises(pagan.ConfigError):
        pagan.config_text("train.iterations = many\n")
    assert "augmentation.mode = input" in pagan.config_text(TINY, {"augmentation.mode": "input"})


def test_verify_checksum():
    results = pagan.verify("checksum")
    assert results and all(r["passed"] for r in results)
    assert math.isfinite(results[0]["max_deviation"])
