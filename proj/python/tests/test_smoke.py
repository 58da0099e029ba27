import json
import math

import numpy as np
import pytest

import flower


def short_hp(seed=4):
    hp = flower.Hyperparameters()
    hp.iterations = 120
    hp.burnin = 60
    hp.thin = 6
    hp.seed = seed
    return hp


@pytest.fixture(scope="module")
def sim():
    return flower.simulate_scenario1(n=250, seed=2)


@pytest.fixture(scope="module")
def posterior(sim):
    return flower.fit(sim["x"], sim["c"], sim["levels"], short_hp())


def test_truncated_normal():
    assert flower.std_normal_quantile(0.975) == pytest.approx(1.959963984540054, rel=1e-14)
    u = flower.tn_cdf(4.2, 5.0, 2.0, 0.0, 10.0)
    assert flower.tn_quantile(u, 5.0, 2.0, 0.0, 10.0) == pytest.approx(4.2, rel=1e-10)
    assert flower.tn_pdf(11.0, 5.0, 2.0, 0.0, 10.0) == 0.0
    with pytest.raises(ValueError):
        flower.tn_pdf(1.0, 5.0, -1.0, 0.0, 10.0)


def test_simulation_shapes(sim):
    assert sim["x"].shape == (250, 3)
    assert sim["c"].shape == (250, 5)
    assert sim["levels"] == [6, 2, 4, 5, 3]
    assert sim["x"].min() >= 0.0 and sim["x"].max() <= 10.0
    truth = sim["truth"]
    again = flower.TrueModel.from_json(truth.to_json())
    assert json.loads(again.to_json()) == json.loads(truth.to_json())


def test_fit_and_estimates(posterior, sim):
    assert len(posterior) == 10
    grid, dens = posterior.marginal_density(0, [0, 0, 0, 0, 0], grid=200)
    assert grid.shape == (200,)
    mass = np.sum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))
    assert mass == pytest.approx(1.0, abs=0.02)
    g2, joint = posterior.joint_density([0, 1], [1, 1, 1, 1, 1], grid=40)
    assert joint.shape == (40, 40)
    R = posterior.correlation()
    assert np.allclose(np.diag(R), 1.0)
    parts = posterior.map_partitions()
    assert len(parts) == 3
    assert set(posterior.acceptance) >= {"alpha", "phi"}


def test_seed_reproducibility(sim, posterior):
    again = flower.fit(sim["x"], sim["c"], sim["levels"], short_hp())
    assert np.array_equal(again.correlation(), posterior.correlation())


def test_score_and_store(tmp_path, sim, posterior):
    perfect = flower.score(sim["truth"], flower.truth_as_posterior(sim["truth"]), grid=100)
    assert perfect["ise_mean"] < 1e-20
    assert perfect["ari_mean"] == pytest.approx(1.0)
    path = str(tmp_path / "draws.ndjson")
    posterior.save(path)
    back = flower.Posterior.load(path)
    assert len(back) == len(posterior)
    s = flower.score(sim["truth"], back, grid=100)
    assert math.isfinite(s["ise_mean"])
    assert flower.adjusted_rand_index([0, 0, 1], [1, 1, 0]) == pytest.approx(1.0)


def test_errors_and_cli(tmp_path):
    with pytest.raises(ValueError):
        flower.fit(np.full((4, 1), 20.0), np.zeros((4, 1), dtype=np.int32), [1], short_hp())
    with pytest.raises(OSError):
        flower.Posterior.load(str(tmp_path / "missing.ndjson"))
    code, out, err = flower.cli(["simulate", "--scenario", "1", "--seed", "1", "--n", "50", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "data.csv").exists()
    code, _, err = flower.cli(["fit", "--error-json"])
    assert code == 2
    assert json.loads(err)["error"] == "usage"
