import math

import numpy as np
import pytest

import compocc


def test_feature_map_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    maps = [compocc.FeatureMap(rng.normal(size=(3, 4, 5)).astype(np.float32), f"m{i}") for i in range(3)]
    path = tmp_path / "x.fmap"
    compocc.write_feature_maps(maps, path)
    back = compocc.read_feature_maps(path)
    assert len(back) == 3
    np.testing.assert_array_equal(back[1].data, maps[1].data)
    assert back[2].source_id == "2"


def test_bad_file_raises(tmp_path):
    path = tmp_path / "bad.fmap"
    path.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(compocc.FormatError):
        compocc.read_feature_maps(path)
    assert issubclass(compocc.FormatError, compocc.Error)


def test_dictionary_and_encode():
    rng = np.random.default_rng(1)
    maps, labels = [], []
    for y in range(2):
        for i in range(4):
            data = rng.normal(scale=0.05, size=(3, 3, 4)).astype(np.float32)
            data[..., 2 * y] += 1.0
            data[::2, :, 2 * y + 1] += 1.0
            maps.append(compocc.FeatureMap(data, f"{y}_{i}"))
            labels.append(y)
    d = compocc.learn_dictionary(maps, labels, k_per_class=2, seed=3)
    assert d.centroids.shape == (4, 4)
    assert np.allclose(np.linalg.norm(d.centroids, axis=1), 1.0)
    assert list(d.class_of_part) == [0, 0, 1, 1]
    b = compocc.encode(maps[0], d, 0.45)
    assert b.bits.shape == (3, 3, 4)
    assert (b.bits.sum(axis=2) >= 1).all()


def test_likelihoods_and_classification():
    alpha = compocc.random_alpha(4, 4, 6, 2, 0.9, 0.05, seed=2)
    other = compocc.random_alpha(4, 4, 6, 2, 0.9, 0.05, seed=3)
    grid = compocc.BernoulliGrid(alpha)
    bg = compocc.BackgroundModel([0.3] * 6, "noise")
    b = compocc.sample_map(alpha, seed=4)

    ll = compocc.log_likelihood(b, grid)
    expected = float(np.sum(np.where(b.bits == 1, np.log(alpha), np.log1p(-alpha))))
    assert ll == pytest.approx(expected, rel=1e-12)
    assert compocc.log_likelihood_occluded(b, grid, bg, 1.0).log_likelihood == ll

    occluded = compocc.occlude_region(b, compocc.Region(0, 0, 2, 4), [0.3] * 6, seed=5)
    res = compocc.log_likelihood_occluded(occluded, grid, bg, 0.7)
    assert res.visible.shape == (4, 4)
    assert res.log_likelihood >= compocc.log_likelihood(occluded, grid) + 16 * math.log(0.7)

    models = [[grid], [compocc.BernoulliGrid(other, class_label=1)]]
    c = compocc.classify(b, models, bg, 0.7, True)
    assert c.label == 0
    assert c.occlusion is not None
    assert compocc.classify(b, models, bg, 0.7, False).occlusion is None


def test_brute_force_normalization():
    alpha = compocc.random_alpha(2, 2, 3, 1, 0.8, 0.1, seed=7)
    assert abs(compocc.brute_force_likelihood_sum(compocc.BernoulliGrid(alpha)) - 1.0) < 1e-10


def test_mixture_and_spectral():
    maps, labels = compocc.run_synth_job(
        '{"height": 4, "width": 4, "parts": 8, "seed": 9,'
        ' "classes": [{"samples": 40, "modes": [{"random": {"high": 0.95, "low": 0.02}},'
        ' {"random": {"high": 0.95, "low": 0.02}}]}],'
        ' "background": {"random": {}}}'
    )
    assert len(maps) == 40 and set(labels) == {0}
    mix = compocc.fit_mixture(maps, components=2, iterations=10, seed=1)
    assert len(mix.components) == 2
    assert len(mix.assignments) == 40
    affinity, sigma = compocc.hamming_affinity(maps)
    assert affinity.shape == (40, 40) and sigma > 0
    assert np.allclose(affinity, affinity.T)
    blocks = np.kron(np.eye(2), np.ones((3, 3)))
    labels = compocc.spectral_cluster(blocks, 2, seed=0)
    assert labels[0] == labels[1] == labels[2] != labels[3] == labels[4] == labels[5]


def test_fuse_and_evaluate():
    d = compocc.fuse([0.7, 0.3], 1, 0.6)
    assert (d.label, d.branch) == (0, compocc.Branch.external)
    d = compocc.fuse([0.5, 0.5], 1, 0.6)
    assert (d.label, d.branch) == (1, compocc.Branch.compositional)
    with pytest.raises(compocc.InputError):
        compocc.fuse([0.5, 0.6], 0, 0.6)

    report = compocc.evaluate(
        [("a", 0, None), ("b", 1, None), ("c", 0, None), ("d", 1, None)],
        {"a": 0, "b": 1, "c": 1, "d": 1},
        {"a": "clean", "b": "clean", "c": "noisy", "d": "noisy"},
    )
    assert report.accuracy == {"clean": 1.0, "noisy": 0.5}
    assert report.mean_accuracy == 0.75
    assert compocc.report_dict(report)["total"] == 4
