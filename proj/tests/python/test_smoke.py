import numpy as np
import pytest

import pgvc


def test_synth_shapes_and_determinism():
    clips = pgvc.synth_generate(clips=2, frames=4, width=16, height=12, seed=3)
    assert len(clips) == 2
    color, gray = clips[0]
    assert color.shape == (4, 12, 16, 3)
    assert gray.shape == (4, 12, 16)
    again = pgvc.synth_generate(clips=2, frames=4, width=16, height=12, seed=3)
    np.testing.assert_array_equal(again[1][0], clips[1][0])


def test_kmeans_recovers_colors():
    colors = np.array([[0.9, 0.1, 0.1], [0.1, 0.2, 0.9], [0.1, 0.75, 0.2], [0.95, 0.85, 0.1], [0.3, 0.3, 0.3]])
    img = colors[np.arange(100) % 5].reshape(10, 10, 3)
    np.testing.assert_array_equal(pgvc.kmeans_extract(img, seed=4), pgvc.canonical_palette(colors))


def test_colorfulness_oracles():
    red = np.zeros((4, 4, 3))
    red[..., 0] = 1.0
    assert abs(pgvc.colorfulness(red) - 85.53) < 0.01
    two = np.array([[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]])
    assert abs(pgvc.colorfulness(two) - 272.63) < 0.05
    assert pgvc.colorfulness(np.full((3, 3, 3), 0.4)) == 0.0


def test_psnr_and_ssim():
    a = np.random.default_rng(0).random((16, 16, 3))
    assert pgvc.psnr(a, a) == 99.0
    assert pgvc.psnr(np.full((4, 4, 3), 0.2), np.full((4, 4, 3), 0.3)) == pytest.approx(20.0)
    assert pgvc.ssim(a, a) == pytest.approx(1.0)


def test_schedule():
    betas, alpha_bars = pgvc.make_schedule(200, 1e-4, 0.02)
    assert betas.shape == (200,)
    assert alpha_bars[0] == pytest.approx(0.9999)
    assert np.all(np.diff(alpha_bars) < 0)


def test_gmm_and_palettes():
    rng = np.random.default_rng(1)
    pixels = np.concatenate([rng.normal([0.2, 0.3, 0.7], 0.03, (500, 3)), rng.normal([0.8, 0.6, 0.2], 0.03, (500, 3))])
    gmm = pgvc.fit_em(pixels, components=2, seed=0)
    assert np.all(np.diff(gmm["log_likelihood"]) >= -1e-9)
    p = pgvc.sample_palette(gmm, seed=5)
    assert p.shape == (5, 3)
    np.testing.assert_array_equal(p, pgvc.sample_palette(gmm, seed=5))
    sky = pgvc.offline_palette("sky", seed=0)
    assert any(np.allclose(c, np.array([135, 206, 235]) / 255) for c in sky)


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        pgvc.offline_palette("", seed=0)
    with pytest.raises(ValueError):
        pgvc.plan_windows(10, 8, 8)


def test_train_and_colorize(tmp_path):
    clips = pgvc.synth_generate(clips=1, frames=4, width=8, height=8, seed=2)
    ckpt = tmp_path / "m.pgvc"
    losses = pgvc.train(clips, ckpt, steps=3, channels=8, window=4, timesteps=5)
    assert len(losses) == 3 and ckpt.exists()
    palette = pgvc.kmeans_extract(clips[0][0][0])
    out = pgvc.colorize(ckpt, clips[0][1], palette, window=4, overlap=1, seed=1)
    assert out.shape == (4, 8, 8, 3)
    assert out.min() >= 0.0 and out.max() <= 1.0
    np.testing.assert_array_equal(out, pgvc.colorize(ckpt, clips[0][1], palette, window=4, overlap=1, seed=1))
    assert pgvc.plan_windows(20, 8, 2) == [0, 6, 12]
