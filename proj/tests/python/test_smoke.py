import numpy as np
import pytest

import aquifer


@pytest.fixture(scope="module")
def scene():
    image, polygons = aquifer.generate_scene(
        width=48, height=48, bands=4, n_residential=3, n_nonresidential=2,
        min_building_px=6, max_building_px=12, noise_sigma=0.05, seed=11,
    )
    return image, polygons


def test_scene_shape_and_determinism(scene):
    image, polygons = scene
    assert image.shape == (4, 48, 48)
    assert len(polygons) == 5
    again, _ = aquifer.generate_scene(
        width=48, height=48, bands=4, n_residential=3, n_nonresidential=2,
        min_building_px=6, max_building_px=12, noise_sigma=0.05, seed=11,
    )
    np.testing.assert_array_equal(image, again)


def test_rasterize_and_class_filter(scene):
    _, polygons = scene
    mask = aquifer.rasterize(polygons, 48, 48)
    assert mask.shape == (48, 48)
    assert set(np.unique(mask)) <= {0, 255}
    assert mask.sum() > 0
    res = aquifer.rasterize(polygons, 48, 48, classes=["residential"])
    assert res.sum() <= mask.sum()


def test_feature_dimensions(scene):
    image, _ = scene
    frame = aquifer.expand_frame_features(image, k=2)
    assert frame.shape == (48 * 48, 4 * 25)
    both = aquifer.assemble_features(image, k=2, hog=True)
    assert both.shape == (48 * 48, 4 * 25 + 36)


def test_train_predict_roundtrip(tmp_path, scene):
    image, polygons = scene
    mask = aquifer.rasterize(polygons, 48, 48)
    X = aquifer.expand_frame_features(image, k=1)
    y = (mask.ravel() > 0).astype(np.uint8)

    model = aquifer.train_rf(X, y, trees=10, depth=8, seed=3)
    probs = model.predict_proba(X)
    assert probs.shape == (48 * 48,)
    assert ((probs >= 0) & (probs <= 1)).all()

    auc = aquifer.roc_auc(probs, y)
    assert auc > 0.95

    threshold, jaccard = aquifer.optimal_threshold(probs, y)
    assert 0 <= threshold <= 1
    report = aquifer.metrics((probs >= threshold).astype(np.uint8), y)
    assert report["pixel_jaccard"] == pytest.approx(jaccard)

    path = tmp_path / "model.bin"
    model.save(str(path))
    loaded = aquifer.load_model(str(path))
    np.testing.assert_array_equal(loaded.predict_proba(X), probs)


def test_estimation_pipeline():
    p_building = np.full((10, 10), 0.5, dtype=np.float32)
    p_res = np.full((10, 10), 0.8, dtype=np.float32)
    a_r, a_nr = aquifer.expected_areas(p_building, p_res, pixel_size_m=1.24)
    assert a_r + a_nr == pytest.approx(100 * 0.5 * 1.24 ** 2)
    report = aquifer.water_consumption(a_r, a_nr)
    assert report["water_gal_per_day"] > 0
    assert report["water_gal_per_day"] == pytest.approx(
        report["residential_share_gal"] + report["nonresidential_share_gal"]
    )


def test_published_arithmetic():
    report = aquifer.water_consumption(213858.0, 16988.0)
    assert report["water_gal_per_day"] == pytest.approx(0.128e6, rel=0.01)


def test_image_io_roundtrip(tmp_path, scene):
    image, _ = scene
    path = tmp_path / "scene.mbr"
    aquifer.save_image(image, str(path), pixel_size_m=1.24)
    loaded, pixel_size = aquifer.load_image(str(path))
    assert pixel_size == 1.24
    np.testing.assert_array_equal(loaded, image)


def test_errors_surface_as_python_exceptions():
    with pytest.raises(aquifer.IoError):
        aquifer.load_image("/nonexistent/path.mbr")
    with pytest.raises(ValueError):
        bad = np.zeros((4, 4), dtype=np.float32)
        aquifer.expand_frame_features(bad[None, ...], k=10)
