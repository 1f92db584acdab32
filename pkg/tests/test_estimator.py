import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from voronoi_blocks import VoronoiBlocks, default_spec, generate_synthetic


@pytest.fixture(scope="module")
def fitted():
    spec = default_spec(seed=2)
    X, _ = generate_synthetic(spec)
    return VoronoiBlocks(bounds=spec.box, quantum=1e-3).fit(X), X, spec


def test_params_and_clone():
    vb = VoronoiBlocks(quantum=0.5, threshold_ratio=3.0)
    params = vb.get_params()
    assert params["quantum"] == 0.5 and params["threshold_ratio"] == 3.0
    other = clone(vb).set_params(penalty=1.0)
    assert other.penalty == 1.0 and vb.penalty == 0.0


def test_1d_fit():
    vb = VoronoiBlocks(bounds=[(0, 10)], quantum=0.5).fit([[1.0], [2.0], [3.0], [9.0]])
    assert vb.block_labels_.tolist() == [0, 0, 2, 2]
    assert vb.labels_.tolist() == [0, 0, -1, -1]
    assert vb.background_ == pytest.approx(2 / 7.5)
    assert vb.score_samples([[1.0], [9.5]]) == pytest.approx([0.8, 2 / 7.5])
    assert vb.predict([[0.5], [8.0]]).tolist() == [0, -1]


def test_hotspots(fitted):
    vb, X, spec = fitted
    assert vb.clusters_.n_clusters == 2
    assert vb.labels_.shape == (len(X),)
    centers = np.array([h.center for h in spec.hotspots])
    assert sorted(set(vb.predict(centers).tolist())) == [0, 1]
    assert vb.predict([[0.2, 4.8]]).tolist() == [-1]
    assert np.array_equal(vb.fit_predict(X), vb.labels_)
    assert vb.predict_blocks(X[:5]).tolist() == vb.block_labels_[:5].tolist()


def test_density_grid_method(fitted):
    vb = fitted[0]
    g = vb.density_grid((20, 10))
    assert g.values.shape == (10, 20)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        VoronoiBlocks().predict([[0.0]])


def test_input_validation(fitted):
    vb = fitted[0]
    with pytest.raises(ValueError):
        vb.predict([[0.0, 1.0, 2.0]])
    with pytest.raises(ValueError):
        VoronoiBlocks().fit(np.zeros((4, 3)))
    with pytest.raises(ValueError):
        VoronoiBlocks().fit([[np.nan], [1.0]])
    with pytest.raises(ValueError):
        VoronoiBlocks(adjacency="face").fit([[0.0], [1.0]])


def test_truncated_run_flag():
    vb = VoronoiBlocks(bounds=[(0, 10)], quantum=0.5, max_steps=1).fit([[1.0], [2.0], [3.0], [9.0]])
    assert vb.history_.truncated
    assert len(vb.partition_) == 3


def test_engines_agree(fitted):
    vb, X, spec = fitted
    other = clone(vb).set_params(engine="rescan").fit(X)
    assert np.array_equal(other.block_labels_, vb.block_labels_)
