"""End-to-end smoke tests for the python bindings."""

import math
import os
import tempfile

import pytest

import mipr


@pytest.fixture(scope="module")
def blob_task():
    inputs, labels, _ = mipr.gen_data("gaussian-blobs", dims=4, samples=300, seed=7, noise=0.3)
    return inputs, labels


@pytest.fixture(scope="module")
def trained_net(blob_task):
    inputs, labels = blob_task
    net = mipr.make_mlp(4, [8, 6], 2, "tanh", seed=3)
    loss = mipr.train(net, inputs, labels, steps=250, batch_size=32, lr=0.02)
    assert math.isfinite(loss)
    return net


def test_version_and_module_surface():
    assert isinstance(mipr.__version__, str) and mipr.__version__
    for name in ("make_mlp", "mutual_information", "select_exact", "layerwise_prune"):
        assert callable(getattr(mipr, name))


def test_make_mlp_shapes():
    net = mipr.make_mlp(5, [7, 6], 3, "relu", seed=1)
    assert net.input_dim == 5
    assert net.depth == 3
    assert net.level_dims == [5, 7, 6, 3]
    w0 = net.weight(0)
    assert len(w0) == 7 and len(w0[0]) == 5
    assert net.bias(2) == [0.0, 0.0, 0.0]
    assert net.param_count == 7 * 5 + 7 + 6 * 7 + 6 + 3 * 6 + 3


def test_train_and_evaluate(trained_net, blob_task):
    inputs, labels = blob_task
    accuracy, mean_loss = mipr.evaluate(trained_net, inputs, labels)
    assert accuracy > 0.9
    assert mean_loss < 0.7
    logits = mipr.forward(trained_net, inputs[:5])
    assert len(logits) == 5 and len(logits[0]) == 2


def test_mutual_information_closed_form():
    rho = 0.8
    cov = mipr.CovarianceModel.from_matrix([[1.0, rho], [rho, 1.0]], split=1)
    got = mipr.mutual_information(cov, [0], [1])
    want = -0.5 * math.log(1.0 - rho * rho)
    assert abs(got - want) < 1e-9

    block = mipr.CovarianceModel.from_matrix(
        [[2.0, 0.0, 0.0], [0.0, 1.5, 0.5], [0.0, 0.5, 1.0]], split=1
    )
    assert mipr.mutual_information(block, [0], [1, 2]) == pytest.approx(0.0, abs=1e-12)


def test_select_exact_prefers_informative_dims():
    # dim 0 carries the upper variable, dim 1 is pure noise.
    sigma = [
        [1.0, 0.0, 0.9],
        [0.0, 1.0, 0.0],
        [0.9, 0.0, 1.0],
    ]
    cov = mipr.CovarianceModel.from_matrix(sigma, split=2)
    sel = mipr.select_exact(cov, [2], 1)
    assert sel.chosen == [0]
    assert sel.objective > 0.5
    assert len(sel.trace) == 1


def test_prune_squeeze_pipeline(trained_net, blob_task):
    inputs, labels = blob_task
    covs = mipr.collect_covariances(trained_net, inputs, labels, seed=5)
    assert len(covs) == trained_net.depth
    masks = mipr.layerwise_prune(trained_net, covs, keep=0.5, mode="exact")
    assert not masks.all_ones()
    assert len(masks.kept) == trained_net.depth + 1
    assert masks.kept[-1] == [0, 1]  # logits stay complete

    small = mipr.squeeze(trained_net, masks)
    assert small.param_count < trained_net.param_count
    assert mipr.count_flops(small) < mipr.count_flops(trained_net)

    kept0 = masks.kept[0]
    small_inputs = [[row[i] for i in kept0] for row in inputs]
    accuracy, _ = mipr.evaluate(small, small_inputs, labels)
    assert accuracy > 0.5


def test_magnitude_prune_counts():
    net = mipr.make_mlp(4, [5], 2, "relu", seed=9)
    masks, achieved = mipr.magnitude_prune(net, 0.5)
    total = sum(len(m) for m in masks)
    zeros = sum(1 for m in masks for v in m if v == 0)
    assert total == 4 * 5 + 2 * 5
    assert zeros == round(0.5 * total)
    assert achieved == pytest.approx(zeros / total)


def test_model_round_trip(tmp_path, trained_net, blob_task):
    inputs, labels = blob_task
    path = os.fspath(tmp_path / "net.mipr")
    mipr.save_model(trained_net, path)
    back = mipr.load_model(path)
    assert back.level_dims == trained_net.level_dims
    assert mipr.forward(back, inputs[:3]) == mipr.forward(trained_net, inputs[:3])
    with pytest.raises(mipr.ModelIoError):
        data = bytearray(open(path, "rb").read())
        data[len(data) // 2] ^= 0xFF
        bad = os.fspath(tmp_path / "bad.mipr")
        open(bad, "wb").write(bytes(data))
        mipr.load_model(bad)


def test_training_divergence_raises(blob_task):
    inputs, labels = blob_task
    net = mipr.make_mlp(4, [8], 2, "identity", seed=2)
    with pytest.raises(mipr.TrainingDiverged):
        mipr.train(net, inputs, labels, steps=50, lr=1e150, optimizer="sgd")
