import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from splitsim.data import Dataset, Partition, gen_blobs, gen_synth_images, partition_iid, read_container, write_container
from splitsim.data.container import MAGIC, dumps, loads
from splitsim.errors import ConfigError, DataError, FormatError
from splitsim.nn import image_conv, init_params
from splitsim.tensor import SeededRng


def test_blobs_noiseless_nearest_mean_is_perfect():
    ds = gen_blobs(5, 3, 10, spread=0.0, seed=1)
    means = np.stack([ds.features[ds.labels == c].mean(axis=0) for c in range(5)])
    dist = ((ds.features[:, None, :] - means[None]) ** 2).sum(-1)
    assert np.mean(dist.argmin(1) == ds.labels) == 1.0


def test_blobs_deterministic_and_label_counts():
    a, b = gen_blobs(3, 4, 7, seed=2), gen_blobs(3, 4, 7, seed=2)
    assert a.features.tobytes() == b.features.tobytes()
    assert a.label_counts() == [7, 7, 7]


def test_train_and_test_streams_differ():
    train = gen_blobs(3, 4, 7, seed=2)
    test = gen_blobs(3, 4, 7, seed=2, split="test")
    assert not np.array_equal(train.features, test.features)


def test_images_shape_and_counts():
    ds = gen_synth_images(4, 3, 5, seed=0)
    assert ds.features.shape == (20, 3, 28, 28)
    assert ds.label_counts() == [5] * 4


def test_images_zero_noise_duplicates_identical():
    ds = gen_synth_images(3, 1, 4, seed=0, noise=0.0)
    for c in range(3):
        block = ds.features[ds.labels == c]
        assert all(np.array_equal(block[0], other) for other in block[1:])
    assert not np.array_equal(ds.features[0], ds.features[4])


def test_images_reject_channels():
    with pytest.raises(ConfigError):
        gen_synth_images(3, 2, 4)


def test_partition_single_shard_is_permutation():
    part = partition_iid(10, 1, seed=3)
    assert sorted(part.shards[0].tolist()) == list(range(10))


def test_partition_equal_sizes():
    assert partition_iid(100, 5, seed=0).sizes == [20] * 5
    assert partition_iid(11, 3, seed=0).sizes == [4, 4, 3]


def test_partition_size_overflow():
    with pytest.raises(ConfigError):
        partition_iid(10, 2, sizes=[6, 5])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**40), st.integers(1, 8), st.integers(0, 30))
def test_partition_shards_disjoint(seed, k, extra):
    n = 2 * k + extra
    part = partition_iid(n, k, seed=seed)
    joined = np.concatenate(part.shards)
    assert len(np.unique(joined)) == len(joined) == n
    assert abs(sum(part.weights()) - 1.0) <= 1e-12


def test_partition_seed_sensitivity():
    a, b, c = partition_iid(40, 4, seed=1), partition_iid(40, 4, seed=1), partition_iid(40, 4, seed=2)
    assert all(np.array_equal(x, y) for x, y in zip(a.shards, b.shards))
    assert any(not np.array_equal(x, y) for x, y in zip(a.shards, c.shards))


def test_partition_rejects_overlap():
    with pytest.raises(ConfigError):
        Partition((np.array([0, 1]), np.array([1, 2])))


def test_dataset_rejects_bad_labels():
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 3)), np.array([0, 3]), 3)


def test_container_dataset_round_trip(tmp_path):
    ds = gen_blobs(3, 4, 5, seed=9)
    path = tmp_path / "d.slsim"
    write_container(path, ds)
    back = read_container(path)
    assert back.features.tobytes() == ds.features.tobytes()
    assert back.labels.tolist() == ds.labels.tolist()
    assert (back.num_classes, back.name) == (ds.num_classes, ds.name)
    assert dumps(back) == path.read_bytes()


def test_container_parameters_round_trip():
    params = init_params(image_conv(1, 3), SeededRng(1))
    blob = dumps(params)
    back = loads(blob)
    assert dumps(back) == blob
    assert back.flat(True).tobytes() == params.flat(True).tobytes()
    assert set(back.buffers) == set(params.buffers)


def test_container_layout():
    blob = dumps(gen_blobs(2, 1, 1, seed=0))
    assert blob[:8] == b"SLSIM\x00\x00\x01" == MAGIC
    head_len = int.from_bytes(blob[8:12], "little")
    assert blob[12:12 + head_len].decode().startswith("{")
    assert len(blob) - 12 - head_len == 8 * (2 * 1 + 2)


def test_container_bad_magic():
    with pytest.raises(FormatError, match="offset 0"):
        loads(b"NOTSLSIM" + b"\x00" * 8)


def test_container_truncated_payload_names_counts():
    blob = dumps(gen_blobs(2, 2, 2, seed=0))
    with pytest.raises(FormatError, match=r"declares 96 bytes, file holds 88"):
        loads(blob[:-8])


def test_container_shape_mismatch():
    blob = dumps(gen_blobs(2, 2, 2, seed=0))
    with pytest.raises(FormatError, match="payload size mismatch"):
        loads(blob + b"\x00" * 8)


def test_blobs_centralized_smoke():
    from splitsim.nn import Dense, ModelSpec, ReLU
    from splitsim.protocols import TrainConfig, run_centralized
    train = gen_blobs(3, 2, 100, spread=0.2, seed=5)
    test = gen_blobs(3, 2, 50, spread=0.2, seed=5, split="test")
    model = ModelSpec((Dense(2, 16), ReLU(), Dense(16, 3)), (2,))
    report = run_centralized(model, train, TrainConfig(epochs=20, batch_size=32, lr=1e-2, seed=0), test)
    assert max(report.metric_series("accuracy")) >= 0.95


@pytest.mark.slow
def test_images_conv_beats_majority_baseline():
    from splitsim.protocols import TrainConfig, run_centralized
    train = gen_synth_images(4, 1, 100, seed=1)
    test = gen_synth_images(4, 1, 50, seed=1, split="test")
    report = run_centralized(image_conv(1, 4), train, TrainConfig(epochs=10, batch_size=32, lr=1e-3, seed=0), test)
    majority = max(test.label_counts()) / len(test)
    assert report.final_metric("accuracy") - majority >= 0.30
