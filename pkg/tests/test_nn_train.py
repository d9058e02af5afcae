"""Training-loop behavior: determinism, loss bookkeeping, and failure modes."""

import numpy as np
import pytest

from cir_ranging import ranging
from cir_ranging.errors import ConfigError, ShapeError, TrainingError
from cir_ranging.nn.benchmark import run_benchmark
from cir_ranging.ranging import TrainConfig, build_cir_cnn, build_rssi_mlp, predict, train

RNG = np.random.default_rng(42)


def _rssi_problem(n=64):
    rssi = RNG.uniform(-100.0, -70.0, size=n)
    ranges = 10.0 ** ((-rssi - 40.0) / 30.0)
    return rssi, ranges


def test_same_seed_identical_histories_and_weights():
    rssi, ranges = _rssi_problem()
    cfg = TrainConfig(epochs=20, batch_size=16, lr=1e-3, seed=5)
    runs = []
    for _ in range(2):
        m = build_rssi_mlp(seed=3)
        hist = train(m, rssi, ranges, cfg)
        runs.append((hist, [p.copy() for _, _, p in m.net.parameters()]))
    assert runs[0][0] == runs[1][0]
    for a, b in zip(runs[0][1], runs[1][1]):
        np.testing.assert_array_equal(a, b)


def test_different_shuffle_seed_changes_history():
    rssi, ranges = _rssi_problem()
    m1 = build_rssi_mlp(seed=3)
    m2 = build_rssi_mlp(seed=3)
    h1 = train(m1, rssi, ranges, TrainConfig(epochs=5, batch_size=16, seed=1))
    h2 = train(m2, rssi, ranges, TrainConfig(epochs=5, batch_size=16, seed=2))
    assert h1 != h2


def test_no_shuffle_makes_seed_irrelevant():
    rssi, ranges = _rssi_problem()
    m1 = build_rssi_mlp(seed=3)
    m2 = build_rssi_mlp(seed=3)
    h1 = train(m1, rssi, ranges, TrainConfig(epochs=5, batch_size=16, seed=1, shuffle=False))
    h2 = train(m2, rssi, ranges, TrainConfig(epochs=5, batch_size=16, seed=2, shuffle=False))
    assert h1 == h2


def test_history_length_matches_epochs():
    rssi, ranges = _rssi_problem(20)
    hist = train(build_rssi_mlp(), rssi, ranges, TrainConfig(epochs=7, batch_size=8))
    assert len(hist) == 7
    assert all(isinstance(v, float) and np.isfinite(v) for v in hist)


def test_overfit_loss_smoothed_monotone():
    # invariant: mean loss over consecutive 50-epoch windows never increases
    rssi, ranges = _rssi_problem(8)
    hist = train(build_rssi_mlp(seed=1), rssi, ranges, TrainConfig(epochs=200, batch_size=256, seed=1))
    windows = [float(np.mean(hist[i : i + 50])) for i in range(0, 200, 50)]
    for earlier, later in zip(windows, windows[1:]):
        assert later <= earlier * (1 + 1e-9)


@pytest.mark.filterwarnings("ignore:invalid value encountered")
def test_non_finite_loss_reports_epoch_and_batch():
    rssi, ranges = _rssi_problem(16)
    rssi[3] = np.inf
    with pytest.raises(TrainingError, match=r"epoch \d+, batch \d+"):
        train(build_rssi_mlp(), rssi, ranges, TrainConfig(epochs=1, batch_size=16, shuffle=False))


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(epochs=0)
    with pytest.raises(ConfigError):
        TrainConfig(epochs=1, batch_size=0)
    with pytest.raises(ConfigError):
        TrainConfig(epochs=1, lr=0.0)


def test_labels_must_be_positive():
    rssi, ranges = _rssi_problem(8)
    ranges[2] = -5.0
    with pytest.raises(ConfigError, match="positive"):
        train(build_rssi_mlp(), rssi, ranges, TrainConfig(epochs=1))


def test_split_audit_catches_foreign_spot():
    rssi, ranges = _rssi_problem(12)
    spots = np.array([0] * 6 + [7] * 6)
    with pytest.raises(TrainingError, match=r"non-training spots \[7\]"):
        train(
            build_rssi_mlp(),
            rssi,
            ranges,
            TrainConfig(epochs=1, batch_size=4, shuffle=False),
            spot_ids=spots,
            allowed_spots=[0],
        )


def test_label_and_input_count_mismatch():
    rssi, ranges = _rssi_problem(8)
    with pytest.raises(ShapeError):
        train(build_rssi_mlp(), rssi[:5], ranges, TrainConfig(epochs=1))


def test_cnn_training_also_deterministic():
    x = RNG.random((12, 22, 22))
    y = RNG.uniform(50.0, 250.0, size=12)
    cfg = TrainConfig(epochs=2, batch_size=4, seed=9)
    h1 = train(build_cir_cnn((22, 22), seed=2), x, y, cfg)
    h2 = train(build_cir_cnn((22, 22), seed=2), x, y, cfg)
    assert h1 == h2


def test_predict_batches_agree_with_single_shot():
    rssi, ranges = _rssi_problem(32)
    m = build_rssi_mlp(seed=4)
    train(m, rssi, ranges, TrainConfig(epochs=3, batch_size=8))
    np.testing.assert_allclose(predict(m, rssi, batch_size=5), predict(m, rssi), rtol=1e-12)


def test_benchmark_reports_all_backends():
    res = run_benchmark(batch=2, iters=1, rows=22, cols=22, out=lambda *_: None)
    from cir_ranging.nn import backend

    assert set(res) == set(backend.available_backends())
    assert all(v > 0 for v in res.values())
