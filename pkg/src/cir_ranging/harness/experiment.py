"""End-to-end experiment: dataset, two trainings, test-split comparison.

Both models receive the same TrainConfig so the only difference between the
two result rows is the input representation (CIR image vs RSSI scalar).
Artifacts are flushed as they are produced: an abort during the second
training still leaves the dataset, the first checkpoint, and its loss file
on disk. All emitted files are deterministic for a fixed config.
"""

import os

from ..ranging import (
    KIND_CIR_CNN,
    KIND_RSSI_MLP,
    build_cir_cnn,
    build_rssi_mlp,
    predict,
    save_model,
    train,
)
from .config import ExperimentConfig
from .dataset import (
    SPLIT_TEST,
    SPLIT_TRAIN,
    experiment_seeds,
    generate_dataset,
    read_dataset,
    write_dataset,
)
from .metrics import compute_metrics

_FILES = {
    KIND_CIR_CNN: ("cir_cnn.ckpt", "loss_cir_cnn.csv", "errors_cir_cnn.csv"),
    KIND_RSSI_MLP: ("rssi_mlp.ckpt", "loss_rssi_mlp.csv", "errors_rssi_mlp.csv"),
}


def _write_loss_csv(path, history):
    with open(path, "w", encoding="utf-8") as f:
        f.write("epoch,mean_train_loss\n")
        for epoch, loss in enumerate(history):
            f.write(f"{epoch},{loss!r}\n")


def _write_errors_csv(path, ds, idx, preds):
    with open(path, "w", encoding="utf-8") as f:
        f.write("spot_id,frame_id,true_range_m,predicted_range_m,error_m\n")
        for i, p in zip(idx, preds):
            t = float(ds.true_range_m[i])
            f.write(
                f"{int(ds.spot_id[i])},{int(ds.frame_id[i])},{t!r},{float(p)!r},"
                f"{float(p) - t!r}\n"
            )


def render_report(results: dict) -> str:
    n = results[KIND_CIR_CNN].n
    lines = [
        f"ranging error on the test split ({n} samples per method)",
        "",
        f"{'method':<10}{'bias_m':>12}{'std_m':>12}",
    ]
    for kind in (KIND_CIR_CNN, KIND_RSSI_MLP):
        m = results[kind]
        lines.append(f"{kind:<10}{m.bias_m:>12.6f}{m.std_m:>12.6f}")
    lines.append("")
    return "\n".join(lines)


def run_experiment(
    cfg: ExperimentConfig,
    out_dir,
    dataset_path=None,
    progress=None,
) -> dict:
    """Generate (or load) data, train both models, evaluate on the test split.

    Returns {kind: Metrics} plus the report text under "report".
    """
    os.makedirs(out_dir, exist_ok=True)
    if dataset_path is not None:
        ds = read_dataset(dataset_path)
    else:
        ds = generate_dataset(cfg, progress=progress)
        write_dataset(os.path.join(out_dir, "dataset.cird"), ds, cfg)

    train_idx = ds.indices(SPLIT_TRAIN)
    test_idx = ds.indices(SPLIT_TEST)
    train_spots = ds.spots(SPLIT_TRAIN)
    cnn_seed, mlp_seed = experiment_seeds(cfg)

    models = {
        KIND_CIR_CNN: build_cir_cnn((ds.rows, ds.cols), seed=cnn_seed),
        KIND_RSSI_MLP: build_rssi_mlp(seed=mlp_seed),
    }
    results = {}
    for kind, model in models.items():
        inputs = ds.pixels[train_idx] if kind == KIND_CIR_CNN else ds.rssi_db[train_idx]
        history = train(
            model,
            inputs,
            ds.true_range_m[train_idx],
            cfg.train,
            spot_ids=ds.spot_id[train_idx],
            allowed_spots=train_spots,
        )
        ckpt, loss_csv, _ = _FILES[kind]
        save_model(os.path.join(out_dir, ckpt), model)
        _write_loss_csv(os.path.join(out_dir, loss_csv), history)

    for kind, model in models.items():
        inputs = ds.pixels[test_idx] if kind == KIND_CIR_CNN else ds.rssi_db[test_idx]
        preds = predict(model, inputs)
        results[kind] = compute_metrics(preds, ds.true_range_m[test_idx])
        _write_errors_csv(os.path.join(out_dir, _FILES[kind][2]), ds, test_idx, preds)

    report = render_report(results)
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as f:
        f.write(report)
    results["report"] = report
    return results
