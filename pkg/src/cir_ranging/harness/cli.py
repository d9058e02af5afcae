"""Command-line interface.

Subcommands: gen (dataset from config), train (one model from a dataset),
eval (metrics from model + dataset), run (full experiment), inspect (dump one
CIR image as a P5 graymap), gradcheck (finite-difference oracle over the
CNN), bench (kernel backend comparison). Exit status: 0 on success, 1 on any
caught error (diagnostic on stderr), 2 on usage errors.
"""

import argparse
import sys

import numpy as np

from ..errors import ConfigError, ShapeError, TrainingError
from ..nn.benchmark import run_benchmark
from ..nn.gradcheck import gradient_check
from ..ranging import (
    KIND_CIR_CNN,
    KIND_RSSI_MLP,
    TrainConfig,
    build_cir_cnn,
    build_rssi_mlp,
    load_model,
    predict,
    save_model,
    train,
)
from .config import load_config
from .dataset import SPLIT_TEST, SPLIT_TRAIN, generate_dataset, read_dataset, write_dataset
from .experiment import run_experiment
from .metrics import compute_metrics

_MODEL_FLAGS = {"cir-cnn": KIND_CIR_CNN, "rssi-mlp": KIND_RSSI_MLP}


def _progress_printer(label):
    def progress(done, total):
        print(f"{label}: spot {done}/{total}", file=sys.stderr)

    return progress


def _write_pgm(path, pixels):
    img = np.clip(np.rint(np.asarray(pixels, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header + img.tobytes())


def _dataset_model_inputs(ds, kind, idx):
    return ds.pixels[idx] if kind == KIND_CIR_CNN else ds.rssi_db[idx]


def _check_dataset_shape(model, ds):
    if model.kind == KIND_CIR_CNN and model.input_shape != (ds.rows, ds.cols):
        raise ShapeError(
            f"model expects images shaped {model.input_shape}, dataset provides "
            f"({ds.rows}, {ds.cols})"
        )


def _cmd_gen(args):
    cfg = load_config(args.config)
    ds = generate_dataset(cfg, progress=_progress_printer("generating") if not args.quiet else None)
    write_dataset(args.out, ds, cfg)
    print(
        f"wrote {ds.n_samples} samples ({ds.rows}x{ds.cols} images, "
        f"{ds.n_train_spots}+{ds.n_test_spots} spots) to {args.out}"
    )
    return 0


def _train_config(args):
    if args.config is not None:
        tc = load_config(args.config).train
    else:
        tc = TrainConfig(seed=0)
    overrides = {}
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.batch_size is not None:
        overrides["batch_size"] = args.batch_size
    if args.lr is not None:
        overrides["lr"] = args.lr
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.no_shuffle:
        overrides["shuffle"] = False
    return TrainConfig(
        epochs=overrides.get("epochs", tc.epochs),
        batch_size=overrides.get("batch_size", tc.batch_size),
        lr=overrides.get("lr", tc.lr),
        seed=overrides.get("seed", tc.seed),
        shuffle=overrides.get("shuffle", tc.shuffle),
    )


def _cmd_train(args):
    ds = read_dataset(args.dataset)
    kind = _MODEL_FLAGS[args.model]
    tc = _train_config(args)
    if kind == KIND_CIR_CNN:
        model = build_cir_cnn((ds.rows, ds.cols), seed=tc.seed)
    else:
        model = build_rssi_mlp(seed=tc.seed)
    idx = ds.indices(SPLIT_TRAIN)
    history = train(
        model,
        _dataset_model_inputs(ds, kind, idx),
        ds.true_range_m[idx],
        tc,
        spot_ids=ds.spot_id[idx],
        allowed_spots=ds.spots(SPLIT_TRAIN),
    )
    save_model(args.out, model)
    print(
        f"trained {kind} on {idx.size} samples for {tc.epochs} epochs; "
        f"final mean loss {history[-1]:.6g}; saved to {args.out}"
    )
    return 0


def _cmd_eval(args):
    ds = read_dataset(args.dataset)
    model = load_model(args.model)
    _check_dataset_shape(model, ds)
    split = SPLIT_TRAIN if args.split == "train" else SPLIT_TEST
    idx = ds.indices(split)
    preds = predict(model, _dataset_model_inputs(ds, model.kind, idx))
    m = compute_metrics(preds, ds.true_range_m[idx])
    print(f"{model.kind} on {args.split}: bias_m={m.bias_m:.6f} std_m={m.std_m:.6f} n={m.n}")
    return 0


def _cmd_run(args):
    cfg = load_config(args.config)
    results = run_experiment(
        cfg,
        args.out,
        dataset_path=args.dataset,
        progress=_progress_printer("generating") if not args.quiet else None,
    )
    print(results["report"], end="")
    return 0


def _cmd_inspect(args):
    ds = read_dataset(args.dataset)
    if not 0 <= args.index < ds.n_samples:
        raise ValueError(f"sample index {args.index} out of range [0, {ds.n_samples})")
    i = args.index
    split = "train" if ds.split[i] == SPLIT_TRAIN else "test"
    print(
        f"sample {i}: spot {int(ds.spot_id[i])}, frame {int(ds.frame_id[i])}, "
        f"split {split}, rssi {float(ds.rssi_db[i]):.3f} dB, "
        f"range {float(ds.true_range_m[i]):.3f} m, image {ds.rows}x{ds.cols}"
    )
    if args.out is not None:
        _write_pgm(args.out, ds.pixels[i])
        print(f"wrote P5 graymap to {args.out}")
    return 0


def _cmd_gradcheck(args):
    model = build_cir_cnn((args.rows, args.cols), seed=args.seed)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    x = rng.uniform(0.0, 1.0, (args.batch, args.rows, args.cols, 1))
    target = rng.uniform(0.2, 0.4, (args.batch, 1))
    # the output unit ships zero-initialized, which makes every upstream
    # gradient identically zero; check at a generic point in weight space
    final = model.net.layers[-2]
    final.w[:] = rng.normal(0.0, 0.15, final.w.shape)
    err = gradient_check(model.net, x, target, n_samples=args.samples, seed=args.seed)
    print(f"max relative gradient error over {args.samples} sampled parameters: {err:.3e}")
    if err >= 1e-5:
        print("FAIL: exceeds 1e-5", file=sys.stderr)
        return 1
    return 0


def _cmd_bench(args):
    run_benchmark(batch=args.batch, iters=args.iters, rows=args.rows, cols=args.cols)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cir-ranging",
        description="LTE downlink simulation, CIR image extraction, and learned range estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a dataset from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="dataset file to write")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("train", help="train one model on a dataset's training split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True, choices=sorted(_MODEL_FLAGS))
    p.add_argument("--out", required=True, help="checkpoint file to write")
    p.add_argument("--config", help="config file supplying the [train] section")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-shuffle", action="store_true")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint against a dataset split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True, help="checkpoint file")
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("run", help="full experiment: dataset, both models, report")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dataset", help="reuse an existing dataset file instead of generating")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("inspect", help="print one sample's metadata, optionally dump its image")
    p.add_argument("--dataset", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", help="P5 graymap file to write")
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("gradcheck", help="finite-difference check of the CNN gradients")
    p.add_argument("--rows", type=int, default=40)
    p.add_argument("--cols", type=int, default=64)
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("bench", help="compare numba and numpy kernel backends")
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--rows", type=int, default=40)
    p.add_argument("--cols", type=int, default=64)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ShapeError, TrainingError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
