"""Dataset synthesis and binary persistence.

Generation walks spots and frames: each spot gets one range, one shadowing
draw, and a frame count; each frame runs the full transmit -> channel ->
receiver pipeline to yield a CIR image, an RSSI measurement, and the true
range. All randomness derives from the master seed through named
SeedSequence keys, so results do not depend on evaluation order.

File format "CIRD" (little-endian):
  magic "CIRD", version u16, rows u16, cols u16, n_samples u32,
  n_train_spots u16, n_test_spots u16, then fixed-stride records:
  spot_id u32, frame_id u32, split u8, rssi f64, range f64,
  pixels f32[rows*cols]. A text sidecar <path>.manifest.txt carries the
  generating config.
"""

import os
import struct
from dataclasses import dataclass

import numpy as np

from ..channel import apply_channel, sample_channel
from ..lte import build_crs_reference, build_frame_grid, build_numerology, ofdm_modulate
from ..receiver import process_frame
from .config import ExperimentConfig, render_config

MAGIC = b"CIRD"
VERSION = 1
SPLIT_TRAIN = 0
SPLIT_TEST = 1

# SeedSequence stream tags under the master seed
_STREAM_SPOTS = 0
_STREAM_FRAMES = 1
_STREAM_TRAIN = 2


@dataclass
class RangingDataset:
    """Column-wise sample store: one row per received frame."""

    rows: int
    cols: int
    pixels: np.ndarray  # float32 [n, rows, cols]
    rssi_db: np.ndarray  # float64 [n]
    true_range_m: np.ndarray  # float64 [n]
    spot_id: np.ndarray  # uint32 [n]
    frame_id: np.ndarray  # uint32 [n]
    split: np.ndarray  # uint8 [n]
    n_train_spots: int
    n_test_spots: int

    def __post_init__(self):
        train_spots = set(self.spot_id[self.split == SPLIT_TRAIN].tolist())
        test_spots = set(self.spot_id[self.split == SPLIT_TEST].tolist())
        overlap = train_spots & test_spots
        if overlap:
            raise ValueError(f"spots {sorted(overlap)} appear in both train and test splits")

    @property
    def n_samples(self) -> int:
        return self.rssi_db.size

    def indices(self, split: int) -> np.ndarray:
        return np.nonzero(self.split == split)[0]

    def spots(self, split: int):
        return sorted(set(self.spot_id[self.split == split].tolist()))


def experiment_seeds(cfg: ExperimentConfig):
    """Model-init seeds (cnn, mlp) derived from the master seed."""
    state = np.random.SeedSequence((cfg.master_seed, _STREAM_TRAIN)).generate_state(2)
    return int(state[0]), int(state[1])


def generate_dataset(cfg: ExperimentConfig, progress=None) -> RangingDataset:
    """Run the full pipeline for every (spot, frame) of the experiment."""
    num = build_numerology(cfg.bandwidth_hz)
    crs = build_crs_reference(cfg.cell_id, num)
    n_spots = cfg.n_train_spots + cfg.n_test_spots
    lo, hi = cfg.scenario.range_interval_m
    fmin, fmax = cfg.frames_per_spot

    setup_rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((cfg.master_seed, _STREAM_SPOTS)))
    )
    ranges = setup_rng.uniform(lo, hi, n_spots)
    shadowings = setup_rng.normal(0.0, cfg.scenario.shadowing_sigma_db, n_spots)
    frame_counts = setup_rng.integers(fmin, fmax + 1, n_spots)

    pixels, rssis, truths, spot_ids, frame_ids, splits = [], [], [], [], [], []
    for spot in range(n_spots):
        split = SPLIT_TRAIN if spot < cfg.n_train_spots else SPLIT_TEST
        for frame in range(int(frame_counts[spot])):
            seeds = np.random.SeedSequence(
                (cfg.master_seed, _STREAM_FRAMES, spot, frame)
            ).generate_state(3)
            try:
                grid = build_frame_grid(cfg.cell_id, num, payload_seed=int(seeds[0]))
                wave = ofdm_modulate(grid, num)
                chan = sample_channel(
                    cfg.scenario,
                    float(ranges[spot]),
                    rng_seed=int(seeds[1]),
                    shadowing_db=float(shadowings[spot]),
                )
                rx = apply_channel(wave, chan, num, rng_seed=int(seeds[2]))
                img, rssi = process_frame(
                    rx,
                    crs,
                    num,
                    n_cir=cfg.n_cir,
                    n_taps_kept=cfg.n_taps_kept,
                    floor_db=cfg.floor_db,
                )
            except (ValueError, ArithmeticError) as e:
                raise type(e)(f"spot {spot}, frame {frame}: {e}") from e
            pixels.append(img.pixels)
            rssis.append(rssi)
            truths.append(float(ranges[spot]))
            spot_ids.append(spot)
            frame_ids.append(frame)
            splits.append(split)
        if progress is not None:
            progress(spot + 1, n_spots)

    return RangingDataset(
        rows=40,
        cols=cfg.n_taps_kept,
        pixels=np.stack(pixels),
        rssi_db=np.asarray(rssis),
        true_range_m=np.asarray(truths),
        spot_id=np.asarray(spot_ids, dtype=np.uint32),
        frame_id=np.asarray(frame_ids, dtype=np.uint32),
        split=np.asarray(splits, dtype=np.uint8),
        n_train_spots=cfg.n_train_spots,
        n_test_spots=cfg.n_test_spots,
    )


def write_dataset(path, ds: RangingDataset, cfg: ExperimentConfig | None = None):
    """Serialize to the CIRD format; writes the manifest sidecar when cfg given."""
    n = ds.n_samples
    out = [
        MAGIC,
        struct.pack(
            "<HHHIHH", VERSION, ds.rows, ds.cols, n, ds.n_train_spots, ds.n_test_spots
        ),
    ]
    for i in range(n):
        out.append(
            struct.pack(
                "<IIBdd",
                int(ds.spot_id[i]),
                int(ds.frame_id[i]),
                int(ds.split[i]),
                float(ds.rssi_db[i]),
                float(ds.true_range_m[i]),
            )
        )
        out.append(np.ascontiguousarray(ds.pixels[i], dtype="<f4").tobytes())
    with open(path, "wb") as f:
        f.write(b"".join(out))
    if cfg is not None:
        # basename only: the manifest must not depend on where the file lives
        manifest = (
            "generating configuration for the dataset in "
            f"{os.path.basename(os.fspath(path))}\n\n{render_config(cfg)}"
        )
        with open(f"{path}.manifest.txt", "w", encoding="utf-8") as f:
            f.write(manifest)


def read_dataset(path) -> RangingDataset:
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a dataset file (bad magic)")
    version, rows, cols, n, n_train, n_test = struct.unpack_from("<HHHIHH", data, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported dataset version {version}")
    head = struct.calcsize("<IIBdd")
    stride = head + rows * cols * 4
    pos = 4 + struct.calcsize("<HHHIHH")
    if len(data) != pos + n * stride:
        raise ValueError(
            f"{path}: truncated dataset (expected {pos + n * stride} bytes, "
            f"have {len(data)})"
        )
    pixels = np.empty((n, rows, cols), dtype=np.float32)
    rssi = np.empty(n)
    truth = np.empty(n)
    spot = np.empty(n, dtype=np.uint32)
    frame = np.empty(n, dtype=np.uint32)
    split = np.empty(n, dtype=np.uint8)
    for i in range(n):
        base = pos + i * stride
        spot[i], frame[i], split[i], rssi[i], truth[i] = struct.unpack_from(
            "<IIBdd", data, base
        )
        pixels[i] = np.frombuffer(
            data, dtype="<f4", count=rows * cols, offset=base + head
        ).reshape(rows, cols)
    return RangingDataset(
        rows=rows,
        cols=cols,
        pixels=pixels,
        rssi_db=rssi,
        true_range_m=truth,
        spot_id=spot,
        frame_id=frame,
        split=split,
        n_train_spots=n_train,
        n_test_spots=n_test,
    )
