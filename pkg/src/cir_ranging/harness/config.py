"""Experiment configuration: flat INI-style key = value files.

Four sections ([experiment], [scenario], [image], [train]), every key
documented by its entry in the schema below. Unknown sections or keys are
rejected outright so a typo cannot silently fall back to a default.
"""

import configparser
from dataclasses import dataclass

from ..channel import ScenarioConfig
from ..errors import ConfigError
from ..ranging import TrainConfig


@dataclass(frozen=True)
class ExperimentConfig:
    bandwidth_hz: float
    cell_id: int
    n_train_spots: int
    n_test_spots: int
    frames_per_spot: tuple
    master_seed: int
    scenario: ScenarioConfig
    n_cir: int
    n_taps_kept: int
    floor_db: float
    train: TrainConfig

    def __post_init__(self):
        if self.n_train_spots < 1 or self.n_test_spots < 1:
            raise ConfigError(
                f"spot counts must be positive, got {self.n_train_spots} train / "
                f"{self.n_test_spots} test"
            )
        lo, hi = self.frames_per_spot
        if lo < 1 or hi < lo:
            raise ConfigError(f"frames_per_spot range ({lo}, {hi}) must be ordered and >= 1")
        if self.n_taps_kept < 1 or self.n_taps_kept > self.n_cir:
            raise ConfigError(
                f"n_taps_kept must be in [1, n_cir={self.n_cir}], got {self.n_taps_kept}"
            )
        if self.floor_db >= 0:
            raise ConfigError(f"floor_db must be negative, got {self.floor_db}")


def _to_int(s):
    return int(s, 0) if isinstance(s, str) else int(s)


def _to_bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# section -> key -> (converter, default); None default means required
_SCHEMA = {
    "experiment": {
        "bandwidth_hz": (float, 10e6),
        "cell_id": (_to_int, 42),
        "n_train_spots": (_to_int, None),
        "n_test_spots": (_to_int, None),
        "frames_per_spot_min": (_to_int, 100),
        "frames_per_spot_max": (_to_int, 200),
        "master_seed": (_to_int, 1),
    },
    "scenario": {
        "kind": (str, None),
        "range_min_m": (float, None),
        "range_max_m": (float, None),
        "n_extra_taps": (_to_int, 3),
        "excess_delay_mean_s": (float, 300e-9),
        "tap_decay_db_per_us": (float, 13.0),
        "los_suppression_db": (float, 0.0),
        "shadowing_sigma_db": (float, 7.0),
        "snr_db": (float, 15.0),
        "cfo_min_hz": (float, -200.0),
        "cfo_max_hz": (float, 200.0),
        "path_loss_exponent": (float, 3.0),
        "ref_loss_db_at_1m": (float, 40.0),
    },
    "image": {
        "n_cir": (_to_int, 128),
        "n_taps_kept": (_to_int, 64),
        "floor_db": (float, -130.0),
    },
    "train": {
        "epochs": (_to_int, 300),
        "batch_size": (_to_int, 256),
        "lr": (float, 1e-3),
        "seed": (_to_int, None),  # defaults to master_seed when omitted
        "shuffle": (_to_bool, True),
    },
}


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(f"{source}: {e}") from None

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
            conv = _SCHEMA[section][key][0]
            try:
                values[(section, key)] = conv(raw)
            except ValueError as e:
                raise ConfigError(f"{source}: bad value for {key} in [{section}]: {e}") from None
    for section, keys in _SCHEMA.items():
        for key, (_, default) in keys.items():
            if (section, key) not in values:
                if default is None and not (section == "train" and key == "seed"):
                    raise ConfigError(f"{source}: missing required key {key} in [{section}]")
                values[(section, key)] = default

    def get(section, key):
        return values[(section, key)]

    try:
        scenario = ScenarioConfig(
            kind=get("scenario", "kind"),
            range_interval_m=(get("scenario", "range_min_m"), get("scenario", "range_max_m")),
            n_extra_taps=get("scenario", "n_extra_taps"),
            excess_delay_mean_s=get("scenario", "excess_delay_mean_s"),
            tap_decay_db_per_us=get("scenario", "tap_decay_db_per_us"),
            los_suppression_db=get("scenario", "los_suppression_db"),
            shadowing_sigma_db=get("scenario", "shadowing_sigma_db"),
            snr_db=get("scenario", "snr_db"),
            cfo_range_hz=(get("scenario", "cfo_min_hz"), get("scenario", "cfo_max_hz")),
            path_loss_exponent=get("scenario", "path_loss_exponent"),
            ref_loss_db_at_1m=get("scenario", "ref_loss_db_at_1m"),
        )
    except ValueError as e:
        raise ConfigError(f"{source}: [scenario] {e}") from None
    master_seed = get("experiment", "master_seed")
    train_seed = get("train", "seed")
    train = TrainConfig(
        epochs=get("train", "epochs"),
        batch_size=get("train", "batch_size"),
        lr=get("train", "lr"),
        seed=master_seed if train_seed is None else train_seed,
        shuffle=get("train", "shuffle"),
    )
    return ExperimentConfig(
        bandwidth_hz=get("experiment", "bandwidth_hz"),
        cell_id=get("experiment", "cell_id"),
        n_train_spots=get("experiment", "n_train_spots"),
        n_test_spots=get("experiment", "n_test_spots"),
        frames_per_spot=(
            get("experiment", "frames_per_spot_min"),
            get("experiment", "frames_per_spot_max"),
        ),
        master_seed=master_seed,
        scenario=scenario,
        n_cir=get("image", "n_cir"),
        n_taps_kept=get("image", "n_taps_kept"),
        floor_db=get("image", "floor_db"),
        train=train,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}") from None
    return parse_config(text, source=str(path))


def render_config(cfg: ExperimentConfig) -> str:
    """Canonical text form of a config (used in dataset manifests)."""
    s = cfg.scenario
    lines = [
        "[experiment]",
        f"bandwidth_hz = {cfg.bandwidth_hz!r}",
        f"cell_id = {cfg.cell_id}",
        f"n_train_spots = {cfg.n_train_spots}",
        f"n_test_spots = {cfg.n_test_spots}",
        f"frames_per_spot_min = {cfg.frames_per_spot[0]}",
        f"frames_per_spot_max = {cfg.frames_per_spot[1]}",
        f"master_seed = {cfg.master_seed}",
        "",
        "[scenario]",
        f"kind = {s.kind}",
        f"range_min_m = {s.range_interval_m[0]!r}",
        f"range_max_m = {s.range_interval_m[1]!r}",
        f"n_extra_taps = {s.n_extra_taps}",
        f"excess_delay_mean_s = {s.excess_delay_mean_s!r}",
        f"tap_decay_db_per_us = {s.tap_decay_db_per_us!r}",
        f"los_suppression_db = {s.los_suppression_db!r}",
        f"shadowing_sigma_db = {s.shadowing_sigma_db!r}",
        f"snr_db = {s.snr_db!r}",
        f"cfo_min_hz = {s.cfo_range_hz[0]!r}",
        f"cfo_max_hz = {s.cfo_range_hz[1]!r}",
        f"path_loss_exponent = {s.path_loss_exponent!r}",
        f"ref_loss_db_at_1m = {s.ref_loss_db_at_1m!r}",
        "",
        "[image]",
        f"n_cir = {cfg.n_cir}",
        f"n_taps_kept = {cfg.n_taps_kept}",
        f"floor_db = {cfg.floor_db!r}",
        "",
        "[train]",
        f"epochs = {cfg.train.epochs}",
        f"batch_size = {cfg.train.batch_size}",
        f"lr = {cfg.train.lr!r}",
        f"seed = {cfg.train.seed}",
        f"shuffle = {str(cfg.train.shuffle).lower()}",
        "",
    ]
    return "\n".join(lines)
