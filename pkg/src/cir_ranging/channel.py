"""Tapped-delay-line propagation channel with known ground truth.

A sampled channel is a short list of (delay, complex gain) taps plus a carrier
frequency offset and an SNR. The direct path sits exactly at range/c so tap
geometry carries the range information the receiver is trying to recover;
log-distance path loss with lognormal shadowing sets absolute levels so RSSI
carries (noisier) range information too.
"""

import math
from dataclasses import dataclass

import numpy as np

from .lte import Numerology, mix_frequency

SPEED_OF_LIGHT_M_S = 299_792_458.0


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the channel between eNodeB and receiver."""

    delays_s: np.ndarray  # strictly increasing, first entry = range/c in LOS
    gains: np.ndarray  # complex, same length
    cfo_hz: float
    snr_db: float
    true_range_m: float


@dataclass(frozen=True)
class ScenarioConfig:
    """Statistical description of one measurement scenario."""

    kind: str  # "LOS" or "MULTIPATH"
    range_interval_m: tuple[float, float]
    n_extra_taps: int = 3
    excess_delay_mean_s: float = 300e-9
    tap_decay_db_per_us: float = 13.0
    los_suppression_db: float = 0.0  # MULTIPATH only; >= 60 removes the direct tap
    shadowing_sigma_db: float = 7.0
    snr_db: float = 15.0
    cfo_range_hz: tuple[float, float] = (-200.0, 200.0)
    path_loss_exponent: float = 3.0
    ref_loss_db_at_1m: float = 40.0

    def __post_init__(self):
        if self.kind not in ("LOS", "MULTIPATH"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        lo, hi = self.range_interval_m
        if not (0 < lo < hi):
            raise ValueError(f"range interval must be positive and ordered, got {lo}, {hi}")
        if self.shadowing_sigma_db < 0:
            raise ValueError("shadowing_sigma_db must be >= 0")


def path_loss_db(
    range_m: float, exponent: float, ref_loss_db_at_1m: float, shadowing_db: float = 0.0
) -> float:
    """Log-distance path loss: ref + 10 n log10(d) + shadowing."""
    if range_m < 1.0:
        raise ValueError(f"range_m must be >= 1 (reference distance), got {range_m}")
    return ref_loss_db_at_1m + 10.0 * exponent * math.log10(range_m) + shadowing_db


def sample_channel(
    config: ScenarioConfig,
    range_m: float,
    rng_seed: int,
    shadowing_db: float | None = None,
) -> ChannelRealization:
    """Draw one channel realization at the given range.

    The direct tap sits at delay range/c with amplitude set by path loss; its
    phase is uniform. Extra taps have exponentially distributed excess delays
    and Rayleigh-faded gains whose mean power decays at tap_decay_db_per_us
    below the unsuppressed direct-path level. In MULTIPATH the direct tap is
    attenuated by los_suppression_db, or dropped entirely when >= 60 dB.

    Shadowing is drawn here from the seed unless the caller supplies a value;
    the harness draws it once per spot and passes it in.
    """
    lo, hi = config.range_interval_m
    if not (lo <= range_m <= hi):
        raise ValueError(f"range_m {range_m} outside interval [{lo}, {hi}]")
    rng = np.random.Generator(np.random.PCG64(rng_seed))

    if shadowing_db is None:
        shadowing_db = float(rng.normal(0.0, config.shadowing_sigma_db))
    loss_db = path_loss_db(
        range_m, config.path_loss_exponent, config.ref_loss_db_at_1m, shadowing_db
    )
    direct_amp = 10.0 ** (-loss_db / 20.0)
    direct_delay = range_m / SPEED_OF_LIGHT_M_S

    delays = [direct_delay]
    gains = [direct_amp * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))]
    if config.kind == "MULTIPATH":
        if config.los_suppression_db >= 60.0:
            delays, gains = [], []
        else:
            gains[0] *= 10.0 ** (-config.los_suppression_db / 20.0)

    for _ in range(config.n_extra_taps):
        excess = rng.exponential(config.excess_delay_mean_s)
        mean_power_db = -loss_db - config.tap_decay_db_per_us * (excess * 1e6)
        sigma = 10.0 ** (mean_power_db / 20.0)
        g = sigma * (rng.normal() + 1j * rng.normal()) / np.sqrt(2.0)
        delays.append(direct_delay + excess)
        gains.append(g)

    if not delays:
        raise ValueError(
            "configuration yields an empty tap set (direct tap removed and n_extra_taps == 0)"
        )
    delays = np.asarray(delays)
    gains = np.asarray(gains, dtype=np.complex128)
    order = np.argsort(delays, kind="stable")
    delays, gains = delays[order], gains[order]
    keep = np.concatenate([[True], np.diff(delays) > 0.0])
    if not keep.all():  # merge astronomically unlikely duplicate delays
        gains = np.add.reduceat(gains, np.flatnonzero(keep))
        delays = delays[keep]

    cfo = float(rng.uniform(*config.cfo_range_hz))
    return ChannelRealization(
        delays_s=delays,
        gains=gains,
        cfo_hz=cfo,
        snr_db=config.snr_db,
        true_range_m=range_m,
    )


def apply_channel(
    waveform: np.ndarray,
    chan: ChannelRealization,
    numerology: Numerology,
    rng_seed: int,
) -> np.ndarray:
    """Convolve with the tap set, rotate by the CFO, and add AWGN.

    Tap delays are rounded to integer samples (nearest-even at exact halves).
    The output has the input's length: delayed samples falling past the end
    are dropped and samples before the first arrival are noise-only. Noise
    power is chosen so measured signal power over noise power equals snr_db;
    snr_db = inf disables noise.
    """
    waveform = np.asarray(waveform)
    if waveform.size == 0:
        raise ValueError("waveform is empty")
    fs = numerology.sample_rate_hz
    n = waveform.size
    out = np.zeros(n, dtype=np.complex128)
    for delay, gain in zip(chan.delays_s, chan.gains):
        d = int(np.round(delay * fs))
        if d >= n:
            raise ValueError(
                f"tap delay {delay * 1e6:.3f} us exceeds waveform duration ({n / fs * 1e6:.3f} us)"
            )
        out[d:] += gain * waveform[: n - d]
    if chan.cfo_hz != 0.0:
        out = mix_frequency(out, chan.cfo_hz, fs)
    if np.isfinite(chan.snr_db):
        signal_power = float(np.mean(np.abs(out) ** 2))
        noise_power = signal_power * 10.0 ** (-chan.snr_db / 10.0)
        rng = np.random.Generator(np.random.PCG64(rng_seed))
        noise = rng.standard_normal(2 * n)  # interleaved re/im pairs
        noise *= np.sqrt(noise_power / 2.0)
        out += noise.view(np.complex128)
    return out


def true_cfr(chan: ChannelRealization, subcarrier_freqs_hz: np.ndarray) -> np.ndarray:
    """Analytic channel frequency response of the tap set.

    H(f) = sum_l gain_l exp(-j 2 pi f delay_l); the exact-arithmetic oracle
    for the receiver's pilot-division estimate.
    """
    f = np.asarray(subcarrier_freqs_hz, dtype=np.float64)
    return (chan.gains[None, :] * np.exp(-2j * np.pi * f[:, None] * chan.delays_s[None, :])).sum(
        axis=1
    )
