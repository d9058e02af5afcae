"""Receiver pipeline: CFO removal, OFDM demodulation, pilot-division channel
estimation, impulse-response extraction, and RSSI measurement.

Frame timing and cell identity are inputs (known to the receiver), so
"synchronization" reduces to discarding samples before the frame start.
Because timing is anchored to the transmit clock, the direct-path delay
shifts the estimated impulse response, which is what makes it
range-informative.
"""

from dataclasses import dataclass

import numpy as np

from .lte import CrsReference, Numerology, ResourceGrid, mix_frequency, subcarrier_fft_bins

CRS_BIN_SPACING = 6  # CRS occupies every 6th subcarrier


@dataclass(frozen=True)
class CfrEstimate:
    """Per-symbol pilot-division channel estimates at CRS positions."""

    cell_id: int
    symbol_indices: np.ndarray  # [n_crs_symbols]
    subcarrier_indices: np.ndarray  # [n_crs_symbols, n_crs_per_symbol]
    values: np.ndarray  # complex [n_crs_symbols, n_crs_per_symbol]


@dataclass(frozen=True)
class CirProfile:
    """Estimated channel impulse response taps for one symbol."""

    taps: np.ndarray  # complex [n_cir]
    tap_resolution_s: float


@dataclass(frozen=True)
class CirImage:
    """Stacked per-symbol tap magnitudes, dB-scaled into [0, 1]."""

    pixels: np.ndarray  # float32 [n_crs_symbols, n_taps_kept]
    true_range_m: float = 0.0
    spot_id: int = 0
    frame_id: int = 0


def estimate_cfo(waveform: np.ndarray, numerology: Numerology) -> float:
    """Carrier frequency offset from cyclic-prefix self-correlation.

    Sums conj(cp) * tail products over every complete symbol in the waveform,
    then converts the accumulated phase: f = angle * fs / (2 pi n_fft).
    Unambiguous within +/- subcarrier_spacing / 2.
    """
    waveform = np.asarray(waveform)
    n_fft = numerology.n_fft
    if waveform.size < numerology.cp_len_first + n_fft:
        raise ValueError(
            f"waveform too short for CFO estimation: {waveform.size} samples, "
            f"need at least {numerology.cp_len_first + n_fft}"
        )
    acc = 0.0 + 0.0j
    pos = 0
    sym = 0
    while True:
        cp = numerology.cp_len(sym)
        if pos + cp + n_fft > waveform.size:
            break
        head = waveform[pos : pos + cp]
        tail = waveform[pos + n_fft : pos + n_fft + cp]
        acc += np.vdot(head, tail)  # sum conj(head) * tail
        pos += cp + n_fft
        sym += 1
    return float(np.angle(acc) * numerology.sample_rate_hz / (2.0 * np.pi * n_fft))


def remove_cfo(waveform: np.ndarray, cfo_hz: float, numerology: Numerology) -> np.ndarray:
    """Counter-rotate the waveform by the given frequency offset."""
    return mix_frequency(np.asarray(waveform), -cfo_hz, numerology.sample_rate_hz)


def ofdm_demodulate(
    waveform: np.ndarray,
    numerology: Numerology,
    frame_start: int = 0,
    cell_id: int = 0,
) -> ResourceGrid:
    """Recover the resource grid of one frame starting at frame_start.

    Per symbol: drop the CP, apply a unitary FFT, extract used subcarriers.
    """
    waveform = np.asarray(waveform)
    needed = numerology.samples_per_frame
    available = waveform.size - frame_start
    if available < needed:
        raise ValueError(
            f"insufficient samples for one frame: need {needed}, have {available} "
            f"after frame_start={frame_start}"
        )
    n_fft = numerology.n_fft
    n_sym = numerology.symbols_per_frame
    bodies = np.empty((n_sym, n_fft), dtype=np.complex128)
    pos = frame_start
    for s in range(n_sym):
        cp = numerology.cp_len(s)
        bodies[s] = waveform[pos + cp : pos + cp + n_fft]
        pos += cp + n_fft
    spectrum = np.fft.fft(bodies, axis=1, norm="ortho")
    fft_idx = subcarrier_fft_bins(numerology) % n_fft
    return ResourceGrid(cells=spectrum[:, fft_idx].T.copy(), cell_id=cell_id)


def ls_channel_estimate(grid: ResourceGrid, crs_ref: CrsReference) -> CfrEstimate:
    """Pilot-division (least-squares) channel estimate at every CRS position.

    With unit-modulus pilots, Y / X is the per-resource-element least-squares
    solution; no interpolation is performed across non-CRS subcarriers.
    """
    if grid.cell_id != crs_ref.cell_id:
        raise ValueError(f"cell_id mismatch: grid {grid.cell_id}, reference {crs_ref.cell_id}")
    raw = grid.cells[crs_ref.subcarriers, crs_ref.symbols] / crs_ref.values
    sym_indices = np.unique(crs_ref.symbols)
    n_per_symbol = crs_ref.subcarriers.size // sym_indices.size
    values = np.empty((sym_indices.size, n_per_symbol), dtype=np.complex128)
    subs = np.empty((sym_indices.size, n_per_symbol), dtype=np.intp)
    for row, s in enumerate(sym_indices):
        mask = crs_ref.symbols == s
        order = np.argsort(crs_ref.subcarriers[mask], kind="stable")
        subs[row] = crs_ref.subcarriers[mask][order]
        values[row] = raw[mask][order]
    return CfrEstimate(
        cell_id=grid.cell_id,
        symbol_indices=sym_indices,
        subcarrier_indices=subs,
        values=values,
    )


def compute_cir(
    cfr_symbol_values: np.ndarray, n_cir: int, numerology: Numerology | None = None
) -> CirProfile:
    """Impulse-response taps from one symbol's CRS-bin channel estimates.

    Zero-pads the estimates (ordered by increasing subcarrier) to n_cir and
    applies a unitary inverse DFT. Tap resolution is 1 / (n_cir * 90 kHz) at
    the default 15 kHz spacing; the unambiguous delay span is 1 / 90 kHz.
    """
    values = np.asarray(cfr_symbol_values, dtype=np.complex128)
    if n_cir < 1 or n_cir & (n_cir - 1):
        raise ValueError(f"n_cir must be a power of two, got {n_cir}")
    if n_cir < values.size:
        raise ValueError(f"n_cir={n_cir} smaller than number of CFR bins ({values.size})")
    scs = numerology.subcarrier_spacing_hz if numerology is not None else 15_000.0
    delta_f = CRS_BIN_SPACING * scs
    padded = np.zeros(n_cir, dtype=np.complex128)
    padded[: values.size] = values
    taps = np.fft.ifft(padded, norm="ortho")
    return CirProfile(taps=taps, tap_resolution_s=1.0 / (n_cir * delta_f))


def assemble_cir_image(
    profiles: list[CirProfile],
    n_taps_kept: int,
    floor_db: float,
    true_range_m: float = 0.0,
    spot_id: int = 0,
    frame_id: int = 0,
) -> CirImage:
    """Stack per-symbol tap magnitudes into a dB-scaled [0, 1] image.

    pixel = clamp((20 log10(|tap| + 1e-12) - floor_db) / (0 - floor_db), 0, 1),
    referenced to unit transmit power: absolute attenuation survives the
    normalization rather than being rescaled per image.
    """
    n_expected = 2 * 20  # CRS-bearing symbols in one frame
    if len(profiles) != n_expected:
        raise ValueError(f"expected {n_expected} profiles (one per CRS symbol), got {len(profiles)}")
    n_cir = profiles[0].taps.size
    if any(p.taps.size != n_cir for p in profiles):
        raise ValueError("profiles have mismatched tap counts")
    if n_taps_kept > n_cir:
        raise ValueError(f"n_taps_kept={n_taps_kept} exceeds n_cir={n_cir}")
    mags = np.abs(np.stack([p.taps[:n_taps_kept] for p in profiles]))
    level_db = 20.0 * np.log10(mags + 1e-12)
    pixels = np.clip((level_db - floor_db) / (0.0 - floor_db), 0.0, 1.0)
    return CirImage(
        pixels=pixels.astype(np.float32),
        true_range_m=true_range_m,
        spot_id=spot_id,
        frame_id=frame_id,
    )


def compute_rssi(waveform: np.ndarray) -> float:
    """Mean received power of the frame in dB."""
    waveform = np.asarray(waveform)
    if waveform.size == 0:
        raise ValueError("waveform is empty")
    return float(10.0 * np.log10(np.mean(np.abs(waveform) ** 2)))


def process_frame(
    waveform: np.ndarray,
    crs_ref: CrsReference,
    numerology: Numerology,
    n_cir: int = 128,
    n_taps_kept: int = 64,
    floor_db: float = -130.0,
    frame_start: int = 0,
) -> tuple[CirImage, float]:
    """Full per-frame receive chain: CFO removal through CIR image and RSSI."""
    rssi = compute_rssi(waveform)
    cfo = estimate_cfo(waveform, numerology)
    corrected = remove_cfo(waveform, cfo, numerology)
    grid = ofdm_demodulate(corrected, numerology, frame_start, cell_id=crs_ref.cell_id)
    cfr = ls_channel_estimate(grid, crs_ref)
    # all symbols' IDFTs in one batched call (equivalent to per-row compute_cir)
    n_sym, n_bins = cfr.values.shape
    if n_cir < 1 or n_cir & (n_cir - 1) or n_cir < n_bins:
        raise ValueError(f"n_cir must be a power of two >= {n_bins}, got {n_cir}")
    padded = np.zeros((n_sym, n_cir), dtype=np.complex128)
    padded[:, :n_bins] = cfr.values
    taps = np.fft.ifft(padded, axis=1, norm="ortho")
    res = 1.0 / (n_cir * CRS_BIN_SPACING * numerology.subcarrier_spacing_hz)
    profiles = [CirProfile(taps=taps[row], tap_resolution_s=res) for row in range(n_sym)]
    return assemble_cir_image(profiles, n_taps_kept, floor_db), rssi
