"""LTE downlink numerology, cell-specific reference signals, and OFDM modulation.

Only the downlink structures needed by the ranging pipeline are modelled:
normal cyclic prefix, antenna port 0, one radio frame (20 slots of 7 symbols).
All DFTs are unitary so per-symbol energy is identical in the time and
frequency domains.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

SUBCARRIER_SPACING_HZ = 15_000.0
SYMBOLS_PER_SLOT = 7
SLOTS_PER_FRAME = 20
SYMBOLS_PER_FRAME = SLOTS_PER_FRAME * SYMBOLS_PER_SLOT  # 140

# CRS-bearing symbols within a slot (port 0, normal CP) and their
# frequency-shift bases.
_CRS_SLOT_SYMBOLS = {0: 0, 4: 3}

# bandwidth -> (n_fft, used subcarriers, cp length of slot symbol 0, cp of the rest)
_NUMEROLOGY_TABLE = {
    1.4e6: (128, 72, 10, 9),
    3e6: (256, 180, 20, 18),
    5e6: (512, 300, 40, 36),
    10e6: (1024, 600, 80, 72),
    15e6: (1536, 900, 120, 108),
    20e6: (2048, 1200, 160, 144),
}


@dataclass(frozen=True)
class Numerology:
    """Sampling and framing constants for one LTE bandwidth."""

    bandwidth_hz: float
    subcarrier_spacing_hz: float
    n_fft: int
    n_used_subcarriers: int
    sample_rate_hz: float
    cp_len_first: int
    cp_len_rest: int
    symbols_per_slot: int = SYMBOLS_PER_SLOT
    slots_per_frame: int = SLOTS_PER_FRAME

    @property
    def symbols_per_frame(self) -> int:
        return self.slots_per_frame * self.symbols_per_slot

    @property
    def samples_per_slot(self) -> int:
        return (self.cp_len_first + self.n_fft) + (self.symbols_per_slot - 1) * (
            self.cp_len_rest + self.n_fft
        )

    @property
    def samples_per_frame(self) -> int:
        return self.slots_per_frame * self.samples_per_slot

    def cp_len(self, symbol_index: int) -> int:
        """CP length of a frame-level symbol index."""
        return self.cp_len_first if symbol_index % self.symbols_per_slot == 0 else self.cp_len_rest

    def symbol_start(self, symbol_index: int) -> int:
        """Sample offset of a symbol (including its CP) from the frame start."""
        slot, sym = divmod(symbol_index, self.symbols_per_slot)
        off = slot * self.samples_per_slot
        for s in range(sym):
            off += self.cp_len(s) + self.n_fft
        return off


@dataclass(frozen=True)
class ResourceGrid:
    """Complex symbol matrix [n_used_subcarriers x 140] for one frame."""

    cells: np.ndarray
    cell_id: int


@dataclass(frozen=True)
class CrsReference:
    """Known CRS resource elements: (subcarrier, symbol, unit-modulus value)."""

    cell_id: int
    subcarriers: np.ndarray  # int array
    symbols: np.ndarray  # int array, same length
    values: np.ndarray  # complex array, same length


def build_numerology(bandwidth_hz: float) -> Numerology:
    """Return the standard numerology row for a supported LTE bandwidth."""
    try:
        n_fft, n_used, cp_first, cp_rest = _NUMEROLOGY_TABLE[float(bandwidth_hz)]
    except KeyError:
        valid = ", ".join(f"{bw:g}" for bw in sorted(_NUMEROLOGY_TABLE))
        raise ConfigError(
            f"unsupported bandwidth {bandwidth_hz:g} Hz; supported: {valid}"
        ) from None
    return Numerology(
        bandwidth_hz=float(bandwidth_hz),
        subcarrier_spacing_hz=SUBCARRIER_SPACING_HZ,
        n_fft=n_fft,
        n_used_subcarriers=n_used,
        sample_rate_hz=n_fft * SUBCARRIER_SPACING_HZ,
        cp_len_first=cp_first,
        cp_len_rest=cp_rest,
    )


def subcarrier_fft_bins(numerology: Numerology) -> np.ndarray:
    """Signed FFT bin index for each used subcarrier.

    Used subcarriers are centred on DC with DC itself unused: index k maps to
    bin k - n_used/2 for the lower half and k - n_used/2 + 1 for the upper.
    """
    n_used = numerology.n_used_subcarriers
    half = n_used // 2
    k = np.arange(n_used)
    return np.where(k < half, k - half, k - half + 1)


def subcarrier_frequencies_hz(numerology: Numerology) -> np.ndarray:
    """Baseband frequency of each used subcarrier."""
    return subcarrier_fft_bins(numerology) * numerology.subcarrier_spacing_hz


def crs_positions(cell_id: int, symbol_index: int, numerology: Numerology) -> np.ndarray:
    """Subcarrier indices carrying CRS in the given frame-level symbol.

    Port 0 CRS occupies slot symbols 0 and 4 on every 6th subcarrier; the
    lattice offset is (v + cell_id mod 6) mod 6 with v = 0 or 3 for the two
    symbols.
    """
    if not 0 <= symbol_index < SYMBOLS_PER_FRAME:
        raise ValueError(f"symbol_index {symbol_index} outside [0, {SYMBOLS_PER_FRAME - 1}]")
    slot_symbol = symbol_index % SYMBOLS_PER_SLOT
    if slot_symbol not in _CRS_SLOT_SYMBOLS:
        return np.empty(0, dtype=np.intp)
    v = _CRS_SLOT_SYMBOLS[slot_symbol]
    offset = (v + cell_id % 6) % 6
    return np.arange(offset, numerology.n_used_subcarriers, 6, dtype=np.intp)


def crs_symbol_indices(numerology: Numerology) -> np.ndarray:
    """Frame-level indices of all CRS-bearing symbols (40 for one frame)."""
    sym = np.arange(numerology.symbols_per_frame)
    return sym[np.isin(sym % numerology.symbols_per_slot, list(_CRS_SLOT_SYMBOLS))]


_MASK64 = (1 << 64) - 1
_QPSK = np.array(
    [1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j], dtype=np.complex128
) / np.sqrt(2.0)


def _splitmix64(seed: int, count: int) -> np.ndarray:
    """First `count` outputs of a SplitMix64 stream."""
    out = np.empty(count, dtype=np.uint64)
    state = seed & _MASK64
    for i in range(count):
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        out[i] = z ^ (z >> 31)
    return out


def generate_crs_sequence(cell_id: int, symbol_index: int, count: int) -> np.ndarray:
    """Deterministic unit-modulus QPSK pilot sequence for one CRS symbol.

    A SplitMix64 mixer seeded with (cell_id * 140 + symbol_index) supplies two
    bits per pilot. Transmitter and receiver share this generator, so any
    deterministic unit-modulus sequence preserves the pilot-division estimate.
    """
    words = _splitmix64(cell_id * SYMBOLS_PER_FRAME + symbol_index, count)
    return _QPSK[(words & 3).astype(np.intp)]


def build_crs_reference(cell_id: int, numerology: Numerology) -> CrsReference:
    """All CRS resource elements of one frame with their known values."""
    subs, syms, vals = [], [], []
    n_per_symbol = numerology.n_used_subcarriers // 6
    for s in crs_symbol_indices(numerology):
        k = crs_positions(cell_id, int(s), numerology)
        subs.append(k)
        syms.append(np.full(n_per_symbol, s, dtype=np.intp))
        vals.append(generate_crs_sequence(cell_id, int(s), n_per_symbol))
    return CrsReference(
        cell_id=cell_id,
        subcarriers=np.concatenate(subs),
        symbols=np.concatenate(syms),
        values=np.concatenate(vals),
    )


def build_frame_grid(cell_id: int, numerology: Numerology, payload_seed: int = 0) -> ResourceGrid:
    """Transmit grid for one frame: CRS pilots plus random QPSK payload.

    Every non-CRS resource element carries a seeded QPSK symbol so the frame
    has realistic, roughly constant per-symbol power.
    """
    if not 0 <= cell_id <= 503:
        raise ValueError(f"cell_id {cell_id} outside [0, 503]")
    n_used = numerology.n_used_subcarriers
    n_sym = numerology.symbols_per_frame
    rng = np.random.Generator(np.random.PCG64(payload_seed))
    cells = _QPSK[rng.integers(0, 4, size=(n_used, n_sym))]
    for s in crs_symbol_indices(numerology):
        k = crs_positions(cell_id, int(s), numerology)
        cells[k, s] = generate_crs_sequence(cell_id, int(s), k.size)
    return ResourceGrid(cells=cells, cell_id=cell_id)


def ofdm_modulate(grid: ResourceGrid, numerology: Numerology) -> np.ndarray:
    """Time-domain waveform of one frame (unitary IFFT, cyclic prefixes).

    Used subcarriers are mapped symmetrically around an unused DC bin; each
    symbol is prefixed with cp_len_first (slot symbol 0) or cp_len_rest.
    """
    n_used, n_sym = grid.cells.shape
    if n_used != numerology.n_used_subcarriers or n_sym != numerology.symbols_per_frame:
        raise ValueError(
            f"grid shape {grid.cells.shape} does not match numerology "
            f"({numerology.n_used_subcarriers}, {numerology.symbols_per_frame})"
        )
    n_fft = numerology.n_fft
    fft_idx = subcarrier_fft_bins(numerology) % n_fft
    spectrum = np.zeros((n_sym, n_fft), dtype=np.complex128)
    spectrum[:, fft_idx] = grid.cells.T
    bodies = np.fft.ifft(spectrum, axis=1, norm="ortho")

    out = np.empty(numerology.samples_per_frame, dtype=np.complex128)
    pos = 0
    for s in range(n_sym):
        cp = numerology.cp_len(s)
        body = bodies[s]
        out[pos : pos + cp] = body[-cp:]
        out[pos + cp : pos + cp + n_fft] = body
        pos += cp + n_fft
    return out


def mix_frequency(waveform: np.ndarray, freq_hz: float, sample_rate_hz: float) -> np.ndarray:
    """waveform[n] * e^{j 2 pi freq n / fs} as a new array.

    The phasor is built from two short exponential tables (e^{jwn} splits over
    n = a + b*B), avoiding a transcendental call per sample.
    """
    waveform = np.asarray(waveform)
    if freq_hz == 0.0:
        return waveform.copy()
    n = waveform.size
    w = 2.0 * np.pi * freq_hz / sample_rate_hz
    block = 512
    n_blocks = (n + block - 1) // block
    small = np.exp(1j * w * np.arange(block))
    big = np.exp((1j * w * block) * np.arange(n_blocks))
    phasor = (big[:, None] * small[None, :]).reshape(-1)[:n]
    return waveform * phasor
