import numpy as np
import pytest

from cir_ranging import lte
from cir_ranging.errors import ConfigError

NUM = lte.build_numerology(10e6)


def test_10mhz_numerology_constants():
    assert NUM.n_fft == 1024
    assert NUM.n_used_subcarriers == 600
    assert NUM.sample_rate_hz == 15.36e6
    assert (NUM.cp_len_first, NUM.cp_len_rest) == (80, 72)
    assert NUM.symbols_per_frame == 140
    assert NUM.samples_per_frame == 153600


def test_all_table_rows_self_consistent():
    for bw in (1.4e6, 3e6, 5e6, 10e6, 15e6, 20e6):
        n = lte.build_numerology(bw)
        assert n.sample_rate_hz == n.n_fft * 15_000.0
        assert n.n_used_subcarriers < n.n_fft
        # one slot is exactly 0.5 ms
        assert n.samples_per_slot == n.sample_rate_hz * 0.5e-3


def test_unsupported_bandwidth():
    with pytest.raises(ConfigError, match="unsupported bandwidth"):
        lte.build_numerology(7e6)


def test_symbol_start_offsets():
    assert NUM.symbol_start(0) == 0
    assert NUM.symbol_start(1) == 80 + 1024
    assert NUM.symbol_start(7) == NUM.samples_per_slot
    last = NUM.symbol_start(139) + NUM.cp_len(139) + NUM.n_fft
    assert last == NUM.samples_per_frame


def test_subcarrier_bins_symmetric_and_dc_free():
    bins = lte.subcarrier_fft_bins(NUM)
    assert bins.size == 600
    assert 0 not in bins
    assert bins.min() == -300 and bins.max() == 300
    assert np.all(np.diff(bins) > 0)
    np.testing.assert_array_equal(bins, -bins[::-1])


def test_crs_positions_lattice():
    # port 0: slot symbols 0 and 4, every 6th subcarrier, shifted by cell id
    for cell_id in (0, 1, 42, 503):
        k0 = lte.crs_positions(cell_id, 0, NUM)
        k4 = lte.crs_positions(cell_id, 4, NUM)
        assert k0.size == k4.size == 100
        assert k0[0] == cell_id % 6
        assert k4[0] == (3 + cell_id % 6) % 6
        assert np.all(np.diff(k0) == 6) and np.all(np.diff(k4) == 6)
    assert lte.crs_positions(42, 3, NUM).size == 0
    with pytest.raises(ValueError):
        lte.crs_positions(42, 140, NUM)


def test_crs_symbol_indices():
    syms = lte.crs_symbol_indices(NUM)
    assert syms.size == 40
    np.testing.assert_array_equal(syms[:4], [0, 4, 7, 11])
    assert syms[-1] == 137


def test_crs_sequence_unit_modulus_and_deterministic():
    a = lte.generate_crs_sequence(42, 0, 100)
    b = lte.generate_crs_sequence(42, 0, 100)
    c = lte.generate_crs_sequence(42, 4, 100)
    np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-15)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, lte.generate_crs_sequence(43, 0, 100))


def test_frame_grid_layout():
    grid = lte.build_frame_grid(42, NUM, payload_seed=5)
    assert grid.cells.shape == (600, 140)
    np.testing.assert_allclose(np.abs(grid.cells), 1.0, atol=1e-15)
    ref = lte.build_crs_reference(42, NUM)
    np.testing.assert_array_equal(grid.cells[ref.subcarriers, ref.symbols], ref.values)
    # same seed reproduces the payload, different seed does not
    again = lte.build_frame_grid(42, NUM, payload_seed=5)
    np.testing.assert_array_equal(grid.cells, again.cells)
    other = lte.build_frame_grid(42, NUM, payload_seed=6)
    assert not np.array_equal(grid.cells, other.cells)


def test_bad_cell_id():
    with pytest.raises(ValueError):
        lte.build_frame_grid(504, NUM)


def test_crs_reference_covers_all_crs_symbols():
    ref = lte.build_crs_reference(7, NUM)
    assert ref.subcarriers.size == 40 * 100
    np.testing.assert_array_equal(np.unique(ref.symbols), lte.crs_symbol_indices(NUM))


def test_modulate_preserves_per_symbol_energy():
    # unitary IFFT: each symbol body carries exactly the grid column's energy
    grid = lte.build_frame_grid(3, NUM, payload_seed=1)
    wave = lte.ofdm_modulate(grid, NUM)
    for s in (0, 1, 4, 139):
        start = NUM.symbol_start(s) + NUM.cp_len(s)
        body = wave[start : start + NUM.n_fft]
        np.testing.assert_allclose(
            np.sum(np.abs(body) ** 2), np.sum(np.abs(grid.cells[:, s]) ** 2), rtol=1e-12
        )


def test_cyclic_prefix_copies_symbol_tail():
    grid = lte.build_frame_grid(3, NUM, payload_seed=2)
    wave = lte.ofdm_modulate(grid, NUM)
    for s in (0, 1, 7):
        start = NUM.symbol_start(s)
        cp = NUM.cp_len(s)
        body = wave[start + cp : start + cp + NUM.n_fft]
        np.testing.assert_array_equal(wave[start : start + cp], body[-cp:])


def test_modulate_rejects_wrong_grid_shape():
    grid = lte.ResourceGrid(cells=np.zeros((10, 140), dtype=complex), cell_id=0)
    with pytest.raises(ValueError, match="does not match"):
        lte.ofdm_modulate(grid, NUM)


def test_mix_frequency_matches_direct_phasor():
    rng = np.random.default_rng(3)
    w = rng.standard_normal(4096) + 1j * rng.standard_normal(4096)
    for f in (-200.0, 37.5, 1234.5):
        direct = w * np.exp(2j * np.pi * f * np.arange(w.size) / NUM.sample_rate_hz)
        np.testing.assert_allclose(
            lte.mix_frequency(w, f, NUM.sample_rate_hz), direct, atol=1e-12
        )


def test_mix_frequency_zero_is_copy():
    w = np.ones(16, dtype=complex)
    out = lte.mix_frequency(w, 0.0, 1.0)
    np.testing.assert_array_equal(out, w)
    assert out is not w
    out[0] = 0
    assert w[0] == 1.0
