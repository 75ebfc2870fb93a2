"""Tests for spectra, autocorrelation, and the classical detector."""

import numpy as np
import pytest

from mfskmodem.analysis import (
    autocorrelation,
    classical_demod,
    classical_demod_batch,
    classical_demodulator,
    energy_spectrum,
)
from mfskmodem.signal import SYNC, Waveform, apply_awgn, synthesize_symbol, tone_bin
from mfskmodem.theory import esn0_to_snr, ser_noncoherent_mfsk


class TestEnergySpectrum:
    def test_parseval_on_tone(self, full_profile):
        w = synthesize_symbol(full_profile, 11, phase=0.3)
        spectrum = energy_spectrum(w)
        assert spectrum.bin_energies.sum() == pytest.approx(np.sum(w.samples**2), rel=1e-6)
        assert spectrum.bin_energies.size == full_profile.symbol_len // 2 + 1

    def test_parseval_on_noise(self, rng):
        w = Waveform(rng.standard_normal(1024), 8000.0)
        spectrum = energy_spectrum(w)
        assert spectrum.bin_energies.sum() == pytest.approx(np.sum(w.samples**2), rel=1e-6)

    def test_bin_aligned_tone_concentrates(self, reduced_profile):
        w = synthesize_symbol(reduced_profile, 4, phase=1.7)
        spectrum = energy_spectrum(w)
        peak = spectrum.peak_bin()
        assert peak == tone_bin(reduced_profile, 4)
        others = np.delete(spectrum.bin_energies, peak)
        assert others.max() <= 1e-9 * spectrum.bin_energies[peak]

    def test_dc_input_lands_in_bin_zero(self):
        spectrum = energy_spectrum(Waveform(np.full(256, 0.5), 1000.0))
        assert spectrum.peak_bin() == 0
        assert spectrum.bin_energies[1:].max() <= 1e-12

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError, match="power of two"):
            energy_spectrum(Waveform(np.ones(100), 1000.0))

    def test_sync_tone_visible_at_minus_20_but_not_minus_25(self, full_profile):
        # Qualitative reproduction of the ESD pair: the sync bin dominates
        # at -20 dB, while at -25 dB the noise floor takes over for most
        # seeds.  Fixed seeds keep both statistical claims stable.
        clean = synthesize_symbol(full_profile, SYNC, phase=0.2)
        noisy = apply_awgn(clean, -20.0, 2500.0, np.random.default_rng(3), signal_power=0.5)
        assert energy_spectrum(noisy).peak_bin() == full_profile.sync_bin

        misses = 0
        for seed in range(10):
            noisy = apply_awgn(clean, -25.0, 2500.0, np.random.default_rng(seed),
                               signal_power=0.5)
            if energy_spectrum(noisy).peak_bin() != full_profile.sync_bin:
                misses += 1
        assert misses > 0


class TestAutocorrelation:
    def test_lag_zero_is_one(self, rng):
        w = Waveform(rng.standard_normal(500), 1000.0)
        acf = autocorrelation(w, 10)
        assert acf[0] == pytest.approx(1.0, rel=1e-12)

    def test_tone_period_peaks(self, reduced_profile):
        # Bin 64 of a 512-sample window is fs/8: an exact 8-sample period.
        w = synthesize_symbol(reduced_profile, 3, phase=0.0)
        bin_index = tone_bin(reduced_profile, 3)
        assert bin_index == 64
        acf = autocorrelation(w, 20)
        assert acf[8] == pytest.approx(1.0, abs=0.03)
        assert acf[8] > acf[7] and acf[8] > acf[9]

    def test_white_noise_decorrelates(self):
        n = 32768
        w = Waveform(np.random.default_rng(17).standard_normal(n), 8000.0)
        acf = autocorrelation(w, 50)
        assert np.max(np.abs(acf[1:])) < 5.0 / np.sqrt(n)

    def test_max_lag_out_of_range(self, rng):
        w = Waveform(rng.standard_normal(64), 1000.0)
        with pytest.raises(ValueError, match="max_lag"):
            autocorrelation(w, 64)
        with pytest.raises(ValueError, match="max_lag"):
            autocorrelation(w, -1)

    def test_zero_waveform_rejected(self):
        with pytest.raises(ValueError, match="all-zero"):
            autocorrelation(Waveform(np.zeros(32), 1000.0), 4)


class TestClassicalDemod:
    def test_noiseless_exhaustive_and_phase_invariant(self, full_profile):
        for phase in (0.0, 1.234, 4.5):
            batch = np.stack([
                synthesize_symbol(full_profile, s, phase=phase).samples
                for s in range(full_profile.tone_count)
            ])
            assert np.array_equal(classical_demod_batch(full_profile, batch),
                                  np.arange(full_profile.tone_count))

    def test_all_zero_input_breaks_ties_low(self, full_profile):
        w = Waveform(np.zeros(full_profile.symbol_len) + 0.0, 11025.0)
        # Waveform requires non-empty; zeros are fine.
        assert classical_demod(full_profile, w) == 0

    def test_length_mismatch_rejected(self, full_profile):
        with pytest.raises(ValueError, match="symbol_len"):
            classical_demod(full_profile, Waveform(np.ones(100), 11025.0))

    def test_monte_carlo_tracks_theory(self, full_profile):
        # Fast sanity version of the theory/simulation triangle (the
        # acceptance suite runs the 50k-symbol, 3-sigma variant).
        n = 4000
        esn0 = 10.0
        snr = esn0_to_snr(full_profile, esn0)
        rng = np.random.default_rng(21)
        labels = rng.integers(0, 64, n)
        errors = 0
        demod = classical_demodulator(full_profile)
        for lo in range(0, n, 500):
            sel = slice(lo, lo + 500)
            batch = np.stack([
                synthesize_symbol(full_profile, int(s), phase=p).samples
                for s, p in zip(labels[sel], rng.uniform(0, 2 * np.pi, 500))
            ])
            noisy = np.stack([
                apply_awgn(Waveform(row, 11025.0), snr, 2500.0, rng,
                           signal_power=0.5).samples
                for row in batch
            ])
            errors += int(np.sum(demod(noisy) != labels[sel]))
        p_theory = ser_noncoherent_mfsk(64, esn0)
        stderr = np.sqrt(p_theory * (1 - p_theory) / n)
        assert abs(errors / n - p_theory) < 5 * stderr
