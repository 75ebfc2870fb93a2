"""Spectral and correlation analysis plus the classical non-coherent detector.

The classical baseline demodulates a symbol window by taking the DFT
magnitude at each of the M data-tone bins and picking the largest: matched
non-coherent detection on the orthogonal tone grid.  It achieves the
closed-form limit for non-coherent orthogonal MFSK and anchors every
Monte-Carlo acceptance check in this package.
"""

from dataclasses import dataclass

import numpy as np

from .signal import ModemProfile, Waveform, _is_pow2


@dataclass
class Spectrum:
    """One-sided energy spectrum: energy per DFT bin plus the bin width."""

    bin_energies: np.ndarray
    bin_width_hz: float

    @property
    def frequencies_hz(self) -> np.ndarray:
        return np.arange(self.bin_energies.size) * self.bin_width_hz

    def peak_bin(self) -> int:
        return int(np.argmax(self.bin_energies))


def energy_spectrum(waveform: Waveform) -> Spectrum:
    """Energy spectral density over the waveform's DFT bins.

    Input length must be a power of two (exact-length FFT, no window
    function, no zero padding).  Bin energies satisfy Parseval: their sum
    equals the time-domain energy sum(x**2).
    """
    n = len(waveform)
    if not _is_pow2(n):
        raise ValueError(f"waveform length {n} is not a power of two")
    spectrum = np.fft.rfft(waveform.samples)
    energies = np.abs(spectrum) ** 2 / n
    # One-sided: interior bins carry the energy of both DFT halves.
    energies[1:-1] *= 2.0
    return Spectrum(energies, waveform.sample_rate_hz / n)


def autocorrelation(waveform: Waveform, max_lag: int) -> np.ndarray:
    """Biased sample autocorrelation for lags 0..max_lag, normalized to r[0] = 1."""
    n = len(waveform)
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must be in [0, {n}), got {max_lag}")
    x = waveform.samples
    # FFT-based full autocorrelation; pad to the next power of two >= 2n.
    size = 1 << int(2 * n - 1).bit_length()
    spectrum = np.fft.rfft(x, size)
    r = np.fft.irfft(spectrum * np.conj(spectrum), size)[: max_lag + 1]
    if r[0] == 0.0:
        raise ValueError("autocorrelation of an all-zero waveform is undefined")
    return r / r[0]


def data_bin_magnitudes(profile: ModemProfile, batch: np.ndarray) -> np.ndarray:
    """DFT magnitudes at the M data-tone bins for a batch of symbol windows.

    ``batch`` has shape (num_symbols, symbol_len); returns (num_symbols, M).
    """
    batch = np.atleast_2d(np.asarray(batch))
    if batch.shape[-1] != profile.symbol_len:
        raise ValueError(
            f"window length {batch.shape[-1]} != symbol_len {profile.symbol_len}"
        )
    lo = profile.sync_bin + profile.tone_offset
    spectrum = np.fft.rfft(batch, axis=-1)
    return np.abs(spectrum[:, lo : lo + profile.tone_count])


def classical_demod(profile: ModemProfile, waveform: Waveform) -> int:
    """Most-likely data tone of one symbol window, non-coherently detected.

    Argmax over the data-bin magnitudes; ties break toward the lowest tone
    index (so an all-zero input decodes as tone 0).
    """
    if len(waveform) != profile.symbol_len:
        raise ValueError(
            f"waveform length {len(waveform)} != symbol_len {profile.symbol_len}"
        )
    magnitudes = data_bin_magnitudes(profile, waveform.samples[None, :])
    return int(np.argmax(magnitudes[0]))


def classical_demod_batch(profile: ModemProfile, batch: np.ndarray) -> np.ndarray:
    """Vectorized classical_demod over (num_symbols, symbol_len) windows."""
    return np.argmax(data_bin_magnitudes(profile, batch), axis=-1)


def classical_demodulator(profile: ModemProfile):
    """Batch demodulation callable for the sweep/benchmark harness."""

    def demod(batch: np.ndarray) -> np.ndarray:
        return classical_demod_batch(profile, batch)

    return demod
