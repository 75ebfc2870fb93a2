"""Tone plan, MFSK symbol/frame synthesis, and the calibrated AWGN channel.

Tone frequencies are snapped to the DFT bin grid of the symbol window
(bin width ``sample_rate / symbol_len``), so every data tone completes an
integer number of cycles per symbol and the alphabet is exactly orthogonal
over one window.  For the full profile the sync tone lands on bin 472 =
1270.46 Hz, a hair under the nominal 1270.5 Hz.

SNR convention: noise is white over the full Nyquist band, and the quoted
SNR is signal power over the noise power falling inside the reference
bandwidth ``ref_bandwidth_hz`` (2500 Hz for the full profile).  A
non-coherent detector reads only the tone bins, so full-band white noise
gives the same per-bin statistics as band-limited noise at equal in-band
power.  ``lowpass`` is available for figure reproduction but is not part
of the synthesis path.
"""

from dataclasses import dataclass

import numpy as np

# A transmission frame is this many symbol intervals (sync + data mixed
# per the caller's pattern; the schedule itself is accepted as input).
FRAME_INTERVALS = 126

# Marker accepted wherever a tone is expected, selecting the sync tone.
SYNC = "sync"

# measure_snr saturates here instead of returning +inf on a zero residual.
SNR_SATURATION_DB = 300.0


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ModemProfile:
    """Protocol constants for one MFSK profile.

    Attributes:
        sample_rate_hz: sampling rate fs.
        symbol_len: samples per symbol window (power of two).
        tone_count: size M of the data-tone alphabet (power of two).
        sync_bin: DFT bin index of the synchronizing tone.
        tone_offset: bin offset of data tone 0 above the sync bin.
        ref_bandwidth_hz: reference bandwidth B for the SNR convention.
    """

    sample_rate_hz: float
    symbol_len: int
    tone_count: int
    sync_bin: int
    tone_offset: int
    ref_bandwidth_hz: float

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.ref_bandwidth_hz <= 0:
            raise ValueError("ref_bandwidth_hz must be positive")
        if not _is_pow2(self.symbol_len):
            raise ValueError(f"symbol_len must be a power of two, got {self.symbol_len}")
        if not _is_pow2(self.tone_count):
            raise ValueError(f"tone_count must be a power of two, got {self.tone_count}")
        if self.sync_bin < 0 or self.tone_offset < 0:
            raise ValueError("sync_bin and tone_offset must be non-negative")
        top_bin = self.sync_bin + self.tone_offset + self.tone_count - 1
        if top_bin >= self.symbol_len / 2:
            raise ValueError(
                f"highest data tone (bin {top_bin}) is at or above Nyquist "
                f"(bin {self.symbol_len // 2})"
            )

    @property
    def bits_per_symbol(self) -> int:
        """Information bits per data tone, log2(tone_count)."""
        return self.tone_count.bit_length() - 1

    @property
    def bin_width_hz(self) -> float:
        """DFT bin spacing of the symbol window, fs / N."""
        return self.sample_rate_hz / self.symbol_len

    @property
    def symbol_duration_s(self) -> float:
        return self.symbol_len / self.sample_rate_hz


@dataclass
class Waveform:
    """A real-valued sample sequence tagged with its sample rate."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must all be finite")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def mean_power(self) -> float:
        return float(np.mean(self.samples**2))


def tone_bin(profile: ModemProfile, tone) -> int:
    """DFT bin index for ``tone``: an integer in [0, tone_count) or SYNC."""
    if isinstance(tone, str):
        if tone == SYNC:
            return profile.sync_bin
        raise ValueError(f"unknown tone marker {tone!r}")
    index = int(tone)
    if not 0 <= index < profile.tone_count:
        raise ValueError(
            f"tone index {index} out of range [0, {profile.tone_count})"
        )
    return profile.sync_bin + profile.tone_offset + index


def tone_frequency(profile: ModemProfile, tone) -> float:
    """Frequency in Hz of a data tone or the sync tone.

    Always an exact integer multiple of the bin width, hence orthogonal to
    every other tone of the profile over one symbol window.
    """
    return tone_bin(profile, tone) * profile.bin_width_hz


def synthesize_symbol(profile: ModemProfile, tone, phase: float = 0.0,
                      amplitude: float = 1.0) -> Waveform:
    """One symbol interval of ``tone``: amplitude*sin(2*pi*f*n/fs + phase).

    Because the tone is bin-aligned the window holds an integer number of
    cycles and the mean power is exactly amplitude**2 / 2 (up to rounding).
    """
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    b = tone_bin(profile, tone)
    n = np.arange(profile.symbol_len)
    # 2*pi*f*n/fs reduces to 2*pi*b*n/N for a bin-aligned tone.
    x = amplitude * np.sin(2.0 * np.pi * b * n / profile.symbol_len + phase)
    return Waveform(x, profile.sample_rate_hz)


def synthesize_frame(profile: ModemProfile, pattern, amplitude: float = 1.0,
                     phase: float = 0.0, rng: np.random.Generator | None = None) -> Waveform:
    """Concatenate FRAME_INTERVALS symbol waveforms per ``pattern``.

    Each pattern entry is either SYNC or a data-tone index.  When ``rng``
    is given, each interval gets an independent phase drawn uniformly from
    [0, 2*pi); otherwise ``phase`` is used for every interval (phase
    continuity across intervals is not modeled).
    """
    pattern = list(pattern)
    if len(pattern) != FRAME_INTERVALS:
        raise ValueError(
            f"pattern must have {FRAME_INTERVALS} intervals, got {len(pattern)}"
        )
    pieces = []
    for entry in pattern:
        p = phase if rng is None else rng.uniform(0.0, 2.0 * np.pi)
        pieces.append(synthesize_symbol(profile, entry, p, amplitude).samples)
    return Waveform(np.concatenate(pieces), profile.sample_rate_hz)


def noise_variance(signal_power: float, snr_db: float, sample_rate_hz: float,
                   ref_bandwidth_hz: float) -> float:
    """Per-sample variance of full-band white noise hitting ``snr_db``.

    The SNR is signal power over the noise power inside the reference
    bandwidth; white noise of variance v spreads v * B / (fs/2) into a
    band of width B, so v = P_s * (fs/2) / (B * 10**(snr/10)).
    """
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    if signal_power <= 0:
        raise ValueError("signal power must be positive")
    return signal_power * (sample_rate_hz / 2.0) / (ref_bandwidth_hz * 10.0 ** (snr_db / 10.0))


def apply_awgn(waveform: Waveform, snr_db: float, ref_bandwidth_hz: float,
               rng: np.random.Generator, signal_power: float | None = None) -> Waveform:
    """Add white Gaussian noise calibrated to ``snr_db`` in the reference band.

    ``signal_power`` defaults to the waveform's mean square.  Variates come
    from numpy's Generator.normal (ziggurat), so the output is bit-identical
    for a given seeded ``rng``.
    """
    if signal_power is None:
        signal_power = waveform.mean_power()
    var = noise_variance(signal_power, snr_db, waveform.sample_rate_hz, ref_bandwidth_hz)
    noisy = waveform.samples + rng.normal(0.0, np.sqrt(var), waveform.samples.size)
    return Waveform(noisy, waveform.sample_rate_hz)


def measure_snr(noisy: Waveform, clean: Waveform, ref_bandwidth_hz: float) -> float:
    """Reference-bandwidth SNR in dB of ``noisy`` against the known ``clean``.

    Inverse of the apply_awgn convention: the residual's variance is scaled
    by B / (fs/2) before the ratio.  Saturates at SNR_SATURATION_DB instead
    of returning +inf when the residual (or its variance) vanishes.
    """
    if len(noisy) != len(clean):
        raise ValueError("noisy and clean waveforms must have equal length")
    if noisy.sample_rate_hz != clean.sample_rate_hz:
        raise ValueError("noisy and clean waveforms must share a sample rate")
    clean_power = clean.mean_power()
    if clean_power == 0.0:
        raise ValueError("clean reference has zero power")
    residual = noisy.samples - clean.samples
    var = float(np.var(residual))
    if var == 0.0:
        return SNR_SATURATION_DB
    snr = 10.0 * np.log10(
        clean_power / (var * ref_bandwidth_hz / (clean.sample_rate_hz / 2.0))
    )
    return float(min(snr, SNR_SATURATION_DB))


def bits_to_symbols(bits, profile: ModemProfile) -> np.ndarray:
    """Pack bits (MSB first) into tone indices, k = bits_per_symbol at a time."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.ndim != 1:
        raise ValueError("bits must be 1-D")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    k = profile.bits_per_symbol
    if bits.size % k != 0:
        raise ValueError(f"bit count {bits.size} not divisible by {k}")
    weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    return bits.reshape(-1, k) @ weights


def symbols_to_bits(symbols, profile: ModemProfile) -> np.ndarray:
    """Unpack tone indices into bits, MSB first.  Exact inverse of bits_to_symbols."""
    symbols = np.asarray(symbols, dtype=np.int64)
    if symbols.ndim != 1:
        raise ValueError("symbols must be 1-D")
    if np.any((symbols < 0) | (symbols >= profile.tone_count)):
        raise ValueError(f"symbols must lie in [0, {profile.tone_count})")
    k = profile.bits_per_symbol
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    return ((symbols[:, None] >> shifts) & 1).reshape(-1)


def lowpass(waveform: Waveform, cutoff_hz: float) -> Waveform:
    """Brick-wall low-pass: zero every DFT bin strictly above ``cutoff_hz``.

    Provided for figure reproduction only; the synthesis/dataset path keeps
    noise full-band (see module docstring).
    """
    if cutoff_hz <= 0:
        raise ValueError("cutoff_hz must be positive")
    spectrum = np.fft.rfft(waveform.samples)
    freqs = np.fft.rfftfreq(waveform.samples.size, d=1.0 / waveform.sample_rate_hz)
    spectrum[freqs > cutoff_hz] = 0.0
    return Waveform(np.fft.irfft(spectrum, n=waveform.samples.size), waveform.sample_rate_hz)
