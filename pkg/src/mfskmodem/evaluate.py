"""Confusion-matrix metrics, SER/BER sweeps with theory overlays, and the
per-symbol latency benchmark.

Demodulators are callables mapping a (num_symbols, symbol_len) sample
array to an integer tone-index array; see analysis.classical_demodulator
and nn.model_demodulator for the two provided ones.
"""

import time
from dataclasses import dataclass

import numpy as np

from .signal import ModemProfile, noise_variance
from .theory import ser_noncoherent_mfsk, ser_to_ber, snr_to_ebn0

SER_CSV_HEADER = "snr_db,ser,stderr,n"
BER_CSV_HEADER = "snr_db,ebn0_db,ber_measured,ber_from_ser,ber_theory,n"

# Symbols synthesized per chunk during sweeps; large enough to keep the
# FFT/model batched, small enough to stay memory-light at symbol_len 4096.
_CHUNK = 2048


@dataclass
class ConfusionMatrix:
    """M x M counts; rows are true classes, columns predictions."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise ValueError("counts must be a square matrix")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @classmethod
    def empty(cls, classes: int) -> "ConfusionMatrix":
        return cls(np.zeros((classes, classes), dtype=np.int64))

    @property
    def classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def accumulate(cm: ConfusionMatrix, true: int, predicted: int) -> ConfusionMatrix:
    """Count one (true, predicted) pair; mutates and returns ``cm``."""
    m = cm.classes
    if not (0 <= true < m and 0 <= predicted < m):
        raise ValueError(f"indices must lie in [0, {m})")
    cm.counts[true, predicted] += 1
    return cm


def accumulate_many(cm: ConfusionMatrix, true, predicted) -> ConfusionMatrix:
    true = np.asarray(true)
    predicted = np.asarray(predicted)
    m = cm.classes
    if np.any((true < 0) | (true >= m)) or np.any((predicted < 0) | (predicted >= m)):
        raise ValueError(f"indices must lie in [0, {m})")
    np.add.at(cm.counts, (true, predicted), 1)
    return cm


@dataclass
class MetricsReport:
    """Per-class and averaged classification metrics plus SER/BER.

    Per-class: recall = diag/rowsum, precision = diag/colsum, error rate =
    (FP + FN)/total.  Macro averages skip zero-support classes (a class
    with support but no predictions contributes precision 0).  Micro
    averages pool counts; for single-label multiclass that makes micro
    recall, micro precision, and accuracy the same number.

    BER comes in two flavours because bit errors can be counted directly
    (XOR of the natural binary labels) or inferred from the SER via the
    orthogonal-signaling relation; both are reported.
    """

    accuracy: float
    ser: float
    ber_measured: float
    ber_from_ser: float
    macro_accuracy: float
    macro_recall: float
    macro_precision: float
    macro_error_rate: float
    micro_accuracy: float
    micro_recall: float
    micro_precision: float
    micro_error_rate: float
    class_accuracy: np.ndarray
    class_recall: np.ndarray
    class_precision: np.ndarray
    class_error_rate: np.ndarray
    class_support: np.ndarray

    def to_text(self) -> str:
        """Flat key=value document, one metric per line."""
        lines = []
        for key in ("accuracy", "ser", "ber_measured", "ber_from_ser",
                    "macro_accuracy", "macro_recall", "macro_precision",
                    "macro_error_rate", "micro_accuracy", "micro_recall",
                    "micro_precision", "micro_error_rate"):
            lines.append(f"{key}={getattr(self, key):.10g}")
        for i in range(self.class_recall.size):
            lines.append(f"class_{i}_support={int(self.class_support[i])}")
            lines.append(f"class_{i}_accuracy={self.class_accuracy[i]:.10g}")
            lines.append(f"class_{i}_recall={self.class_recall[i]:.10g}")
            lines.append(f"class_{i}_precision={self.class_precision[i]:.10g}")
            lines.append(f"class_{i}_error_rate={self.class_error_rate[i]:.10g}")
        return "\n".join(lines) + "\n"


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Derive every report metric from the confusion matrix alone."""
    total = cm.total
    if total == 0:
        raise ValueError("confusion matrix is empty")
    m = cm.classes
    if m < 2 or m & (m - 1):
        raise ValueError("class count must be a power of two (tone alphabet)")
    counts = cm.counts
    diag = np.diag(counts).astype(np.float64)
    row = counts.sum(axis=1).astype(np.float64)
    col = counts.sum(axis=0).astype(np.float64)

    with np.errstate(invalid="ignore", divide="ignore"):
        recall = np.where(row > 0, diag / np.where(row > 0, row, 1), np.nan)
        precision = np.where(col > 0, diag / np.where(col > 0, col, 1), 0.0)
    false_neg = row - diag
    false_pos = col - diag
    error_rate = (false_neg + false_pos) / total

    support_mask = row > 0
    accuracy = float(diag.sum() / total)
    ser = 1.0 - accuracy

    k = m.bit_length() - 1
    xor = np.bitwise_xor.outer(np.arange(m), np.arange(m))
    bit_weight = np.array([int(v).bit_count() for v in range(m)], dtype=np.int64)
    bit_errors = float((counts * bit_weight[xor]).sum())
    ber_measured = bit_errors / (k * total)

    return MetricsReport(
        accuracy=accuracy,
        ser=ser,
        ber_measured=ber_measured,
        ber_from_ser=ser_to_ber(m, ser),
        macro_accuracy=float(np.mean(1.0 - error_rate[support_mask])),
        macro_recall=float(np.mean(recall[support_mask])),
        macro_precision=float(np.mean(precision[support_mask])),
        macro_error_rate=float(np.mean(error_rate[support_mask])),
        micro_accuracy=accuracy,
        micro_recall=accuracy,
        micro_precision=accuracy,
        micro_error_rate=ser,
        class_accuracy=1.0 - error_rate,
        class_recall=recall,
        class_precision=precision,
        class_error_rate=error_rate,
        class_support=row.astype(np.int64),
    )


# ---------------------------------------------------------------------------
# Monte-Carlo sweeps


@dataclass
class SerPoint:
    snr_db: float
    ser: float
    stderr: float
    n: int


@dataclass
class BerPoint:
    snr_db: float
    ebn0_db: float
    ber_measured: float
    ber_from_ser: float
    ber_theory: float
    n: int
    ser: float


def _synthesize_chunk(profile: ModemProfile, labels, phases, snr_db, rng):
    """Noisy unit-amplitude symbol windows for the given labels/phases."""
    n = profile.symbol_len
    bins = profile.sync_bin + profile.tone_offset + labels
    angles = (2.0 * np.pi / n) * bins[:, None] * np.arange(n)[None, :] + phases[:, None]
    x = np.sin(angles)
    var = noise_variance(0.5, snr_db, profile.sample_rate_hz, profile.ref_bandwidth_hz)
    x += rng.normal(0.0, np.sqrt(var), x.shape)
    return x


def _run_point(demod, profile, snr_db, n_symbols, rng):
    """(symbol errors, bit errors) over n_symbols fresh random symbols."""
    m = profile.tone_count
    labels = rng.integers(0, m, n_symbols)
    phases = rng.uniform(0.0, 2.0 * np.pi, n_symbols)
    symbol_errors = 0
    bit_errors = 0
    for lo in range(0, n_symbols, _CHUNK):
        sel = slice(lo, min(lo + _CHUNK, n_symbols))
        x = _synthesize_chunk(profile, labels[sel], phases[sel], snr_db, rng)
        predicted = np.asarray(demod(x))
        mismatch = predicted != labels[sel]
        symbol_errors += int(mismatch.sum())
        xor = np.bitwise_xor(predicted, labels[sel])
        bit_errors += int(sum(int(v).bit_count() for v in xor[mismatch]))
    return symbol_errors, bit_errors


def sweep_ser(demod, profile: ModemProfile, snr_points, n_per_point: int, seed: int):
    """Monte-Carlo symbol error rate at each SNR point.

    Each point runs on its own substream (seed, point index), so points
    are independent and the sweep parallelizes without changing content.
    """
    if n_per_point < 1:
        raise ValueError("n_per_point must be >= 1")
    rows = []
    for i, snr_db in enumerate(snr_points):
        rng = np.random.default_rng([seed, i])
        errors, _ = _run_point(demod, profile, snr_db, n_per_point, rng)
        p = errors / n_per_point
        rows.append(SerPoint(float(snr_db), p,
                             float(np.sqrt(p * (1.0 - p) / n_per_point)), n_per_point))
    return rows


def sweep_ber(demod, profile: ModemProfile, snr_points, n_per_point: int, seed: int):
    """Monte-Carlo bit error rate with the SER-converted and theory columns.

    Measured BER counts bit mismatches under the natural binary mapping;
    the theory column evaluates the non-coherent orthogonal-MFSK limit at
    the point's Eb/N0.  Every row satisfies BER <= SER <= k*BER exactly
    (each symbol error flips between 1 and k bits).
    """
    if n_per_point < 1:
        raise ValueError("n_per_point must be >= 1")
    k = profile.bits_per_symbol
    m = profile.tone_count
    rows = []
    for i, snr_db in enumerate(snr_points):
        rng = np.random.default_rng([seed, i])
        symbol_errors, bit_errors = _run_point(demod, profile, snr_db, n_per_point, rng)
        ser = symbol_errors / n_per_point
        ber = bit_errors / (k * n_per_point)
        ebn0 = snr_to_ebn0(profile, float(snr_db))
        theory = ser_to_ber(m, ser_noncoherent_mfsk(m, ebn0 + 10.0 * np.log10(k)))
        assert ber <= ser + 1e-15 and ser <= k * ber + 1e-15
        rows.append(BerPoint(float(snr_db), ebn0, ber, ser_to_ber(m, ser),
                             theory, n_per_point, ser))
    return rows


def write_ser_csv(rows, destination) -> None:
    _write_csv(destination, SER_CSV_HEADER,
               (f"{r.snr_db:.6g},{r.ser:.10g},{r.stderr:.10g},{r.n}" for r in rows))


def write_ber_csv(rows, destination) -> None:
    _write_csv(destination, BER_CSV_HEADER,
               (f"{r.snr_db:.6g},{r.ebn0_db:.6g},{r.ber_measured:.10g},"
                f"{r.ber_from_ser:.10g},{r.ber_theory:.10g},{r.n}" for r in rows))


def _write_csv(destination, header, lines):
    text = header + "\n" + "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8") as handle:
            handle.write(text)


# ---------------------------------------------------------------------------
# Latency benchmark


@dataclass
class LatencyReport:
    mean_s: float
    p50_s: float
    p99_s: float
    real_time: bool
    n: int
    symbol_interval_s: float


def bench_latency(demod, profile: ModemProfile, n_symbols: int,
                  warmup: int = 100, seed: int = 0) -> LatencyReport:
    """Wall-clock per single-symbol demodulation, batch size 1.

    ``real_time`` compares the mean against the symbol interval N/fs
    (0.3715 s for the full profile).  ``warmup`` extra calls run first and
    are excluded from the statistics.
    """
    if n_symbols < 100:
        raise ValueError("n_symbols must be >= 100 for stable percentiles")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, profile.tone_count, n_symbols)
    phases = rng.uniform(0.0, 2.0 * np.pi, n_symbols)
    n = profile.symbol_len
    bins = profile.sync_bin + profile.tone_offset + labels
    windows = np.sin((2.0 * np.pi / n) * bins[:, None] * np.arange(n)[None, :]
                     + phases[:, None])

    for i in range(min(warmup, n_symbols)):
        demod(windows[i % n_symbols][None, :])
    elapsed = np.empty(n_symbols)
    for i in range(n_symbols):
        start = time.perf_counter()
        demod(windows[i][None, :])
        elapsed[i] = time.perf_counter() - start

    interval = profile.symbol_duration_s
    mean = float(elapsed.mean())
    return LatencyReport(mean, float(np.percentile(elapsed, 50)),
                         float(np.percentile(elapsed, 99)), mean < interval,
                         n_symbols, interval)
