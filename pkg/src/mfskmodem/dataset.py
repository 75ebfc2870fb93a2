"""Reproducible labeled-symbol datasets and their binary file format.

Every record is generated from its own random substream seeded by
(spec.seed, record index), so record i comes out bit-identical whether it
is generated alone, in bulk, or in parallel.  Within a record the draw
order is fixed: label, phase, then noise.

File layout (all integers little-endian):

    magic         8 bytes  "MFSKDSET"
    version       u32      1
    sample rate   u32      integer Hz
    symbol len    u32
    tone count    u16
    flags         u16      bit 0: file may contain sync records
    record count  u64
    per record:
        snr_db    f32
        label     u16      0xFFFF marks a sync-tone record
        reserved  u16      0
        samples   symbol_len * f32

Samples are stored as IEEE-754 binary32, matching the network's training
dtype and halving file size versus float64.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import InconsistencyError, MagicError, TruncationError, VersionError
from .signal import ModemProfile, SYNC, Waveform, apply_awgn, synthesize_symbol

MAGIC = b"MFSKDSET"
VERSION = 1

# Wire label marking a sync-tone record (data labels occupy [0, M)).
SYNC_LABEL = 0xFFFF

_HEADER = struct.Struct("<III HH Q")
_RECORD_HEAD = struct.Struct("<fHH")


@dataclass(frozen=True)
class DatasetSpec:
    """What to synthesize: profile, record count, SNR law, seed.

    ``snr_range`` is (lo, hi) in dB; lo == hi pins every record to one SNR.
    ``include_sync`` adds the sync tone to the label alphabet (drawn with
    the same uniform weight as each data tone).
    """

    profile: ModemProfile
    count: int
    snr_range: tuple
    seed: int
    include_sync: bool = False

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        lo, hi = self.snr_range
        if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
            raise ValueError("snr_range must be finite with lo <= hi")


@dataclass
class Record:
    """One labeled symbol window."""

    snr_db: float
    label: int
    samples: np.ndarray  # float32, length symbol_len


@dataclass
class Dataset:
    """Records plus the header fields the file format preserves."""

    sample_rate_hz: int
    symbol_len: int
    tone_count: int
    include_sync: bool
    records: list

    def __len__(self):
        return len(self.records)


def record_params(spec: DatasetSpec, index: int):
    """The (label, phase, snr_db) draws of record ``index``'s substream.

    Exposed so callers can re-derive a record's clean waveform (the stored
    samples are noisy; phase is not written to the file).
    """
    rng = _record_rng(spec, index)
    label, phase, snr_db = _draw(spec, rng)
    return label, phase, snr_db


def generate_record(spec: DatasetSpec, index: int) -> Record:
    """Generate record ``index`` alone; identical to its in-bulk twin."""
    if not 0 <= index < spec.count:
        raise ValueError(f"record index {index} out of range [0, {spec.count})")
    rng = _record_rng(spec, index)
    label, phase, snr_db = _draw(spec, rng)
    tone = SYNC if label == SYNC_LABEL else label
    clean = synthesize_symbol(spec.profile, tone, phase)
    noisy = apply_awgn(clean, snr_db, spec.profile.ref_bandwidth_hz, rng,
                       signal_power=0.5)
    return Record(snr_db, label, noisy.samples.astype(np.float32))


def clean_waveform(spec: DatasetSpec, index: int) -> Waveform:
    """The noise-free symbol underlying record ``index``."""
    label, phase, _ = record_params(spec, index)
    tone = SYNC if label == SYNC_LABEL else label
    return synthesize_symbol(spec.profile, tone, phase)


def generate(spec: DatasetSpec) -> Dataset:
    """Generate the full dataset described by ``spec``, in memory."""
    records = [generate_record(spec, i) for i in range(spec.count)]
    return Dataset(int(round(spec.profile.sample_rate_hz)), spec.profile.symbol_len,
                   spec.profile.tone_count, spec.include_sync, records)


def _record_rng(spec: DatasetSpec, index: int) -> np.random.Generator:
    return np.random.default_rng([spec.seed, index])


def _draw(spec: DatasetSpec, rng: np.random.Generator):
    # Sync, when included, is one extra equiprobable label.
    alphabet = spec.profile.tone_count + (1 if spec.include_sync else 0)
    label = int(rng.integers(0, alphabet))
    if label == spec.profile.tone_count:
        label = SYNC_LABEL
    phase = float(rng.uniform(0.0, 2.0 * np.pi))
    lo, hi = spec.snr_range
    snr_db = lo if lo == hi else float(rng.uniform(lo, hi))
    return label, phase, snr_db


# ---------------------------------------------------------------------------
# File I/O


def write(dataset: Dataset, destination) -> None:
    """Write a dataset file; round-trips bit-exactly through read()."""
    if hasattr(destination, "write"):
        _write(dataset, destination)
    else:
        with open(destination, "wb") as handle:
            _write(dataset, handle)


def _write(dataset: Dataset, handle):
    write_header(handle, dataset.sample_rate_hz, dataset.symbol_len,
                 dataset.tone_count, dataset.include_sync, len(dataset.records))
    for record in dataset.records:
        write_record(handle, dataset.symbol_len, record)


def write_header(handle, sample_rate_hz: int, symbol_len: int, tone_count: int,
                 include_sync: bool, count: int) -> None:
    """Header for streaming writers that emit records one at a time."""
    handle.write(MAGIC)
    handle.write(_HEADER.pack(VERSION, int(sample_rate_hz), symbol_len,
                              tone_count, 1 if include_sync else 0, count))


def write_record(handle, symbol_len: int, record: Record) -> None:
    samples = np.ascontiguousarray(record.samples, dtype=np.float32)
    if samples.size != symbol_len:
        raise ValueError(
            f"record has {samples.size} samples, header says {symbol_len}"
        )
    handle.write(_RECORD_HEAD.pack(record.snr_db, record.label, 0))
    handle.write(samples.tobytes())


def read(source) -> Dataset:
    """Read a dataset file fully into memory.

    Raises MagicError, VersionError, TruncationError, or InconsistencyError
    depending on how the file is malformed.
    """
    if hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as handle:
            data = handle.read()

    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise MagicError(f"not a dataset file (expected magic {MAGIC!r})")
    offset = len(MAGIC)
    if len(data) < offset + _HEADER.size:
        raise TruncationError("file ends inside the header")
    version, rate, symbol_len, tones, flags, count = _HEADER.unpack_from(data, offset)
    offset += _HEADER.size
    if version != VERSION:
        raise VersionError(f"unsupported dataset version {version}")

    record_bytes = _RECORD_HEAD.size + 4 * symbol_len
    expected_end = offset + count * record_bytes
    if len(data) < expected_end:
        raise TruncationError(
            f"header declares {count} records ({expected_end} bytes), "
            f"file has {len(data)}"
        )
    if len(data) > expected_end:
        raise InconsistencyError(
            f"{len(data) - expected_end} trailing bytes after the declared "
            f"{count} records"
        )

    records = []
    for _ in range(count):
        snr_db, label, _reserved = _RECORD_HEAD.unpack_from(data, offset)
        offset += _RECORD_HEAD.size
        samples = np.frombuffer(data, dtype="<f4", count=symbol_len, offset=offset).copy()
        offset += 4 * symbol_len
        records.append(Record(snr_db, label, samples))
    return Dataset(rate, symbol_len, tones, bool(flags & 1), records)


def label_histogram(dataset: Dataset) -> dict:
    """Exact per-label record counts; sync records keyed by SYNC_LABEL."""
    if not dataset.records:
        raise ValueError("dataset is empty")
    counts = {}
    for record in dataset.records:
        counts[record.label] = counts.get(record.label, 0) + 1
    return counts


def data_arrays(dataset: Dataset):
    """(x, y) training arrays: float32 samples and integer labels.

    Sync records are excluded; the network's output alphabet covers the
    data tones only.
    """
    keep = [r for r in dataset.records if r.label != SYNC_LABEL]
    if not keep:
        raise ValueError("dataset has no data-tone records")
    x = np.stack([r.samples for r in keep]).astype(np.float32)
    y = np.array([r.label for r in keep], dtype=np.int64)
    return x, y
