"""Command-line workbench binding synthesis, analysis, training, and sweeps.

Every command is deterministic given an explicit ``--seed``; leaving it
out draws one from OS entropy and prints it so the run can be reproduced.
Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

Heavy imports happen inside the command handlers so that ``--threads``
(or the MFSKMODEM_THREADS environment variable) can pin the BLAS thread
pools before numpy first loads; ``--threads 1`` is the bit-reproducible
reference mode.
"""

import argparse
import hashlib
import math
import os
import sys

from .errors import FileFormatError


class ConfigError(Exception):
    """Bad profile name or profile file: a usage-level failure (exit 2)."""


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError("value must be >= 1")
    return value


def _bench_count(text: str) -> int:
    value = _positive_int(text)
    if value < 100:
        raise argparse.ArgumentTypeError("benchmark needs at least 100 symbols")
    return value


def _snr_spec(text: str):
    """Either a fixed SNR ("-25") or a uniform range ("-30..0"), in dB."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = float(lo), float(hi)
        else:
            lo = hi = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR spec {text!r} (use e.g. -25 or -30..0)")
    if lo > hi:
        raise argparse.ArgumentTypeError("SNR range must have lo <= hi")
    return lo, hi


def _grid(text: str):
    """Comma-separated dB values, or lo:hi:step (inclusive of hi within 1e-9)."""
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            points = []
            value = lo
            while value <= hi + 1e-9:
                points.append(round(value, 12))
                value += step
            return points
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad grid {text!r} (use e.g. -25,-20,-15 or -30:0:5)"
        )


def _theory_grid(text: str):
    """Like _grid but the token "chance" marks the zero-Es/N0 row."""
    points = []
    for piece in text.split(","):
        if piece.strip().lower() == "chance":
            points.append("chance")
        else:
            points.extend(_grid(piece))
    return points


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    seed = int.from_bytes(os.urandom(4), "little")
    print(f"seed={seed}")
    return seed


def _profile(args):
    from .profiles import get_profile

    try:
        return get_profile(args.profile, args.profiles_file)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# Command handlers


def _cmd_synth(args) -> int:
    from . import dataset as ds

    profile = _profile(args)
    seed = _resolve_seed(args)
    spec = ds.DatasetSpec(profile.modem, args.count, args.snr, seed,
                          include_sync=args.include_sync)
    with open(args.out, "wb") as handle:
        ds.write_header(handle, int(round(profile.modem.sample_rate_hz)),
                        profile.modem.symbol_len, profile.modem.tone_count,
                        spec.include_sync, spec.count)
        for i in range(spec.count):
            ds.write_record(handle, profile.modem.symbol_len,
                            ds.generate_record(spec, i))
    print(f"records={spec.count} sha256={_sha256(args.out)}")
    return 0


def _cmd_analyze(args) -> int:
    import numpy as np

    from . import dataset as ds
    from .analysis import autocorrelation, energy_spectrum
    from .signal import SYNC, Waveform, apply_awgn, lowpass, synthesize_symbol

    profile = _profile(args)
    if args.dataset is not None:
        loaded = ds.read(args.dataset)
        if not 0 <= args.index < len(loaded.records):
            raise ValueError(
                f"record index {args.index} out of range [0, {len(loaded.records)})"
            )
        record = loaded.records[args.index]
        waveform = Waveform(record.samples.astype(np.float64), loaded.sample_rate_hz)
        print(f"record={args.index} label={record.label} snr_db={record.snr_db:.2f}")
    else:
        seed = _resolve_seed(args)
        tone = SYNC if args.sync else args.tone
        rng = np.random.default_rng(seed)
        clean = synthesize_symbol(profile.modem, tone,
                                  phase=rng.uniform(0.0, 2.0 * np.pi))
        if args.snr_db is None:
            waveform = clean
        else:
            waveform = apply_awgn(clean, args.snr_db,
                                  profile.modem.ref_bandwidth_hz, rng,
                                  signal_power=0.5)
    if args.lowpass:
        waveform = lowpass(waveform, profile.modem.ref_bandwidth_hz)

    excerpt = waveform.samples if args.excerpt is None else waveform.samples[: args.excerpt]
    with open(f"{args.out_prefix}_waveform.csv", "w", encoding="utf-8") as handle:
        handle.write("sample,value\n")
        for i, value in enumerate(excerpt):
            handle.write(f"{i},{value:.10g}\n")

    spectrum = energy_spectrum(waveform)
    with open(f"{args.out_prefix}_esd.csv", "w", encoding="utf-8") as handle:
        handle.write("bin,frequency_hz,energy\n")
        for i, energy in enumerate(spectrum.bin_energies):
            handle.write(f"{i},{i * spectrum.bin_width_hz:.6f},{energy:.10g}\n")

    max_lag = min(args.max_lag, len(waveform) - 1)
    acf = autocorrelation(waveform, max_lag)
    with open(f"{args.out_prefix}_autocorr.csv", "w", encoding="utf-8") as handle:
        handle.write("lag,value\n")
        for lag, value in enumerate(acf):
            handle.write(f"{lag},{value:.10g}\n")

    print(f"esd_peak_bin={spectrum.peak_bin()}")
    return 0


def _cmd_train(args) -> int:
    from . import dataset as ds
    from .nn import TrainConfig, save_weights, train

    profile = _profile(args)
    seed = _resolve_seed(args)
    x, y = ds.data_arrays(ds.read(args.dataset))
    if x.shape[1] != profile.model.input_len:
        raise ValueError(
            f"dataset symbol_len {x.shape[1]} does not match profile "
            f"input_len {profile.model.input_len}"
        )
    cfg = TrainConfig(learning_rate=args.lr, batch_size=args.batch_size,
                      epochs=args.epochs, seed=seed)
    state, log = train(profile.model, cfg, x, y)
    save_weights(state, args.out_weights)
    with open(args.out_log, "w", encoding="utf-8") as handle:
        handle.write("epoch,loss,accuracy,seconds\n")
        for epoch, (loss, acc, sec) in enumerate(
                zip(log.loss, log.accuracy, log.seconds), start=1):
            handle.write(f"{epoch},{loss:.10g},{acc:.10g},{sec:.6g}\n")
    print(f"final_accuracy={log.accuracy[-1]:.4f} weights={args.out_weights} "
          f"sha256={_sha256(args.out_weights)}")
    return 0


def _build_demod(args, profile):
    if args.classical:
        from .analysis import classical_demodulator

        return classical_demodulator(profile.modem)
    from .nn import load_weights, model_demodulator

    return model_demodulator(load_weights(args.weights))


def _cmd_demod(args) -> int:
    import numpy as np

    from . import dataset as ds
    from .evaluate import ConfusionMatrix, accumulate_many, metrics

    profile = _profile(args)
    demod = _build_demod(args, profile)
    loaded = ds.read(args.dataset)
    x, y = ds.data_arrays(loaded)
    skipped = len(loaded.records) - y.size
    if skipped:
        print(f"skipped {skipped} sync records")

    cm = ConfusionMatrix.empty(profile.modem.tone_count)
    for lo in range(0, y.size, 1024):
        sel = slice(lo, lo + 1024)
        accumulate_many(cm, y[sel], np.asarray(demod(x[sel])))
    report = metrics(cm)
    with open(args.out_report, "w", encoding="utf-8") as handle:
        handle.write(report.to_text())
    if args.out_confusion:
        with open(args.out_confusion, "w", encoding="utf-8") as handle:
            for row in cm.counts:
                handle.write(",".join(str(v) for v in row) + "\n")
    print(f"symbols={cm.total} accuracy={report.accuracy:.4f} ser={report.ser:.4g}")
    return 0


def _cmd_sweep(args) -> int:
    from .evaluate import sweep_ber, sweep_ser, write_ber_csv, write_ser_csv

    profile = _profile(args)
    demod = _build_demod(args, profile)
    seed = _resolve_seed(args)
    if args.mode == "ser":
        rows = sweep_ser(demod, profile.modem, args.snr, args.n, seed)
        write_ser_csv(rows, args.out)
        for row in rows:
            print(f"snr_db={row.snr_db:.6g} ser={row.ser:.6g} n={row.n}")
    else:
        rows = sweep_ber(demod, profile.modem, args.snr, args.n, seed)
        k = profile.modem.bits_per_symbol
        for row in rows:
            if not (row.ber_measured <= row.ser + 1e-15
                    and row.ser <= k * row.ber_measured + 1e-15):
                print(f"error: BER/SER sanity violated at {row.snr_db} dB",
                      file=sys.stderr)
                return 1
        write_ber_csv(rows, args.out)
        for row in rows:
            print(f"snr_db={row.snr_db:.6g} ebn0_db={row.ebn0_db:.4g} "
                  f"ber={row.ber_measured:.6g} theory={row.ber_theory:.6g} n={row.n}")
    return 0


def _cmd_theory(args) -> int:
    from .theory import ser_noncoherent_mfsk, ser_noncoherent_mfsk_linear, ser_to_ber

    m = args.m
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write("ebn0_db,ser,ber\n")
        for point in args.ebn0:
            if point == "chance":
                ser = ser_noncoherent_mfsk_linear(m, 0.0)
                label = "chance"
            else:
                k = m.bit_length() - 1
                ser = ser_noncoherent_mfsk(m, point + 10.0 * math.log10(k))
                label = f"{point:.6g}"
            handle.write(f"{label},{ser:.12g},{ser_to_ber(m, ser):.12g}\n")
    print(f"wrote {len(args.ebn0)} points to {args.out}")
    return 0


def _cmd_bench(args) -> int:
    from .evaluate import bench_latency

    profile = _profile(args)
    demod = _build_demod(args, profile)
    report = bench_latency(demod, profile.modem, args.n)
    print(f"mean_s={report.mean_s:.6g} p50_s={report.p50_s:.6g} "
          f"p99_s={report.p99_s:.6g} symbol_interval_s={report.symbol_interval_s:.4f} "
          f"real_time={'true' if report.real_time else 'false'}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfskmodem",
        description="Software-defined MFSK modem workbench",
    )
    parser.add_argument("--threads", type=_positive_int, default=None,
                        help="pin BLAS thread pools (1 = bit-reproducible reference mode)")
    parser.add_argument("--profiles-file", default=None,
                        help="INI file with extra named profiles")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--profile", default="jt65a-full",
                       help="named profile (default: jt65a-full)")
        return p

    p = add("synth", _cmd_synth, "synthesize a labeled symbol dataset file")
    p.add_argument("--count", type=_positive_int, required=True)
    p.add_argument("--snr", type=_snr_spec, required=True,
                   help="fixed dB value or lo..hi uniform range")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--include-sync", action="store_true")
    p.add_argument("--out", required=True)

    p = add("analyze", _cmd_analyze, "emit waveform, ESD, and autocorrelation CSVs")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--dataset", help="dataset file to pull a record from")
    source.add_argument("--tone", type=int, help="synthesize this data tone")
    source.add_argument("--sync", action="store_true", help="synthesize the sync tone")
    p.add_argument("--index", type=int, default=0, help="record index within --dataset")
    p.add_argument("--snr-db", type=float, default=None,
                   help="add noise at this SNR (synthesis path; omit for noiseless)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--lowpass", action="store_true",
                   help="brick-wall low-pass at the reference bandwidth")
    p.add_argument("--excerpt", type=_positive_int, default=None,
                   help="limit the waveform CSV to this many samples")
    p.add_argument("--max-lag", type=_positive_int, default=400)
    p.add_argument("--out-prefix", required=True)

    p = add("train", _cmd_train, "train the CNN demodulator on a dataset file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--epochs", type=_positive_int, default=6)
    p.add_argument("--batch-size", type=_positive_int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-weights", required=True)
    p.add_argument("--out-log", required=True)

    p = add("demod", _cmd_demod, "demodulate a dataset and report metrics")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--classical", action="store_true")
    which.add_argument("--weights", help="weights file for the CNN demodulator")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-report", required=True)
    p.add_argument("--out-confusion", default=None)

    p = add("sweep", _cmd_sweep, "Monte-Carlo SER or BER sweep over SNR points")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--classical", action="store_true")
    which.add_argument("--weights")
    p.add_argument("--mode", choices=("ser", "ber"), default="ser")
    p.add_argument("--snr", type=_grid, required=True,
                   help="dB points: list (-25,-20) or range lo:hi:step")
    p.add_argument("--n", type=_positive_int, required=True,
                   help="symbols per SNR point")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("theory", help="closed-form SER/BER curve CSV")
    p.set_defaults(func=_cmd_theory)
    p.add_argument("--m", type=_positive_int, default=64, help="tone count")
    p.add_argument("--ebn0", type=_theory_grid, required=True,
                   help="Eb/N0 dB grid; the token 'chance' adds the zero-SNR row")
    p.add_argument("--out", required=True)

    p = add("bench", _cmd_bench, "per-symbol demodulation latency benchmark")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--classical", action="store_true")
    which.add_argument("--weights")
    p.add_argument("--n", type=_bench_count, default=1000,
                   help="timed symbols (minimum 100)")

    return parser


def _configure_threads(threads) -> None:
    if threads is None:
        threads = os.environ.get("MFSKMODEM_THREADS")
    if threads is None:
        return
    value = str(threads)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ[var] = value


def _join_dash_values(argv):
    """Fold "--snr -30..0" into "--snr=-30..0" so argparse does not read
    leading-dash SNR/grid values as option flags."""
    joined = []
    skip = False
    for i, token in enumerate(argv):
        if skip:
            skip = False
            continue
        if token in ("--snr", "--ebn0", "--snr-db") and i + 1 < len(argv):
            joined.append(f"{token}={argv[i + 1]}")
            skip = True
        else:
            joined.append(token)
    return joined


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    args = build_parser().parse_args(_join_dash_values(list(argv)))
    _configure_threads(args.threads)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError, FileFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
