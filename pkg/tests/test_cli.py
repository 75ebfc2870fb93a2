"""End-to-end tests of the command-line interface (in-process main())."""

import hashlib

import numpy as np
import pytest

from mfskmodem.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_report(path):
    values = {}
    for line in path.read_text().strip().split("\n"):
        key, value = line.split("=", 1)
        values[key] = float(value)
    return values


class TestSynth:
    def test_deterministic_digests(self, tmp_path, capsys):
        args = ["synth", "--profile", "reduced-m8", "--count", "20",
                "--snr", "-15..-5", "--seed", "4"]
        code_a, out_a, _ = run(capsys, *args, "--out", str(tmp_path / "a.dset"))
        code_b, out_b, _ = run(capsys, *args, "--out", str(tmp_path / "b.dset"))
        assert code_a == code_b == 0
        assert out_a.split("sha256=")[1] == out_b.split("sha256=")[1]
        assert (tmp_path / "a.dset").read_bytes() == (tmp_path / "b.dset").read_bytes()

    def test_digest_matches_file(self, tmp_path, capsys):
        out_file = tmp_path / "c.dset"
        code, out, _ = run(capsys, "synth", "--profile", "reduced-m8", "--count", "5",
                           "--snr", "-9", "--seed", "1", "--out", str(out_file))
        assert code == 0
        assert "records=5" in out
        digest = out.strip().split("sha256=")[1]
        assert digest == hashlib.sha256(out_file.read_bytes()).hexdigest()

    def test_zero_count_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            main(["synth", "--count", "0", "--snr", "-9",
                  "--out", str(tmp_path / "x.dset")])
        assert excinfo.value.code == 2

    def test_malformed_snr_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            main(["synth", "--count", "5", "--snr", "notanumber",
                  "--out", str(tmp_path / "x.dset")])
        assert excinfo.value.code == 2

    def test_missing_seed_is_derived_and_printed(self, tmp_path, capsys):
        code, out, _ = run(capsys, "synth", "--profile", "reduced-m8", "--count", "2",
                           "--snr", "-9", "--out", str(tmp_path / "y.dset"))
        assert code == 0
        assert "seed=" in out

    def test_unknown_profile_is_config_error(self, tmp_path, capsys):
        code, _, err = run(capsys, "synth", "--profile", "nope", "--count", "2",
                           "--snr", "-9", "--out", str(tmp_path / "z.dset"))
        assert code == 2
        assert "unknown profile" in err


class TestAnalyze:
    def test_noiseless_tone_has_single_dominant_bin(self, tmp_path, capsys):
        prefix = str(tmp_path / "tone")
        code, out, _ = run(capsys, "analyze", "--profile", "reduced-m8",
                           "--tone", "3", "--seed", "2", "--out-prefix", prefix)
        assert code == 0
        assert "esd_peak_bin=64" in out  # sync bin 59 + offset 2 + tone 3
        assert (tmp_path / "tone_esd.csv").exists()
        assert (tmp_path / "tone_waveform.csv").exists()
        assert (tmp_path / "tone_autocorr.csv").exists()

    def test_sync_tone_at_minus_20_peaks_on_sync_bin(self, tmp_path, capsys):
        prefix = str(tmp_path / "sync")
        code, out, _ = run(capsys, "analyze", "--sync", "--snr-db", "-20",
                           "--seed", "3", "--out-prefix", prefix)
        assert code == 0
        assert "esd_peak_bin=472" in out

    def test_dataset_record_source(self, tmp_path, capsys):
        dataset = tmp_path / "in.dset"
        run(capsys, "synth", "--profile", "reduced-m8", "--count", "3",
            "--snr", "-9", "--seed", "5", "--out", str(dataset))
        code, out, _ = run(capsys, "analyze", "--profile", "reduced-m8",
                           "--dataset", str(dataset), "--index", "1",
                           "--out-prefix", str(tmp_path / "rec"))
        assert code == 0
        assert "record=1" in out

    def test_bad_index_fails(self, tmp_path, capsys):
        dataset = tmp_path / "in.dset"
        run(capsys, "synth", "--profile", "reduced-m8", "--count", "3",
            "--snr", "-9", "--seed", "5", "--out", str(dataset))
        code, _, err = run(capsys, "analyze", "--profile", "reduced-m8",
                           "--dataset", str(dataset), "--index", "99",
                           "--out-prefix", str(tmp_path / "rec"))
        assert code == 1
        assert "out of range" in err


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A small trained model plus the noiseless dataset it trained on."""
    root = tmp_path_factory.mktemp("pipeline")
    train_set = root / "train.dset"
    weights = root / "model.weights"
    log = root / "train.csv"
    assert main(["synth", "--profile", "reduced-m8", "--count", "400",
                 "--snr", "25", "--seed", "6", "--out", str(train_set)]) == 0
    assert main(["train", "--profile", "reduced-m8", "--dataset", str(train_set),
                 "--epochs", "3", "--seed", "1", "--out-weights", str(weights),
                 "--out-log", str(log)]) == 0
    return root, train_set, weights, log


class TestTrainAndDemod:
    def test_log_csv_shape(self, workspace):
        _, _, _, log = workspace
        lines = log.read_text().strip().split("\n")
        assert lines[0] == "epoch,loss,accuracy,seconds"
        assert len(lines) == 4  # header + 3 epochs
        assert lines[1].startswith("1,")

    def test_classical_demod_noiseless_is_perfect(self, workspace, tmp_path, capsys):
        _, train_set, _, _ = workspace
        report = tmp_path / "classical.report"
        code, out, _ = run(capsys, "demod", "--profile", "reduced-m8", "--classical",
                           "--dataset", str(train_set), "--out-report", str(report))
        assert code == 0
        values = parse_report(report)
        assert values["accuracy"] == 1.0
        assert values["ser"] == 0.0

    def test_model_demod_emits_metrics_and_confusion(self, workspace, tmp_path, capsys):
        _, train_set, weights, _ = workspace
        report = tmp_path / "model.report"
        confusion = tmp_path / "confusion.csv"
        code, _, _ = run(capsys, "demod", "--profile", "reduced-m8",
                         "--weights", str(weights), "--dataset", str(train_set),
                         "--out-report", str(report), "--out-confusion", str(confusion))
        assert code == 0
        values = parse_report(report)
        for key in ("accuracy", "macro_recall", "micro_precision", "macro_precision",
                    "micro_recall", "class_0_recall"):
            assert key in values
        rows = confusion.read_text().strip().split("\n")
        assert len(rows) == 8
        total = sum(int(v) for row in rows for v in row.split(","))
        assert total == 400

    def test_trained_model_beats_chance_easily(self, workspace, tmp_path, capsys):
        _, train_set, weights, _ = workspace
        report = tmp_path / "model2.report"
        code, _, _ = run(capsys, "demod", "--profile", "reduced-m8",
                         "--weights", str(weights), "--dataset", str(train_set),
                         "--out-report", str(report))
        assert code == 0
        assert parse_report(report)["accuracy"] > 0.5


class TestSweep:
    def test_ser_sweep_csv(self, tmp_path, capsys):
        out = tmp_path / "ser.csv"
        code, _, _ = run(capsys, "sweep", "--profile", "reduced-m8", "--classical",
                         "--mode", "ser", "--snr", "-12,-10", "--n", "500",
                         "--seed", "3", "--out", str(out))
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "snr_db,ser,stderr,n"
        assert len(lines) == 3

    def test_ber_sweep_csv_with_theory_column(self, tmp_path, capsys):
        out = tmp_path / "ber.csv"
        code, _, _ = run(capsys, "sweep", "--profile", "reduced-m8", "--classical",
                         "--mode", "ber", "--snr", "-14:-10:2", "--n", "500",
                         "--seed", "3", "--out", str(out))
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "snr_db,ebn0_db,ber_measured,ber_from_ser,ber_theory,n"
        assert len(lines) == 4


class TestTheory:
    def test_curve_csv_with_chance_row(self, tmp_path, capsys):
        out = tmp_path / "theory.csv"
        code, _, _ = run(capsys, "theory", "--m", "64",
                         "--ebn0", "chance,-2,0,2,4", "--out", str(out))
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "ebn0_db,ser,ber"
        chance = lines[1].split(",")
        assert chance[0] == "chance"
        assert float(chance[1]) == pytest.approx(63 / 64)
        assert float(chance[2]) == pytest.approx(0.5)
        bers = [float(line.split(",")[2]) for line in lines[1:]]
        assert all(a >= b for a, b in zip(bers, bers[1:]))

    def test_binary_matches_closed_form(self, tmp_path, capsys):
        out = tmp_path / "m2.csv"
        code, _, _ = run(capsys, "theory", "--m", "2", "--ebn0", "0,3,6",
                         "--out", str(out))
        assert code == 0
        for line in out.read_text().strip().split("\n")[1:]:
            ebn0, ser, ber = (float(v) for v in line.split(","))
            gamma = 10 ** (ebn0 / 10)  # k = 1 for binary
            assert ser == pytest.approx(0.5 * np.exp(-gamma / 2), rel=1e-9)
            assert ber == pytest.approx(ser, rel=1e-12)


class TestBench:
    def test_minimum_count_is_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["bench", "--classical", "--n", "99"])
        assert excinfo.value.code == 2

    def test_classical_reduced_is_real_time(self, capsys):
        code, out, _ = run(capsys, "bench", "--profile", "reduced-m8",
                           "--classical", "--n", "150")
        assert code == 0
        assert "real_time=true" in out


class TestProfilesFile:
    def test_custom_profile_loads(self, tmp_path, capsys):
        config = tmp_path / "profiles.ini"
        config.write_text(
            "[desk-m4]\n"
            "sample_rate_hz = 8000\n"
            "symbol_len = 256\n"
            "tone_count = 4\n"
            "sync_bin = 20\n"
            "tone_offset = 2\n"
            "ref_bandwidth_hz = 1000\n"
            "conv_filters = 8\n"
            "conv_kernel = 8\n"
            "hidden_units = 8\n"
        )
        out_file = tmp_path / "d.dset"
        code, out, _ = run(capsys, "--profiles-file", str(config), "synth",
                           "--profile", "desk-m4", "--count", "3", "--snr", "-5",
                           "--seed", "2", "--out", str(out_file))
        assert code == 0
        assert "records=3" in out

    def test_missing_keys_rejected(self, tmp_path, capsys):
        config = tmp_path / "profiles.ini"
        config.write_text("[broken]\nsample_rate_hz = 8000\n")
        code, _, err = run(capsys, "--profiles-file", str(config), "synth",
                           "--profile", "broken", "--count", "1", "--snr", "-5",
                           "--out", str(tmp_path / "e.dset"))
        assert code == 2
        assert "missing keys" in err
