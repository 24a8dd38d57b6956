import json
import sys

import numpy as np
import pytest
from click.testing import CliRunner

from easr.cli import _parse_sweep, cli, main
from easr.errors import ConfigError
from easr.signal_io import (
    BdfChannel,
    BdfHeader,
    BdfRecording,
    Signal,
    read_csv,
    write_bdf,
    write_csv,
)

FS = 250.0


@pytest.fixture()
def runner():
    return CliRunner()


def make_bdf(path, seconds=12, fs=FS, labels=("Fp1", "Fp2"), seed=0):
    rng = np.random.default_rng(seed)
    spr = int(fs)
    n_records = seconds
    channels = [BdfChannel(label=label, samples_per_record=spr) for label in labels]
    header = BdfHeader(channels=channels, n_records=n_records, record_duration=1.0)
    digitals = [rng.integers(-60000, 60000, size=spr * n_records) for _ in labels]
    signals = [Signal(ch.digital_to_physical(d), fs=fs, label=ch.label)
               for ch, d in zip(channels, digitals)]
    path.write_bytes(write_bdf(BdfRecording(header=header, channels=signals,
                                            digitals=digitals)))


def write_signal_csv(path, signal):
    path.write_text(write_csv(signal))


class TestClean:
    def test_bdf_to_csv(self, runner, tmp_path):
        bdf = tmp_path / "s.bdf"
        make_bdf(bdf)
        out = tmp_path / "clean.csv"
        report = tmp_path / "report.txt"
        result = runner.invoke(cli, [
            "clean", "--input", str(bdf), "--channel", "Fp1",
            "--out", str(out), "--m", "40", "--report-out", str(report),
        ])
        assert result.exit_code == 0, result.output
        cleaned = read_csv(out.read_text(), fs=FS)
        assert len(cleaned) == int(12 * FS)
        text = report.read_text()
        assert '"m": 40' in text
        assert "total_rejected:" in text

    def test_unknown_channel_exit_2_lists_channels(self, runner, tmp_path):
        bdf = tmp_path / "s.bdf"
        make_bdf(bdf)
        result = runner.invoke(cli, [
            "clean", "--input", str(bdf), "--channel", "Cz",
            "--out", str(tmp_path / "x.csv"),
        ])
        assert result.exit_code == 2
        assert "Fp1" in result.output and "Fp2" in result.output

    def test_defaults_applied_when_flags_omitted(self, runner, tmp_path):
        csv = tmp_path / "in.csv"
        rng = np.random.default_rng(1)
        write_signal_csv(csv, Signal(rng.standard_normal(int(6 * FS)), fs=FS))
        result = runner.invoke(cli, [
            "clean", "--input", str(csv), "--fs", str(FS),
            "--out", str(tmp_path / "out.csv"),
        ])
        assert result.exit_code == 0, result.output
        assert '"m": 90' in result.output
        assert '"cutoff_k": 17.0' in result.output

    def test_missing_file_exit_2(self, runner, tmp_path):
        result = runner.invoke(cli, [
            "clean", "--input", str(tmp_path / "nope.csv"), "--fs", "250",
            "--out", str(tmp_path / "out.csv"),
        ])
        assert result.exit_code == 2

    def test_too_short_signal_exit_3(self, runner, tmp_path):
        csv = tmp_path / "in.csv"
        write_signal_csv(csv, Signal(np.random.default_rng(2).standard_normal(50),
                                     fs=FS))
        result = runner.invoke(cli, [
            "clean", "--input", str(csv), "--fs", str(FS),
            "--out", str(tmp_path / "out.csv"),
        ])
        assert result.exit_code == 3

    def test_invalid_cutoff_exit_1(self, runner, tmp_path):
        csv = tmp_path / "in.csv"
        write_signal_csv(csv, Signal(np.random.default_rng(3).standard_normal(2000),
                                     fs=FS))
        result = runner.invoke(cli, [
            "clean", "--input", str(csv), "--fs", str(FS), "--k", "-4",
            "--out", str(tmp_path / "out.csv"),
        ])
        assert result.exit_code == 1

    def test_slice_flags(self, runner, tmp_path):
        csv = tmp_path / "in.csv"
        rng = np.random.default_rng(4)
        write_signal_csv(csv, Signal(rng.standard_normal(int(10 * FS)), fs=FS))
        out = tmp_path / "out.csv"
        result = runner.invoke(cli, [
            "clean", "--input", str(csv), "--fs", str(FS), "--m", "40",
            "--start", "0", "--end", "5", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert len(read_csv(out.read_text(), fs=FS)) == int(5 * FS)

    def test_raw_output(self, runner, tmp_path):
        csv = tmp_path / "in.csv"
        rng = np.random.default_rng(5)
        write_signal_csv(csv, Signal(rng.standard_normal(int(6 * FS)), fs=FS))
        out = tmp_path / "out.f64"
        result = runner.invoke(cli, [
            "clean", "--input", str(csv), "--fs", str(FS), "--m", "40",
            "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert out.stat().st_size == int(6 * FS) * 8


class TestSimulate:
    def test_default_outputs(self, runner, tmp_path):
        result = runner.invoke(cli, ["simulate", "--outdir", str(tmp_path),
                                     "--seed", "42"])
        assert result.exit_code == 0, result.output
        contaminated = read_csv((tmp_path / "contaminated.csv").read_text(), fs=500.0)
        truth = read_csv((tmp_path / "ground_truth.csv").read_text(), fs=500.0)
        assert len(contaminated) == 30000 and len(truth) == 30000
        onset_lines = [l for l in (tmp_path / "onsets.csv").read_text().splitlines()
                       if l and not l.startswith("#")]
        assert onset_lines[0] == "onset,support_start,support_end,peak"
        assert len(onset_lines) == 7  # header + 6 blinks

    def test_seed_determinism_byte_identical(self, runner, tmp_path):
        for name in ("a", "b"):
            (tmp_path / name).mkdir()
            result = runner.invoke(cli, ["simulate", "--outdir",
                                         str(tmp_path / name), "--seed", "11"])
            assert result.exit_code == 0
        assert ((tmp_path / "a" / "contaminated.csv").read_bytes()
                == (tmp_path / "b" / "contaminated.csv").read_bytes())
        assert ((tmp_path / "a" / "onsets.csv").read_bytes()
                == (tmp_path / "b" / "onsets.csv").read_bytes())

    def test_lower_snr_larger_alpha(self, runner, tmp_path):
        alphas = {}
        for snr in ("-7", "2"):
            outdir = tmp_path / f"snr{snr}"
            result = runner.invoke(cli, ["simulate", "--outdir", str(outdir),
                                         "--snr-db", snr, "--seed", "1"])
            assert result.exit_code == 0
            alphas[snr] = float(result.output.split("alpha=")[1].split(",")[0])
        assert alphas["-7"] > alphas["2"]


class TestEvaluate:
    def test_perfect_match(self, runner, tmp_path):
        rng = np.random.default_rng(6)
        sig = Signal(rng.standard_normal(int(10 * FS)), fs=FS)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_signal_csv(a, sig)
        write_signal_csv(b, sig)
        result = runner.invoke(cli, [
            "evaluate", "--cleaned", str(a), "--ground-truth", str(b),
            "--fs", str(FS),
        ])
        assert result.exit_code == 0, result.output
        assert "rrmse_pct: 0.00" in result.output
        assert "cc: 1.0000" in result.output

    def test_missing_ground_truth_omits_rrmse(self, runner, tmp_path):
        rng = np.random.default_rng(7)
        a = tmp_path / "a.csv"
        write_signal_csv(a, Signal(rng.standard_normal(int(4 * FS)), fs=FS))
        result = runner.invoke(cli, ["evaluate", "--cleaned", str(a),
                                     "--fs", str(FS)])
        assert result.exit_code == 0, result.output
        assert "rrmse_pct: n/a" in result.output
        assert "blinks_after:" in result.output

    def test_csv_columns(self, runner, tmp_path):
        rng = np.random.default_rng(8)
        sig = Signal(rng.standard_normal(int(4 * FS)), fs=FS)
        a = tmp_path / "a.csv"
        write_signal_csv(a, sig)
        result = runner.invoke(cli, [
            "evaluate", "--cleaned", str(a), "--ground-truth", str(a),
            "--fs", str(FS), "--format", "csv", "--subject", "s1",
            "--channel-name", "Fp1",
        ])
        assert result.exit_code == 0, result.output
        lines = [l for l in result.output.splitlines() if not l.startswith("#")]
        header = lines[0].split(",")
        assert header[:4] == ["Subject", "Channel", "RRMSE (%)", "CC"]
        assert lines[1].startswith("s1,Fp1,0.00,1.0000")

    def test_json_format(self, runner, tmp_path):
        rng = np.random.default_rng(9)
        a = tmp_path / "a.csv"
        write_signal_csv(a, Signal(rng.standard_normal(int(4 * FS)), fs=FS))
        result = runner.invoke(cli, ["evaluate", "--cleaned", str(a),
                                     "--fs", str(FS), "--format", "json"])
        assert result.exit_code == 0
        doc = json.loads(result.output)
        assert doc["version"] and "band_power" in doc

    def test_length_mismatch_exit_3(self, runner, tmp_path):
        rng = np.random.default_rng(10)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_signal_csv(a, Signal(rng.standard_normal(1000), fs=FS))
        write_signal_csv(b, Signal(rng.standard_normal(999), fs=FS))
        result = runner.invoke(cli, [
            "evaluate", "--cleaned", str(a), "--ground-truth", str(b),
            "--fs", str(FS),
        ])
        assert result.exit_code == 3


class TestBench:
    def test_quick_bench(self, runner, tmp_path):
        result = runner.invoke(cli, [
            "bench", "--fs", "250", "--seed", "5", "--outdir", str(tmp_path),
            "--m", "40",
        ])
        assert result.exit_code == 0, result.output
        assert "easr" in result.output and "asr" in result.output
        assert "43.87" in result.output and "56.82" in result.output
        dump = (tmp_path / "bench_timeseries.csv").read_text().splitlines()
        assert dump[0] == "time_s,contaminated,easr_cleaned,asr_cleaned,ground_truth"
        assert len(dump) == 1 + int(60 * 250)

    def test_sweep_rows(self, runner, tmp_path):
        result = runner.invoke(cli, [
            "bench", "--fs", "250", "--seed", "5", "--sweep-snr", "0,2",
            "--no-dump", "--format", "csv", "--m", "40",
        ])
        assert result.exit_code == 0, result.output
        rows = [l for l in result.output.splitlines()
                if l.startswith(("easr,", "asr,"))]
        assert len(rows) == 4

    def test_parse_sweep(self):
        assert _parse_sweep("-7..2") == [-7.0, -6.0, -5.0, -4.0, -3.0, -2.0,
                                         -1.0, 0.0, 1.0, 2.0]
        assert _parse_sweep("0,2") == [0.0, 2.0]
        with pytest.raises(ConfigError):
            _parse_sweep("abc")


class TestConfigFile:
    def test_file_values_used_and_flags_override(self, runner, tmp_path):
        ini = tmp_path / "easr.ini"
        ini.write_text("[asr]\ncutoff_k = 5\n[embedding]\nm = 30\n")
        csv = tmp_path / "in.csv"
        rng = np.random.default_rng(11)
        write_signal_csv(csv, Signal(rng.standard_normal(int(6 * FS)), fs=FS))

        result = runner.invoke(cli, [
            "--config", str(ini), "clean", "--input", str(csv),
            "--fs", str(FS), "--out", str(tmp_path / "o1.csv"),
        ])
        assert result.exit_code == 0, result.output
        assert '"cutoff_k": 5.0' in result.output and '"m": 30' in result.output

        result = runner.invoke(cli, [
            "--config", str(ini), "clean", "--input", str(csv),
            "--fs", str(FS), "--k", "7", "--out", str(tmp_path / "o2.csv"),
        ])
        assert result.exit_code == 0, result.output
        assert '"cutoff_k": 7.0' in result.output and '"m": 30' in result.output

    def test_env_var_supplies_config(self, runner, tmp_path, monkeypatch):
        ini = tmp_path / "custom.ini"
        ini.write_text("[embedding]\nm = 25\n")
        monkeypatch.setenv("EASR_CONFIG", str(ini))
        csv = tmp_path / "in.csv"
        rng = np.random.default_rng(12)
        write_signal_csv(csv, Signal(rng.standard_normal(int(6 * FS)), fs=FS))
        result = runner.invoke(cli, [
            "clean", "--input", str(csv), "--fs", str(FS),
            "--out", str(tmp_path / "o.csv"),
        ])
        assert result.exit_code == 0, result.output
        assert '"m": 25' in result.output

    def test_unknown_section_rejected(self, runner, tmp_path):
        ini = tmp_path / "bad.ini"
        ini.write_text("[mystery]\nx = 1\n")
        result = runner.invoke(cli, ["--config", str(ini), "simulate",
                                     "--outdir", str(tmp_path)])
        assert result.exit_code != 0

    def test_missing_explicit_config_rejected(self, runner, tmp_path):
        result = runner.invoke(cli, ["--config", str(tmp_path / "none.ini"),
                                     "simulate", "--outdir", str(tmp_path)])
        assert result.exit_code != 0


class TestMainExitCodes:
    def test_usage_error_exit_1(self, monkeypatch, capsys):
        monkeypatch.setattr(sys, "argv", ["easr", "clean"])  # missing required
        with pytest.raises(SystemExit) as err:
            main()
        assert err.value.code == 1

    def test_unknown_command_exit_1(self, monkeypatch):
        monkeypatch.setattr(sys, "argv", ["easr", "frobnicate"])
        with pytest.raises(SystemExit) as err:
            main()
        assert err.value.code == 1

    def test_help_exit_0(self, monkeypatch, capsys):
        monkeypatch.setattr(sys, "argv", ["easr", "--help"])
        with pytest.raises(SystemExit) as err:
            main()
        assert err.value.code == 0
        assert "clean" in capsys.readouterr().out
