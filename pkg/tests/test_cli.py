import csv
import subprocess
import sys

import pytest

from delog import cli, pipeline

LOG = b"2024-01-05 12:00:01 node 0123 joined from 10.0.0.1\n" * 50


@pytest.fixture
def log(tmp_path):
    p = tmp_path / "app.log"
    p.write_bytes(LOG)
    return p


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_compress_decompress_defaults(log, tmp_path, capsys):
    assert run("compress", "-i", log, "--workers", 1) == 0
    arc = tmp_path / "app.log.dlg"
    assert arc.read_bytes().startswith(b"DLG1")
    assert "ratio" in capsys.readouterr().err
    log.unlink()
    assert run("decompress", "-i", arc, "--workers", 1) == 0
    assert log.read_bytes() == LOG


@pytest.mark.parametrize("opts", [["--mode", "delog-l"], ["--kernel", "bzip2", "--level", "1"],
                                  ["--features", "binary", "--block-lines", "7"],
                                  ["--kernel", "none"]])
def test_verify_with_options(log, capsys, opts):
    assert run("verify", "-i", log, "--workers", 1, *opts) == 0
    assert capsys.readouterr().out.startswith("OK sha256=")


def test_rules_file(log, tmp_path):
    rules = tmp_path / "r.tsv"
    rules.write_text("date\tfixed_runs\t\\d{4}-\\d{2}-\\d{2}\n")
    assert run("verify", "-i", log, "--rules", rules, "--workers", 1) == 0
    rules.write_text("broken\n")
    assert run("verify", "-i", log, "--rules", rules) == 2
    assert run("verify", "-i", log, "--rules", tmp_path / "missing") == 2


def test_stdio(tmp_path):
    cmd = [sys.executable, "-m", "delog.cli"]
    arc = subprocess.run(cmd + ["compress", "-i", "-", "-o", "-", "--workers", "1"], input=LOG,
                         capture_output=True, check=True).stdout
    out = subprocess.run(cmd + ["decompress", "-i", "-", "-o", "-"], input=arc,
                         capture_output=True, check=True).stdout
    assert out == LOG


@pytest.mark.parametrize("argv", [[], ["compress"], ["frobnicate"], ["compress", "-i", "x", "--level", "99"],
                                  ["compress", "-i", "x", "--block-lines", "0"],
                                  ["compress", "-i", "x", "--kernel", "zstd"], ["verify", "-i", "-"]])
def test_usage_errors(argv, capsys):
    assert run(*argv) == 2
    assert "delog" in capsys.readouterr().err


def test_data_errors(tmp_path, log, capsys):
    bad = tmp_path / "bad.dlg"
    bad.write_bytes(b"GZIP....")
    assert run("decompress", "-i", bad, "-o", tmp_path / "o") == 1
    err = capsys.readouterr().err
    assert "not a delog archive" in err and "Traceback" not in err
    assert not (tmp_path / "o").exists()
    assert run("compress", "-i", tmp_path / "nope.log") == 1
    # a corrupt block is named by index
    run("compress", "-i", log, "-o", tmp_path / "a.dlg", "--block-lines", 10, "--workers", 1)
    data = bytearray((tmp_path / "a.dlg").read_bytes())
    data[-5] ^= 0xFF
    (tmp_path / "a.dlg").write_bytes(bytes(data))
    capsys.readouterr()
    assert run("decompress", "-i", tmp_path / "a.dlg", "-o", tmp_path / "o") == 1
    assert "block 4" in capsys.readouterr().err


def test_verify_mismatch_exit_code(log, monkeypatch, capsys):
    real = pipeline._decompress_one

    def buggy(item, kernel):
        out = bytearray(real(item, kernel))
        out[7] ^= 0x20
        return out

    monkeypatch.setattr(pipeline, "_decompress_one", buggy)
    assert run("verify", "-i", log, "--workers", 1) == 1
    assert "MISMATCH at byte offset 7" in capsys.readouterr().err


def test_version_and_help(capsys):
    assert run("--version") == 0
    assert "delog" in capsys.readouterr().out
    assert run("--help") == 0


def test_bench(tmp_path, log, capsys):
    csv_path = tmp_path / "t.csv"
    assert run("bench", log, "--workers", 1, "--csv", csv_path) == 0
    table = capsys.readouterr().out
    assert table.splitlines()[0].startswith("| dataset | config |")
    rows = list(csv.DictReader(csv_path.open()))
    assert [r["config"] for r in rows] == ["delog+lzma", "delog-l+lzma", "lzma"]
    assert all(float(r["cr"]) > 1 for r in rows)
    assert run("bench", log, "--ablation", "--workers", 1, "--markdown", tmp_path / "m.md") == 0
    assert "[binary]" in (tmp_path / "m.md").read_text()
    assert run("bench", tmp_path / "missing") == 2


def test_console_script_installed():
    out = subprocess.run(["delog", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("delog ")
