import io
import json
import re
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from volterra import cli
from volterra.config import EXPERIMENTS, ConfigError, load_config, parse_config

ROOT = Path(__file__).resolve().parents[1]

SMALL = """
[operator]
kind = laplacian
size = 4
[kernel]
kind = {kernel}
{extra}
[noise]
kind = power
exponent = 4
[grid]
horizon = 1.0
steps = {steps}
levels = 3
[run]
experiment = {experiment}
seed = 0
seeds = 4
ensemble = 100
yosida = 1e2, 1e3
"""


def write(tmp_path, experiment="convolution-compare", kernel="exponential", extra="", steps=400, name="small"):
    p = tmp_path / f"{name}.ini"
    p.write_text(SMALL.format(experiment=experiment, kernel=kernel, extra=extra, steps=steps))
    return p


def call(path, monkeypatch, tmp_path):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "out"))
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(path, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_minimal_config_parses():
    cfg = load_config(ROOT / "configs" / "minimal.ini")
    assert cfg.experiment == "convolution-compare"
    assert [g.steps for g in cfg.grids()] == [250, 500, 1000]
    assert cfg.seed_list == list(range(7, 17))


def test_convolution_compare_run(tmp_path, monkeypatch):
    code, out, _ = call(write(tmp_path), monkeypatch, tmp_path)
    assert code == 0, out
    target = tmp_path / "out" / "small-convolution-compare"
    summary = json.loads((target / "summary.json").read_text())
    assert summary["status"] == "passed"
    assert summary["experiments"][0]["name"] == "convolution-compare"
    assert (target / "report.txt").read_text().startswith("timestamp: ")
    header, *rows = (target / "discrepancy.csv").read_text().splitlines()
    assert header == "seed,N=100,N=200,N=400" and len(rows) == 4
    assert str(target) in out


def test_csv_values_use_17_significant_digits(tmp_path, monkeypatch):
    call(write(tmp_path), monkeypatch, tmp_path)
    target = tmp_path / "out" / "small-convolution-compare"
    rows = (target / "ws_direct.csv").read_text().splitlines()
    cells = [c for r in rows[1:] for c in r.split(",")[1:]]
    digits = [len(re.sub(r"^0+", "", re.sub(r"e.*|[-.]", "", c))) for c in cells]
    assert max(digits) == 17
    assert sum(d >= 16 for d in digits) > 0.9 * len(cells)
    assert all(f"{float(c):.17g}" == c for c in cells)


@pytest.mark.parametrize("experiment", [e for e in EXPERIMENTS if e != "all"])
def test_every_experiment_exits_zero(tmp_path, monkeypatch, experiment):
    # the regularity quorum needs grids fine enough for increments to shrink on every seed
    steps = 1600 if experiment == "regularity" else 200
    code, out, err = call(write(tmp_path, experiment=experiment, steps=steps), monkeypatch, tmp_path)
    assert code == 0, out + err
    assert "FAIL" not in out


def test_reruns_are_deterministic(tmp_path, monkeypatch):
    path = write(tmp_path, experiment="identities", steps=200)
    target = tmp_path / "out" / "small-identities"
    call(path, monkeypatch, tmp_path)
    first = {p.name: p.read_text() for p in target.iterdir()}
    call(path, monkeypatch, tmp_path)
    second = {p.name: p.read_text() for p in target.iterdir()}
    assert first.keys() == second.keys()
    for name in first:
        if name == "report.txt":
            assert first[name].split("\n", 1)[1] == second[name].split("\n", 1)[1]
        else:
            assert first[name] == second[name], name


def test_singular_kernel_reformulation_fails_with_exit_1(tmp_path, monkeypatch):
    path = write(tmp_path, kernel="fractional", extra="alpha = 0.5\nepsilon = 0", steps=200)
    code, out, err = call(path, monkeypatch, tmp_path)
    assert code == 1
    assert "a(0) undefined" in err
    summary = json.loads((tmp_path / "out" / "small-convolution-compare" / "summary.json").read_text())
    assert summary["status"] == "failed"


def test_singular_kernel_resolvent_build_still_runs(tmp_path, monkeypatch):
    path = write(tmp_path, experiment="resolvent-build", kernel="fractional", extra="alpha = 0.5\nepsilon = 0", steps=200)
    code, out, err = call(path, monkeypatch, tmp_path)
    assert code == 0, out + err


@pytest.mark.parametrize(
    "text, needle",
    [
        ("[operator\nkind=laplacian", "cannot parse"),
        (SMALL.format(experiment="nope", kernel="exponential", extra="", steps=200), "unknown experiment"),
        (SMALL.format(experiment="identities", kernel="wobbly", extra="", steps=200), "invalid spec"),
        (SMALL.format(experiment="identities", kernel="exponential", extra="", steps=201), "divisible"),
        (SMALL.format(experiment="identities", kernel="fractional", extra="alpha = 1.5", steps=200), "invalid spec"),
        ("[operator]\nkind = laplacian\nsize = 4\n", "missing section"),
    ],
)
def test_bad_configs_exit_2(tmp_path, monkeypatch, text, needle):
    p = tmp_path / "bad.ini"
    p.write_text(text)
    code, out, err = call(p, monkeypatch, tmp_path)
    assert code == 2
    assert needle in err
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file_exits_2(tmp_path, monkeypatch):
    code, _, err = call(tmp_path / "absent.ini", monkeypatch, tmp_path)
    assert code == 2 and "cannot read" in err


def test_output_dir_resolution(tmp_path, monkeypatch):
    path = write(tmp_path)
    cfg = load_config(path)
    monkeypatch.delenv(cli.OUTPUT_ENV, raising=False)
    assert cli.output_dir(cfg, path) == Path("runs") / "small-convolution-compare"
    cfg.output = "results"
    assert cli.output_dir(cfg, path) == tmp_path / "results" / "small-convolution-compare"
    monkeypatch.setenv(cli.OUTPUT_ENV, "/elsewhere")
    assert cli.output_dir(cfg, path) == Path("/elsewhere/small-convolution-compare")


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_describe(name):
    out = io.StringIO()
    assert cli.describe(name, out=out) == 0
    text = out.getvalue()
    assert text.startswith(name) and len(text) > 40


def test_describe_unknown():
    err = io.StringIO()
    assert cli.describe("bogus", err=err) == 2
    assert "unknown experiment" in err.getvalue()


def test_main_dispatch(tmp_path, monkeypatch, capsys):
    assert cli.main(["describe", "regularity"]) == 0
    assert "regularity" in capsys.readouterr().out
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "out"))
    assert cli.main(["run", str(write(tmp_path, experiment="complete-positivity", steps=200))]) == 0
    with pytest.raises(SystemExit):
        cli.main([])


def test_console_script(tmp_path):
    exe = shutil.which("volterra")
    cmd = [exe] if exe else [sys.executable, "-m", "volterra.cli"]
    proc = subprocess.run(cmd + ["describe", "all"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("all")
    proc = subprocess.run(cmd + ["describe", "nothing"], capture_output=True, text=True)
    assert proc.returncode == 2
    proc = subprocess.run(cmd + ["run", str(tmp_path / "missing.ini")], capture_output=True, text=True)
    assert proc.returncode == 2
