import subprocess
import sys

import pytest

from burkholder import cli
from burkholder.cli import Report, run

FAST = ["--paths", "50", "--dt", "0.01"]


def _run_to(tmp_path, name, argv):
    out = tmp_path / name
    code = run(argv + ["--out", str(out)])
    return code, out.read_bytes()


def _header(data: bytes) -> dict:
    lines = data.decode().splitlines()
    return dict(l[2:].split("=", 1) for l in lines if l.startswith("# "))


@pytest.mark.parametrize("argv", [
    ["simulate"],
    ["decompose", "--m", "2", "--p", "1", "--c", "1"],
    ["scan", "--c-steps", "3"],
    ["stopping", "--rule", "abshit", "--cap", "2"],
    ["drift", "--delta", "0.1"],
    ["bdg", "--p", "1", "--rule", "maxhit", "--cap", "2"],
    ["balayage", "--psi", "all"],
    ["localtime"],
])
def test_commands_succeed_and_are_byte_deterministic(tmp_path, argv):
    code1, a = _run_to(tmp_path, "a.csv", argv + FAST)
    code2, b = _run_to(tmp_path, "b.csv", argv + FAST)
    assert code1 == code2 == 0
    assert a == b
    assert a.startswith(b"# command=" + argv[0].encode())


def test_worker_count_does_not_change_output(tmp_path):
    argv = ["decompose", "--paths", "40", "--dt", "0.01"]
    _, one = _run_to(tmp_path, "one.csv", argv + ["--workers", "1"])
    _, two = _run_to(tmp_path, "two.csv", argv + ["--workers", "2"])
    assert one == two


def test_flags_override_config_file(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# settings\npaths = 30\nseed = 4\ndt=0.02\n")
    code, data = _run_to(tmp_path, "o.csv", ["simulate", "--config", str(conf), "--paths", "20"])
    assert code == 0
    h = _header(data)
    assert h["paths"] == "20"
    assert h["seed"] == "4"
    assert float(h["dt"]) == 0.02


def test_reported_horizon_is_the_simulated_one(tmp_path):
    _, data = _run_to(tmp_path, "o.csv", ["stopping", "--rule", "fixed", "--cap", "2"] + FAST)
    assert float(_header(data)["horizon"]) == 2.0


@pytest.mark.parametrize("argv", [
    ["bdg", "--p", "3"],
    ["simulate", "--paths", "0"],
    ["simulate", "--dt", "-1"],
    ["scan", "--m", "2", "--p", "2"],
    ["stopping", "--rule", "sometimes"],
    ["decompose", "--m", "1.5"],
    ["balayage", "--psi", "cosine"],
    ["simulate", "--dt", "abc"],
])
def test_configuration_errors_exit_2(argv, capsys):
    assert run(argv) == 2
    assert "burkholder:" in capsys.readouterr().err


def test_unknown_config_key_exits_2(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("colour = blue\n")
    assert run(["simulate", "--config", str(conf)]) == 2


def test_unwritable_output_exits_2(tmp_path):
    assert run(["simulate", "--out", str(tmp_path / "missing" / "x.csv")] + FAST) == 2


def test_failed_check_exits_1(monkeypatch, tmp_path):
    monkeypatch.setitem(cli.COMMANDS, "simulate", lambda cfg: Report(["x"], [[1.0]], passed=False))
    assert _run_to(tmp_path, "o.csv", ["simulate"])[0] == 1


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "burkholder.cli", "simulate", "--paths", "10",
                           "--dt", "0.1", "--checkpoints", "2"], capture_output=True, text=True)
    assert proc.returncode == 0
    rows = [l for l in proc.stdout.splitlines() if not l.startswith("#")]
    assert rows[0].startswith("t,mean_w")
    assert len(rows) == 3
