import json
import subprocess
import sys

import pytest

from boards import pro_mini_fixture, single_trace_board, square_outline, to_excellon, to_gerber
from stretchcircuit.board import Board, Layer, Pour
from stretchcircuit.cli import (
    EXIT_DATAERR,
    EXIT_IOERR,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VIOLATIONS,
    UsageError,
    main,
    parse_command,
)
from stretchcircuit.ingest import load_native, serialize_native


@pytest.fixture
def board_file(tmp_path):
    def write(board, name="board.json"):
        p = tmp_path / name
        p.write_text(serialize_native(board), encoding="utf-8")
        return str(p)

    return write


def test_parse_check_defaults():
    cfg = parse_command(["check", "board.json"])
    assert cfg.command == "check" and cfg.inputs == ["board.json"]
    assert cfg.rules.min_trace_width == 200 and cfg.report_format == "text"


def test_parse_predict():
    cfg = parse_command(["predict", "board.json", "--net", "VCC", "--strain", "1.0"])
    assert (cfg.command, cfg.net, cfg.strain) == ("predict", "VCC", 1.0)


def test_parse_export():
    cfg = parse_command(["export", "board.json", "--material", "slacker1.5", "--out", "pkg/"])
    assert (cfg.command, cfg.material, cfg.outdir, cfg.force) == ("export", "slacker1.5", "pkg/", False)


def test_parse_rule_override_mm():
    cfg = parse_command(["check", "b.json", "--rule", "min_trace_width=0.25", "--rule", "warn_on_leaded=false"])
    assert cfg.rules.min_trace_width == 250 and cfg.rules.warn_on_leaded is False


@pytest.mark.parametrize(
    "argv",
    [[], ["frobnicate"], ["check"], ["check", "b.json", "--bogus"], ["predict", "b.json", "--strain", "-1"],
     ["check", "b.json", "--rule", "nonsense=1"], ["check", "b.json", "--rule", "min_trace_width"]],
)
def test_usage_errors(argv, capsys):
    with pytest.raises(UsageError):
        parse_command(argv)
    assert main(argv) == EXIT_USAGE


def test_config_precedence(tmp_path, monkeypatch):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"rules": {"min_trace_width": 0.3}, "material": "slacker2", "report_format": "structured"}))
    cfg = parse_command(["--config", str(conf), "export", "b.json", "--out", "o"])
    assert cfg.rules.min_trace_width == 300 and cfg.material == "slacker2" and cfg.report_format == "structured"
    cfg = parse_command(["--config", str(conf), "export", "b.json", "--out", "o", "--material", "vhb",
                         "--rule", "min_trace_width=0.2", "--format", "text"])
    assert cfg.rules.min_trace_width == 200 and cfg.material == "vhb" and cfg.report_format == "text"
    monkeypatch.setenv("STRETCHCIRCUIT_CONFIG", str(conf))
    assert parse_command(["check", "b.json"]).rules.min_trace_width == 300


def test_check_exit_codes(board_file, capsys):
    assert main(["check", board_file(pro_mini_fixture())]) == EXIT_OK
    out = capsys.readouterr().out
    assert "min_trace_width = 0.200 mm" in out and "0 error(s)" in out
    assert main(["check", board_file(single_trace_board(width=150), "bad.json")]) == EXIT_VIOLATIONS
    out = capsys.readouterr().out
    assert "0.150 mm < 0.200 mm" in out


def test_check_structured(board_file, capsys):
    assert main(["check", board_file(single_trace_board(width=150)), "--format", "structured"]) == EXIT_VIOLATIONS
    data = json.loads(capsys.readouterr().out)
    assert data["rule_set_mm"]["min_trace_width"] == 0.2
    assert data["violations"][0]["limit_mm"] == 0.2


def test_data_and_io_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert main(["check", str(bad)]) == EXIT_DATAERR
    assert main(["check", str(tmp_path / "missing.json")]) == EXIT_IOERR
    assert main(["--config", str(tmp_path / "nope.json"), "check", str(bad)]) == EXIT_IOERR


def test_predict_table(board_file, capsys):
    assert main(["predict", board_file(single_trace_board()), "--net", "SIG", "--strain", "4"]) == EXIT_OK
    out = capsys.readouterr().out
    row = next(line for line in out.splitlines() if line.startswith("SIG"))
    assert row.split()[3] == "7.00"
    assert "margin: at_risk" in out
    assert main(["predict", board_file(single_trace_board()), "--net", "NOPE"]) == EXIT_DATAERR


def test_predict_structured(board_file, capsys):
    assert main(["predict", board_file(single_trace_board()), "--strain", "0", "--format", "structured"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    (net,) = data["nets"]
    assert round(net["r0_ohm"], 3) == 0.554


def test_export_writes_and_is_deterministic(board_file, tmp_path, capsys):
    src = board_file(pro_mini_fixture())
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["export", src, "--out", str(a)]) == EXIT_OK
    assert main(["export", src, "--out", str(b)]) == EXIT_OK
    names = sorted(p.name for p in a.iterdir())
    assert len([n for n in names if n.endswith(".svg")]) == 3
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()


def test_export_refusal(board_file, tmp_path, capsys):
    src = board_file(single_trace_board(width=150))
    assert main(["export", src, "--out", str(tmp_path / "x")]) == EXIT_VIOLATIONS
    assert "refused" in capsys.readouterr().err
    assert main(["export", src, "--out", str(tmp_path / "x"), "--force"]) == EXIT_OK


def test_export_unknown_material(board_file, tmp_path):
    assert main(["export", board_file(single_trace_board()), "--out", str(tmp_path / "x"), "--material", "latex"]) == EXIT_DATAERR


def test_transform_round_trips(board_file, tmp_path, capsys):
    pour = Pour("GP", ((5000, 5000), (15000, 5000), (15000, 15000), (5000, 15000)), Layer.BOTTOM, "GND")
    src = board_file(Board("p", square_outline(20000), pours=(pour,)))
    out = tmp_path / "t.json"
    assert main(["transform", src, "--out", str(out)]) == EXIT_DATAERR
    rep = tmp_path / "rep.json"
    assert main(["transform", src, "--out", str(out), "--pour-mode", "outline_trace", "--report", str(rep)]) == EXIT_OK
    b = load_native(out.read_text())
    assert serialize_native(b) == out.read_text()
    assert len(b.traces) == 1 and b.traces[0].net == "GND"
    assert json.loads(rep.read_text())["pours_handled"] == 1


def test_materials(capsys, tmp_path):
    assert main(["materials"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Slacker 1.5" in out and "compatible" in out
    assert main(["materials", "--tack", "0.18"]) == EXIT_OK
    assert "compatible" in capsys.readouterr().out
    assert main(["materials", "--tack", "0.05", "--format", "structured"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["compatibility"] == "incompatible"
    bad = tmp_path / "p.json"
    bad.write_text('{"profiles": [{"name": "x", "tack_n": -1}]}')
    assert main(["materials", "--profiles", str(bad)]) == EXIT_DATAERR


def test_fit(tmp_path, capsys):
    c = tmp_path / "c.csv"
    c.write_text("length_m,resistance_ohm\n0.01,0.06\n0.02,0.08\n0.03,0.10\n")
    assert main(["fit", str(c), "--format", "structured"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["intercept_ohm"] == pytest.approx(0.04)
    s = tmp_path / "s.csv"
    s.write_text("strain,ratio\n4,7\n")
    assert main(["fit", str(s)]) == EXIT_OK
    assert "1.20906" in capsys.readouterr().out
    one = tmp_path / "one.csv"
    one.write_text("length_m,resistance_ohm\n0.01,0.06\n")
    assert main(["fit", str(one)]) == EXIT_DATAERR


def test_ingest(tmp_path, capsys):
    pm = pro_mini_fixture()
    (tmp_path / "top.gbr").write_text(to_gerber(pm, Layer.TOP))
    (tmp_path / "bot.gbr").write_text(to_gerber(pm, Layer.BOTTOM))
    (tmp_path / "drill.drl").write_text(to_excellon(pm))
    out = tmp_path / "pm.json"
    argv = ["ingest", "--top", str(tmp_path / "top.gbr"), "--bottom", str(tmp_path / "bot.gbr"),
            "--drill", str(tmp_path / "drill.drl"), "--outline", "42,28", "--name", "pm", "--out", str(out)]
    assert main(argv) == EXIT_OK
    b = load_native(out.read_text())
    assert len(b.vias) == 50
    assert main(["check", str(out)]) == EXIT_OK


def test_reports_identical_across_runs(board_file, capsys):
    src = board_file(pro_mini_fixture(width=180))
    main(["check", src])
    first = capsys.readouterr().out
    main(["check", src])
    assert capsys.readouterr().out == first


def test_module_entry_point(board_file):
    src = board_file(pro_mini_fixture())
    proc = subprocess.run([sys.executable, "-m", "stretchcircuit", "check", src], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
