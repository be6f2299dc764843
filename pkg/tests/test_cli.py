import csv
import json
import subprocess
import sys

import pytest

from spinflip.cli import EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_OK, main

VACUUM = {
    "wire": {
        "core": {"outer_radius": 185e-6, "rel_permittivity": [1, 0]},
        "coating": {"outer_radius": 240e-6, "rel_permittivity": [1, 0]},
        "atom_distance": 50e-6,
    },
    "transition": {"frequency": 560e3, "temperature": 300},
}

PAPER = {
    "wire": {
        "core": {"outer_radius": 185e-6, "resistivity": 1.6e-8},
        "coating": {"outer_radius": 240e-6, "resistivity": 2.7e-8},
        "atom_distance": 50e-6,
    },
    "transition": {"frequency": 560e3, "temperature": 300},
}


def write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_rate_json(tmp_path, capsys):
    assert main(["rate", "--config", write(tmp_path, VACUUM), "--json"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert 6e17 <= out["result"]["lifetime"] <= 1.6e18
    assert out["input"]["transition"]["angular_factor_S2"] == 0.125
    assert out["input"]["numerics"]["rtol"] == 1e-8


def test_rate_text_echoes_input(tmp_path, capsys):
    doc = json.loads(json.dumps(PAPER))
    doc["wire"]["core"] = {"outer_radius": 185e-6, "skin_depth": 85e-6}
    doc["wire"]["coating"] = {"outer_radius": 240e-6, "skin_depth": 110e-6}
    assert main(["rate", "--config", write(tmp_path, doc)]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("# input")
    line = next(l for l in out.splitlines() if l.startswith("lifetime"))
    assert float(line.split()[1]) == pytest.approx(11.3365876226, rel=1e-8)


@pytest.mark.parametrize("mutate", [
    lambda d: d["wire"].pop("atom_distance"),
    lambda d: d["wire"]["core"].update(resistivity=-1.0),
    lambda d: d["wire"]["core"].update(colour="red"),
    lambda d: d["wire"]["core"].update(outer_radius=300e-6),
    lambda d: d.update(numerics={"n_max": "many"}),
    lambda d: d["transition"].update(temperature=-3),
])
def test_rate_config_errors(tmp_path, capsys, mutate):
    doc = json.loads(json.dumps(PAPER))
    mutate(doc)
    assert main(["rate", "--config", write(tmp_path, doc)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_unreadable_config(tmp_path):
    assert main(["rate", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["rate", "--config", str(bad)]) == EXIT_CONFIG


def test_rate_convergence_exit(tmp_path):
    doc = dict(PAPER, numerics={"max_evaluations": 50})
    assert main(["rate", "--config", write(tmp_path, doc)]) == EXIT_CONVERGENCE


def test_explicit_sweep(tmp_path):
    out = tmp_path / "s.csv"
    argv = ["sweep", "--config", write(tmp_path, VACUUM), "--param", "distance", "--from", "1e-5",
            "--to", "1e-4", "--points", "4", "--log", "--out", str(out)]
    assert main(argv) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 4
    assert float(rows[0]["value_si"]) == 1e-5 and float(rows[-1]["value_si"]) == 1e-4
    first = out.read_bytes()
    assert main(argv) == EXIT_OK
    assert out.read_bytes() == first


def test_sweep_flags_mirrored_in_config(tmp_path, capsys):
    doc = dict(VACUUM, sweep={"param": "distance", "from": 1e-5, "to": 3e-5, "points": 3})
    assert main(["sweep", "--config", write(tmp_path, doc)]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 4 and lines[0].startswith("param,value_si")
    assert float(lines[2].split(",")[1]) == pytest.approx(2e-5)


def test_sweep_with_unconverged_rows_exits_3(tmp_path, capsys):
    doc = dict(PAPER, numerics={"max_evaluations": 50})
    argv = ["sweep", "--config", write(tmp_path, doc), "--param", "distance", "--from", "1e-4",
            "--to", "2e-4", "--points", "2"]
    assert main(argv) == EXIT_CONVERGENCE
    out, err = capsys.readouterr()
    assert out.count("false") == 2 and "did not converge" in err


def test_sweep_usage_errors(tmp_path):
    assert main(["sweep", "--param", "distance", "--from", "1e-5", "--to", "1e-4"]) == EXIT_CONFIG
    assert main(["sweep", "--preset", "fig3", "--param", "distance",
                 "--config", write(tmp_path, VACUUM)]) == EXIT_CONFIG
    assert main(["sweep", "--config", write(tmp_path, VACUUM), "--param", "distance",
                 "--from", "1e-4", "--to", "1e-5"]) == EXIT_CONFIG


def test_overlay(tmp_path):
    meas = tmp_path / "meas.csv"
    meas.write_text("value_si,lifetime_s\n3e-5,4.5\n1e-4,40\n")
    out = tmp_path / "sim.csv"
    argv = ["sweep", "--config", write(tmp_path, VACUUM), "--param", "distance", "--from", "1e-5",
            "--to", "1e-4", "--points", "2", "--out", str(out), "--overlay", str(meas)]
    assert main(argv) == EXIT_OK
    rows = list(csv.DictReader((tmp_path / "sim_overlay.csv").open()))
    assert [float(r["lifetime_s"]) for r in rows] == [4.5, 40.0]
    meas.write_text("x,y\n1,2\n")
    assert main(argv) == EXIT_CONFIG


def test_overlay_from_config(tmp_path):
    meas = tmp_path / "meas.csv"
    meas.write_text("value_si,lifetime_s\n3e-5,4.5\n")
    doc = dict(VACUUM, sweep={"param": "distance", "from": 1e-5, "to": 1e-4, "points": 2,
                              "out": str(tmp_path / "cfg.csv"), "overlay": str(meas)})
    assert main(["sweep", "--config", write(tmp_path, doc)]) == EXIT_OK
    assert (tmp_path / "cfg_overlay.csv").read_text().splitlines()[1] == "3e-05,4.5"


def test_slope_command(tmp_path, capsys):
    table = tmp_path / "t.csv"
    lines = ["param,value_si,lifetime_s,gamma_free,gamma_wire,n_thermal,gamma_total,modes_used,converged"]
    for i in range(6):
        v = 1e-6 * 2 ** i
        lines.append(f"distance,{v:.12g},{(v / 1e-6) ** 4:.12g},1,1,1,1,1,true")
    table.write_text("\n".join(lines) + "\n")
    assert main(["slope", "--in", str(table), "--from", "1e-6", "--to", "1e-4"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("slope 4 ")
    assert main(["slope", "--in", str(table), "--from", "1", "--to", "2"]) == EXIT_CONFIG
    assert main(["slope", "--in", str(tmp_path / "none.csv"), "--from", "1", "--to", "2"]) == EXIT_CONFIG


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "spinflip", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "sweep" in res.stdout
    res = subprocess.run([sys.executable, "-m", "spinflip", "rate"], capture_output=True, text=True)
    assert res.returncode == 2
