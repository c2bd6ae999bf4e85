import json
import subprocess
import sys

import pytest

from nls_conserve import cli
from nls_conserve.config import ConfigError, build_config, load_config, parse_flat
from nls_conserve.grid import write_field
from conftest import gaussian

SOLITON = """
grid.d = 1
grid.n = 256
grid.L = 40.0
nonlinearity.lambda = -1
nonlinearity.p = 3
initial.kind = soliton
solver.dt = 2e-3
solver.t_final = 0.2
checks = {checks}
output.json_path = {out}/reports
output.csv_path = {out}/series.csv
"""


def write_cfg(tmp_path, checks='["charge"]', extra="", name="run.cfg"):
    path = tmp_path / name
    path.write_text(SOLITON.format(checks=checks, out=tmp_path) + extra)
    return path


def test_flat_parser():
    raw = parse_flat("a.b = 1\na.c = [1, 2]\nname = soliton  # comment\n\nflag = true\n")
    assert raw == {"a": {"b": 1, "c": [1, 2]}, "name": "soliton", "flag": True}
    with pytest.raises(ConfigError):
        parse_flat("just words")


def test_json_config_equivalent(tmp_path):
    flat = load_config(write_cfg(tmp_path))
    js = tmp_path / "c.json"
    js.write_text(json.dumps({"grid": {"d": 1, "n": 256, "L": 40.0},
                              "nonlinearity": {"lambda": -1, "p": 3},
                              "initial": {"kind": "soliton"},
                              "solver": {"dt": 2e-3, "t_final": 0.2}, "checks": ["charge"]}))
    cfg = load_config(js)
    assert cfg.grid == flat.grid and cfg.nl == flat.nl and cfg.solver == flat.solver


@pytest.mark.parametrize("mutation", [
    ("nonlinearity.p = 3", "nonlinearity.p = 0.9"),
    ('checks = ["charge"]', "checks = []"),
    ('checks = ["charge"]', 'checks = ["entropy"]'),
    ("solver.t_final = 0.2", "solver.t_final = 0.2001"),
    ("initial.kind = soliton", "initial.kind = vortex"),
    ("grid.n = 256", "grid.n = 255"),
])
def test_config_errors_exit_2(tmp_path, mutation):
    text = write_cfg(tmp_path).read_text().replace(*mutation)
    bad = tmp_path / "bad.cfg"
    bad.write_text(text)
    assert cli.main(["verify", "--config", str(bad)]) == cli.EXIT_CONFIG


def test_missing_config_exit_2(tmp_path):
    assert cli.main(["verify", "--config", str(tmp_path / "nope.cfg")]) == cli.EXIT_CONFIG


def test_plane_wave_k_off_lattice(tmp_path):
    raw = {"grid": {"d": 1, "n": 64, "L": 10.0}, "nonlinearity": {"lambda": 1, "p": 3},
           "initial": {"kind": "plane_wave", "A": 1.0, "k": 0.3},
           "solver": {"dt": 0.01, "t_final": 0.1}, "checks": ["charge"]}
    with pytest.raises(ConfigError):
        build_config(raw)


def test_verify_soliton_charge(tmp_path):
    cfg = write_cfg(tmp_path)
    assert cli.main(["verify", "--config", str(cfg)]) == cli.EXIT_OK
    rep = json.loads((tmp_path / "reports" / "charge.json").read_text())
    assert rep["pass"] is True and rep["params"]["scheme"] == "strang"
    header = (tmp_path / "series.csv").read_text().splitlines()[0]
    assert header.startswith("t,charge,energy,px,potential")
    assert (tmp_path / "reports" / "run.log").exists()


def test_failing_check_exit_1(tmp_path):
    cfg = write_cfg(tmp_path, extra="tolerances.energy = 1e-18\n",
                    checks='["charge", "energy"]')
    assert cli.main(["verify", "--config", str(cfg)]) == cli.EXIT_CHECK
    rep = json.loads((tmp_path / "reports" / "energy.json").read_text())
    assert rep["pass"] is False


def test_json_is_bit_identical(tmp_path):
    cfg = write_cfg(tmp_path, checks='["charge", "virial1", "master"]')
    cli.main(["verify", "--config", str(cfg)])
    first = {p.name: p.read_bytes() for p in (tmp_path / "reports").glob("*.json")}
    cli.main(["verify", "--config", str(cfg)])
    second = {p.name: p.read_bytes() for p in (tmp_path / "reports").glob("*.json")}
    assert first == second and len(first) == 3


def test_blow_up_exit_3(tmp_path):
    path = tmp_path / "collapse.cfg"
    path.write_text(f"""
grid.d = 2
grid.n = 64
grid.L = 8.0
nonlinearity.lambda = -1
nonlinearity.p = 3
initial.kind = gaussian
initial.amplitude = 3.0
solver.dt = 2e-3
solver.t_final = 0.5
solver.store_every = 5
solver.blowup_amplitude = 10.0
checks = ["charge", "energy"]
output.json_path = {tmp_path}/out
output.csv_path = {tmp_path}/out/series.csv
""")
    assert cli.main(["verify", "--config", str(path)]) == cli.EXIT_BLOWUP
    rep = json.loads((tmp_path / "out" / "charge.json").read_text())
    assert any("blow-up" in w for w in rep["warnings"])
    assert (tmp_path / "out" / "series.csv").exists()


def test_simulate_needs_no_checks(tmp_path):
    cfg = write_cfg(tmp_path, checks="[]")
    assert cli.main(["simulate", "--config", str(cfg)]) == cli.EXIT_OK
    assert (tmp_path / "series.csv").exists()


def test_field_file_initial(tmp_path):
    from nls_conserve.grid import Grid
    g = Grid(1, 64, 20.0)
    write_field(tmp_path / "u0.txt", gaussian(g))
    raw = {"grid": {"d": 1, "n": 64, "L": 20.0}, "nonlinearity": {"lambda": 1, "p": 3},
           "initial": {"kind": "field_file", "path": "u0.txt"},
           "solver": {"dt": 0.01, "t_final": 0.1}, "checks": ["charge"]}
    cfg = build_config(raw, base_dir=tmp_path)
    assert cfg.initial_field().grid == g
    raw["grid"]["n"] = 128
    with pytest.raises(ConfigError):
        build_config(raw, base_dir=tmp_path)


def test_convergence_soliton(tmp_path):
    cfg = write_cfg(tmp_path, checks='["charge", "master"]',
                    extra="options.master_manufactured = true\n"
                          f"output.table_path = {tmp_path}/table.csv\n")
    assert cli.main(["convergence", "--config", str(cfg), "--levels", "3"]) == cli.EXIT_OK
    rows = (tmp_path / "table.csv").read_text().splitlines()
    orders = {r.split(",")[0]: r.split(",")[-1] for r in rows[1:]}
    assert orders["charge"] == "saturated"
    assert 3.7 <= float(orders["master"]) <= 4.3
    assert 1.9 <= float(orders["exact_error"]) <= 2.1
    rep = json.loads((tmp_path / "reports" / "master.json").read_text())
    assert 3.7 <= rep["measured_order"] <= 4.3


def test_convergence_free_run_saturates(tmp_path):
    text = write_cfg(tmp_path, checks='"all"').read_text()
    text = text.replace("nonlinearity.lambda = -1", "nonlinearity.lambda = 0")
    text = text.replace("initial.kind = soliton", "initial.kind = gaussian")
    path = tmp_path / "free.cfg"
    path.write_text(text + f"output.table_path = {tmp_path}/table.csv\n")
    assert cli.main(["convergence", "--config", str(path), "--levels", "3"]) == cli.EXIT_OK
    rows = (tmp_path / "table.csv").read_text().splitlines()[1:]
    assert rows and all(r.endswith(",saturated") for r in rows)


def test_convergence_needs_two_levels(tmp_path):
    cfg = write_cfg(tmp_path)
    assert cli.main(["convergence", "--config", str(cfg), "--levels", "1"]) == cli.EXIT_CONFIG


def test_list_identities_subprocess():
    out = subprocess.run([sys.executable, "-m", "nls_conserve", "list-identities"],
                         capture_output=True, text=True)
    lines = out.stdout.strip().splitlines()
    assert out.returncode == 0 and len(lines) == 12
    assert "master (Prop. prop:main)" in lines and "pseudo_conformal (pc-law)" in lines
