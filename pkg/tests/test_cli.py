import json
import subprocess
import sys

import pytest
import yaml

from netsync.cli import main
from netsync.io import read_split_csv
from netsync.scenarios import config_path


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestDecompose:
    def test_expmu_graph(self, tmp_path, capsys):
        code, out, _ = run(["decompose", "--config", str(config_path("expmu_unstable")), "--out", str(tmp_path)], capsys)
        assert code == 0
        assert "v_l = [0.5 0.5]" in out
        res = json.loads((tmp_path / "residuals.json").read_text())
        assert res["seed"] == 42
        assert max(res["residuals"].values()) < 1e-10
        blocks = read_split_csv(tmp_path / "split.csv")
        assert blocks["v_l"].tolist() == [0.5, 0.5]

    def test_seed_flag_recorded(self, tmp_path, capsys):
        run(["decompose", "--config", str(config_path("prop2_periodic")), "--seed", "99", "--out", str(tmp_path)], capsys)
        assert (tmp_path / "split.csv").read_text().startswith("# seed=99")


class TestErrors:
    def test_negative_weight(self, tmp_path, capsys):
        p = tmp_path / "bad.yaml"
        p.write_text(yaml.safe_dump({"graph": {"weights": [[0, 1], [-2, 0]]},
                                     "nodes": [{"model": "hopf", "params": [1, 1], "repeat": 2}]}))
        code, _, err = run(["simulate", "--config", str(p), "--out", str(tmp_path)], capsys)
        assert code == 2
        payload = json.loads(err)
        assert payload["error"] == "ValidationError"
        assert any("l[1,0]" in msg for msg in payload["problems"])

    def test_divergence_is_numerical(self, tmp_path, capsys):
        p = tmp_path / "grow.yaml"
        p.write_text(yaml.safe_dump({"graph": {"weights": [[0, 1], [1, 0]]},
                                     "nodes": [{"model": "linear", "matrix": [[1.0]], "repeat": 2}],
                                     "solver": {"t_end": 50},
                                     "ic": {"kind": "explicit", "state": [1, 1]}}))
        code, _, err = run(["simulate", "--config", str(p), "--out", str(tmp_path), "--quiet"], capsys)
        assert code == 3
        assert "diverged" in json.loads(err)["message"]

    def test_no_orbit_is_inconclusive(self, tmp_path, capsys):
        code, _, err = run(["floquet", "--config", str(config_path("example_exp_stable")), "--out", str(tmp_path)], capsys)
        assert code == 4
        assert json.loads(err)["error"] == "NotPeriodicError"

    def test_unknown_scenario(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["scenario", "run", "nope"])
        assert info.value.code == 2


class TestCommands:
    def test_simulate_writes_both_coordinates(self, tmp_path, capsys):
        cfg = str(config_path("expmu_unstable"))
        code, _, _ = run(["simulate", "--config", cfg, "--sigma", "10", "--out", str(tmp_path), "--quiet"], capsys)
        assert code == 0
        head = (tmp_path / "trajectory_bar.csv").read_text().splitlines()[1]
        assert head == "t,xm_0,xm_1,ev_0,ev_1"
        assert (tmp_path / "trajectory.csv").exists()

    def test_reduced_echoes_mu(self, tmp_path, capsys):
        code, out, _ = run(["reduced", "--config", str(config_path("prop2_periodic")), "--out", str(tmp_path)], capsys)
        assert code == 0 and "mu_m = 1 +1i" in out
        assert json.loads((tmp_path / "reduced.json").read_text())["mu_m"] == {"mu_mR": 1.0, "mu_mI": 1.0}

    def test_floquet(self, tmp_path, capsys):
        code, out, _ = run(["floquet", "--config", str(config_path("prop2_periodic")), "--out", str(tmp_path)], capsys)
        assert code == 0
        data = json.loads((tmp_path / "floquet.json").read_text())
        assert data["classification"] == "periodic" and data["floquet"]["stable"]
        assert (tmp_path / "orbit.csv").exists()

    @pytest.mark.slow
    def test_sweep(self, tmp_path, capsys):
        cfg = str(config_path("sweep_convergence"))
        code, _, _ = run(["sweep", "--config", cfg, "--out", str(tmp_path), "--workers", "2", "--quiet"], capsys)
        assert code == 0
        data = json.loads((tmp_path / "sweep.json").read_text())
        assert len(data["rows"]) == 4 and all(data["trends"].values())
        for name in ("sweep.csv", "period_vs_sigma.svg", "distance_vs_sigma.svg"):
            assert (tmp_path / name).exists()

    @pytest.mark.slow
    def test_scenario_prop2_periodic(self, tmp_path, capsys):
        code, out, _ = run(["scenario", "run", "prop2_periodic", "--seed", "42", "--out", str(tmp_path)], capsys)
        assert code == 0
        assert json.loads(out)["verdict"] == "pass"
        assert json.loads((tmp_path / "prop2_periodic.json").read_text())["seed"] == 42

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "netsync", "scenario", "list"], capture_output=True, text=True)
        assert proc.returncode == 0 and "prop2_gas" in proc.stdout
