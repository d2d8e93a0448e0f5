import os
import shutil
from pathlib import Path

import numpy as np
import pytest

from wavectl.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main
from wavectl.config import SCENARIOS, ConfigError, parse_config
from wavectl.experiments import ExperimentError, run_experiment

GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("WAVECTL_REGEN_GOLDEN") == "1"


def read_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True)


class TestParse:
    def test_valid(self):
        cfg = parse_config("[of]\nT = 20\nf = 1\nn_cells = 200")
        assert cfg.scenario == "of" and cfg["T"] == 20 and cfg["f"] == 1 and cfg["n_cells"] == 200
        assert cfg.outputs == ["csv"]

    def test_odd_horizon(self):
        with pytest.raises(ConfigError, match="T must be even"):
            parse_config("[of]\nT = 21")

    def test_w_bound(self):
        with pytest.raises(ConfigError, match="w must be < 1/20"):
            parse_config("[iss]\nw = 0.06")

    def test_fraction_and_comments(self):
        cfg = parse_config("# run\n[iss]  \nw = 1/40   # quarter of the bound\n\noutputs = csv, svg\n")
        assert cfg["w"] == 0.025 and cfg.outputs == ["csv", "svg"]

    def test_all_errors_with_lines(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("[of]\nT = 21\nfoo = 1\nn_cells = abc\nf = x\n")
        errs = exc.value.errors
        assert len(errs) == 4
        assert {e.split(":")[0] for e in errs} == {"line 2", "line 3", "line 4", "line 5"}

    def test_unknown_scenario(self):
        with pytest.raises(ConfigError, match="line 1: unknown scenario"):
            parse_config("[nope]\nT = 2\n")

    def test_missing_header_and_key(self):
        with pytest.raises(ConfigError, match="header"):
            parse_config("T = 2\n")
        with pytest.raises(ConfigError, match="missing required key 'T'"):
            parse_config("[dirichlet-ec]\n")

    def test_bad_preset_and_output(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("[stab]\ny0 = cos(x)\noutputs = png\n")
        assert len(exc.value.errors) == 2

    def test_duplicate(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config("[stab]\nf = 1\nf = 2\n")

    def test_every_scenario_has_defaults(self):
        for name, schema in SCENARIOS.items():
            req = {"T": "2", "w": "1/40"}
            text = f"[{name}]\n" + "".join(f"{k} = {req[k]}\n" for k in req if k in schema)
            assert parse_config(text).scenario == name


class TestRun:
    def test_dirichlet_control_csv(self, tmp_path):
        run_experiment(parse_config("[dirichlet-ec]\nT = 2\nn_cells = 50\n"), tmp_path)
        d = read_csv(tmp_path / "control.csv")
        np.testing.assert_allclose(d["u"], (1 - d["t"]) / 2, atol=1e-12)

    def test_stab_flat(self, tmp_path):
        run_experiment(parse_config("[stab]\nf = 0\nT = 4\nn_cells = 40\n"), tmp_path)
        E = read_csv(tmp_path / "energy.csv")["E"]
        assert np.ptp(E) <= 1e-10 * E[0]

    def test_of_extinction_and_svg(self, tmp_path):
        paths = run_experiment(parse_config("[of]\nT = 20\nf = 1\nn_cells = 50\noutputs = csv, svg\n"), tmp_path)
        d = read_csv(tmp_path / "energy.csv")
        assert d["E"][-1] <= 1e-10 * d["E"][0] and d["t"][-1] == 20
        svg = (tmp_path / "field.svg").read_text()
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
        assert {p.name for p in paths} == {"field.csv", "energy.csv", "field.svg", "control.csv"}

    def test_field_layout(self, tmp_path):
        run_experiment(parse_config("[stab]\nT = 2\nn_cells = 10\nstride_t = 5\nstride_x = 2\n"), tmp_path)
        lines = (tmp_path / "field.csv").read_text().splitlines()
        assert lines[0] == "t,x,y,y_t,y_x"
        assert len(lines) == 1 + 5 * 6

    def test_samples(self, tmp_path):
        src = tmp_path / "data.csv"
        src.write_text("x,y0\n0,0\n0.5,0.25\n1,1\n")
        cfg = parse_config(f"[dirichlet-ec]\nT = 2\nn_cells = 4\nsamples = {src}\n")
        run_experiment(cfg, tmp_path / "out")
        d = read_csv(tmp_path / "out" / "field.csv")
        first = d[d["t"] == 0]
        np.testing.assert_allclose(first["y"], [0, 0.125, 0.25, 0.625, 1.0])

    def test_samples_errors(self, tmp_path):
        cfg = parse_config(f"[stab]\nsamples = {tmp_path / 'missing.csv'}\n")
        with pytest.raises(ConfigError):
            run_experiment(cfg, tmp_path)
        bad = tmp_path / "bad.csv"
        bad.write_text("x,y0\n0,0\n0.7,1\n")
        with pytest.raises(ConfigError, match="from 0 to 1"):
            run_experiment(parse_config(f"[stab]\nsamples = {bad}\n"), tmp_path)

    def test_numerical_error_has_context(self, tmp_path):
        cfg = parse_config("[stab]\nT = 0.33\nn_cells = 10\n")
        with pytest.raises(ExperimentError, match="^stab: "):
            run_experiment(cfg, tmp_path)


class TestMain:
    def test_exit_codes(self, tmp_path, capsys):
        good = tmp_path / "good.cfg"
        good.write_text("[stab]\nT = 2\nn_cells = 10\n")
        assert main(["run", str(good), "--out", str(tmp_path / "o")]) == EXIT_OK
        assert (tmp_path / "o" / "energy.csv").exists()
        bad = tmp_path / "bad.cfg"
        bad.write_text("[iss]\nw = 0.06\n")
        assert main(["run", str(bad)]) == EXIT_CONFIG
        assert "w must be < 1/20" in capsys.readouterr().err
        num = tmp_path / "num.cfg"
        num.write_text("[stab]\nT = 0.33\nn_cells = 10\n")
        assert main(["run", str(num), "--out", str(tmp_path / "n")]) == EXIT_NUMERIC
        assert main(["run", str(tmp_path / "absent.cfg")]) == EXIT_CONFIG

    def test_sweep(self, tmp_path):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("[stab]\nT = 4\nn_cells = 20\nf = 1\n")
        assert main(["run", str(cfg), "--out", str(tmp_path), "--sweep", "f=0,0.5,2"]) == EXIT_OK
        ratios = {}
        for f in ("0", "0.5", "2"):
            E = read_csv(tmp_path / f"f={f}" / "energy.csv")["E"]
            ratios[f] = E[-1] / E[0]
        assert ratios["0"] == pytest.approx(1.0)
        assert ratios["0.5"] == pytest.approx(ratios["2"]) == pytest.approx(1 / 81)

    def test_sweep_validates_all(self, tmp_path, capsys):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("[of]\nT = 2\n")
        assert main(["run", str(cfg), "--out", str(tmp_path), "--sweep", "T=2,3,5"]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "T=3" in err and "T=5" in err
        assert not any(tmp_path.glob("T=*"))

    def test_seed_override(self, tmp_path):
        cfg = tmp_path / "q.cfg"
        cfg.write_text("[quasilinear]\nT = 0.5\nn_cells = 10\n")
        main(["run", str(cfg), "--out", str(tmp_path / "a"), "--seed", "4"])
        main(["run", str(cfg), "--out", str(tmp_path / "b"), "--seed", "5"])
        main(["run", str(cfg), "--out", str(tmp_path / "c"), "--seed", "4"])
        a, b, c = ((tmp_path / d / "lyapunov.csv").read_bytes() for d in "abc")
        assert a == c and a != b


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_golden(name, tmp_path):
    cfg = parse_config((GOLDEN / f"{name}.cfg").read_text())
    expected = GOLDEN / name
    if REGEN:
        shutil.rmtree(expected, ignore_errors=True)
        run_experiment(cfg, expected)
    paths = run_experiment(cfg, tmp_path)
    csvs = sorted(p.name for p in paths if p.suffix == ".csv")
    assert csvs == sorted(p.name for p in expected.glob("*.csv"))
    for fname in csvs:
        assert (tmp_path / fname).read_bytes() == (expected / fname).read_bytes(), fname
