import json

import pytest

from eigflow.cli import ConfigError, RunConfig, main, parse_config, run_scenario
from eigflow.scenarios import SCENARIOS, default_config


def write(tmp_path, text):
    p = tmp_path / "cfg.ini"
    p.write_text(text)
    return p


def test_empty_file_gives_defaults(tmp_path):
    assert parse_config(write(tmp_path, "")) == RunConfig()


def test_h_larger_than_epsilon_names_the_key(tmp_path):
    with pytest.raises(ConfigError) as err:
        parse_config(write(tmp_path, "[solver]\nepsilon = 0.1\nh = 0.2\n"))
    assert err.value.key == "solver.h"


def test_j_out_of_range_names_the_key(tmp_path):
    with pytest.raises(ConfigError) as err:
        parse_config(write(tmp_path, "[domain]\ndim = 2\n[solver]\nj = 4\n"))
    assert err.value.key == "solver.j"


@pytest.mark.parametrize("text,key", [
    ("[solver]\nbogus = 1\n", "solver.bogus"),
    ("[nowhere]\nx = 1\n", "nowhere"),
    ("[solver]\nepsilon = abc\n", "solver.epsilon"),
    ("[domain]\ncenter = 0 0 0\n", "domain.center"),
])
def test_strict_keys(tmp_path, text, key):
    with pytest.raises(ConfigError) as err:
        parse_config(write(tmp_path, text))
    assert err.value.key == key


def test_scenario_defaults_layered(tmp_path):
    cfg = parse_config(write(tmp_path, "[solver]\nT = 0.25\n"), default_config("heat1d"))
    assert cfg.domain.dim == 1 and cfg.solver.T == 0.25 and cfg.solver.epsilon == 0.02


def test_unknown_scenario_exit_code_and_no_artifacts(tmp_path):
    out = tmp_path / "out"
    assert run_scenario("nope", None, out) == 2
    assert not out.exists()


def test_bad_config_exit_code(tmp_path):
    out = tmp_path / "out"
    assert run_scenario("heat1d", write(tmp_path, "[solver]\nh = 9\n"), out) == 2
    assert not out.exists()


def test_check_failure_exit_code(tmp_path):
    # a horizon shorter than 2R^2 censors the coincidence report
    cfg = write(tmp_path, "[solver]\nT = 0.5\n")
    assert run_scenario("affine-coincidence", cfg, tmp_path / "o") == 1
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert not rep["passed"]


def test_non_convergence_exit_code(tmp_path):
    cfg = write(tmp_path, "[solver]\nepsilon = 0.2\nh = 0.2\nmax_sweeps = 2\n")
    assert run_scenario("disk-envelope", cfg, tmp_path / "o") == 3


def test_heat1d_artifacts_and_determinism(tmp_path):
    for d in ("a", "b"):
        assert main(["run", "heat1d", "--out", str(tmp_path / d), "--seed", "5", "--levels", "4"]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(["meta.json", "report.json", "decay.csv", "field_t0.csv", "field_t833.csv",
                            "field_t1667.csv", "field_t2500.csv"])
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
    meta = json.loads((tmp_path / "a" / "meta.json").read_text())
    assert meta["seed"] == 5 and meta["config"]["output"]["levels"] == 4
    header = (tmp_path / "a" / "decay.csv").read_text().splitlines()[0]
    assert header == "t,gap"


def test_every_scenario_has_defaults():
    for name in SCENARIOS:
        default_config(name)
