import csv
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cwexp.cli import main
from cwexp.config import ConfigError, ExperimentConfig, load_config, parse_config
from cwexp.io import dumps, fmt_float


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# -- configuration ----------------------------------------------------------------------

def test_defaults():
    cfg = ExperimentConfig()
    assert (cfg.xi, cfg.delta, cfg.R0, cfg.a, cfg.seed) == (0.02, 0.02, 0.49, 1.0, 0)
    assert cfg.n0_override is None


def test_parse_config_comments_and_types():
    cfg = parse_config("# comment\nxi = 0.01  # trailing\nseed=7\nn0_override = none\nlambda = 3\n")
    assert cfg.xi == 0.01 and cfg.seed == 7 and cfg.n0_override is None and cfg.lam == 3.0


def test_overrides_take_precedence_and_skip_none(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("xi = 0.01\nseed = 3\n")
    cfg = load_config(p).with_overrides(seed=9, xi=None)
    assert cfg.seed == 9 and cfg.xi == 0.01


@pytest.mark.parametrize("text", ["xi 0.1", "colour = red", "seed = 1.5", "xi = -1", "lambda = 1"])
def test_bad_config_raises(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


# -- serialization ----------------------------------------------------------------------

@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_float_round_trips(x):
    assert float(fmt_float(x)) == x


def test_dumps_is_valid_json():
    obj = {"a": [1.0, 2, 0.1], "b": {"c": None, "d": True}, "e": np.float64(1 / 3), "f": []}
    back = json.loads(dumps(obj))
    assert back["a"] == [1.0, 2, 0.1] and back["e"] == 1 / 3 and back["b"]["d"] is True


def test_dumps_nonfinite_as_null():
    assert json.loads(dumps({"x": float("nan")})) == {"x": None}


# -- commands ---------------------------------------------------------------------------

def test_orbit_anosov_origin(tmp_path):
    assert main(["orbit", "--map", "anosov", "--steps", "10", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "orbit_anosov.csv")
    assert rows[0] == ["step", "x", "y"]
    assert len(rows) == 12
    assert all(float(r[1]) == 0.0 and float(r[2]) == 0.0 for r in rows[1:])


def test_orbit_gpert_fixed_point(tmp_path):
    assert main(["orbit", "--map", "gpert", "--start-level", "10", "--steps", "5",
                 "--out", str(tmp_path)]) == 0
    rows = np.array(read_csv(tmp_path / "orbit_gpert.csv")[1:], dtype=float)
    assert np.max(np.abs(rows[:, 1:] - rows[0, 1:])) < 1e-12


def test_orbit_sphere_header(tmp_path):
    assert main(["orbit", "--map", "sphere", "--x0", "0.7,0.2", "--steps", "2",
                 "--out", str(tmp_path)]) == 0
    assert read_csv(tmp_path / "orbit_sphere.csv")[0] == ["step", "rep_x", "rep_y"]


def test_unknown_map_is_usage_error(tmp_path):
    assert main(["orbit", "--map", "bogus", "--out", str(tmp_path)]) == 2


def test_bad_flag_is_usage_error():
    assert main(["orbit", "--no-such-flag"]) == 2


def test_escape_bad_levels(tmp_path):
    assert main(["escape", "--n", "11", "--m", "11", "--out", str(tmp_path)]) == 2


def test_escape_empty_family(tmp_path):
    assert main(["escape", "--family", "0", "--out", str(tmp_path)]) == 0
    assert read_csv(tmp_path / "escape_diams.csv") == [["step", "diam"]]
    assert json.loads((tmp_path / "certificates.json").read_text())["all_valid"] is True


def test_escape_small_family(tmp_path):
    assert main(["escape", "--family", "3", "--out", str(tmp_path)]) == 0
    rec = json.loads((tmp_path / "certificates.json").read_text())
    assert rec["max_exit"] <= 7
    diams = np.array(read_csv(tmp_path / "escape_diams.csv")[1:], dtype=float)[:, 1]
    assert diams[-1] > 0.01


def test_shadow_command(tmp_path):
    assert main(["shadow", "--length", "50", "--out", str(tmp_path)]) == 0
    rec = json.loads((tmp_path / "shadow_torus.json").read_text())
    assert rec["verified"] and rec["eps_achieved"] <= rec["eps_bound"]


def test_shadow_large_delta_is_domain_error(tmp_path):
    assert main(["shadow", "--delta", "0.3", "--out", str(tmp_path)]) == 3


def test_stability_command(tmp_path):
    assert main(["stability", "--out", str(tmp_path), "--horizon", "20"]) == 0
    rec = json.loads((tmp_path / "stability.json").read_text())
    assert rec["first_violation"] is not None


def test_verify_gate_failure(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("R0 = 0.4\n")
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    rec = json.loads((tmp_path / "verify.json").read_text())
    assert rec["passed"] is False and rec["checks"][0]["name"] == "geometry_gate"


def test_corrupt_config(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("this is not a config\n")
    assert main(["orbit", "--config", str(cfg), "--out", str(tmp_path)]) == 2
