import json

import numpy as np
import pytest

from oracles import star_by_bisection
from wilddata import io
from wilddata.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main

SMALL = {"base": "constant", "nx": 256, "ny": 8, "snapshots": 16}


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "small.json"
    p.write_text(json.dumps(SMALL))
    return p


def test_unknown_subcommand_is_usage_error():
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "pipeline" in capsys.readouterr().out


def test_riemann_outputs_match_oracle(tmp_path):
    rc = main(["riemann", "--left", "1,1,0,0", "--right", "0.125,0.8,0,0", "--out", str(tmp_path)])
    assert rc == EXIT_OK
    p_ref, u_ref = star_by_bisection((1.0, 1.0, 0.0), (0.125, 0.8, 0.0), 2.5)
    summary = io.read_json(tmp_path / "fan.json")
    assert abs(summary["p_star"] - p_ref) <= 1e-10 and abs(summary["u_star"] - u_ref) <= 1e-10
    cols = io._read_table(tmp_path / "fan.csv")
    # between the rarefaction tail and the contact: the left star state
    star = (cols["xi"] > 0.0) & (cols["xi"] < u_ref - 1e-6)
    assert star.any()
    np.testing.assert_allclose(cols["p"][star], p_ref, rtol=1e-10)
    np.testing.assert_allclose(cols["u1"][star], u_ref, rtol=1e-10)


def test_riemann_vacuum_is_numerical_failure(tmp_path):
    assert main(["riemann", "--left", "1,1,-10,0", "--right", "1,1,10,0", "--out", str(tmp_path)]) == EXIT_NUMERIC


def test_bad_state_is_usage_error(tmp_path):
    assert main(["riemann", "--left", "1,1,0", "--right", "1,1,0,0", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["riemann", "--left", "-1,1,0,0", "--right", "1,1,0,0", "--out", str(tmp_path)]) == EXIT_USAGE


def test_bad_config_is_usage_error(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"epsilon": 2.0}))
    assert main(["pipeline", "--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_USAGE


def test_glimm_subcommand(tmp_path):
    assert main(["glimm", "--cells", "128", "--out", str(tmp_path)]) == EXIT_OK
    assert io.read_json(tmp_path / "glimm.json")["relative"] < 0.05


def test_constant_base_pipeline_passes(tmp_path, small_config):
    out = tmp_path / "run"
    assert main(["pipeline", "--config", str(small_config), "--out", str(out)]) == EXIT_OK
    v = io.read_json(out / "verdict.json")
    assert v["pass"] and all(c["pass"] for c in v["checks"].values())
    assert v["delta"] == 0.25 / 8 and v["delta_halvings"] == 0
    assert v["config"]["base"] == "constant"
    for name in ("wild.csv", "wild.csv.json", "residuals.json", "residuals.csv"):
        assert (out / name).exists()
    assert (out / "assembly" / "manifest.json").exists()


def test_verify_subcommand(tmp_path, small_config):
    out = tmp_path / "run"
    assert main(["pipeline", "--config", str(small_config), "--out", str(out)]) == EXIT_OK
    field = str(out / "assembly")
    assert main(["verify", "--field", field, "--out", str(tmp_path / "v1")]) == EXIT_OK
    # a box excluding the data fails verification
    assert main(["verify", "--field", field, "--box", "2,3,2,3,1", "--out", str(tmp_path / "v2")]) == EXIT_VERIFY
    assert main(["verify", "--out", str(tmp_path / "v3")]) == EXIT_USAGE


def test_stage_subcommands(tmp_path, small_config):
    for cmd in ("surgery", "evolve", "assemble"):
        assert main([cmd, "--config", str(small_config), "--out", str(tmp_path / cmd)]) == EXIT_OK
    assert (tmp_path / "surgery" / "extension.csv").exists()
    assert (tmp_path / "evolve" / "trajectory" / "manifest.json").exists()
    assert (tmp_path / "assemble" / "assembly" / "manifest.json").exists()


def test_global_flags_before_subcommand(tmp_path, small_config):
    out = tmp_path / "g"
    assert main(["--config", str(small_config), "--out", str(out), "--seed", "3", "surgery"]) == EXIT_OK
    assert io.read_json(out / "wild.csv.json")["config"]["seed"] == 3


def test_threads_must_be_positive(tmp_path):
    assert main(["--threads", "0", "riemann", "--left", "1,1,0,0", "--right", "1,1,0,0"]) == EXIT_USAGE


def test_pipeline_is_deterministic(tmp_path, small_config):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["pipeline", "--config", str(small_config), "--out", str(d)]) == EXIT_OK
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert files
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes(), f
