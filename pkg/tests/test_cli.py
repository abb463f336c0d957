import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from hierfss import cli


def _run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _strip_timestamp(text: str) -> dict:
    record = json.loads(text)
    record["provenance"].pop("timestamp")
    return record


def test_profiles_record_contains_f1_at_zero(capsys):
    code, out, _ = _run(capsys, "profiles", "--n", "1", "--s", "0")
    assert code == 0
    record = json.loads(out)
    assert record["schema_version"] == cli.SCHEMA_VERSION
    f1 = record["outputs"]["rows"][0]["f_n"]
    assert f1 == pytest.approx(special.gamma(0.75) / (2 * special.gamma(1.25)), rel=1e-12)


def test_profiles_csv_columns_and_precision(capsys):
    code, out, _ = _run(capsys, "profiles", "--n", "1", "--s=-1,0", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "n,s,f_n,sigma_2,sigma_4,R4,U,lambda"
    assert len(lines) == 3
    value = lines[2].split(",")[2]
    assert len(value.replace(".", "").lstrip("0")) >= 16


def test_saw_unit_fugacity(capsys):
    code, out, _ = _run(capsys, "saw", "--N", "3", "--z", "1")
    assert code == 0
    assert json.loads(out)["outputs"]["chi"] == 5.0


def test_saw_check_window(capsys):
    code, out, _ = _run(capsys, "saw", "check", "--N", "10000", "--s", "0")
    assert code == 0
    row = json.loads(out)["outputs"]["rows"][0]
    assert row["ratio"] == pytest.approx(1.0, abs=0.01)


def test_exactrg_run_without_seed_is_domain_error(capsys):
    code, _, err = _run(capsys, "exactrg", "run", "--d", "3", "--N", "1", "--g", "0.1", "--nu", "-0.2")
    assert code == cli.EXIT_DOMAIN
    assert "seed" in err


def test_exactrg_run_writes_checkpoints(tmp_path, capsys):
    folder = tmp_path / "ck"
    argv = ["exactrg", "run", "--d", "3", "--N", "1", "--g", "0.1", "--nu", "-0.2", "--seed", "4",
            "--samples", "100", "--points", "64", "--out", str(folder)]
    code, out, _ = _run(capsys, *argv)
    assert code == 0
    record = json.loads(out)
    assert len(record["outputs"]["checkpoints"]) == 2
    assert record["provenance"]["seed_lineage"] == [[4, 0]]
    code, out, _ = _run(capsys, "exactrg", "observe", "--d", "3", "--input", str(folder / "scale_01.csv"))
    assert code == 0
    assert json.loads(out)["outputs"]["observables"]["susceptibility"] > 0


def test_exactrg_observe_replicas_carry_standard_errors(capsys):
    argv = ["exactrg", "observe", "--d", "3", "--N", "1", "--g", "0.1", "--nu", "-0.2", "--seed", "4",
            "--samples", "100", "--points", "64", "--replicas", "3"]
    code, out, _ = _run(capsys, *argv)
    assert code == 0
    estimates = json.loads(out)["outputs"]["estimates"]
    for value in estimates.values():
        assert value["stderr"] > 0 and math.isfinite(value["mean"])


def test_stochastic_output_is_deterministic(capsys):
    argv = ["exactrg", "observe", "--d", "3", "--N", "1", "--g", "0.1", "--nu", "-0.2", "--seed", "9",
            "--samples", "100", "--points", "64", "--replicas", "2"]
    first = _run(capsys, *argv)[1]
    second = _run(capsys, *argv)[1]
    assert _strip_timestamp(first) == _strip_timestamp(second)


def test_flow_run_schema(capsys):
    code, out, _ = _run(capsys, "flow", "run", "--d", "5", "--g", "0.05", "--N", "6", "--jmax", "20")
    assert code == 0
    outputs = json.loads(out)["outputs"]
    assert {"d", "n", "L", "g0", "a", "nu_c", "trace", "scales"} <= set(outputs)
    assert set(outputs["trace"][0]) == {"j", "g", "nu", "dnu_dnu0", "dnu_da"}
    assert set(outputs["scales"]) == {"wN", "vN", "hN"}


def test_critical_and_window(capsys):
    code, out, _ = _run(capsys, "critical", "find", "--d", "5", "--g", "0.05", "--N", "8")
    assert code == 0
    outputs = json.loads(out)["outputs"]
    assert outputs["nu_c"] == pytest.approx(outputs["nu_c_backward_shooting"], abs=1e-12)
    code, out, _ = _run(capsys, "window", "predict", "--d", "5", "--g", "0.05", "--N", "8", "--s=-1,0,1", "--bc", "free")
    assert code == 0
    rows = json.loads(out)["outputs"]["rows"]
    assert [r["s"] for r in rows] == [-1.0, 0.0, 1.0]


def test_inadmissible_coupling_exit_code(capsys):
    code, _, err = _run(capsys, "critical", "--d", "5", "--g", "0.1")
    assert code == cli.EXIT_DOMAIN
    assert "too large" in err


def test_numerical_failure_exit_code(capsys):
    code, _, err = _run(capsys, "saw", "--N", "1000", "--z", "1")
    assert code == cli.EXIT_NUMERICAL
    assert "overflow" in err


def test_unknown_flag_and_subcommand(capsys):
    assert _run(capsys, "profiles", "--bogus", "1")[0] == 2
    assert _run(capsys, "nonsense")[0] == 2


def test_config_file_and_flag_override(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("n = 2\ns = 1\n[saw]\nN = 50\n")
    code, out, _ = _run(capsys, "profiles", "--config", str(path), "--s", "0")
    assert code == 0
    config = json.loads(out)["config"]
    assert config["n"] == 2
    assert config["s"] == "0"
    assert config["N"] == cli.DEFAULTS["N"]


def test_malformed_config(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("this line has no equals sign\n")
    assert _run(capsys, "profiles", "--config", str(path))[0] == cli.EXIT_DOMAIN
    path.write_text("colour = blue\n")
    assert _run(capsys, "profiles", "--config", str(path))[0] == cli.EXIT_DOMAIN


def test_unwritable_output(tmp_path, capsys):
    target = tmp_path / "missing" / "deeper" / "out.json"
    assert _run(capsys, "profiles", "--out", str(target))[0] == cli.EXIT_DOMAIN


def test_config_echo_reruns_the_job(tmp_path, capsys):
    code, out, _ = _run(capsys, "profiles", "--n", "3", "--s=0.5,2")
    assert code == 0
    record = json.loads(out)
    config = record["config"]
    lines = [f"{k} = {v}" for k, v in config.items() if k in cli.DEFAULTS and v is not None]
    path = tmp_path / "echo.cfg"
    path.write_text("\n".join(lines) + "\n")
    code, again, _ = _run(capsys, config["command"], "--config", str(path))
    assert code == 0
    assert _strip_timestamp(again) == _strip_timestamp(out)


def test_accept_profiles_suite(capsys):
    code, out, err = _run(capsys, "accept", "--suite", "profiles")
    assert code == 0
    record = json.loads(out)
    assert record["outputs"]["passed"] is True
    assert [c["id"] for c in record["outputs"]["criteria"]] == [1, 2, 3, 4, 5]
    assert err.count("[PASS]") == 5


@settings(max_examples=25, deadline=None)
@given(
    key=st.sampled_from(sorted(set(cli.INT_FIELDS) - {"seed", "jmax"})),
    value=st.integers(min_value=1, max_value=10**6),
)
def test_config_values_round_trip(key, value):
    assert cli.coerce(key, str(value)) == value
    assert cli.coerce(key, str(cli.coerce(key, str(value)))) == value


@settings(max_examples=25, deadline=None)
@given(value=st.floats(allow_nan=False, allow_infinity=False))
def test_float_config_round_trip(value):
    assert cli.coerce("g", repr(value)) == value
