import subprocess
import sys

import numpy as np
import pytest

import mhmm.cli
import mhmm.fit
from mhmm import MhmmModel, NumericalError, VariableScheme, read_model, write_model
from mhmm.cli import main

TINY = (
    "latent E1 2\nobserved F1 3\nemit E1 -> F1\n"
    "option restarts 1\noption max_iter 500\noption seed 3\n"
)
TINY_FULLDEP = (
    "latent E1 2\nlatent E2 2\nobserved F1 2\nobserved F2 2\n"
    "dir E1 -> E2\ndir E2 -> E1\nbidir E1 <-> E2\n"
    "emit E1 -> F1\nemit E1 -> F2\nemit E2 -> F1\nemit E2 -> F2\n"
    "bidir F1 <-> F2\n"
    "option restarts 2\noption max_iter 120\noption seed 1\n"
)
TINY_NOGRANGER = TINY_FULLDEP.replace("dir E1 -> E2\ndir E2 -> E1\n", "")


@pytest.fixture
def tiny_model_file(tmp_path):
    lat = VariableScheme.of(("E1", 2))
    obs = VariableScheme.of(("F1", 3))
    m = MhmmModel.from_tables(
        lat,
        obs,
        np.array([[0.85, 0.15], [0.2, 0.8]]),
        np.array([[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]]),
    )
    path = tmp_path / "gen.model"
    path.write_text(write_model(m))
    return path


def write_spec(tmp_path, name, text):
    path = tmp_path / f"{name}.spec"
    path.write_text(text)
    return path


def test_simulate_then_fit(tmp_path, tiny_model_file, capsys):
    sim_dir = tmp_path / "sim"
    rc = main(
        [
            "simulate",
            "--spec", str(tiny_model_file),
            "--length", "250",
            "--seed", "9",
            "--out", str(sim_dir),
        ]
    )
    assert rc == 0
    series_path = sim_dir / "series.csv"
    assert series_path.exists()
    assert series_path.read_text().splitlines()[0] == "F1"

    spec_path = write_spec(tmp_path, "tiny", TINY)
    fit_dir = tmp_path / "fit"
    rc = main(
        ["fit", "--spec", str(spec_path), "--data", str(series_path), "--out", str(fit_dir)]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "tiny: loglike " in out
    for suffix in (".model", ".coefficients.txt", ".fit.txt"):
        assert (fit_dir / f"tiny{suffix}").exists()
    report = (fit_dir / "tiny.fit.txt").read_text()
    assert "converged yes" in report
    assert "model tiny" in report
    fitted = read_model((fit_dir / "tiny.model").read_text())
    assert fitted.obs_scheme == VariableScheme.of(("F1", 3))


def test_fit_outputs_are_deterministic(tmp_path, tiny_model_file):
    sim_dir = tmp_path / "sim"
    main(["simulate", "--spec", str(tiny_model_file), "--length", "150", "--out", str(sim_dir)])
    spec_path = write_spec(tmp_path, "tiny", TINY)
    outputs = []
    for sub in ("a", "b"):
        fit_dir = tmp_path / sub
        main(["fit", "--spec", str(spec_path), "--data", str(sim_dir / "series.csv"), "--out", str(fit_dir)])
        outputs.append((fit_dir / "tiny.model").read_text() + (fit_dir / "tiny.coefficients.txt").read_text())
    assert outputs[0] == outputs[1]


def test_cli_seed_overrides_spec_option(tmp_path, tiny_model_file, capsys):
    sim_dir = tmp_path / "sim"
    main(["simulate", "--spec", str(tiny_model_file), "--length", "100", "--out", str(sim_dir)])
    spec_path = write_spec(tmp_path, "tiny", TINY)
    fit_dir = tmp_path / "fit"
    rc = main(
        [
            "fit",
            "--spec", str(spec_path),
            "--data", str(sim_dir / "series.csv"),
            "--out", str(fit_dir),
            "--seed", "77",
            "--restarts", "2",
        ]
    )
    assert rc == 0
    report = (fit_dir / "tiny.fit.txt").read_text()
    assert "seed 77" in report


def simulate_two_var_series(tmp_path):
    lat = VariableScheme.of(("E1", 2), ("E2", 2))
    obs = VariableScheme.of(("F1", 2), ("F2", 2))
    rng = np.random.default_rng(12)
    transition = np.kron(np.array([[0.8, 0.2], [0.25, 0.75]]), np.array([[0.7, 0.3], [0.2, 0.8]]))
    emission = rng.dirichlet(np.full(4, 2.0), size=4)
    m = MhmmModel.from_tables(lat, obs, transition, emission)
    path = tmp_path / "two.model"
    path.write_text(write_model(m))
    sim_dir = tmp_path / "sim2"
    main(["simulate", "--spec", str(path), "--length", "220", "--seed", "4", "--out", str(sim_dir)])
    return sim_dir / "series.csv"


def test_compare_writes_table_with_reference_first(tmp_path, capsys):
    data = simulate_two_var_series(tmp_path)
    sat = write_spec(tmp_path, "saturated", TINY_FULLDEP)
    ng = write_spec(tmp_path, "nogranger", TINY_NOGRANGER)
    cmp_dir = tmp_path / "cmp"
    rc = main(
        [
            "compare",
            "--spec", str(sat),
            "--spec", str(ng),
            "--data", str(data),
            "--out", str(cmp_dir),
        ]
    )
    assert rc == 0
    text = (cmp_dir / "comparison.txt").read_text()
    lines = text.splitlines()
    assert lines[0].split()[0] == "model"
    assert lines[2].startswith("saturated")
    assert lines[3].startswith("nogranger")
    assert lines[-1] == "reference: saturated"
    csv = (cmp_dir / "comparison.csv").read_text().splitlines()
    assert csv[0] == "model,lrt,df,p_value,par,loglike,aic"
    sat_row = csv[1].split(",")
    ng_row = csv[2].split(",")
    assert int(sat_row[2]) == 0
    assert int(ng_row[2]) == int(sat_row[4]) - int(ng_row[4])
    # stdout shows the same table
    out = capsys.readouterr().out
    assert "reference: saturated" in out


def test_compare_requires_two_specs(tmp_path, capsys):
    spec = write_spec(tmp_path, "one", TINY)
    rc = main(["compare", "--spec", str(spec), "--data", "nowhere.csv", "--out", str(tmp_path / "x")])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:parse:")


def test_count_params_output(tmp_path, capsys):
    spec = write_spec(tmp_path, "ng", TINY_NOGRANGER)
    rc = main(["count-params", "--spec", str(spec)])
    assert rc == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "total 24"
    assert out[1] == "zeroed 4"
    assert out[2] == "distinct 4"
    assert out[3] == "  granger 4"
    assert out[-1] == "free 20"


def test_independencies_output(tmp_path, capsys):
    spec = write_spec(tmp_path, "ng", TINY_NOGRANGER)
    rc = main(["independencies", "--spec", str(spec)])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert "E[E1](t) _||_ E[E2](t-1) | E[E1](t-1)" in lines


GEN_SPEC = """
latent G 2
latent A 2
latent B 2
observed F1 2
observed F2 2
dir G -> A
dir G -> B
emit G -> F1
emit G -> F2
emit {a} -> F1
emit {b} -> F2
"""


def test_equivalent_reports_mapping(tmp_path, capsys):
    s1 = write_spec(tmp_path, "one", GEN_SPEC.format(a="A", b="B"))
    s2 = write_spec(tmp_path, "two", GEN_SPEC.format(a="B", b="A"))
    rc = main(["equivalent", "--spec", str(s1), "--spec", str(s2)])
    assert rc == 0
    out = capsys.readouterr().out.splitlines()
    assert "A -> B" in out
    assert "B -> A" in out
    assert "G -> G" in out


def test_equivalent_detects_mismatch(tmp_path, capsys):
    s1 = write_spec(tmp_path, "one", GEN_SPEC.format(a="A", b="B"))
    broken = GEN_SPEC.format(a="A", b="B").replace("emit G -> F1\n", "")
    s2 = write_spec(tmp_path, "two", broken)
    rc = main(["equivalent", "--spec", str(s1), "--spec", str(s2)])
    assert rc == 0
    assert "not equivalent" in capsys.readouterr().out


def test_parse_error_exit_code(tmp_path, capsys):
    bad = write_spec(tmp_path, "bad", "latent E1 1\n")
    rc = main(["count-params", "--spec", str(bad)])
    assert rc == 2
    err = capsys.readouterr().err
    assert err.startswith("error:parse:")


def test_missing_file_exit_code(tmp_path, capsys):
    rc = main(["count-params", "--spec", str(tmp_path / "absent.spec")])
    assert rc == 2


def test_unknown_command_is_parse_error(capsys):
    rc = main(["warp"])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:parse:")


def test_numeric_failure_exit_code(tmp_path, tiny_model_file, monkeypatch, capsys):
    sim_dir = tmp_path / "sim"
    main(["simulate", "--spec", str(tiny_model_file), "--length", "60", "--out", str(sim_dir)])
    spec_path = write_spec(tmp_path, "tiny", TINY)

    def explode(*args, **kwargs):
        raise NumericalError("every EM restart failed numerically", residual=1.0)

    monkeypatch.setattr(mhmm.fit, "em_fit", explode)
    monkeypatch.setattr("mhmm.modelspec.em_fit", explode)
    rc = main(
        [
            "fit",
            "--spec", str(spec_path),
            "--data", str(sim_dir / "series.csv"),
            "--out", str(tmp_path / "fit"),
        ]
    )
    assert rc == 3
    assert capsys.readouterr().err.startswith("error:numeric:")


def test_module_entry_point_runs(tmp_path):
    spec = write_spec(tmp_path, "ng", TINY_NOGRANGER)
    proc = subprocess.run(
        [sys.executable, "-m", "mhmm", "count-params", "--spec", str(spec)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("total 24")
