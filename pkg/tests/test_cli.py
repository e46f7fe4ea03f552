"""End-to-end tests of the command-line interface (in-process)."""

import json

import pytest

import specdens.cli as cli
from specdens.errors import NonConvergenceError
from specdens.report import canonical_json

ARROW_CSV = "1,1\n1,0\n"
NOSUPPORT_JSON = '{"K": 3, "entries": [[0,0,1],[0,0,1],[1,1,1]]}'


@pytest.fixture
def arrow_file(tmp_path):
    path = tmp_path / "arrow.csv"
    path.write_text(ARROW_CSV)
    return str(path)


@pytest.fixture
def nosupport_file(tmp_path):
    path = tmp_path / "nosupport.json"
    path.write_text(NOSUPPORT_JSON)
    return str(path)


def test_classify_json_is_canonical(arrow_file, capsys):
    assert cli.main(["classify", arrow_file]) == 0
    out = capsys.readouterr().out.rstrip("\n")
    doc = json.loads(out)
    assert doc["sigma"] == "1/3"
    assert doc["schema"] == 1
    assert canonical_json(doc) == out  # byte-identical round trip


def test_classify_text(arrow_file, capsys):
    assert cli.main(["classify", arrow_file, "--out", "text"]) == 0
    out = capsys.readouterr().out
    assert "support class: SupportOnly" in out
    assert "sigma: 1/3" in out


def test_classify_no_support(nosupport_file, capsys):
    assert cli.main(["classify", nosupport_file]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["support_class"] == "NoSupport"
    assert doc["kappa"] == "1/3"


def test_scaling_passes_tolerance(arrow_file, capsys):
    code = cli.main(["scaling", arrow_file, "--eta-max", "1e-4"])
    out = capsys.readouterr().out
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "block,f_pred,slope_fit,abs_err"
    assert len(lines) == 3


def test_scaling_fails_absurd_tolerance(arrow_file, capsys):
    code = cli.main(["scaling", arrow_file, "--tolerance", "1e-9"])
    captured = capsys.readouterr()
    assert code == 1
    assert "scaling check failed" in captured.err
    assert captured.out.startswith("block,")  # table still emitted


def test_scaling_requires_support(nosupport_file, capsys):
    assert cli.main(["scaling", nosupport_file]) == 1
    assert "no support" in capsys.readouterr().err


def test_density_output(arrow_file, capsys):
    code = cli.main(
        ["density", arrow_file, "--tau-min", "-0.4", "--tau-max", "0.4",
         "--points", "5", "--epsilon", "1e-3"]
    )
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "tau,rho"
    assert len(lines) == 6
    rows = [line.split(",") for line in lines[1:]]
    rhos = [float(r) for _, r in rows]
    assert all(r > 0 for r in rhos)
    assert rhos[0] == pytest.approx(rhos[-1], rel=1e-6)  # even in tau


def test_simulate_output(arrow_file, capsys):
    code = cli.main(
        ["simulate", arrow_file, "--sizes", "4,8", "--trials", "3", "--seed", "5"]
    )
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "size_n,dim_N,mean_smin,stderr_smin,mean_cond"
    assert lines[-1].startswith("# slope ")
    assert "predicted -1.5" in lines[-1]


def test_simulate_is_reproducible(arrow_file, capsys):
    args = ["simulate", arrow_file, "--sizes", "4,8", "--trials", "3"]
    cli.main(args + ["--threads", "1"])
    first = capsys.readouterr().out
    cli.main(args + ["--threads", "4"])
    second = capsys.readouterr().out
    assert first == second


def test_report_bundles_sections(arrow_file, capsys):
    assert cli.main(["report", arrow_file]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["limit_weights"]["h"] == ["2/3", "2/3"]
    assert doc["limit_weights"]["w_residual"] < 1e-4
    assert doc["residuals"]["fl_residual"] < 1e-4
    assert doc["scaling_fit"]["max_deviation"] < 0.05
    assert "sweep" not in doc


def test_report_no_support_omits_scaling(nosupport_file, capsys):
    assert cli.main(["report", nosupport_file]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["kappa"] == "1/3"
    assert "scaling_fit" not in doc
    assert "limit_weights" not in doc


def test_report_with_mc(arrow_file, capsys):
    code = cli.main(
        ["report", arrow_file, "--with-mc", "--sizes", "4,8", "--trials", "3"]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["sweep"]["dims"] == [8, 16]


def test_report_section_errors_do_not_abort(arrow_file, capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise NonConvergenceError("budget exhausted", residual=1.0)

    monkeypatch.setattr(cli, "empirical_exponents", boom)
    assert cli.main(["report", arrow_file]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert "error" in doc["scaling_fit"]
    assert doc["limit_weights"]["h"] == ["2/3", "2/3"]


def test_exit_code_parse_errors(tmp_path, capsys):
    missing = str(tmp_path / "missing.csv")
    assert cli.main(["classify", missing]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,4\n")  # not symmetric
    assert cli.main(["classify", str(bad)]) == 2
    nan = tmp_path / "nan.csv"
    nan.write_text("1,nan\nnan,1\n")
    assert cli.main(["classify", str(nan)]) == 2
    capsys.readouterr()


def test_exit_code_zero_row(tmp_path, capsys):
    zed = tmp_path / "zed.csv"
    zed.write_text("1,0\n0,0\n")
    assert cli.main(["classify", str(zed)]) == 3
    assert cli.main(["scaling", str(zed)]) == 3
    capsys.readouterr()


def test_exit_code_non_convergence(arrow_file, capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise NonConvergenceError("budget exhausted", residual=1.0)

    monkeypatch.setattr(cli, "empirical_exponents", boom)
    assert cli.main(["scaling", arrow_file]) == 5
    capsys.readouterr()
