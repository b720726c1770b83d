import json

import pytest
from typer.testing import CliRunner

from norming import main
from norming.libs.errors import ConsistencyError
from norming.libs.poly import MultiPoly
from norming.theory.domains import family_of_balls
from norming.theory.levelset import JetModel
from norming.theory.remez import PointSet

runner = CliRunner()

ELLIPSE = MultiPoly.from_terms(2, {(2, 0): 1.0, (0, 2): 2.0, (0, 0): -0.09})


def run_cli(args, capsys):
    """Run the console entrypoint; returns (exit code, stdout)"""
    with pytest.raises(SystemExit) as exit_info:
        main.run(args)
    return exit_info.value.code, capsys.readouterr().out


def write(tmp_path, name, document) -> str:
    path = tmp_path / name
    path.write_text(document.to_json() if hasattr(document, "to_json") else document.model_dump_json())
    return str(path)


def test_help():
    """Help lists the command groups"""
    result = runner.invoke(main.app, ["--help"])
    assert result.exit_code == 0
    for group in ("remez", "rigidity", "extrema", "isotopy", "gallery"):
        assert group in result.stdout


def test_measure_bound_json(capsys):
    """remez measure-bound --lambda 1 --n 2 --d 3 gives 1 and 512"""
    code, out = run_cli(["remez", "measure-bound", "--lambda", "1", "--n", "2", "--d", "3", "--emit", "json"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["schema"] == "remez-rigidity/1"
    assert (data["chebyshev_bound"], data["simple_bound"]) == (1.0, 512.0)


def test_global_options_may_follow_the_subcommand():
    """Global flags after the subcommand are moved in front of it"""
    assert main.hoist_global_options(["gallery", "triangle", "--h", "0.5", "--emit", "json"]) == [
        "--emit",
        "json",
        "gallery",
        "triangle",
        "--h",
        "0.5",
    ]
    assert main.hoist_global_options(["--seed=3", "remez", "--verbose"]) == ["--seed=3", "--verbose", "remez"]


def test_gallery_triangle_json(capsys):
    """gallery triangle --h 0.5 reports a lower bound of at least 5"""
    code, out = run_cli(["gallery", "triangle", "--h", "0.5", "--emit", "json"], capsys)
    assert code == 0
    rows = {row["quantity"]: row for row in json.loads(out)["rows"]}
    assert rows["R_1 lower"]["measured"] >= 5.0
    assert rows["R_1 published"]["status"] == "flag"


def test_gallery_csv(capsys):
    """CSV output for gallery cases uses the documented columns"""
    code, out = run_cli(["--emit", "csv", "gallery", "triangle", "--h", "1"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "case,quantity,measured,expected,provenance,status"
    assert lines[1].startswith("triangle,R_1 lower,")


def test_remez_finite_from_file(tmp_path, capsys):
    """Point sets are read from JSON files"""
    points = write(tmp_path, "z.json", PointSet(n=1, points=[[-1.0], [0.0], [1.0]]))
    code, out = run_cli(["--emit", "json", "remez", "finite", "--points", points, "--d", "2"], capsys)
    assert code == 0
    assert json.loads(out)["lower"] == pytest.approx(1.25, abs=1e-9)


def test_isotopy_exact_ellipse(tmp_path, capsys):
    """isotopy check on an exact model is Verified"""
    jet = write(tmp_path, "exact-ellipse.json", JetModel(d=2, taylor=ELLIPSE, remainder_bound=0.0))
    code, out = run_cli(["--emit", "json", "isotopy", "check", "--jet", jet], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["status"] == "Verified"
    assert "curve_f" not in data


def test_svg_output(tmp_path, capsys):
    """--svg writes plot data next to the report"""
    target = tmp_path / "triangle.svg"
    code, _ = run_cli(["--emit", "json", "--svg", str(target), "gallery", "triangle"], capsys)
    assert code == 0
    assert "<svg" in target.read_text()


def test_table_output(capsys):
    """Default output is a table for humans"""
    code, out = run_cli(["rigidity", "interior", "--d", "2"], capsys)
    assert code == 0
    assert "0.75" in out


def test_precondition_exit_code(capsys):
    """Precondition failures exit with 2"""
    code, _ = run_cli(["remez", "measure-bound", "--lambda", "0", "--n", "2", "--d", "3"], capsys)
    assert code == 2


def test_invalid_input_file_exit_code(tmp_path, capsys):
    """Schema violations in input files are precondition failures"""
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 2, "points": [[2.0, 0.0]]}))
    code, _ = run_cli(["remez", "finite", "--points", str(bad), "--d", "1"], capsys)
    assert code == 2


def test_consistency_exit_code(tmp_path, capsys, monkeypatch):
    """Internal consistency errors exit with 3"""

    def broken(*args, **kwargs):
        raise ConsistencyError("LP unbounded although Z is norming")

    monkeypatch.setattr(main.remez, "remez_finite", broken)
    points = write(tmp_path, "z.json", PointSet(n=1, points=[[-1.0], [1.0]]))
    code, _ = run_cli(["remez", "finite", "--points", points, "--d", "1"], capsys)
    assert code == 3


@pytest.mark.parametrize(
    "args",
    [["remez", "finite", "--no-such-flag"], ["--emit", "xml", "rigidity", "interior", "--d", "2"], ["nonsense"]],
)
def test_usage_exit_code(args, capsys):
    """Usage errors exit with 64"""
    code, _ = run_cli(args, capsys)
    assert code == 64


def test_config_show(capsys):
    """config show reports the effective configuration"""
    code, out = run_cli(["--emit", "json", "--seed", "5", "config", "show"], capsys)
    assert code == 0
    assert json.loads(out)["values"]["seed"] == 5


def test_gallery_commands_use_case_names(capsys):
    """Gallery subcommands are named after the case they print"""
    code, out = run_cli(["--emit", "json", "gallery", "ellipse_rectangle", "--h", "0.2"], capsys)
    assert code == 0
    assert json.loads(out)["name"] == "ellipse_rectangle"


def test_witness_test_zero_trials_is_not_replaced(tmp_path, capsys):
    """--trials 0 reaches the bound-mode check instead of falling back to the configured count"""
    family = write(tmp_path, "family.json", family_of_balls([[-0.5, 0.0], [0.5, 0.0]], [0.3, 0.2]))
    code, _ = run_cli(["remez", "witness-test", "--family", family, "--d", "2", "--trials", "0"], capsys)
    assert code == 2
