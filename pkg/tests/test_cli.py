import json
import subprocess
import sys

import pytest

from noetherkit.cli import main, parse_grid, render_text
from noetherkit.fields import read_field
from noetherkit.lagrangian import load_lagrangian


def run(capsys, *argv):
    code = main(list(argv) + ["--format", "json"])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


def run_raw(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ------------------------------------------------------------ inputs


def test_grid_forms():
    assert parse_grid("33").shape == (33, 33)
    assert parse_grid("17x9").shape == (9, 17)
    g = parse_grid("9,9,0,2,-1,1")
    assert (g.a1, g.b1, g.a2, g.b2) == (0, 2, -1, 1)


def test_bad_grid_is_usage_error(capsys):
    code, _, err = run_raw(capsys, "solve", "--lagrangian", "1/2*(z1^2+z2^2)+u", "--grid", "3")
    assert code == 2 and "error" in err


def test_lagrangian_file(capsys, tmp_path):
    path = tmp_path / "L.lag"
    path.write_text("dim = 2\nL = 1/2*(z1^2 + z2^2) + u^3 - u\n")
    code, rep = run(capsys, "derive", "--lagrangian", str(path))
    assert code == 0 and rep["config"]["source"] == str(path)


def test_malformed_expression(capsys):
    code, out, err = run_raw(capsys, "derive", "--lagrangian", "u + * z1")
    assert code == 2 and out == "" and "neither" in err


def test_missing_subcommand():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


# ------------------------------------------------------------ derive


def test_derive_poisson(capsys):
    code, rep = run(capsys, "derive", "--lagrangian", "1/2*(z1^2+z2^2) + u^3 - u")
    assert code == 0 and rep["status"] == "PASS"
    res = rep["result"]
    assert res["energy_momentum"][0][1] == "z1*z2"
    assert res["energy_momentum_symmetric"] is True
    assert res["identity"]["holds"] and len(res["noether"]) == 2


def test_derive_potential_only(capsys):
    code, rep = run(capsys, "derive", "--lagrangian", "u")
    res = rep["result"]
    assert code == 0
    assert res["euler_lagrange"] == "1"
    assert res["energy_momentum"] == [["-u", "0"], ["0", "-u"]]
    assert res["noether"] == ["-z1", "-z2"]


def test_derive_text_report(capsys):
    code, out, _ = run_raw(capsys, "derive", "--lagrangian", "u^2")
    assert code == 0
    assert out.startswith("tool: noetherkit\n") and "status: PASS" in out and "seed: 20240611" in out


def test_derive_three_dimensions(capsys):
    code, rep = run(capsys, "derive", "--lagrangian", "1/2*(z1^2+z2^2+z3^2)", "--dim", "3")
    assert code == 0 and len(rep["result"]["noether"]) == 3


# ------------------------------------------------------------ check-h


def test_check_h_violated(capsys):
    code, rep = run(capsys, "check-h", "--lagrangian", "x1*u*z1")
    assert code == 1 and rep["status"] == "VIOLATED"
    assert [v["expression"] for v in rep["result"]["violations"]] == ["u"]


def test_check_h_satisfied(capsys):
    code, rep = run(capsys, "check-h", "--lagrangian", "1/2*(1 + x1^2*u^2)*(z1^2 + z2^2) + u^3 - u")
    assert code == 0 and rep["status"] == "SATISFIED"


def test_check_h_per_index(capsys):
    code, rep = run(capsys, "check-h", "--lagrangian", "x1*z1 - x2*z2", "--mode", "per_index")
    assert code == 1 and len(rep["result"]["violations"]) == 2


# ------------------------------------------------------------ solve


def test_solve_writes_field(capsys, tmp_path):
    out = tmp_path / "u.txt"
    code, rep = run(capsys, "solve", "--lagrangian", "1/2*(z1^2+z2^2) + 1/2*u^2", "--grid", "17",
                    "--bc", "exp(x1)", "--out", str(out))
    assert code == 0 and rep["status"] == "CONVERGED"
    assert rep["result"]["solve"]["residual_inf"] <= 1e-10
    assert not rep["result"]["plateau"]["found"]
    u = read_field(out)
    assert u.grid.shape == (17, 17)
    assert rep["result"]["solution"]["max"] == pytest.approx(u.values.max())


def test_solve_nonconvergence(capsys):
    code, rep = run(capsys, "solve", "--lagrangian", "1/2*(z1^2+z2^2) + u^3 - u", "--grid", "17",
                    "--bc", "sin(3*x1) + x2", "--max-iter", "0")
    assert code == 3 and rep["status"] == "NONCONVERGENCE"
    assert rep["result"]["solve"]["converged"] is False


def test_solve_singular(capsys):
    code, _, err = run_raw(capsys, "solve", "--lagrangian", "u", "--grid", "9", "--bc", "x1")
    assert code == 3 and "singular" in err


# ------------------------------------------------------------ verify


@pytest.mark.parametrize("name", ["counterexample", "identity35"])
def test_verify_scenarios(capsys, name):
    code, rep = run(capsys, "verify", name)
    assert code == 0 and rep["status"] == "PASS"
    assert all(c["passed"] for c in rep["result"]["checks"])


def test_verify_unknown_scenario():
    with pytest.raises(SystemExit) as info:
        main(["verify", "nonsense"])
    assert info.value.code == 2


# ------------------------------------------------------------ innervar


CUBIC = "1/2*(z1^2+z2^2) + u^3"


def test_innervar_agrees(capsys):
    code, rep = run(capsys, "innervar", "--lagrangian", CUBIC, "--u", "sin(pi*x1)*x2")
    res = rep["result"]
    assert code == 0 and rep["status"] == "AGREE"
    assert res["relative_difference"] <= 1e-4 and res["bridge_relative_difference"] <= 1e-4
    assert rep["config"]["t_step"] == 1e-3 and rep["config"]["quadrature_nodes"] == 129


@pytest.mark.parametrize(
    "extra",
    [["--support", "0,0.5,0.2,0.8"], ["--h", "x1,0"], ["--t-step", "10"], ["--amplitude", "1"]],
    ids=["support", "h-edges", "t-step", "amplitude"],
)
def test_innervar_usage_errors(capsys, extra):
    code, _, err = run_raw(capsys, "innervar", "--lagrangian", CUBIC, "--u", "x1", "--grid", "33", *extra)
    assert code == 2 and err


def test_innervar_explicit_direction(capsys):
    h = "((x1-0.25)*(0.75-x1)*(x2-0.25)*(0.75-x2))^3, 0"
    code, rep = run(capsys, "innervar", "--lagrangian", CUBIC, "--u", "sin(pi*x1)*x2", "--h", h)
    assert code == 0 and rep["status"] == "AGREE"


# ------------------------------------------------------------ invert


def test_invert_alpha(capsys, tmp_path):
    out = tmp_path / "rec.lag"
    code, rep = run(capsys, "invert", "--target", "alpha=1", "--out", str(out))
    res = rep["result"]
    assert code == 0 and rep["status"] == "FEASIBLE" and res["verified"]
    assert res["lagrangian"] == "-1/2*u^2 + 1/2*z1^2 + 1/2*z2^2"
    assert load_lagrangian(out).dim == 2


def test_invert_infeasible(capsys, tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("dim = 2\nT 1 1 = 1/2*z1^2 - 1/2*z2^2 + 1/2*u^2\nT 1 2 = u*z1\n"
                    "T 2 1 = z1*z2\nT 2 2 = 1/2*z2^2 - 1/2*z1^2 + 1/2*u^2\n")
    code, rep = run(capsys, "invert", "--target", str(path))
    assert code == 1 and rep["status"] == "INFEASIBLE"
    assert rep["result"]["validation_residual"] > 0.1


def test_invert_rank_deficient(capsys):
    code, rep = run(capsys, "invert", "--target", "alpha=1", "--basis", "u^2,2*u^2")
    assert code == 3 and rep["status"] == "RANK_DEFICIENT"


def test_invert_missing_file(capsys):
    code, _, err = run_raw(capsys, "invert", "--target", "/nonexistent/target.txt")
    assert code == 2 and err


# ------------------------------------------------------------ determinism and rendering


@pytest.mark.parametrize(
    "argv",
    [
        ["derive", "--lagrangian", "1/2*(1 + x1^2)*(z1^2 + z2^2) + u^3"],
        ["invert", "--target", "alpha=1", "--seed", "5"],
        ["solve", "--lagrangian", "1/2*(z1^2+z2^2) + u", "--grid", "17"],
        ["verify", "counterexample"],
    ],
    ids=["derive", "invert", "solve", "verify"],
)
def test_byte_identical_reruns(capsys, argv):
    outs = []
    for _ in range(2):
        main(argv + ["--format", "json"])
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1] and outs[0]


def test_seed_changes_sampled_report(capsys):
    main(["invert", "--target", "alpha=1", "--seed", "1", "--format", "json"])
    a = json.loads(capsys.readouterr().out)
    main(["invert", "--target", "alpha=1", "--seed", "2", "--format", "json"])
    b = json.loads(capsys.readouterr().out)
    assert a["config"]["seed"] == 1 and b["config"]["seed"] == 2
    assert a["result"]["validation_residual"] != b["result"]["validation_residual"]


def test_text_rendering_of_multiline_strings():
    text = render_text({"a": "line1\nline2", "b": [1, 2], "c": {"d": None}})
    assert "a: |\n  line1\n  line2" in text and "b: [1, 2]" in text


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "noetherkit", "derive", "--lagrangian", "u", "--format", "json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["status"] == "PASS"
