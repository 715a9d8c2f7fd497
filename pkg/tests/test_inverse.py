import numpy as np
import pytest

from noetherkit import corpus
from noetherkit.expr import (
    Const,
    ParseError,
    Param,
    U,
    Z,
    differentiate,
    evaluate,
    parse,
    simplify,
    substitute,
    to_string,
)
from noetherkit.inverse import (
    LagrangianAnsatz,
    RankDeficient,
    TensorTarget,
    alpha_target,
    assemble_defining_residuals,
    default_basis,
    fit,
    format_target,
    load_target,
    parse_target,
    verify_solution,
)
from noetherkit.lagrangian import Lagrangian, energy_momentum

from strategies import random_bindings


def perturbed_target():
    rows = [[to_string(e) for e in row] for row in alpha_target(1).entries]
    rows[0][1] = "u*z1"
    return TensorTarget.from_strings(rows)


def tensor_target(L):
    T = energy_momentum(L)
    return TensorTarget(L.dim, tuple(tuple(T[i, j] for j in range(L.dim)) for i in range(L.dim)))


# ------------------------------------------------------------ targets and bases


def test_alpha_target_entries():
    T = alpha_target(1)
    assert simplify(T.entries[0][1] - parse("z1*z2")) == Const(0)
    assert simplify(T.entries[0][0] - parse("1/2*z1^2 - 1/2*z2^2 + 1/2*u^2")) == Const(0)


def test_default_basis():
    assert [to_string(b) for b in default_basis()] == ["z1^2 + z2^2", "z1^2", "z1*z2", "u", "u^2", "u^3", "1"]
    assert len(default_basis(1)) == 5


@pytest.mark.parametrize("text", ["x1*u", "w11"])
def test_ansatz_rejects_positions_and_hessians(text):
    with pytest.raises(ValueError):
        LagrangianAnsatz.from_strings(2, [text])


def test_target_rejects_positions():
    with pytest.raises(ValueError):
        TensorTarget.from_strings([["x1", "0"], ["0", "0"]])
    with pytest.raises(ValueError):
        TensorTarget.from_strings([["z1", "0"]])


# ------------------------------------------------------------ defining residuals


def test_residuals_vanish_at_known_solution():
    ansatz = LagrangianAnsatz.default()
    res = assemble_defining_residuals(ansatz, alpha_target(1))
    values = {Param(f"c{m}"): Const(0) for m in range(1, 8)}
    values[Param("c1")] = Const(0.5)
    values[Param("c5")] = Const(-0.5)
    for row in res:
        for e in row:
            assert simplify(substitute(e, values)) == Const(0)


def test_potential_basis_reproduces_minus_u2():
    ansatz = LagrangianAnsatz.from_strings(2, ["u^2"])
    target = TensorTarget.from_strings([["-u^2", "0"], ["0", "-u^2"]])
    res = assemble_defining_residuals(ansatz, target)
    one = {Param("c1"): Const(1)}
    assert all(simplify(substitute(e, one)) == Const(0) for row in res for e in row)
    assert fit(ansatz, target).coefficients[0] == pytest.approx(1.0, abs=1e-12)


def test_off_diagonal_residual_form():
    ansatz = LagrangianAnsatz.default()
    target = alpha_target(1)
    res = assemble_defining_residuals(ansatz, target)
    L = sum((c * b for c, b in zip(ansatz.coefficients, ansatz.basis)), Const(0))
    expected = Z(1) * differentiate(L, Z(2)) - target.entries[0][1]
    assert simplify(res[0][1] - expected) == Const(0)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        assemble_defining_residuals(LagrangianAnsatz.default(1), alpha_target(1))


# ------------------------------------------------------------ fit


def test_alpha_one_recovery():
    r = fit(LagrangianAnsatz.default(), alpha_target(1))
    assert r.feasible and r.validation_residual <= 1e-8
    assert r.coefficient("z1^2 + z2^2") == pytest.approx(0.5, abs=1e-8)
    assert r.coefficient("u^2") == pytest.approx(-0.5, abs=1e-8)
    others = [c for b, c in zip(r.basis, r.coefficients) if b not in ("z1^2 + z2^2", "u^2")]
    assert max(abs(c) for c in others) <= 1e-8
    assert to_string(r.lagrangian.body) == "-1/2*u^2 + 1/2*z1^2 + 1/2*z2^2"


@pytest.mark.parametrize("alpha", [0, 2, -3])
def test_alpha_family(alpha):
    r = fit(LagrangianAnsatz.default(), alpha_target(alpha))
    assert r.feasible
    assert r.coefficient("u^2") == pytest.approx(-alpha / 2, abs=1e-8)


def test_perturbed_target_is_infeasible():
    r = fit(LagrangianAnsatz.default(), perturbed_target())
    assert not r.feasible and r.validation_residual > 0.1 and r.lagrangian is None
    # only the perturbed entry pair carries the misfit
    assert r.entry_residual[0][1] > 0.1


def test_u_z1_is_not_in_the_image_span():
    # the u*z1 monomial coefficient is d2/du dz1 at the origin
    origin = {U: 0.0, Z(1): 0.0, Z(2): 0.0}

    def coeff(e):
        return evaluate(differentiate(differentiate(e, U), Z(1)), origin)

    for img in LagrangianAnsatz.default().images():
        assert all(coeff(e) == 0 for row in img for e in row)
    assert coeff(perturbed_target().entries[0][1]) == 1


def test_rank_deficient_basis():
    ansatz = LagrangianAnsatz.from_strings(2, ["u^2", "2*u^2"])
    with pytest.raises(RankDeficient) as info:
        fit(ansatz, alpha_target(1))
    assert info.value.null_dim == 1


def test_too_few_samples():
    with pytest.raises(ValueError):
        fit(LagrangianAnsatz.default(), alpha_target(1), samples=20)


def test_fit_is_deterministic():
    a = fit(LagrangianAnsatz.default(), perturbed_target(), seed=7)
    b = fit(LagrangianAnsatz.default(), perturbed_target(), seed=7)
    assert a.as_dict() == b.as_dict()


def test_fit_is_linear_in_target():
    ansatz = LagrangianAnsatz.default()
    c1 = np.array(fit(ansatz, alpha_target(1)).coefficients)
    c3 = np.array(fit(ansatz, alpha_target(3)).coefficients)
    c5 = np.array(fit(ansatz, alpha_target(5)).coefficients)
    assert np.allclose(c3 - c1, (c5 - c1) / 2, atol=1e-10)


REPRESENTABLE = [corpus.poisson(F) for F in ("u", "u^2", "u^3 - u")] + [
    corpus.helmholtz(), corpus.torsion(), corpus.potential_only("u"), corpus.potential_only("u^2"),
    Lagrangian.from_string("z1^2 + 3*z1*z2 - 2", 2),
]


@pytest.mark.parametrize("L", REPRESENTABLE, ids=lambda L: L.name or to_string(L.body))
def test_round_trip(L):
    r = fit(LagrangianAnsatz.default(), tensor_target(L))
    assert r.feasible
    assert simplify(r.lagrangian.body - L.body) == Const(0)
    assert verify_solution(r.lagrangian, tensor_target(L)).holds


def test_gram_condition_is_reported():
    r = fit(LagrangianAnsatz.default(), alpha_target(1))
    assert 1 <= r.gram_condition < 1e8
    assert LagrangianAnsatz.default().gram_condition() > 1


# ------------------------------------------------------------ verify_solution


def test_verify_known_solution():
    L = Lagrangian.from_string("1/2*(z1^2 + z2^2) - 1/2*u^2", 2)
    rep = verify_solution(L, alpha_target(1))
    assert rep.holds and rep.failing() == []


def test_verify_sign_flip_fails_diagonals():
    L = Lagrangian.from_string("-1/2*(z1^2 + z2^2) + 1/2*u^2", 2)
    rep = verify_solution(L, alpha_target(1))
    assert not rep.holds
    assert (1, 1) in rep.failing() and (2, 2) in rep.failing()


def test_verify_with_parameters():
    L = Lagrangian.from_string("1/2*(z1^2 + z2^2) - a/2*u^2", 2, params={"a": 3})
    target = TensorTarget.from_strings(
        [["1/2*z1^2 - 1/2*z2^2 + a/2*u^2", "z1*z2"], ["z1*z2", "1/2*z2^2 - 1/2*z1^2 + a/2*u^2"]],
        params={"a": 3},
    )
    assert verify_solution(L, target).holds


def test_fit_residuals_agree_with_pointwise_check():
    r = fit(LagrangianAnsatz.default(), alpha_target(1))
    T = energy_momentum(r.lagrangian)
    for b in random_bindings(20, atoms=[U, Z(1), Z(2)]):
        for i in range(2):
            for j in range(2):
                assert abs(evaluate(T[i, j], b) - evaluate(alpha_target(1).entries[i][j], b)) <= 1e-12


# ------------------------------------------------------------ target files


def test_target_roundtrip(tmp_path):
    t = alpha_target(1)
    path = tmp_path / "t.txt"
    path.write_text(format_target(t))
    back = load_target(path)
    assert back.dim == 2
    for a, b in zip(back.entries, t.entries):
        assert all(simplify(x - y) == Const(0) for x, y in zip(a, b))


def test_target_with_params():
    t = parse_target("dim = 2\nparam a = 2\nT 1 1 = a*u\nT 1 2 = 0\nT 2 1 = 0\nT 2 2 = a*u\n")
    assert float(t.params["a"]) == 2.0 and "param a = 2" in format_target(t)


@pytest.mark.parametrize(
    "text, line",
    [
        ("dim = 2\nT 1 1 = u\n", 1),
        ("dim = x\n", 1),
        ("dim = 1\nT 1 1 = u +\n", 2),
        ("dim = 1\nparam a = q\nT 1 1 = u\n", 2),
        ("dim = 1\nbogus = 1\n", 2),
        ("T 1 1 = u\n", 1),
    ],
)
def test_target_errors(text, line):
    with pytest.raises(ParseError) as info:
        parse_target(text)
    assert info.value.line == line
