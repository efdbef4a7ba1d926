import json

import numpy as np
import pytest
from click.testing import CliRunner
from hypothesis import given, strategies as st

from dbarlab.cli import main
from dbarlab.cli.config import ConfigError, build_zform, parse_config, serialize
from dbarlab.cli.expr import Bin, Call, EvalError, ExprError, Neg, Num, Var, parse_expr, to_text


# ---------------------------------------------------------------------------
# expressions

def test_expr_examples():
    assert parse_expr("conj(z1)")(np.array([1j, 0])) == -1j
    assert parse_expr("abs2(z1) - 1")(np.array([1, 0])) == 0
    e = parse_expr("pow(z1, 2) / z2")
    with pytest.raises(EvalError):
        e(np.array([1, 0]))
    assert e(np.array([2, 4])) == 1


def test_expr_literals_and_precedence():
    assert parse_expr("2.5i")(np.zeros(1)) == 2.5j
    assert parse_expr("1 - 2 - 3")(np.zeros(1)) == -4
    assert parse_expr("2 * 3 + 4 / 2")(np.zeros(1)) == 8
    assert parse_expr("-z1 * z1")(np.array([3.0])) == -9
    assert parse_expr("pow(z1, -1)")(np.array([4.0])) == 0.25
    assert parse_expr("t1 * z1")(np.array([2.0]), np.array([3.0])) == 6


@pytest.mark.parametrize("src,offset", [
    ("z1 + ", 5), ("z1 $ 2", 3), ("foo(z1)", 0), ("(z1", 3), ("z1)", 2),
    ("pow(z1, 1.5)", 8), ("conj(z1, z2)", 0), ("é + z1", 0), ("z1 + é", 5),
])
def test_expr_error_offsets(src, offset):
    with pytest.raises(ExprError) as e:
        parse_expr(src)
    assert e.value.offset == offset


def test_expr_missing_variable():
    with pytest.raises(EvalError):
        parse_expr("z3")(np.zeros(2))


def _trees():
    leaves = st.one_of(
        st.builds(Num, st.integers(0, 50), st.booleans()),
        st.builds(Num, st.floats(0.0, 1e3, allow_nan=False, allow_infinity=False), st.booleans()),
        st.builds(Var, st.sampled_from("zt"), st.integers(0, 2)),
    )

    def extend(children):
        return st.one_of(
            st.builds(Neg, children),
            st.builds(Bin, st.sampled_from("+-*/"), children, children),
            st.builds(lambda f, a: Call(f, (a,)), st.sampled_from(["conj", "re", "im", "exp", "abs2"]),
                      children),
            st.builds(lambda a, k: Call("pow", (a, Num(k))), children, st.integers(-3, 4)),
        )
    return st.recursive(leaves, extend, max_leaves=12)


@given(_trees())
def test_expr_round_trip(tree):
    text = to_text(tree)
    assert parse_expr(text).tree == tree
    assert to_text(parse_expr(text).tree) == text


POLY = ["z1 * conj(z2)", "abs2(z1) - 2i * z2", "exp(conj(z1)) * z2", "re(z1) * im(z2)",
        "pow(z1 - conj(z2), 3)", "z1 / (2 + conj(z1))", "-conj(z1) * pow(z2, -1)"]


@pytest.mark.parametrize("src", POLY)
def test_wirtinger_against_differences(src):
    e = parse_expr(src)
    rng = np.random.default_rng(1)
    z = rng.uniform(-0.5, 0.5, (5, 2)) + 1j * rng.uniform(-0.5, 0.5, (5, 2)) + np.array([0.3, 0.6])
    h = 1e-5
    for k in range(2):
        ek = np.zeros(2)
        ek[k] = h
        dx = (e(z + ek) - e(z - ek)) / (2 * h)
        dy = (e(z + 1j * ek) - e(z - 1j * ek)) / (2 * h)
        assert np.allclose(e.dzbar(k)(z), 0.5 * (dx + 1j * dy), atol=1e-7)
        assert np.allclose(e.dz(k)(z), 0.5 * (dx - 1j * dy), atol=1e-7)


# ---------------------------------------------------------------------------
# configs

def minimal(**kw):
    cfg = {"domain": {"kind": "unit-ball", "n": 2}, "operator": "Hq",
           "form": {"degree": 1, "terms": [{"zbar": [1], "coeff": "z2"}]}}
    cfg.update(kw)
    return cfg


def test_minimal_config():
    cfg = parse_config(json.dumps(minimal()))
    assert cfg.domain.n == 2 and cfg.degree == 1 and cfg.levels == (4,)
    phi = build_zform(cfg)
    assert phi.q == 1 and phi.indices == [(0,)]


def test_degree_above_n_rejected():
    text = json.dumps(minimal(form={"degree": 3, "terms": [{"zbar": [1, 2, 3], "coeff": "1"}]}),
                      indent=1)
    with pytest.raises(ConfigError) as e:
        parse_config(text)
    paths = [v.path for v in e.value.violations]
    assert "form.degree" in paths
    assert all(v.line for v in e.value.violations if v.path == "form.degree")


def test_two_terms_build():
    cfg = parse_config(json.dumps(minimal(form={"degree": 1, "terms": [
        {"zbar": [1], "coeff": "z2"}, {"zbar": [2], "coeff": "z1"}]})))
    z = np.array([[0.1 + 0.2j, 0.3]])
    vals = build_zform(cfg).evaluate(z)
    assert vals[(0,)][0] == 0.3 and vals[(1,)][0] == 0.1 + 0.2j


def test_serialize_round_trip():
    cfg = parse_config(json.dumps(minimal(levels=[2, 3], seed=4)))
    again = parse_config(serialize(cfg))
    assert serialize(again) == serialize(cfg)
    assert again.levels == (2, 3) and again.seed == 4


def test_all_violations_reported():
    bad = {"domain": {"kind": "cube", "n": 2}, "operator": "nope", "form": {"degree": -1, "terms": []},
           "levels": [9], "seed": -2, "colour": "red"}
    with pytest.raises(ConfigError) as e:
        parse_config(json.dumps(bad))
    paths = {v.path for v in e.value.violations}
    assert {"domain", "operator", "form.degree", "form.terms", "levels", "seed", "colour"} <= paths


def test_bad_json():
    with pytest.raises(ConfigError) as e:
        parse_config("{\n  \"domain\": }")
    assert e.value.violations[0].line == 2


def test_pure_form_rejects_t_variables():
    with pytest.raises(ConfigError):
        parse_config(json.dumps(minimal(form={"degree": 1, "terms": [{"zbar": [1], "coeff": "t1"}]})))


# ---------------------------------------------------------------------------
# command line

def _write(tmp_path, cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def test_solve_writes_outputs(tmp_path):
    out = tmp_path / "o"
    r = CliRunner().invoke(main, ["solve", _write(tmp_path, minimal(levels=[2])), "--out", str(out)])
    assert r.exit_code == 0, r.output
    assert json.loads(r.output.strip().splitlines()[-1])["ok"]
    for f in ("report.json", "values.csv", "samples.bin", "config.json", "metadata.json"):
        assert (out / f).exists()


def test_invalid_config_exits_2(tmp_path):
    r = CliRunner().invoke(main, ["solve", _write(tmp_path, minimal(operator="nope"))])
    assert r.exit_code == 2
    assert json.loads(r.output)["config_errors"][0]["path"] == "operator"


def test_missing_seed_exits_2():
    r = CliRunner().invoke(main, ["kernel", "koppelman", "--n", "1", "--count", "2"])
    assert r.exit_code == 2


def test_failed_check_exits_1_unless_report_only(tmp_path):
    args = ["kernel", "koppelman", "--n", "1", "--count", "5", "--seed", "0", "--tol", "1e-300",
            "--out", str(tmp_path / "k")]
    r = CliRunner().invoke(main, args)
    assert r.exit_code == 1
    r = CliRunner().invoke(main, ["--report-only"] + args)
    assert r.exit_code == 0
    assert (tmp_path / "k" / "report.json").exists()


def test_domain_check(tmp_path):
    r = CliRunner().invoke(main, ["domain", "check", "--kind", "ellipsoid", "--params", "1,0.75",
                                  "--samples", "200", "--seed", "1", "--out", str(tmp_path / "d")])
    assert r.exit_code == 0, r.output
