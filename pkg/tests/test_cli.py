import io
import json

import numpy as np
import pytest

from valfun import cli


def run_cli(argv, env_seed=None, monkeypatch=None):
    out = io.StringIO()
    err = io.StringIO()
    code = cli.run(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def parse(payload):
    return json.loads(payload)


def test_problems_listing():
    code, out, _ = run_cli(["problems"])
    assert code == 0
    d = parse(out)
    assert d["results"]["builtins"] == ["gan2", "gan2c", "kink", "quad", "sqdist"]
    assert d["schema_version"] == 1


def test_value_kink():
    code, out, _ = run_cli(["value", "--problem", "kink", "--x", "-2"])
    assert code == 0
    d = parse(out)
    assert abs(d["results"]["value"] - 3.0) <= 1e-6
    assert d["config"]["seed"] == 0


def test_solutions_payload_fields():
    code, out, _ = run_cli(["solutions", "--problem", "gan2", "--x", "-1,1"])
    d = parse(out)
    res = d["results"]
    assert set(res) >= {"x", "value", "solutions", "kkt_residuals",
                        "multipliers", "diagnostics"}
    assert abs(res["value"] + 2 * np.log(2)) <= 1e-6


def test_certify_gan2_nash_holds_at_zero():
    code, out, _ = run_cli(["certify", "--problem", "gan2", "--x", "-1,1",
                            "--y", "0,0"])
    assert code == 0
    d = parse(out)
    assert d["results"]["systems"]["nash"]["status"] == "holds"


def test_subdiff_limiting_hull():
    code, out, _ = run_cli(["subdiff", "--problem", "kink", "--x", "-1",
                            "--kind", "limiting"])
    d = parse(out)
    vs = [v[0] for pc in d["results"]["pieces"] for v in pc["vertices"]]
    assert min(vs) == pytest.approx(-4.0, abs=1e-6)
    assert max(vs) == pytest.approx(1.0, abs=1e-6)


def test_cq_subcommand():
    code, out, _ = run_cli(["cq", "--problem", "gan2c", "--x", "-1,1",
                            "--y", "1,0", "--lam", "0,0",
                            "--system", "mpec_branch"])
    d = parse(out)
    assert d["results"]["verdict"] == "fails"


def test_wolfe_weak_duality_exit_codes():
    code, out, _ = run_cli(["wolfe", "--problem", "quad",
                            "--check-weak-duality", "--x", "1,2", "--x", "0,0"])
    assert code == 0
    d = parse(out)
    assert d["results"]["passed"] is True
    assert d["failures"] == []


def test_oracle_subcommand():
    code, out, _ = run_cli(["oracle", "--problem", "sqdist", "--x", "0,0",
                            "--radius", "0.05", "--samples", "3"])
    d = parse(out)
    assert d["results"]["n_smooth"] == 3
    for s in d["results"]["samples"]:
        assert abs(s["grad"][0]) <= 1e-6


def test_usage_errors_exit_one():
    code, _, err = run_cli(["value", "--problem", "kink", "--x", "oops"])
    assert code == 1 and "error" in err
    code, _, _ = run_cli(["value", "--problem", "nosuch", "--x", "0"])
    assert code == 1
    code, _, _ = run_cli([])
    assert code == 1
    code, _, _ = run_cli(["value", "--x", "0"])  # no problem source
    assert code == 1


def test_golden_determinism():
    argv = ["solutions", "--problem", "gan2", "--x", "-1,1", "--seed", "5"]
    _, out1, _ = run_cli(argv)
    _, out2, _ = run_cli(argv)
    assert out1 == out2


def test_env_seed_override(monkeypatch):
    monkeypatch.setenv("VALFUN_SEED", "31")
    code, out, _ = run_cli(["value", "--problem", "kink", "--x", "0"])
    assert parse(out)["config"]["seed"] == 31


def test_param_override():
    code, out, _ = run_cli(["value", "--problem", "gan2", "--x", "0,1",
                            "--param", "z1=0", "--param", "z2=0"])
    d = parse(out)
    assert d["parameters"]["z1"] == 0.0
    # with z = 0 the optimum moves to x = s = (0, 1)
    assert abs(d["results"]["value"] + 2 * np.log(2)) <= 1e-6


def test_problem_file_loading(tmp_path):
    doc = """
[dims]
n = 1
m = 1
q = 0
[objective]
f = "0 - (y1 - x1)^2"
[y_search_box]
y1 = -4, 4
[flags]
concave_in_y = true
"""
    path = tmp_path / "prob.txt"
    path.write_text(doc)
    code, out, _ = run_cli(["value", "--problem-file", str(path), "--x", "1.5"])
    assert code == 0
    assert abs(parse(out)["results"]["value"]) <= 1e-9


def test_reports_contain_no_raw_nan_or_inf():
    for argv in (
        ["solutions", "--problem", "kink", "--x", "-1"],
        ["certify", "--problem", "gan2", "--x", "-1,1", "--y", "0,0"],
    ):
        _, out, _ = run_cli(argv)
        d = parse(out)

        def walk(node):
            if isinstance(node, dict):
                for v in node.values():
                    walk(v)
            elif isinstance(node, list):
                for v in node:
                    walk(v)
            elif isinstance(node, float):
                assert np.isfinite(node)

        walk(d)


def test_solver_section_in_problem_file(tmp_path):
    doc = """
[dims]
n = 1
m = 1
q = 0
[objective]
f = "0 - (y1 - x1)^2"
[y_search_box]
y1 = -4, 4
[flags]
concave_in_y = true
[solver]
seed = 11
n_starts = 3
grid_density = 5
"""
    path = tmp_path / "prob.txt"
    path.write_text(doc)
    _, out, _ = run_cli(["value", "--problem-file", str(path), "--x", "0.5"])
    d = parse(out)
    assert d["config"]["seed"] == 11
    assert d["config"]["n_starts"] == 3
    assert d["config"]["grid_density"] == 5
    # explicit flags win over the [solver] section
    _, out, _ = run_cli(["value", "--problem-file", str(path), "--x", "0.5",
                         "--seed", "2"])
    assert parse(out)["config"]["seed"] == 2
