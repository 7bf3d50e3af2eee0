import io
import json

import jsonschema
import pytest

from choquard_lab.bubbles import Bubble, bubble_profile
from choquard_lab.cli import main
from choquard_lab.errors import DomainError
from choquard_lab.io import dumps, load_schema, read_profile, rows_to_csv, write_profile
from choquard_lab.radial import RadialGrid, RadialProfile


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def run_json(*argv):
    code, out, err = run(*argv)
    assert code == 0, err
    doc = json.loads(out)
    jsonschema.validate(doc, load_schema())
    return doc


@pytest.fixture
def w_profile(tmp_path):
    path = tmp_path / "w.csv"
    grid = RadialGrid(3, 1024)
    write_profile(path, bubble_profile(Bubble(3, 1.0, 2.0), grid), 1.0)
    return path


def test_constants_command():
    doc = run_json("constants", "--dim", "4", "--mu", "2")
    assert doc["result"]["S_hl"] == pytest.approx(6.5478552041828741, rel=1e-11)
    assert doc["result"]["two_star_mu"] == 3.0


def test_deficit_on_profile_file(w_profile):
    doc = run_json("deficit", str(w_profile))
    assert abs(doc["result"]["relative_deficit"]) < 1e-5
    assert doc["config"]["grid"]["n"] == 1024


def test_deficit_from_family_flags():
    doc = run_json("deficit", "--dim", "3", "--mu", "1", "--lambda", "1", "100", "--n", "1024")
    assert doc["result"]["deficit"] > 0


def test_residual_command(w_profile):
    doc = run_json("residual", str(w_profile))
    assert doc["result"]["residual_dual_norm"] < 1e-4


def test_fit_command():
    doc = run_json("fit", "--lambda", "1", "100", "--alpha", "1", "0.5", "--kappa", "2", "--n", "1024")
    assert doc["result"]["lambda"] == pytest.approx([1.0, 100.0], rel=1e-6)
    assert doc["result"]["alpha"] == pytest.approx([1.0, 0.5], rel=1e-6)


def test_spectrum_command():
    doc = run_json("spectrum", "--dim", "4", "--mu", "2", "--l", "0", "--count", "3")
    nu = doc["result"]["eigenvalues"]
    assert nu[0] == pytest.approx(1.0, abs=1e-3)
    assert nu[1] == pytest.approx(3.0, abs=1e-2)
    assert nu[2] > 3.0
    assert doc["config"]["grid"]["n"] == 1024


def test_interaction_command():
    doc = run_json("interaction", "--p", "5", "--q", "1", "--lambda-ratio", "100", "--separation", "0.5")
    assert doc["result"]["value"] > 0 and 0 < doc["result"]["Q"] < 0.1
    doc = run_json("interaction", "--p", "5", "--q", "1", "--slopes")
    assert doc["result"]["relative_error"] < 0.05


def test_kernel_test_command():
    doc = run_json("kernel-test", "--dim", "5", "--mu", "2")
    assert doc["result"]["passed"] is True


def test_sweep_command_writes_csv(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"N": 3, "mu": 1.0, "kappa": 2, "ratios": [100.0], "eps": [0.01],
                               "grid": {"n": 1024}}))
    out = tmp_path / "report.json"
    doc = run_json("sweep", str(cfg), "--out", str(out))
    assert doc["result"]["kind"] == "multi_bubble"
    assert json.loads(out.read_text()) == doc
    csv_text = out.with_suffix(".csv").read_text().splitlines()
    assert csv_text[0].startswith("scenario,") and len(csv_text) == 2


def test_sweep_decomposition_kind(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "decomposition", "N": 3, "mu": 1.0, "kappa": 2}))
    doc = run_json("sweep", str(cfg), "--seed", "4")
    assert doc["result"]["seed"] == 4


def test_csv_format():
    code, out, _ = run("constants", "--format", "csv")
    assert code == 0
    header, row = out.strip().splitlines()
    assert "S_hl" in header.split(",")


def test_determinism(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"N": 3, "mu": 1.0, "eps": [0.01, 0.1], "grid": {"n": 1024}}))
    a = run("sweep", str(cfg))[1]
    b = run("sweep", str(cfg), "--jobs", "2")[1]
    c = run("sweep", str(cfg))[1]
    assert a == c
    assert json.loads(a)["result"] == json.loads(b)["result"]


@pytest.mark.parametrize("argv", [
    ("constants", "--dim", "2"),
    ("constants", "--mu", "3"),
    ("constants", "--mu", "0"),
    ("constants", "--n", "10"),
    ("constants", "--r-min", "5", "--r-max", "1"),
    ("nonsense",),
    (),
    ("spectrum", "--l", "2"),
    ("deficit", "--lambda", "1", "2", "--alpha", "1"),
    ("sweep", "/nonexistent/config.json"),
    ("interaction", "--p", "-1", "--q", "7"),
    ("interaction", "--p", "5", "--q", "1", "--lambda-ratio", "-1"),
    ("spectrum", "--dim", "6", "--mu", "4.5"),
])
def test_invalid_input_exit_1(argv):
    code, out, err = run(*argv)
    assert code == 1
    assert out == ""
    assert err


def test_region_error_exit_1(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"N": 5, "mu": 2.0, "kappa": 2}))
    assert run("sweep", str(cfg))[0] == 1


def test_numerical_failure_exit_2(tmp_path):
    # a grid this short cannot host the kernel identity to 1e-4
    code, _, err = run("kernel-test", "--n", "64", "--r-min", "1e-2", "--r-max", "1e2")
    assert code == 2 and "numerical" in err


def test_nonintegrable_interaction_exit_2():
    # p + q = 2 < N/(N-2) = 3: the integrand is not integrable at infinity
    assert run("interaction", "--dim", "3", "--p", "1", "--q", "1")[0] == 2


def test_version_and_help():
    assert run("--version")[0] == 0
    assert run("--help")[0] == 0


# -- io ----------------------------------------------------------------------------

def test_profile_round_trip(tmp_path):
    grid = RadialGrid(4, 256, 1e-3, 1e3)
    f = RadialProfile(grid, grid.r / (1 + grid.r ** 2), 1.0, None)
    write_profile(tmp_path / "p.csv", f, 2.5)
    g, mu = read_profile(tmp_path / "p.csv")
    assert mu == 2.5
    assert g.grid == grid
    assert (g.values == f.values).all()
    assert g.tail_inner == 1.0 and g.tail_outer is None


@pytest.mark.parametrize("text", ["", "N=3\n1,2\n", "# N=3 mu=1 tail_inner=0 tail_outer=none\n1,x\n",
                                  "# N=3 mu=1 tail_inner=0 tail_outer=none\n" + "\n".join(
                                      f"{1 + k},{k}" for k in range(70))])
def test_read_profile_rejects(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(DomainError):
        read_profile(p)


def test_dumps_rounding_and_nonfinite():
    s = dumps({"b": 1.0 / 3.0, "a": float("nan"), "c": [float("inf"), 2]})
    d = json.loads(s)
    assert d == {"a": None, "b": 0.333333333333, "c": [None, 2]}
    assert s.index('"a"') < s.index('"b"')


def test_rows_to_csv():
    text = rows_to_csv([{"x": 1.0, "y": "a", "z": None}, {"x": 2.5, "y": "b", "z": 3}])
    assert text.splitlines() == ["x,y,z", "1,a,", "2.5,b,3"]
    assert rows_to_csv([]) == ""
