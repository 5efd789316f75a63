import json
import subprocess
import sys
from io import StringIO
from pathlib import Path

import pytest

from vfalg.cli import main
from vfalg.config import parse_model

DEMOS = Path(__file__).resolve().parent.parent / "demos"

MODELS = {
    "a1": "[a1]\nkind = lattice\ngram = 2\n",
    "qa1": "[qa1]\nkind = lattice\nmode = quantum\ngram = 2\n",
    "free": "[free]\nkind = freefield\nprop[1][1] = 1/((x1-x2)^2)\n",
    "odd": "[odd]\nkind = lattice\ngram = 2 1; 1 2\ncocycle = trivial\n",
}


@pytest.fixture
def models(tmp_path):
    paths = {}
    for name, text in MODELS.items():
        paths[name] = tmp_path / f"{name}.model"
        paths[name].write_text(text, encoding="utf-8")
    return paths


def run(*argv):
    out, err = StringIO(), StringIO()
    code = main([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue().splitlines(), err.getvalue()


def test_ope_lattice(models):
    code, lines, _ = run("ope", "--model", models["a1"], "--a", "E{1}", "--b", "E{-1}",
                         "--order", "0")
    assert code == 0
    assert lines == ["x^-2: 1", "x^-1: A{1,1}", "x^0: A{1,2}"]


def test_ope_with_vacuum_and_modes(models):
    code, lines, _ = run("ope", "--model", models["a1"], "--a", "1", "--b", "E{1}",
                         "--order", "1")
    assert code == 0 and lines == ["x^0: E{1}"]
    code, lines, _ = run("ope", "--model", models["a1"], "--a", "E{1}", "--b", "E{-1}",
                         "--n", "1")
    assert "a_(1)b: 1" in lines
    code, lines, _ = run("modes", "--model", models["a1"], "--a", "E{1}", "--b", "E{-1}",
                         "--n", "0", "--n", "-1")
    assert lines == ["a_(0)b: A{1,1}", "a_(-1)b: A{1,2}"]


def test_ope_free_field(models):
    code, lines, _ = run("ope", "--model", models["free"], "--a", "PHI{1,0}",
                         "--b", "PHI{1,0}", "--order", "0")
    assert code == 0 and lines == ["x^-2: 1", "x^0: PHI{1,0}^2"]


def test_product_and_npoint(models):
    code, lines, _ = run("product", "--model", models["a1"], "--a", "E{1}", "--b", "E{-1}")
    assert code == 0
    assert lines == ["[E{1}]@x1 (x) [E{-1}]@x2: 1/((x1-x2)^2)"]
    code, lines, _ = run("npoint", "--model", models["a1"], "--states", "E{1}; E{1}")
    assert lines == ["[E{1}]@x1 (x) [E{1}]@x2: x1^2 - 2*x1*x2 + x2^2"]


def test_greens(models):
    free = models["free"]
    assert run("greens", "--model", free, "--n", "2")[1] == ["1/((x1-x2)^2)"]
    assert run("greens", "--model", free, "--n", "3")[1] == ["0"]
    code, lines, _ = run("greens", "--model", free, "--states", "PHI{1,0};PHI{1,0}")
    assert lines == ["1/((x1-x2)^2)"]
    code, _, err = run("greens", "--model", free)
    assert code == 2 and "--states" in err


def test_integrate(models):
    code, lines, _ = run("integrate", "--model", models["free"],
                         "--states", "PHI{1,0};PHI{1,0}")
    assert code == 0 and lines == ["0"]
    code, lines, _ = run("integrate", "--model", models["a1"], "--states", "E{1};E{-1}")
    assert code == 0 and lines == ["[A{1,1}]@x2: 1"]


def test_records_are_json(models):
    code, lines, _ = run("ope", "--model", models["free"], "--a", "PHI{1,0}",
                         "--b", "PHI{1,0}", "--order", "1", "--format", "records")
    recs = [json.loads(line) for line in lines]
    assert code == 0
    assert recs[0] == {"command": "ope", "name": "x^-2", "status": "ok", "payload": "1"}
    assert {r["command"] for r in recs} == {"ope"}


def test_verify_exit_codes(models):
    code, lines, _ = run("verify", "--model", models["a1"], "--degree", "2", "--samples", "4")
    assert code == 0
    assert all(line.split()[1] in ("pass", "info") for line in lines)
    code, lines, _ = run("verify", "--model", models["qa1"], "--degree", "2",
                         "--suite", "commutativity,braiding,unit")
    assert code == 0
    status = {line.split()[0]: line.split()[1] for line in lines}
    assert status == {"braiding": "pass", "commutativity": "xfail", "unit": "pass"}
    code, lines, _ = run("verify", "--model", models["odd"], "--degree", "1",
                         "--suite", "commutativity")
    assert code == 1 and "fail" in lines[0] and "inputs=" in lines[0]


def test_verify_records(models):
    code, lines, _ = run("verify", "--model", models["a1"], "--degree", "1",
                         "--suite", "unit,vacuum", "--format", "records")
    recs = [json.loads(line) for line in lines]
    assert [(r["name"], r["status"]) for r in recs] == [("unit", "pass"), ("vacuum", "pass")]


def test_verify_is_deterministic(models):
    argv = ("verify", "--model", models["qa1"], "--degree", "2", "--suite",
            "associativity,compat", "--samples", "3", "--seed", "5")
    assert run(*argv) == run(*argv)


@pytest.mark.parametrize("argv, fragment", [
    (["ope", "--a", "E{1", "--b", "1"], "column"),
    (["ope", "--a", "E{1,2}", "--b", "1"], "rank"),
    (["npoint", "--states", "E{1};;E{1}"], "';'"),
    (["verify", "--suite", "bogus"], "unknown check"),
    (["integrate", "--states", "E{1};E{1}", "--over", "3"], ""),
])
def test_input_errors(models, argv, fragment):
    code, lines, err = run(argv[0], "--model", models["a1"], *argv[1:])
    assert code == 2 and not lines
    assert fragment in err


def test_model_errors(tmp_path):
    bad = tmp_path / "bad.model"
    bad.write_text("[x]\nkind = lattice\ngram = 3\n", encoding="utf-8")
    code, _, err = run("ope", "--model", bad, "--a", "1", "--b", "1")
    assert code == 2 and "line 3" in err
    code, _, err = run("ope", "--model", tmp_path / "none.model", "--a", "1", "--b", "1")
    assert code == 2 and err


def test_usage_errors():
    assert main([], stdout=StringIO(), stderr=StringIO()) == 2
    assert main(["ope", "--model", "x"], stdout=StringIO(), stderr=StringIO()) == 2


@pytest.mark.parametrize("path", sorted(DEMOS.glob("*.model")), ids=lambda p: p.stem)
def test_demo_models_parse(path):
    assert parse_model(path).build() is not None


@pytest.mark.parametrize("script", sorted(DEMOS.glob("*.py")), ids=lambda p: p.stem)
def test_demo_scripts_run(script):
    done = subprocess.run([sys.executable, str(script)], capture_output=True, text=True,
                          timeout=120)
    assert done.returncode == 0, done.stderr
    assert done.stdout.strip()
