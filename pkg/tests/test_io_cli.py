import json
import math

import numpy as np
import pytest

from kersize.cli import run_command
from kersize.ensemble import random_additive_problem
from kersize.io import (
    SpecError, canonical_json, emit_report, parse_problem_dict, parse_problem_spec,
    problem_to_dict,
)

TWO_POINT = {
    "model_class": {"points": [[0, 0], [0, 1]]},
    "noise_class": {"points": [[0]]},
    "forward": {"kind": "linear_additive", "matrix": [[1, 0]]},
}


@pytest.fixture
def spec_file(tmp_path):
    def write(data, name="problem.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)
    return write


def run(argv, capsys):
    code = run_command(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_round_trip():
    p, mu = parse_problem_dict(TWO_POINT)
    assert mu is None
    canon = canonical_json(problem_to_dict(p))
    q, _ = parse_problem_spec(canon)
    assert canonical_json(problem_to_dict(q)) == canon


def test_random_round_trip():
    for seed in range(10):
        p = random_additive_problem(seed)
        text = canonical_json(problem_to_dict(p))
        assert canonical_json(problem_to_dict(parse_problem_spec(text)[0])) == text


def test_measure_weights():
    data = dict(TWO_POINT, measure={"weights": [[0.25], [0.75]]})
    _, mu = parse_problem_dict(data)
    assert mu.weights.tolist() == [[0.25], [0.75]]


@pytest.mark.parametrize("patch, path", [
    ({"forward": {"kind": "linear_additive", "matrix": [[1, 0], [1]]}}, "forward.matrix[1]"),
    ({"model_class": {"points": [[0, 0], [0, 0]]}}, "model_class.points"),
    ({"measure": {"weights": [[0.5], [-0.5]]}}, "measure.weights"),
    ({"measure": {"weights": [[0.5, 0.5]]}}, "measure.weights"),
    ({"forward": {"kind": "sideways", "matrix": [[1, 0]]}}, "forward.kind"),
    ({"model_class": {"points": [[0, "a"]]}}, "model_class.points[0][1]"),
])
def test_positioned_errors(patch, path):
    with pytest.raises(SpecError) as err:
        parse_problem_dict(dict(TWO_POINT, **patch))
    assert err.value.path == path


def test_invalid_json():
    with pytest.raises(SpecError, match="invalid JSON"):
        parse_problem_spec("{")


def test_canonical_json_infinity():
    assert canonical_json({"b": math.inf, "a": 1}) == '{\n  "a": 1,\n  "b": "inf"\n}\n'


def test_example_command(capsys):
    code, out, _ = run(["example", "two-point", "--alpha", "0.25", "--p", "2"], capsys)
    rep = json.loads(out)
    assert code == 0
    assert rep["worst_case"]["kersize"] == 1.0
    assert rep["worst_case"]["groups"][0]["centers"] == [[0.0, 0.5]]
    assert math.isclose(rep["average"]["kersize"], math.sqrt(0.375), rel_tol=1e-12)
    assert rep["average"]["groups"][0]["outputs"] == [[0.0, 0.75]]
    assert math.isclose(rep["average"]["error"], math.sqrt(0.1875), rel_tol=1e-12)


def test_analyze_injective(spec_file, capsys):
    path = spec_file({"model_class": {"points": [[0, 0], [1, 0], [0, 2]]},
                      "forward": {"kind": "linear_additive", "matrix": [[1, 0], [0, 1]]}})
    code, out, _ = run(["analyze", "worst", "--problem", path, "--strict"], capsys)
    rep = json.loads(out)["worst_case"]
    assert code == 0 and rep["kersize"] == 0.0 and all(rep["verdicts"].values())


def test_decode(spec_file, capsys):
    path = spec_file(TWO_POINT)
    code, out, _ = run(["decode", "--problem", path, "--y", "0"], capsys)
    assert code == 0 and json.loads(out)["decode"]["outputs"] == [[0.0, 0.5]]
    path = spec_file(dict(TWO_POINT, measure={"weights": [[0.25], [0.75]]}), "mu.json")
    code, out, _ = run(["decode", "--problem", path, "--y", "0", "--mode", "avg"], capsys)
    assert json.loads(out)["decode"]["outputs"] == [[0.0, 0.75]]
    code, _, err = run(["decode", "--problem", path, "--y", "1"], capsys)
    assert code == 2 and "not the image" in err


def test_validation_exit_code(spec_file, capsys):
    bad = dict(TWO_POINT, forward={"kind": "linear_additive", "matrix": [[1, 0], [1]]})
    code, _, err = run(["analyze", "worst", "--problem", spec_file(bad)], capsys)
    assert code == 2 and "forward.matrix[1]" in err
    code, _, err = run(["analyze", "worst", "--problem", "/nonexistent.json"], capsys)
    assert code == 2


def test_strict_verdict_failure(spec_file, capsys):
    path = spec_file({"model_class": {"points": [[0, 0], [3, 4]]},
                      "forward": {"kind": "linear_additive", "matrix": [[0, 0]]}})
    code, out, _ = run(["rnsp", "--problem", path, "--d1", "1", "--d2", "1", "--strict"],
                       capsys)
    rep = json.loads(out)["rnsp"]
    assert code == 3 and rep["consequence"]["ok"] is False
    code, _, _ = run(["rnsp", "--problem", path, "--d1", "1", "--d2", "1"], capsys)
    assert code == 0


def test_evaluate_baseline(spec_file, capsys):
    path = spec_file(TWO_POINT)
    code, out, _ = run(["evaluate", "--problem", path, "--decoder", "baseline:full_feasible",
                        "--p", "1,2,inf"], capsys)
    gap = json.loads(out)["evaluation"]["decoders"][0]
    assert code == 0 and gap["worst_error"] == 1.0 and set(gap["err_a"]) == {"1.0", "2.0", "inf"}
    code, out, _ = run(["evaluate", "--problem", path,
                        "--decoder", "baseline:constant:0,0"], capsys)
    assert json.loads(out)["evaluation"]["decoders"][0]["worst_error"] == 1.0
    code, _, _ = run(["evaluate", "--problem", path, "--decoder", "baseline:nope"], capsys)
    assert code == 2


def test_evaluate_decoder_file(spec_file, tmp_path, capsys):
    path = spec_file(TWO_POINT)
    dec = tmp_path / "dec.json"
    dec.write_text(json.dumps({"outputs": [{"y": [0], "points": [[0, 0.5]]}]}))
    code, out, _ = run(["evaluate", "--problem", path, "--decoder", str(dec)], capsys)
    assert code == 0 and json.loads(out)["evaluation"]["decoders"][0]["worst_error"] == 0.5


def test_sweep(spec_file, tmp_path, capsys):
    path = spec_file(TWO_POINT)
    models = tmp_path / "models.json"
    models.write_text(json.dumps([{"kind": "linear_additive", "matrix": [[1, 0]]},
                                  {"id": "y", "kind": "linear_additive", "matrix": [[0, 1]]}]))
    code, out, _ = run(["sweep", "--problem", path, "--models", str(models)], capsys)
    rep = json.loads(out)["sweep"]
    assert code == 0 and rep["best"] == ["y"] and rep["best_kersize"] == 0.0
    code, out, _ = run(["sweep", "--problem", path, "--models", str(models),
                        "--format", "csv"], capsys)
    assert out.splitlines() == ["id,kersize,best", "0000,1.0,false", "y,0.0,true"]


def test_csv_output(spec_file, capsys):
    path = spec_file(TWO_POINT)
    code, out, _ = run(["analyze", "worst", "--problem", path, "--format", "csv"], capsys)
    lines = out.splitlines()
    assert lines[0] == "key,feasible,diameter,radius,worst_centers"
    assert lines[1] == '0,2,1.0,0.5,"[[0.0,0.5]]"'


def test_out_file_and_timing(spec_file, tmp_path, capsys):
    path = spec_file(TWO_POINT)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["analyze", "worst", "--problem", path, "--out", str(a)], capsys)[0] == 0
    assert run(["analyze", "worst", "--problem", path, "--out", str(b), "--timing"],
               capsys)[0] == 0
    ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
    assert "wall_clock_seconds" not in ra and "wall_clock_seconds" in rb
    rb.pop("wall_clock_seconds")
    assert ra == rb


def test_thread_invariance(spec_file, tmp_path, capsys):
    p = random_additive_problem(12)
    data = problem_to_dict(p)
    data["measure"] = {"weights": np.full((p.n_x, p.n_e), 1.0).tolist()}
    path = spec_file(data)
    outs = []
    for threads in ("1", "4"):
        out = tmp_path / f"t{threads}.json"
        run(["analyze", "average", "--p", "1", "--problem", path, "--threads", threads,
             "--out", str(out)], capsys)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_emit_report_rejects_unknown_format():
    with pytest.raises(ValueError):
        emit_report({}, "xml")
