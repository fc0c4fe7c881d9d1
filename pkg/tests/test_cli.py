import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from momentforge.cli import (
    EXIT_INPUT, EXIT_OK, InputError, instance_from_json, instance_to_json, run,
)
from momentforge.core import MomentInstance, canonical_instance, moment_ratio

GOLDEN = Path(__file__).parent / "golden"


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, obj, name="inst.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def valid_obj(**overrides):
    obj = {"n": 2, "p": 3.0, "points": [[1.0, 0.0], [0.0, 2.0], [1.0, -1.0]],
           "probs": [0.5, 0.25, 0.25], "directions": [[1.0, 1.0], [0.0, 1.0]]}
    obj.update(overrides)
    return obj


def assert_json_close(got, want):
    assert set(got) == set(want)
    for key, value in want.items():
        if isinstance(value, float):
            assert got[key] == pytest.approx(value, rel=1e-10, abs=1e-14), key
        else:
            assert got[key] == value, key


@pytest.mark.parametrize("n,p", [(4, 2), (8, 3)])
def test_examples_golden(n, p):
    code, out, _ = call("examples", "canonical", "--n", str(n), "--p", str(p), "--json")
    assert code == EXIT_OK
    want = json.loads((GOLDEN / f"examples_canonical_n{n}_p{p}.json").read_text())
    assert_json_close(json.loads(out), want)


@pytest.mark.parametrize("n,p", [(4, 2), (8, 3)])
def test_golden_matches_closed_forms(n, p):
    g = json.loads((GOLDEN / f"examples_canonical_n{n}_p{p}.json").read_text())
    assert g["zp_pth_moment"] == pytest.approx(n ** (1 / p), rel=1e-9)
    assert g["moment_ratio"] == pytest.approx(n ** (1 / p), rel=1e-12)
    assert g["envelope"] == pytest.approx(2 * math.sqrt(math.e * (n + p) / p), rel=1e-14)


def test_examples_text_output():
    code, out, _ = call("examples", "canonical", "--n", "4", "--p", "2")
    assert code == EXIT_OK
    line = next(l for l in out.splitlines() if l.startswith("zp_pth_moment"))
    assert [float(v) for v in line.split()[1:]] == pytest.approx([2.0, 2.0], rel=1e-9)


def test_constants_csv():
    code, out, _ = call("constants", "--n", "2", "--p-grid", "4")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    assert float(rows[0]["c_exact"]) == pytest.approx(3 ** 0.25, rel=1e-14)


def test_constants_grid_rows():
    code, out, _ = call("constants", "--n", "3", "--p-grid", "2,3,4.5")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK and [float(r["p"]) for r in rows] == [2.0, 3.0, 4.5]
    assert float(rows[0]["c_exact"]) == pytest.approx(math.sqrt(3), rel=1e-14)


def test_verify_bad_probs(tmp_path):
    code, _, err = call("verify", write(tmp_path, valid_obj(probs=[0.5, 0.2, 0.2])))
    assert code == EXIT_INPUT and "error" in err


def test_verify_small_p(tmp_path):
    code, _, err = call("verify", write(tmp_path, valid_obj(p=1.5)))
    assert code == EXIT_INPUT
    assert "p" in err and "2" in err


@pytest.mark.parametrize("mutate,path", [
    (lambda o: o["points"][2].__setitem__(1, "x"), "$.points[2][1]"),
    (lambda o: o["points"].__setitem__(1, [1.0]), "$.points[1]"),
    (lambda o: o.pop("directions"), "$.directions"),
    (lambda o: o.__setitem__("n", 2.5), "$.n"),
    (lambda o: o["probs"].append(0.0), "$.probs"),
    (lambda o: o.__setitem__("p", None), "$.p"),
])
def test_malformed_field_path(tmp_path, mutate, path):
    obj = valid_obj()
    mutate(obj)
    code, _, err = call("verify", write(tmp_path, obj))
    assert code == EXIT_INPUT
    assert path in err


def test_invalid_json_location(tmp_path):
    code, _, err = call("verify", write(tmp_path, '{"n": 2,\n  "p": }'))
    assert code == EXIT_INPUT
    assert "line 2" in err


def test_missing_file(tmp_path):
    code, _, err = call("verify", str(tmp_path / "nope.json"))
    assert code == EXIT_INPUT and "nope.json" in err


def test_usage_error_is_input_error(capsys):
    assert call("verify")[0] == EXIT_INPUT
    assert call("frobnicate")[0] == EXIT_INPUT


def test_round_trip_exact(rng):
    for _ in range(50):
        n, k, l = rng.integers(1, 5), rng.integers(1, 6), rng.integers(1, 6)
        inst = MomentInstance.from_arrays(rng.standard_normal((l, n)), rng.standard_normal((k, n)),
                                          2 + 10 * rng.random(), rng.dirichlet(np.ones(l)))
        again = instance_from_json(instance_to_json(inst))
        np.testing.assert_array_equal(again.law.points, inst.law.points)
        np.testing.assert_array_equal(again.directions.directions, inst.directions.directions)
        np.testing.assert_allclose(again.law.probs, inst.law.probs, rtol=1e-15)
        assert again.p == inst.p
        assert instance_to_json(instance_from_json(instance_to_json(again))) == instance_to_json(again)


def test_instance_from_json_rejects_non_object():
    with pytest.raises(InputError, match=r"\$"):
        instance_from_json("[1, 2]")


def test_verify_json(tmp_path):
    inst = canonical_instance(3, 2)
    code, out, _ = call("verify", write(tmp_path, instance_to_json(inst)), "--json")
    result = json.loads(out)
    assert code == EXIT_OK and result["verdict"] == "pass"
    assert result["ratio"] == pytest.approx(math.sqrt(3), rel=1e-12)
    assert result["bound"] == pytest.approx(math.sqrt(3), rel=1e-12)


def test_verify_text(tmp_path):
    code, out, _ = call("verify", write(tmp_path, valid_obj()))
    assert code == EXIT_OK and "verdict" in out and "pass" in out


def test_certificate_json_and_table(tmp_path):
    path = write(tmp_path, valid_obj(p=4.0))
    code, out, _ = call("certificate", path, "--json")
    report = json.loads(out)
    assert code == EXIT_OK and report["verdict"] == "pass"
    assert report["final_ratio"] == pytest.approx(moment_ratio(instance_from_json(json.dumps(valid_obj(p=4.0)))), rel=1e-12)
    code, out, _ = call("certificate", path)
    assert code == EXIT_OK and "verdict pass" in out


def test_zp_finite_and_infinite(tmp_path):
    path = write(tmp_path, instance_to_json(canonical_instance(2, 3)))
    code, out, _ = call("zp", path, "--s", "1,0")
    assert code == EXIT_OK and float(out) == pytest.approx(2 ** (1 / 3), rel=1e-9)
    flat = write(tmp_path, valid_obj(points=[[1.0, 0.0], [-2.0, 0.0], [3.0, 0.0]]), "flat.json")
    code, out, _ = call("zp", flat, "--s", "0,1", "--json")
    result = json.loads(out)
    assert code == EXIT_OK and result["infinite"] and result["zp_norm"] is None
    assert result["span_dim"] == 1


def test_zp_wrong_length(tmp_path):
    code, _, err = call("zp", write(tmp_path, valid_obj()), "--s", "1,2,3")
    assert code == EXIT_INPUT and "--s" in err


def test_sphere_json():
    code, out, _ = call("sphere", "--n", "3", "--p", "4", "--json")
    result = json.loads(out)
    assert code == EXIT_OK and result["sphere_moment"] == pytest.approx(0.2, rel=1e-12)


def test_psumming_json():
    code, out, _ = call("psumming", "--dim", "4", "--p", "2", "--rank", "2", "--opnorm", "3", "--json")
    result = json.loads(out)
    assert code == EXIT_OK
    assert result["euclidean_pi_p"] == pytest.approx(2.0, rel=1e-12)
    assert result["identity_bound_2sqrt_e"] == pytest.approx(2 * math.sqrt(math.e * 3), rel=1e-12)
    assert result["operator_bound"] == pytest.approx(2 * math.sqrt(math.e * 2) * 3, rel=1e-12)


def test_search_json_and_trace(tmp_path, monkeypatch):
    monkeypatch.setenv("MOMENTFORGE_THREADS", "1")
    trace = tmp_path / "trace.csv"
    argv = ["search", "--n", "2", "--p", "3", "--k", "4", "--l", "4", "--restarts", "3",
            "--max-iters", "30", "--seed", "11", "--json"]
    code, out, _ = call(*argv, "--trace-csv", str(trace))
    result = json.loads(out)
    assert code == EXIT_OK and result["within_bound"]
    rows = list(csv.DictReader(trace.open()))
    assert [float(r["ratio"]) for r in rows] == result["trace"]
    assert json.loads(call(*argv)[1]) == result


def test_search_requires_seed():
    assert call("search", "--n", "2", "--p", "2")[0] == EXIT_INPUT
