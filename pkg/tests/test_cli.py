import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import curvlab.cli as cli
import curvlab.structure_group as sg
from curvlab import jsonio
from curvlab.acceptance import cyclic_block_member, random_form, random_model
from curvlab.cli import main
from curvlab.geometry_mf import PolyFunction
from curvlab.structure_group import WreathElement, sample_wreath_element
from curvlab.tensor_core import BlockModelSpace, SymForm, build_canonical


@pytest.fixture
def write(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(obj if isinstance(obj, str) else jsonio.dumps(obj))
        return str(path)

    return write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def assert_single_error_line(err):
    lines = err.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("error: ")


QUADRATIC = {"p": 3, "terms": [{"exp": [2, 0, 0], "coef": -0.5}, {"exp": [0, 2, 0], "coef": 0.5}, {"exp": [0, 0, 2], "coef": 0.5}]}
CUBIC = {"p": 3, "terms": QUADRATIC["terms"][1:] + [{"exp": [2, 0, 0], "coef": 0.5}, {"exp": [3, 0, 0], "coef": 1.0}]}


class TestBuildRphi:
    def test_identity(self, write, tmp_path, capsys):
        form = write("f.json", {"dim": 3, "entries": np.eye(3).tolist()})
        out_path = tmp_path / "t.json"
        code, out, _ = run(capsys, "build-rphi", form, str(out_path))
        assert code == 0
        assert "signature: (3, 0, 0)" in out and "kernel_dim: 0" in out
        doc = json.loads(out_path.read_text())
        assert doc["dim"] == 3 and len(doc["components"]) == 81

    def test_kernel_reported(self, write, capsys):
        form = write("f.json", {"dim": 3, "entries": np.diag([1.0, 1.0, 0.0]).tolist()})
        code, out, _ = run(capsys, "build-rphi", form)
        assert code == 0 and "kernel_dim: 1" in out

    def test_out_flag(self, write, tmp_path, capsys):
        form = write("f.json", {"dim": 2, "entries": [[1.0, 0.0], [0.0, -1.0]]})
        code, _, _ = run(capsys, "build-rphi", form, "--out", str(tmp_path / "o.json"))
        assert code == 0 and (tmp_path / "o.json").exists()

    def test_malformed(self, write, capsys):
        code, _, err = run(capsys, "build-rphi", write("bad.json", "{nope"))
        assert code == 2
        assert_single_error_line(err)

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "build-rphi", "/nonexistent/form.json")
        assert code == 2
        assert_single_error_line(err)

    def test_asymmetric_is_validation_error(self, write, capsys):
        code, _, err = run(capsys, "build-rphi", write("f.json", {"dim": 2, "entries": [[1, 2], [0, 1]]}))
        assert code == 3
        assert_single_error_line(err)


class TestCheckMembership:
    def test_cyclic_member(self, write, capsys):
        a, model = cyclic_block_member()
        code, out, _ = run(capsys, "check-membership", write("m.json", jsonio.model_to_json(model)), write("a.json", jsonio.matrix_to_json(a)))
        assert code == 0
        assert "verdict: member" in out and "sigma: (1 2 3)" in out

    def test_identity(self, write, capsys):
        model = BlockModelSpace([np.eye(2), np.eye(3)])
        code, out, _ = run(capsys, "check-membership", write("m.json", jsonio.model_to_json(model)), write("a.json", np.eye(5).tolist()))
        assert code == 0 and "sigma: ()" in out

    def test_shear(self, write, capsys):
        model = BlockModelSpace([np.eye(2), np.eye(2)])
        a = np.eye(4)
        a[0, 2] = 1.0
        code, out, _ = run(capsys, "check-membership", write("m.json", jsonio.model_to_json(model)), write("a.json", {"matrix": a.tolist()}))
        assert code == 1
        assert "verdict: non-member" in out
        assert float(out.split("residual:")[1].split()[0]) > 0.1

    def test_single_block_classification(self, write, capsys):
        phi = np.diag([1.0, 1.0, -1.0, -1.0])
        a = np.zeros((4, 4))
        a[0, 2] = a[1, 3] = a[2, 0] = a[3, 1] = 1.0
        model = write("m.json", {"blocks": [{"dim": 4, "form": phi.tolist()}]})
        code, out, _ = run(capsys, "check-membership", model, write("a.json", a.tolist()))
        assert code == 0 and "classification: ParaIsometry" in out

    def test_singular(self, write, capsys):
        model = write("m.json", {"blocks": [{"dim": 2, "form": [[1, 0], [0, 1]]}]})
        code, _, err = run(capsys, "check-membership", model, write("a.json", [[1, 1], [1, 1]]))
        assert code == 4
        assert_single_error_line(err)

    def test_inconsistent_permutation(self, write, capsys, monkeypatch):
        # only a forged membership verdict can reach the support check with a mixing map
        always = lambda a, t, tol: (True, 0.0)
        monkeypatch.setattr(sg, "is_member", always)
        monkeypatch.setattr(cli, "is_member", always)
        model = write("m.json", jsonio.model_to_json(BlockModelSpace([np.eye(2), np.eye(2)])))
        a = np.eye(4)
        a[2, 0] = 0.5
        code, _, err = run(capsys, "check-membership", model, write("a.json", a.tolist()))
        assert code == 5
        assert_single_error_line(err)

    def test_dimension_mismatch(self, write, capsys):
        model = write("m.json", {"blocks": [{"dim": 2, "form": [[1, 0], [0, 1]]}]})
        code, _, err = run(capsys, "check-membership", model, write("a.json", np.eye(3).tolist()))
        assert code == 2
        assert_single_error_line(err)


class TestInvariants:
    def test_kappa_pair(self, write, capsys):
        model = write("m.json", {"blocks": [{"dim": 2, "form": [[1, 0], [0, 1]], "scale": 2.0}, {"dim": 2, "form": [[1, 0], [0, 1]], "scale": 5.0}]})
        code, out, _ = run(capsys, "invariants", model)
        doc = json.loads(out)
        assert code == 0
        assert doc["kappa"] == [2.0, 5.0] and doc["elementary"] == [7.0, 10.0]

    def test_identity_4(self, write, capsys):
        model = write("m.json", {"blocks": [{"dim": 4, "form": np.eye(4).tolist()}]})
        code, out, _ = run(capsys, "invariants", model)
        doc = json.loads(out)
        assert abs(doc["tau"] - 12.0) <= 1e-9 and doc["ricci_eigenvalues"] == pytest.approx([3.0] * 4)

    def test_csv(self, write, capsys):
        model = write("m.json", {"blocks": [{"dim": 2, "form": [[1, 0], [0, 1]]}]})
        code, out, _ = run(capsys, "invariants", model, "--format", "csv")
        assert code == 0 and out.splitlines()[0] == "quantity,index,value"

    def test_degenerate(self, write, capsys):
        model = write("m.json", {"blocks": [{"dim": 2, "form": [[1, 0], [0, 0]]}]})
        code, _, err = run(capsys, "invariants", model)
        assert code == 6
        assert_single_error_line(err)


class TestMfAlpha:
    def test_quadratic(self, write, capsys, rng):
        code, out, _ = run(capsys, "mf-alpha", write("f.json", QUADRATIC), write("x.json", rng.standard_normal((4, 3)).tolist()))
        lines = out.strip().splitlines()
        assert code == 0 and lines[0] == "x_1,x_2,x_3,alpha,tau_ambient"
        assert all(float(row.split(",")[3]) == 0.0 for row in lines[1:-1])
        assert lines[-1].startswith("# nonconstant=false")

    def test_cubic(self, write, capsys):
        code, out, _ = run(capsys, "mf-alpha", write("f.json", CUBIC), write("x.json", [[0, 0, 0], [1, 0, 0]]))
        lines = out.strip().splitlines()
        alphas = [float(r.split(",")[3]) for r in lines[1:3]]
        taus = [float(r.split(",")[4]) for r in lines[1:3]]
        assert code == 0 and abs(alphas[0] - alphas[1]) > 1e-6
        assert max(abs(t) for t in taus) <= 1e-9
        assert lines[-1].startswith("# nonconstant=true")

    def test_json_format(self, write, capsys):
        code, out, _ = run(capsys, "mf-alpha", write("f.json", CUBIC), write("x.json", [[0, 0, 0], [1, 0, 0]]), "--format", "json")
        assert code == 0 and json.loads(out)["nonconstant"] is True

    def test_degenerate_hessian(self, write, capsys):
        code, _, err = run(capsys, "mf-alpha", write("f.json", CUBIC), write("x.json", [[-1 / 6, 0, 0]]))
        assert code == 7
        assert_single_error_line(err)

    def test_parse_error(self, write, capsys):
        code, _, err = run(capsys, "mf-alpha", write("f.json", {"p": 3}), write("x.json", [[0, 0, 0]]))
        assert code == 2
        assert_single_error_line(err)


class TestSelftest:
    def test_passes_and_is_deterministic(self, capsys):
        code, out1, _ = run(capsys, "selftest", "--scale", "0.1", "--seed", "5")
        assert code == 0
        _, out2, _ = run(capsys, "selftest", "--scale", "0.1", "--seed", "5")
        strip = lambda s: [line.rsplit(" (", 1)[0] for line in s.splitlines()]
        assert strip(out1) == strip(out2)

    def test_tight_tolerance_fails(self, capsys):
        code, out, err = run(capsys, "selftest", "--scale", "0.1", "--tol-membership", "1e-15")
        assert code == 1 and "FAIL" in out
        assert_single_error_line(err)

    def test_env_seed(self, capsys, monkeypatch):
        monkeypatch.setenv("CURVLAB_SEED", "not-a-number")
        code, _, err = run(capsys, "selftest")
        assert code == 2
        assert_single_error_line(err)

    def test_nonpositive_tolerance(self, capsys):
        code, _, err = run(capsys, "selftest", "--tol-kernel", "0")
        assert code == 2
        assert_single_error_line(err)


def test_unknown_command(capsys):
    code, _, err = run(capsys, "frobnicate")
    assert code == 2
    assert_single_error_line(err)


def test_module_entry_point(tmp_path):
    form = tmp_path / "f.json"
    form.write_text('{"dim": 2, "entries": [[1.0, 0.0], [0.0, 1.0]]}')
    proc = subprocess.run([sys.executable, "-m", "curvlab", "build-rphi", str(form)], capture_output=True, text=True, env={**os.environ})
    assert proc.returncode == 0 and "kernel_dim: 0" in proc.stdout


class TestJsonRoundTrip:
    @given(st.integers(0, 2**32 - 1))
    def test_form(self, seed):
        phi = SymForm(random_form(np.random.default_rng(seed), 2, 1))
        text = jsonio.dumps(jsonio.form_to_json(phi))
        assert jsonio.dumps(jsonio.form_to_json(jsonio.form_from_json(json.loads(text)))) == text

    @given(st.integers(0, 2**32 - 1))
    def test_tensor(self, seed):
        t = build_canonical(random_form(np.random.default_rng(seed), 1, 2))
        text = jsonio.dumps(jsonio.tensor_to_json(t))
        assert jsonio.dumps(jsonio.tensor_to_json(jsonio.tensor_from_json(json.loads(text)))) == text

    @given(st.integers(0, 2**32 - 1))
    def test_model_and_wreath(self, seed):
        r = np.random.default_rng(seed)
        model = random_model(r)
        text = jsonio.dumps(jsonio.model_to_json(model))
        back = jsonio.model_from_json(json.loads(text))
        assert back == model and jsonio.dumps(jsonio.model_to_json(back)) == text
        w = sample_wreath_element(model, r)
        wt = jsonio.dumps(w.to_json())
        assert jsonio.dumps(WreathElement.from_json(json.loads(wt)).to_json()) == wt

    def test_poly(self):
        f = PolyFunction.from_json(CUBIC)
        text = jsonio.dumps(f.to_json())
        assert jsonio.dumps(PolyFunction.from_json(json.loads(text)).to_json()) == text

    def test_scaled_model(self):
        obj = {"blocks": [{"dim": 2, "form": [[1.0, 0.0], [0.0, 1.0]], "scale": 2.5}]}
        assert jsonio.model_to_json(jsonio.model_from_json(obj)) == obj

    def test_tensor_wrong_length(self):
        with pytest.raises(ValueError):
            jsonio.tensor_from_json({"dim": 2, "components": [0.0] * 15})
