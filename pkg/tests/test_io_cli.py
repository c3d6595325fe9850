import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hermkern.cli import main
from hermkern.io import FormatError, dumps, kernel_from_dict, read_kernel, write_kernel
from hermkern.kernel_ops import KernelMatrix


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.integers(1, 2), st.integers(0, 3), st.data())
def test_json_round_trip_bitwise(d, N, data):
    K0 = KernelMatrix.zeros(d, d, N, N)
    vals = data.draw(st.lists(finite, min_size=K0.entries.size, max_size=K0.entries.size))
    K = K0.with_entries(np.array(vals).reshape(K0.shape))
    K2, meta = kernel_from_dict(json.loads(dumps(K, {"note": "x"})))
    assert meta == {"note": "x"}
    assert K2.entries.tobytes() == K.entries.tobytes()
    assert (K2.d1, K2.d2, K2.N1, K2.N2) == (d, d, N, N)


def _doc():
    return json.loads(dumps(KernelMatrix.identity(1, 2)))


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(version=2),
    lambda d: d.update(ordering="lex"),
    lambda d: d.update(d1=0),
    lambda d: d.update(N1=1.5),
    lambda d: d.update(entries=d["entries"][:-1]),
    lambda d: d.update(entries=["a"] * 9),
    lambda d: d.update(metadata=[1]),
    lambda d: d.pop("d2"),
])
def test_format_errors(mutate):
    doc = _doc()
    mutate(doc)
    with pytest.raises(FormatError):
        kernel_from_dict(doc)


def test_non_finite_rejected(tmp_path):
    p = tmp_path / "k.json"
    p.write_text(dumps(KernelMatrix.identity(1, 1)).replace("1.0", "NaN", 1))
    with pytest.raises(FormatError):
        read_kernel(p)


def test_cli_format_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "spectrum", bad)
    assert code == 2 and "not valid JSON" in err
    code, _, _ = run(capsys, "spectrum", tmp_path / "missing.json")
    assert code == 2


def test_cli_usage_errors(capsys, tmp_path):
    assert run(capsys, "gen", "nosuch:t=1")[0] == 2
    assert run(capsys)[0] == 2
    k = tmp_path / "k.json"
    run(capsys, "gen", "semigroup:t=0.5", "--N1", 4, "-o", k)
    assert run(capsys, "factor", k, "--mode", "roumieu", "--r", "-1", "--out", tmp_path / "f")[0] == 2


def test_gen_spectrum_fit(tmp_path, capsys):
    k = tmp_path / "sg.json"
    assert run(capsys, "gen", "semigroup:t=0.5", "--N1", 40, "-o", k)[0] == 0
    code, out, err = run(capsys, "spectrum", k, "--fit", "exp:d=1:s=0.5", "--schatten", "inf")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "k,sigma" and len(lines) == 42
    assert float(lines[1].split(",")[1]) == pytest.approx(np.exp(-0.5))
    rep = json.loads(err)
    assert rep["fit"]["rate"] == pytest.approx(1.0, rel=0.05)
    assert rep["schatten"]["norm"] == pytest.approx(np.exp(-0.5))


def test_factor_then_compose_round_trip(tmp_path, capsys):
    k = tmp_path / "k.json"
    run(capsys, "gen", "random:exp:s=0.5:r=2:seed=7", "--N1", 8, "-o", k)
    code, out, _ = run(capsys, "factor", k, "--mode", "roumieu", "--s", 0.5, "--out", tmp_path / "f")
    assert code == 0 and "residual=" in out
    c = tmp_path / "c.json"
    assert run(capsys, "compose", tmp_path / "f_K2.json", tmp_path / "f_K1.json", "-o", c)[0] == 0
    K, _ = read_kernel(k)
    C, meta = read_kernel(c)
    assert np.linalg.norm(C.entries - K.entries) <= 1e-12 * np.linalg.norm(K.entries)
    assert "composed" in meta


@pytest.mark.parametrize("mode", ["flat-r", "flat-b", "diag-sqrt"])
def test_factor_modes_write_files(tmp_path, capsys, mode):
    k = tmp_path / "k.json"
    spec = "semigroup:t=0.5" if mode == "diag-sqrt" else "random:flat:sigma=1:r=3:seed=3"
    run(capsys, "gen", spec, "--N1", 6, "-o", k)
    assert run(capsys, "factor", k, "--mode", mode, "--out", tmp_path / "f")[0] == 0
    names = {"flat-r": "K0", "flat-b": "K0", "diag-sqrt": "K2"}[mode]
    assert (tmp_path / f"f_{names}.json").exists()


def test_analyze_zero_kernel_exit_2(tmp_path, capsys):
    z = tmp_path / "z.json"
    write_kernel(z, KernelMatrix.zeros(1, 1, 6, 6))
    code, _, err = run(capsys, "analyze", z)
    assert code == 2 and "zero" in err


def test_analyze_reports_best(tmp_path, capsys):
    k = tmp_path / "k.json"
    run(capsys, "gen", "semigroup:t=0.5", "--N1", 20, "-o", k)
    code, out, _ = run(capsys, "analyze", k, "--candidate", "exp:s=0.5", "--candidate", "poly")
    assert code == 0 and out.splitlines()[-1].startswith("best:")


@pytest.mark.parametrize("spec", [
    "semigroup:t=0.5", "random:exp:s=1:r=2:seed=42", "random:flat:sigma=1:r=2:seed=1",
    "schwartz:order=6", "rank1:alpha=1:beta=2:lam=3",
])
def test_verify_presets_pass(tmp_path, capsys, spec):
    k = tmp_path / "k.json"
    run(capsys, "gen", spec, "--N1", 10, "-o", k)
    code, out, _ = run(capsys, "verify", k, "--suite", "all")
    rep = json.loads(out)
    assert code == 0 and rep["failures"] == [] and rep["checks"] > 0


def test_gen_is_deterministic(capsys):
    a = run(capsys, "gen", "random:exp:s=1:r=2:seed=42", "--N1", 6)[1]
    b = run(capsys, "gen", "random:exp:s=1:r=2:seed=42", "--N1", 6)[1]
    c = run(capsys, "gen", "random:exp:s=1:r=2:seed=43", "--N1", 6)[1]
    assert a == b and a != c
    assert json.loads(a)["metadata"]["seed"] == 42
