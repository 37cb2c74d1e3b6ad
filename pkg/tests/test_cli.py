import csv
import json
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subwigner.cli import main, read_matrix_csv
from subwigner.config import ConfigError, config_hash, dump_config, parse_config
from subwigner.ensemble import IndexSetSpec, OverlapGeometry, make_entry_law, realize_index_family
from subwigner.theory import cov_total
from subwigner.chebfn import builtin_function

FLAGSHIP = os.path.join(os.path.dirname(__file__), "..", "configs", "flagship.toml")

MINIMAL = """
[run]
n = 32
replicas = 2

[law]
kind = "gaussian"

[[family]]
kind = "prefix"
gamma = 0.5

[[functions]]
builtin = "x2"
"""

DISJOINT = """
[run]
n = 40
replicas = 30
master_seed = 3

[law]
kind = "uniform"
sigma_sq_diag = 1.0

[[family]]
kind = "window"
a = 0.0
b = 0.5

[[family]]
kind = "window"
a = 0.5
b = 1.0

[[functions]]
coeffs = [0.0, 1.0, 0.5]
label = "x+x2/2"

[[functions]]
builtin = "gauss_bump"
w = 0.7
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_theory_minimal(tmp_path, capsys):
    out = tmp_path / "th"
    assert main(["theory", "--config", write(tmp_path, MINIMAL), "--out", str(out)]) == 0
    doc = json.loads((out / "theory.json").read_text())
    assert np.array(doc["covariance"]).shape == (1, 1)
    assert doc["covariance"][0][0] == pytest.approx(1.0)  # 4 gamma^2 at gamma = 1/2
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_hash"] == doc["config_hash"] and manifest["command"] == "theory"
    assert "covariance" in capsys.readouterr().out


def test_theory_flagship_matches_module(tmp_path):
    out = tmp_path / "th"
    assert main(["theory", "--config", FLAGSHIP, "--out", str(out)]) == 0
    cov, h = read_matrix_csv(out / "theory_cov.csv")
    assert h == json.loads((out / "theory.json").read_text())["config_hash"]
    law = make_entry_law("gaussian", 2.0)
    x, x2 = builtin_function("x"), builtin_function("x2")
    assert cov[0, 1] == cov_total(x, x, OverlapGeometry(0.5, 0.5, 0.25), law).total
    assert cov[2, 3] == pytest.approx(0.25)
    assert cov[0, 0] == pytest.approx(1.0) and cov[2, 2] == pytest.approx(1.0)


def test_theory_disjoint_pair_is_zero(tmp_path):
    out = tmp_path / "th"
    assert main(["theory", "--config", write(tmp_path, DISJOINT), "--out", str(out)]) == 0
    cov, _ = read_matrix_csv(out / "theory_cov.csv")
    assert cov[0, 1] == 0.0 and cov[1, 0] == 0.0
    k4, _ = read_matrix_csv(out / "theory_kappa4_part.csv")
    assert k4[0, 0] < 0  # uniform entries have negative kappa4


def test_simulate_smoke_files(tmp_path):
    out = tmp_path / "sim"
    code = main(["simulate", "--config", write(tmp_path, MINIMAL), "--out", str(out), "--threads", "2"])
    assert code in (0, 1)
    manifest = json.loads((out / "manifest.json").read_text())
    h = manifest["config_hash"]
    for name in manifest["outputs"]:
        assert (out / name).exists()
        if name.endswith(".csv"):
            with open(out / name, newline="") as fh:
                rows = list(csv.reader(fh))
            assert rows[0][:2] == ["config_hash", "row"]
            assert all(r[0] == h for r in rows[1:])
        elif name.endswith(".json"):
            assert json.loads((out / name).read_text())["config_hash"] == h
    samples, _ = read_matrix_csv(out / "samples.csv")
    assert samples.shape == (2, 1)
    sim = json.loads((out / "simulation.json").read_text())
    assert sim["replicas_used"] == 2 and sim["failed_replicas"] == 0


def test_csv_full_precision(tmp_path):
    out = tmp_path / "sim"
    main(["simulate", "--config", write(tmp_path, DISJOINT), "--out", str(out)])
    sim = json.loads((out / "simulation.json").read_text())
    cov, _ = read_matrix_csv(out / "sample_cov.csv")
    assert np.array_equal(cov, np.array(sim["sample_cov"]))


def test_simulate_gate_exit_code(tmp_path):
    strict = DISJOINT.replace("master_seed = 3", "master_seed = 3\nz_gate = 1e-6\nnoise_floor = 0.0")
    assert main(["simulate", "--config", write(tmp_path, strict), "--out", str(tmp_path / "a")]) == 1
    cmp = json.loads((tmp_path / "a" / "comparison.json").read_text())
    assert cmp["gate_passed"] is False


def test_simulate_seed_override_and_threads(tmp_path, monkeypatch):
    cfg = write(tmp_path, DISJOINT)
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "99"])
    monkeypatch.setenv("SUBWIGNER_THREADS", "3")
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "99"])
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "c")])
    a = (tmp_path / "a" / "samples.csv").read_text()
    assert a == (tmp_path / "b" / "samples.csv").read_text()
    assert a != (tmp_path / "c" / "samples.csv").read_text()
    assert json.loads((tmp_path / "a" / "manifest.json").read_text())["master_seed"] == 99


def test_report(tmp_path, capsys):
    out = tmp_path / "sim"
    main(["simulate", "--config", write(tmp_path, DISJOINT), "--out", str(out)])
    capsys.readouterr()
    assert main(["report", "--in", str(out)]) == 0
    text = capsys.readouterr().out
    assert "z-scores" in text and "gate" in text
    assert main(["report", "--in", str(tmp_path / "nothing")]) == 2


@pytest.mark.parametrize(
    "text, line, field",
    [
        (MINIMAL.replace('gamma = 0.5', 'gamma = = 0.5'), 11, None),
        (MINIMAL.replace('gamma = 0.5', 'gamma = 0.5\ncolour = "red"'), 12, "family[0].colour"),
        (MINIMAL.replace('kind = "gaussian"', 'kind = "cauchy"'), 7, "law.kind"),
        (MINIMAL.replace('replicas = 2', 'replicas = "two"'), 4, "run.replicas"),
        (MINIMAL.replace('builtin = "x2"', 'builtin = "tanh"'), 14, "functions[0].builtin"),
        (MINIMAL.replace('gamma = 0.5', 'gamma = 1.5'), 9, "family[0]"),
        (MINIMAL + '\n[[functions]]\nbuiltin = "x"\n', None, "functions"),
    ],
)
def test_config_errors_carry_location(text, line, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    err = info.value
    if field is not None:
        assert err.field == field
    if line is not None:
        assert err.line == line
        assert f"line {line}" in str(err)


def test_corrupted_config_exit_code(tmp_path, capsys):
    bad = write(tmp_path, MINIMAL.replace("[law]", "[law"))
    assert main(["theory", "--config", bad, "--out", str(tmp_path / "o")]) == 2
    assert "line" in capsys.readouterr().err


def test_round_trip_idempotent():
    for text in (MINIMAL, DISJOINT, open(FLAGSHIP).read()):
        once = dump_config(parse_config(text))
        assert dump_config(parse_config(once)) == once
        assert config_hash(parse_config(once)) == config_hash(parse_config(text))


_set = st.one_of(
    st.builds(lambda g: {"kind": "prefix", "gamma": g}, st.floats(0.2, 1.0)),
    st.builds(lambda a, w: {"kind": "window", "a": a, "b": min(1.0, a + w)}, st.floats(0, 0.7), st.floats(0.2, 0.5)),
    st.builds(lambda m, r: {"kind": "stride", "modulus": m, "residues": [r % m]}, st.integers(1, 5), st.integers(0, 9)),
)
_fn = st.one_of(
    st.builds(lambda n: {"builtin": n}, st.sampled_from(["x", "x2", "x3", "x4"])),
    st.builds(lambda t: {"builtin": "cos_t", "t": t}, st.floats(0.1, 3)),
    st.builds(lambda c: {"coeffs": c}, st.lists(st.floats(-5, 5), min_size=1, max_size=5)),
)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(_set, _fn), min_size=1, max_size=4), st.sampled_from(["gaussian", "rademacher", "uniform"]),
       st.integers(8, 600), st.integers(2, 5000), st.integers(0, 2**31))
def test_round_trip_property(pairs, kind, n, R, seed):
    data = {"run": {"n": n, "replicas": R, "master_seed": seed}, "law": {"kind": kind},
            "family": [p[0] for p in pairs], "functions": [p[1] for p in pairs]}
    once = dump_config(parse_config(data))
    assert dump_config(parse_config(once)) == once


def test_verify_fast_suite(capsys):
    assert main(["verify", "--max-degree", "4"]) == 0
    assert capsys.readouterr().out.count("PASS") == 6


def test_verify_mutant_fails(tmp_path, capsys):
    assert main(["verify", "--max-degree", "4", "--inject-mutant", "--out", str(tmp_path)]) == 1
    captured = capsys.readouterr()
    assert "FAIL" in captured.out and "MISMATCH" in captured.err
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert not doc["all_passed"]


def test_verify_default_suite(tmp_path, capsys):
    assert main(["verify", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert doc["all_passed"] and len(doc["suites"]) == 6
    capsys.readouterr()
    assert main(["report", "--in", str(tmp_path)]) == 0
    assert "FAIL" not in capsys.readouterr().out
