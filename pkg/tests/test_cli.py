import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from qfiwit.cli import SCHEMA, main, matrix_from_json, matrix_to_json, parse_grid
from qfiwit.witness import DELTA_MARGIN

UX_BOUNDARY = (1 + math.sqrt(17)) / 8


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, (out.read_text() if out.exists() else None)


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def ket0_file(tmp_path):
    p = tmp_path / "ket0.json"
    p.write_text(json.dumps(matrix_to_json(np.diag([1.0, 0.0]))))
    return str(p)


class TestParsing:
    def test_grid(self):
        assert np.allclose(parse_grid("0:1:5"), [0, 0.25, 0.5, 0.75, 1])
        assert np.allclose(parse_grid("-3:3:1"), [-3])

    @pytest.mark.parametrize("bad", ["0:1", "a:b:c", "0:1:0"])
    def test_bad_grid(self, bad):
        from qfiwit.cli import ConfigError
        with pytest.raises(ConfigError):
            parse_grid(bad)

    def test_matrix_roundtrip(self):
        m = np.array([[0.5, 0.5j], [-0.5j, 0.5]])
        assert np.array_equal(matrix_from_json(json.loads(json.dumps(matrix_to_json(m)))), m)


class TestQfiCommand:
    def test_dpc_closed_form(self, tmp_path):
        code, text = run(tmp_path, "qfi", "--channel", "dpc", "--family", "rho_plus",
                         "--lambda", "0.95", "--theta-grid", "0.1:0.9:9")
        assert code == 0
        rows = rows_of(text)
        assert len(rows) == 9
        lam = 0.95
        for r in rows:
            th = float(r["theta"])
            expect = 12 * th**2 * lam**2 / ((1 - th**2 * lam) * (1 + 3 * th**2 * lam))
            assert abs(float(r["qfi"]) - expect) <= 1e-8 * max(1, expect)
            assert np.isclose(float(r["threshold"]), 2 / (1 - th**2))

    def test_uz_zero_column(self, tmp_path):
        code, text = run(tmp_path, "qfi", "--channel", "uz", "--family", "rho_minus",
                         "--lambda", "0.7", "--theta-grid=-3:3:7")
        assert code == 0
        assert all(float(r["qfi"]) <= 1e-20 for r in rows_of(text))

    def test_malformed_channel(self, tmp_path, capsys):
        code, text = run(tmp_path, "qfi", "--channel", '{"kind": "wormhole"}', "--family",
                         "rho_plus", "--lambda", "0.5", "--theta", "0.3")
        assert code == 2 and text is None
        assert "wormhole" in capsys.readouterr().err

    @pytest.mark.parametrize("argv", [
        ["--family", "rho_plus", "--lambda", "0.5"],
        ["--channel", "dpc", "--family", "rho_plus", "--lambda", "0.5", "--theta", "1.5"],
        ["--channel", "dpc", "--family", "rho_plus", "--lambda", "1.5", "--theta", "0.5"],
        ["--channel", "dpc", "--theta", "0.5"],
        ["--channel", "dpc", "--family", "rho_plus", "--lambda", "0.5", "--theta", "0.5",
         "--copies", "0"],
    ])
    def test_config_errors(self, tmp_path, argv):
        code, text = run(tmp_path, "qfi", *argv)
        assert code == 2 and text is None

    def test_invalid_output_annotated(self, tmp_path):
        code, text = run(tmp_path, "qfi", "--channel", "tpc", "--family", "rho_plus",
                         "--lambda", "0.9", "--theta", "0.2")
        row = rows_of(text)[0]
        assert code == 0 and row["verdict"] == "invalid-output" and row["qfi"] == ""
        assert row["note"]

    def test_state_file(self, tmp_path):
        bell = np.zeros((4, 4))
        bell[np.ix_([0, 3], [0, 3])] = 0.5
        p = tmp_path / "bell.json"
        p.write_text(json.dumps({"matrix": matrix_to_json(bell)}))
        code, text = run(tmp_path, "qfi", "--channel", "uz", "--state-file", str(p), "--theta", "0.2")
        row = rows_of(text)[0]
        assert code == 0 and abs(float(row["qfi"]) - 4) < 1e-12 and row["verdict"] == "entangled"

    def test_json_schema(self, tmp_path):
        code, text = run(tmp_path, "qfi", "--channel", "ux", "--family", "rho_plus", "--lambda",
                         "0.9", "--theta", "0.5", "--format", "json")
        doc = json.loads(text)
        assert doc["schema"] == SCHEMA and doc["command"] == "qfi"
        assert doc["channel"]["kind"] == "rotation"
        row = doc["rows"][0]
        assert row["verdict"] == "entangled" and row["margin"] > DELTA_MARGIN

    def test_entangled_rows_have_margin(self, tmp_path):
        code, text = run(tmp_path, "qfi", "--channel", "tpc", "--family", "rho_minus",
                         "--lambda", "0.6", "--theta-grid", "0.02:0.98:49")
        for r in rows_of(text):
            if r["verdict"] == "entangled":
                assert float(r["margin"]) > DELTA_MARGIN

    def test_full_precision(self, tmp_path):
        code, text = run(tmp_path, "qfi", "--channel", "dpc", "--family", "rho_plus",
                         "--lambda", "0.95", "--theta", "0.7")
        row = rows_of(text)[0]
        assert float(row["qfi"]) == float(repr(float(row["qfi"])))
        assert len(row["qfi"]) > 15


class TestRegionCommand:
    def test_ux_union(self, tmp_path):
        code, text = run(tmp_path, "region", "--channel", "ux", "--family", "rho_plus")
        doc = json.loads(text)
        assert code == 0 and doc["kind"] == "RegionUnion" and len(doc["theta_grid"]) == 512
        (lo, hi), = doc["union_intervals"]
        assert abs(lo - UX_BOUNDARY) <= 1e-6 and hi == 1.0

    def test_empty_dpc_region(self, tmp_path):
        code, text = run(tmp_path, "region", "--channel", "dpc", "--theta", "0.4")
        doc = json.loads(text)
        assert code == 0 and doc["kind"] == "EntRegion"
        assert doc["lambda_intervals"] == [] and doc["theta"] == 0.4

    def test_csv_region(self, tmp_path):
        code, text = run(tmp_path, "region", "--channel", "dpc", "--theta", "0.8", "--format", "csv")
        row, = rows_of(text)
        assert abs(float(row["lower"]) - 0.91071) < 1e-5

    def test_table1(self, tmp_path):
        code, text = run(tmp_path, "table1", "--theta-grid", "0.02:0.98:17")
        lines = text.splitlines()
        assert code == 0 and len(lines) == 6
        body = {l.split("|")[0].strip(): l for l in lines[2:]}
        assert set(body) == {"UZ", "UX", "DPC", "TPC"}
        assert body["UZ"].count("No") == 3
        for name in ("UX", "DPC", "TPC"):
            assert "(" in body[name]

    def test_table1_json(self, tmp_path):
        code, text = run(tmp_path, "table1", "--theta-grid", "0.1:0.9:5", "--format", "json")
        doc = json.loads(text)
        assert doc["schema"] == SCHEMA and len(doc["rows"]) == 4


class TestOpenSystemCommand:
    def test_bell_unitary(self, tmp_path):
        code, text = run(tmp_path, "open-system", "--gamma", "0", "--state", "phi_plus",
                         "--time-grid", "0:2:5")
        rows = rows_of(text)
        assert code == 0
        for r in rows:
            if float(r["t"]) > 0:
                assert r["sharp_verdict"] == r["weak_verdict"] == "entangled"
            else:
                assert r["sharp_verdict"] == "inconclusive"

    def test_mixed_never(self, tmp_path):
        code, text = run(tmp_path, "open-system", "--gamma", "0.2", "--state", "mixed",
                         "--time-grid", "0:3:4")
        for r in rows_of(text):
            assert r["sharp_verdict"] == r["weak_verdict"] == "inconclusive"
            assert float(r["qfi"]) <= 1e-12

    def test_sharp_outlasts_weak(self, tmp_path):
        code, text = run(tmp_path, "open-system", "--gamma", "0.5", "--theta", "0.3",
                         "--state", "phi_plus", "--time-grid", "0.05:1:20")
        rows = rows_of(text)
        last = {m: max((float(r["t"]) for r in rows if r[f"{m}_verdict"] == "entangled"), default=0)
                for m in ("sharp", "weak")}
        assert last["sharp"] > last["weak"]

    def test_anisotropic_gamma(self, tmp_path):
        code, text = run(tmp_path, "open-system", "--gamma", "0.1,0.2,0.3", "--state", "phi_plus",
                         "--time-grid", "0.5:0.5:1")
        assert code == 0 and len(rows_of(text)) == 1

    def test_missing_gamma(self, tmp_path):
        code, text = run(tmp_path, "open-system", "--state", "phi_plus", "--time-grid", "0:1:2")
        assert code == 2 and text is None


class TestFisherProtocolCommand:
    def test_optimal_povm_converges(self, tmp_path, ket0_file):
        code, text = run(tmp_path, "fisher-protocol", "--channel", "dpc", "--copies", "1",
                         "--state-file", ket0_file, "--theta", "0.5", "--format", "json")
        doc = json.loads(text)
        q = doc["rows"][0]["qfi"]
        errs = [abs(r["estimate"] - q) for r in doc["rows"]]
        assert errs[-1] < errs[0] and errs[-1] < 0.01 * q
        assert np.isclose(doc["rows"][0]["reference"], q, rtol=1e-8)

    def test_identity_povm(self, tmp_path, ket0_file):
        code, text = run(tmp_path, "fisher-protocol", "--channel", "dpc", "--copies", "1",
                         "--state-file", ket0_file, "--theta", "0.5", "--povm", "identity")
        assert all(float(r["estimate"]) == 0 and float(r["symmetric"]) == 0 for r in rows_of(text))

    def test_kinds_agree(self, tmp_path, ket0_file):
        vals = {}
        for kind in ("relative-entropy", "hellinger"):
            code, text = run(tmp_path, "fisher-protocol", "--channel", "dpc", "--copies", "1",
                             "--state-file", ket0_file, "--theta", "0.5", "--kind", kind,
                             "--eps", "1e-3", "--levels", "1", name=kind)
            vals[kind] = float(rows_of(text)[-1]["symmetric"])
        a, b = vals.values()
        assert abs(a - b) <= 0.01 * a

    def test_eps_outside_domain(self, tmp_path, ket0_file):
        code, text = run(tmp_path, "fisher-protocol", "--channel", "dpc", "--copies", "1",
                         "--state-file", ket0_file, "--theta", "0.95", "--eps", "0.1")
        assert code == 2 and text is None

    def test_numerical_failure(self, tmp_path, ket0_file):
        code, text = run(tmp_path, "fisher-protocol", "--channel", "ux", "--copies", "1",
                         "--state-file", ket0_file, "--theta", "0.01", "--eps", "0.01",
                         "--levels", "1", "--povm", "computational")
        assert code == 3 and text is None


class TestDeterminism:
    ARGS = [
        ["qfi", "--channel", "tpc", "--family", "rho_plus", "--lambda", "0.55",
         "--theta-grid", "0.1:0.9:17"],
        ["qfi", "--channel", '{"kind": "lindblad", "parameters": {"gamma": [0.1, 0.1, 0.1], "t": 1}}',
         "--family", "rho_plus", "--lambda", "0.9", "--theta-grid", "0:1:3", "--seed", "7"],
        ["open-system", "--gamma", "0.3", "--theta", "0.2", "--state", "phi_plus",
         "--time-grid", "0:1:4", "--format", "json"],
    ]

    @pytest.mark.parametrize("argv", ARGS)
    def test_byte_identical(self, tmp_path, argv):
        _, a = run(tmp_path, *argv, name="a")
        _, b = run(tmp_path, *argv, name="b")
        _, c = run(tmp_path, *argv, "--workers", "3", name="c")
        assert a == b == c

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"channel": {"kind": "depolarizing"}, "family": "rho_plus",
                                   "lambda": 0.95, "theta-grid": "0.7:0.9:3"}))
        _, a = run(tmp_path, "qfi", "--config", str(cfg), name="a")
        _, b = run(tmp_path, "qfi", "--channel", "dpc", "--family", "rho_plus", "--lambda",
                   "0.95", "--theta-grid", "0.7:0.9:3", name="b")
        assert a is not None and rows_of(a) == rows_of(b)

    def test_bad_config_key(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"colour": "blue"}))
        code, text = run(tmp_path, "qfi", "--config", str(cfg))
        assert code == 2 and text is None


def test_module_entry_point(tmp_path):
    out = tmp_path / "x.csv"
    proc = subprocess.run([sys.executable, "-m", "qfiwit", "qfi", "--channel", "nope", "--theta",
                           "0.1", "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 2 and not out.exists()
    proc = subprocess.run([sys.executable, "-m", "qfiwit", "region", "--channel", "dpc",
                           "--theta", "0.8"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["schema"] == SCHEMA
