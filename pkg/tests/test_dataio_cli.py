import json
import os
from pathlib import Path

import numpy as np
import pytest

from sqreg.cli import cli_main
from sqreg.core import Dataset
from sqreg.dataio import (DataError, dump_json, fit_result_payload,
                          read_config, read_csv, write_csv)
from sqreg.mio import solve_enumeration
from sqreg.tuning import lambda_from_c

DATA_DIR = Path(__file__).parent / "data"
FIXTURE = str(DATA_DIR / "fixture.csv")
GOLDEN = DATA_DIR / "golden_fit.json"


class TestReadCsv:
    def test_small_numeric_file(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,y\n1.5,2.0\n2.5,3.0\n-1.0,0.5\n")
        d = read_csv(path, "y")
        assert (d.n, d.p) == (3, 1)
        assert d.names == ("a",)
        assert d.y == pytest.approx([2.0, 3.0, 0.5])

    def test_header_only_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,y\n")
        with pytest.raises(DataError, match="no data rows"):
            read_csv(path, "y")

    def test_non_numeric_cells_reported_with_lines(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,y\n1.0,2.0\nfoo,3.0\n2.0,bar\n")
        with pytest.raises(DataError) as err:
            read_csv(path, "y")
        assert "line 3" in str(err.value)
        assert "line 4" in str(err.value)

    def test_ragged_rows_reported(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b,y\n1,2,3\n1,2\n")
        with pytest.raises(DataError, match="line 3"):
            read_csv(path, "y")

    def test_missing_response_column(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DataError, match="no column named"):
            read_csv(path, "z")

    def test_round_trip_full_precision(self, tmp_path, rng):
        d = Dataset(rng.normal(size=(12, 3)), rng.normal(size=12),
                    names=("u", "v", "w"))
        path = tmp_path / "rt.csv"
        write_csv(d, path, response="resp")
        back = read_csv(path, "resp")
        assert np.array_equal(back.X, d.X)
        assert np.array_equal(back.y, d.y)
        assert back.names == d.names


class TestConfigAndJson:
    def test_read_config(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# study\np = 10\nn=100 # inline\nmethods=l1_pqr\n\n")
        cfg = read_config(path)
        assert cfg == {"p": "10", "n": "100", "methods": "l1_pqr"}

    def test_bad_config_line(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("p 10\n")
        with pytest.raises(DataError):
            read_config(path)

    def test_dump_json_is_sorted_and_stable(self, tmp_path):
        payload = {"b": 1, "a": [1.5, 2.5]}
        text = dump_json(payload)
        assert text == dump_json(payload)
        assert text.index('"a"') < text.index('"b"')


class TestCliFit:
    def test_golden_payload_reproduced(self, tmp_path):
        # the stored golden was cross-checked against the enumeration
        # oracle when it was generated; re-verify both facts here
        out = tmp_path / "fit.json"
        rc = cli_main(["fit", "--data", FIXTURE, "--response", "resp",
                       "--method", "l0pqr", "--tau", "0.5", "--c", "1.0",
                       "--k0", "4", "--seed", "11", "--out", str(out)])
        assert rc == 0
        got = json.loads(out.read_text())
        want = json.loads(GOLDEN.read_text())
        for record in (got, want):
            record["result"].pop("timing")       # volatile
            record["config"].pop("out")          # run-specific paths
            record["config"].pop("data")
        assert got == want
        data = read_csv(FIXTURE, "resp")
        enum = solve_enumeration(data, 0.5, lambda_from_c(1.0, data), 4)
        fo_obj = got["result"]["objective"]["penalized"]
        assert fo_obj <= enum.obj_penalized + 2e-4
        assert got["result"]["support"] == list(enum.support)

    def test_same_seed_bit_identical(self, tmp_path):
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            rc = cli_main(["fit", "--data", FIXTURE, "--response", "resp",
                           "--method", "l1pqr", "--c", "0.8", "--seed", "7",
                           "--out", str(out)])
            assert rc == 0
            record = json.loads(out.read_text())
            record["result"].pop("timing")
            record["config"].pop("out")
            outs.append(json.dumps(record, sort_keys=True))
        assert outs[0] == outs[1]

    def test_payload_embeds_resolved_config(self, tmp_path):
        out = tmp_path / "fit.json"
        cli_main(["fit", "--data", FIXTURE, "--response", "resp",
                  "--method", "qr", "--seed", "3", "--out", str(out)])
        cfg = json.loads(out.read_text())["config"]
        for key in ("data", "response", "method", "tau", "seed", "c", "q",
                    "k0", "box", "eps", "restarts", "alpha", "time_limit"):
            assert key in cfg


class TestCliExactAndTune:
    def test_exact_enum_agrees_with_bnb(self, tmp_path):
        payloads = {}
        for solver in ("enum", "bnb"):
            out = tmp_path / f"{solver}.json"
            rc = cli_main(["exact", "--data", FIXTURE, "--response", "resp",
                           "--solver", solver, "--c", "1.0", "--k0", "3",
                           "--gap-tol", "1e-8", "--restarts", "2",
                           "--out", str(out)])
            assert rc == 0
            payloads[solver] = json.loads(out.read_text())
        a = payloads["enum"]["result"]["objective"]["penalized"]
        b = payloads["bnb"]["result"]["objective"]["penalized"]
        assert b == pytest.approx(a, abs=1e-8)

    def test_tune_selects_and_reports(self, tmp_path):
        out = tmp_path / "tune.json"
        rc = cli_main(["tune", "--data", FIXTURE, "--response", "resp",
                       "--method", "l1pqr", "--valid-frac", "0.4",
                       "--seed", "2", "--out", str(out)])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["selected"] is not None
        assert payload["data"]["n_train"] + payload["data"]["n_valid"] == 40
        table = payload["risk_table"].splitlines()
        assert table[0] == "value,valid_risk,sparsity,error"
        assert len(table) == 22  # header + the 21-point low-dimensional grid


class TestCliSimulateAndConformal:
    def test_simulate_writes_schema_csv(self, tmp_path):
        cfg = tmp_path / "study.cfg"
        cfg.write_text("p=6\nn=40\ns=2\nreps=2\nseed=4\nmethods=l1_pqr\n"
                       "n_test=200\nn_valid=40\njsonl=1\n")
        out = tmp_path / "study"
        rc = cli_main(["simulate", "--config", str(cfg), "--out", str(out)])
        assert rc == 0
        header = (tmp_path / "study.csv").read_text().splitlines()[0]
        assert header.split(",") == ["rep", "method", "selected", "corr_sel",
                                     "orac_sel", "num_irrel", "sparsity",
                                     "l2_error", "fit_mse", "in_rr", "out_rr",
                                     "hamming"]
        payload = json.loads((tmp_path / "study.json").read_text())
        assert "aggregate" in payload and "l1_pqr" in payload["aggregate"]
        lines = (tmp_path / "study.jsonl").read_text().splitlines()
        assert len(lines) == 2
        assert {json.loads(line)["method"] for line in lines} == {"l1_pqr"}

    def test_simulate_deterministic(self, tmp_path):
        cfg = tmp_path / "study.cfg"
        cfg.write_text("p=6\nn=40\ns=2\nreps=2\nseed=4\nmethods=l1_pqr\n"
                       "n_test=100\nn_valid=30\n")
        texts = []
        for stem in ("s1", "s2"):
            rc = cli_main(["simulate", "--config", str(cfg),
                           "--out", str(tmp_path / stem)])
            assert rc == 0
            texts.append((tmp_path / f"{stem}.csv").read_text())
        assert texts[0] == texts[1]

    def test_conformal_pipeline_runs(self, tmp_path):
        out = tmp_path / "conf.json"
        iv = tmp_path / "intervals.csv"
        rc = cli_main(["conformal", "--data", FIXTURE, "--response", "resp",
                       "--method", "l1pqr", "--alpha", "0.2", "--seed", "5",
                       "--intervals-out", str(iv), "--out", str(out)])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert 0.0 <= payload["coverage"] <= 1.0
        assert payload["split_sizes"] == [10, 10, 10, 10]
        lines = iv.read_text().splitlines()
        assert lines[0] == "lower,upper,covered"
        assert len(lines) == 11


class TestCliErrors:
    def test_missing_file_exit_code(self, capsys):
        rc = cli_main(["fit", "--data", "/does/not/exist.csv",
                       "--response", "y", "--method", "qr"])
        assert rc == 3
        record = json.loads(capsys.readouterr().err)
        assert record["error"]["exit_code"] == 3

    def test_bad_flags_exit_code(self, capsys):
        assert cli_main(["fit", "--nonsense"]) == 2

    def test_bad_value_exit_code(self, capsys):
        rc = cli_main(["fit", "--data", FIXTURE, "--response", "resp",
                       "--method", "l0cqr"])  # missing --q
        assert rc == 3
        record = json.loads(capsys.readouterr().err)
        assert record["error"]["kind"] == "input"

    def test_help_exits_zero(self):
        assert cli_main(["--help"]) == 0


def test_fit_result_payload_names():
    from sqreg.core import FitResult

    fit = FitResult(theta=np.array([0.0, 1.5, 0.0]), support=(1,),
                    obj_unpenalized=0.5, obj_penalized=0.6, iterations=3,
                    converged=True, wall_seconds=0.1)
    payload = fit_result_payload(fit, names=("a", "b", "c"))
    assert payload["selected_names"] == ["b"]
    assert payload["coefficients"] == [0.0, 1.5, 0.0]
