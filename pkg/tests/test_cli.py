import csv
import io
import json

import numpy as np
import pytest

from iontrap_qsvm import cli, data, experiments, kernel, svm
from iontrap_qsvm.circuit import count_gates, parse_circuit
from iontrap_qsvm.errors import ConvergenceError
from iontrap_qsvm.noise import default_calibration


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestUsage:
    def test_no_command(self, capsys):
        with pytest.raises(SystemExit) as e:
            cli.main([])
        assert e.value.code == 2

    def test_bad_shots(self, capsys):
        with pytest.raises(SystemExit) as e:
            cli.main(["experiment", "digits", "--shots", "many"])
        assert e.value.code == 2

    def test_bad_encoding(self, capsys):
        with pytest.raises(SystemExit) as e:
            cli.main(["kernel", "--encoding", "xyz"])
        assert e.value.code == 2

    def test_noisy_exact_is_config_error(self, capsys):
        code, _, err = run(["experiment", "digits", "--noise", "default"], capsys)
        assert code == 2 and "shot count" in err


class TestDataset:
    def test_graphs_reproducible(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run(["dataset", "graphs", "--n", "4", "--seed", "7", "--out", str(a)], capsys)[0] == 0
        assert run(["dataset", "graphs", "--n", "4", "--seed", "7", "--out", str(b)], capsys)[0] == 0
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text() == data.generate_graph_dataset(4, seed=7).to_json()

    def test_generation_failure_exit_code(self, capsys):
        code, _, err = run(["dataset", "graphs", "--n", "3", "--train", "1", "--test", "0"], capsys)
        assert code == 3 and "single class" in err

    def test_digits_and_inspect(self, tmp_path, capsys):
        f = tmp_path / "d.json"
        assert run(["dataset", "digits", "--out", str(f)], capsys)[0] == 0
        code, out, _ = run(["dataset", "inspect", str(f)], capsys)
        assert code == 0 and "train 6 (+1: 3, -1: 3)" in out and "optdigits.tes:31" in out

    def test_digits_from_source(self, tmp_path, capsys):
        src = tmp_path / "x.tes"
        src.write_text(",".join(["0"] * 64) + ",0\n" + ",".join(["16"] * 64) + ",1\n")
        code, out, _ = run(["dataset", "digits", "--source", str(src)], capsys)
        d = json.loads(out)
        assert code == 0 and [s["label"] for s in d["train"]] == [1, -1]

    def test_inspect_missing(self, tmp_path, capsys):
        assert run(["dataset", "inspect", str(tmp_path / "none.json")], capsys)[0] == 3


class TestKernelTrainPredict:
    def test_kernel_matches_oracle(self, capsys):
        code, out, _ = run(["kernel", "--encoding", "ry"], capsys)
        assert code == 0
        km = kernel.KernelMatrix.from_csv(out)
        ds = data.load_digit_manifest()
        oracle = kernel.analytic_kernel_matrix([data.digit_features_ry(s) for s in ds.train], encoding="ry")
        assert km.shape == (6, 6)
        assert kernel.matrix_distance(km, oracle) < 1e-10
        assert km.row_ids == [s.id for s in ds.train]

    def test_pipeline(self, tmp_path, capsys):
        gram, cross, model, pred = (tmp_path / n for n in ("g.csv", "c.csv", "m.json", "p.csv"))
        for args in (
            ["kernel", "--encoding", "amplitude", "--mode", "opt", "--out", str(gram)],
            ["kernel", "--encoding", "amplitude", "--mode", "opt", "--rows", "test", "--out", str(cross)],
            ["train", "--kernel", str(gram), "--out", str(model)],
            ["predict", "--model", str(model), "--kernel", str(cross), "--out", str(pred)],
        ):
            code, _, err = run(args, capsys)
            assert code == 0, err
        assert "accuracy 4/4 (100.0%)" in err
        rows = list(csv.DictReader(io.StringIO(pred.read_text())))
        assert [int(r["prediction"]) for r in rows] == [int(r["label"]) for r in rows]
        assert len(rows) == 4

    def test_graph_kernel(self, tmp_path, capsys):
        ds = tmp_path / "g.json"
        run(["dataset", "graphs", "--n", "3", "--seed", "1", "--out", str(ds)], capsys)
        code, out, _ = run(["kernel", "--dataset", str(ds), "--mode", "opt", "--shots", "64"], capsys)
        km = kernel.KernelMatrix.from_csv(out)
        assert code == 0 and km.shape == (20, 20)

    def test_train_missing_labels(self, tmp_path, capsys):
        f = tmp_path / "k.csv"
        f.write_text(kernel.KernelMatrix(np.eye(2), ["a", "b"], ["a", "b"]).to_csv())
        assert run(["train", "--kernel", str(f)], capsys)[0] == 3

    def test_convergence_exit_code(self, tmp_path, capsys, monkeypatch):
        gram = tmp_path / "g.csv"
        run(["kernel", "--out", str(gram)], capsys)

        def fail(*a, **k):
            raise ConvergenceError("no")

        monkeypatch.setattr(svm, "train", fail)
        assert run(["train", "--kernel", str(gram)], capsys)[0] == 4


class TestExperiments:
    def test_digits_exact(self, capsys):
        code, out, _ = run(["experiment", "digits", "--encoding", "ry"], capsys)
        rep = json.loads(out)
        assert code == 0
        assert rep["accuracy"]["train"]["percent"] == "100.0"
        assert rep["accuracy"]["test"] == {"correct": 4, "total": 4, "percent": "100.0"}
        assert rep["distance"] == {"train": 0.0, "test": 0.0}
        assert rep["provenance"]["config_hash"]

    def test_digits_shots(self, capsys):
        rep = experiments.run_digits("ry", "nonopt", 2048, seed=0)
        assert rep.train_percent == rep.test_percent == 100.0
        assert rep.train_distance < 0.06 and rep.test_distance < 0.06

    def test_amplitude_noisy_distance_band(self):
        rep = experiments.run_digits("amplitude", "nonopt", 1024, seed=0, noise=default_calibration())
        assert 0.2 <= rep.train_distance <= 0.8
        assert 0 <= rep.train_percent <= 100 and 0 <= rep.test_percent <= 100

    def test_graphs_exact(self):
        rep = experiments.run_graphs(3, "opt", None, seed=0)
        assert (rep.train_percent, rep.test_percent) == (100.0, 100.0)
        assert rep.train_distance == rep.test_distance == 0.0
        assert rep.fidelity and all(b["mean_infidelity"] == 0 for b in rep.fidelity.values())

    def test_graphs_n5_shots(self):
        rep = experiments.run_graphs(5, "opt", 1024, seed=0, fidelities=False)
        assert (rep.train_percent, rep.test_percent) == (100.0, 100.0)
        assert rep.train_distance < 0.05

    def test_graphs_n5_noise_ordering(self):
        ds = data.generate_graph_dataset(5, seed=0)
        kw = dict(shots=1024, seed=0, noise=default_calibration(), dataset=ds, fidelities=False)
        nonopt = experiments.run_graphs(5, "nonopt", **kw)
        opt = experiments.run_graphs(5, "opt", **kw)
        assert nonopt.train_distance > opt.train_distance

    def test_report_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["experiment", "graphs", "--n", "3", "--shots", "256", "--noise", "default"]
        assert run(args + ["--out", str(a)], capsys)[0] == 0
        assert run(args + ["--out", str(b)], capsys)[0] == 0
        assert a.read_bytes() == b.read_bytes()
        rep = json.loads(a.read_text())
        assert rep["config"]["noise"] == default_calibration().to_dict()
        assert "timing_s" not in rep

    def test_timing_opt_in(self, capsys):
        code, out, _ = run(["experiment", "graphs", "--n", "3", "--timing"], capsys)
        assert code == 0 and "timing_s" in json.loads(out)

    def test_grid_shapes(self):
        rows = experiments.digits_grid(exact=True)
        assert len(rows) == 13
        assert len({(r.config["encoding"], r.config["mode"]) for r in rows}) == 5
        graphs = experiments.graphs_grid(exact=True, fidelities=False)
        assert [(r.config["n"], r.config["mode"]) for r in graphs] == [
            (n, m) for n in (3, 4, 5) for m in ("nonopt", "opt")]
        assert all(r.train_percent == r.test_percent == 100.0 for r in rows + graphs)
        table = experiments.format_reports(graphs)
        assert len(table.splitlines()) == 2 + 6

    def test_graph_dataset_flag(self, tmp_path, capsys):
        f = tmp_path / "d.json"
        f.write_text(json.dumps(data.load_digit_manifest().to_dict()))
        assert run(["experiment", "graphs", "--dataset", str(f)], capsys)[0] == 3


class TestTranspile:
    def test_cx_only(self, tmp_path, capsys):
        f = tmp_path / "c.txt"
        f.write_text("CX 0,1\n")
        code, out, err = run(["transpile", str(f), "--mode", "nonopt"], capsys)
        c = parse_circuit(out)
        assert code == 0 and count_gates(c)["MS"] == 1 and count_gates(c)["CX"] == 0
        assert "CX: 1 -> 0" in err and "MS: 0 -> 1" in err

    def test_cancelling_pair_shortens(self, tmp_path, capsys):
        f = tmp_path / "c.txt"
        f.write_text("# qubits 2\nRY 0 0.5\nMS 0,1 0.3\nMS 0,1 -0.3\nRY 0 0.25\n")
        code, out, err = run(["transpile", str(f)], capsys)
        assert code == 0
        assert parse_circuit(out).gates == parse_circuit("RY 0 0.75\n").gates
        assert "total: 4 -> 1 (-3)" in err

    def test_empty(self, tmp_path, capsys):
        f = tmp_path / "c.txt"
        f.write_text("")
        out = tmp_path / "o.txt"
        assert run(["transpile", str(f), "--out", str(out)], capsys)[0] == 0
        assert out.read_text() == ""

    def test_parse_error_location(self, tmp_path, capsys):
        f = tmp_path / "c.txt"
        f.write_text("RY 0 0.1\nBAD 0\n")
        code, _, err = run(["transpile", str(f)], capsys)
        assert code == 3 and "line 2" in err

    def test_h_rejected(self, tmp_path, capsys):
        f = tmp_path / "c.txt"
        f.write_text("H 0\n")
        assert run(["transpile", str(f)], capsys)[0] == 3


class TestFigure3:
    def test_pool_by_ms_count(self):
        rows = [
            {"ms_gates": 3, "n": 3, "mode": "opt", "circuits": 3, "mean_infidelity": 0.1},
            {"ms_gates": 3, "n": 4, "mode": "opt", "circuits": 1, "mean_infidelity": 0.5},
            {"ms_gates": 6, "n": 3, "mode": "nonopt", "circuits": 2, "mean_infidelity": 0.3},
        ]
        pooled = experiments.pool_by_ms_count(rows)
        assert pooled[0] == {"ms_gates": 3, "circuits": 4, "mean_infidelity": 0.2, "sources": "n3-opt;n4-opt"}
        assert pooled[1]["ms_gates"] == 6

    def test_noiseless_exact(self, capsys):
        code, out, _ = run(["figure3", "--noise", "off", "--shots", "exact"], capsys)
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0
        assert {int(r["ms_gates"]) for r in rows} >= {3, 4, 5, 6, 8, 10}
        assert all(float(r["mean_infidelity"]) == 0 for r in rows)
