import math

import numpy as np
import pytest

from iontrap_qsvm import data, kernel
from iontrap_qsvm.circuit import Circuit, count_gates, ms, ry
from iontrap_qsvm.errors import ConfigurationError, DataError, ShapeError
from iontrap_qsvm.noise import NoiseConfig, default_calibration


@pytest.fixture(scope="module")
def digits():
    return data.load_digit_manifest()


class TestKernelCircuit:
    def test_same_input_optimized_is_empty(self):
        x = [0.3, 1.2, 2.0, 0.5]
        for enc in ("ry", "rycx"):
            assert len(kernel.kernel_circuit(x, x, enc, "opt")) == 0

    def test_rycx_optimized_has_no_entanglers(self):
        c = kernel.kernel_circuit([0.3, 1.2, 2.0, 0.5], [1.0, 0.1, 0.2, 3.0], "rycx", "opt")
        assert count_gates(c)["MS"] == 0

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_graph_gate_counts(self, n):
        rng = np.random.default_rng(n)
        a, b = (data.GraphInstance.ring(rng.standard_normal(n)) for _ in range(2))
        assert count_gates(kernel.kernel_circuit(a, b, "graph", "nonopt"))["MS"] == 2 * n
        assert count_gates(kernel.kernel_circuit(a, b, "graph", "opt"))["MS"] <= n


class TestKernelEntry:
    def test_identity_exact(self):
        assert kernel.kernel_entry(Circuit(2, ())) == 1.0

    def test_ms_quarter_exact(self):
        assert kernel.kernel_entry(Circuit(2, (ms(0, 1, math.pi / 4),))) == pytest.approx(0.5)

    def test_ms_quarter_shots(self):
        v = kernel.kernel_entry(Circuit(2, (ms(0, 1, math.pi / 4),)), shots=1024, seed=3)
        assert abs(v - 0.5) < 0.047

    def test_noisy_exact_rejected(self):
        with pytest.raises(ConfigurationError):
            kernel.kernel_entry(Circuit(1, ()), noise=default_calibration())


class TestKernelMatrix:
    def test_digit_gram_matches_oracle(self, digits):
        feats = [data.digit_features_ry(s) for s in digits.train]
        ids = [s.id for s in digits.train]
        km = kernel.kernel_matrix(feats, encoding="ry", row_ids=ids)
        oracle = kernel.analytic_kernel_matrix(feats, encoding="ry")
        assert km.shape == (6, 6)
        assert np.array_equal(km.entries, km.entries.T)
        assert np.allclose(np.diag(km.entries), 1.0, atol=1e-12)
        assert kernel.matrix_distance(km, oracle) < 1e-10
        assert km.row_ids == ids and km.mode["kind"] == "exact"

    def test_graph_gram_matches_oracle(self):
        ds = data.generate_graph_dataset(3, seed=0)
        graphs = [g for g, _ in ds.train]
        for mode in ("opt", "nonopt"):
            km = kernel.kernel_matrix(graphs, encoding="graph", mode=mode)
            oracle = kernel.analytic_kernel_matrix(graphs, encoding="graph")
            assert kernel.matrix_distance(km, oracle) < 1e-10

    def test_cross_kernel_shape(self, digits):
        tr = [data.digit_features_amplitude(s) for s in digits.train]
        te = [data.digit_features_amplitude(s) for s in digits.test]
        km = kernel.kernel_matrix(te, tr, encoding="amplitude", mode="opt")
        assert km.shape == (4, 6)
        assert kernel.matrix_distance(km, kernel.analytic_kernel_matrix(te, tr, encoding="amplitude")) < 1e-10

    def test_shot_mode_deterministic(self, digits):
        feats = [data.digit_features_ry(s) for s in digits.train]
        a = kernel.kernel_matrix(feats, shots=256, seed=4)
        b = kernel.kernel_matrix(feats, shots=256, seed=4, workers=3)
        c = kernel.kernel_matrix(feats, shots=256, seed=5)
        assert np.array_equal(a.entries, b.entries)
        assert not np.array_equal(a.entries, c.entries)
        assert a.mode == {"encoding": "ry", "transpile": "nonopt", "kind": "shots", "shots": 256,
                          "seed": 4, "pin_diagonal": False}

    def test_entry_seed_independent_of_order(self, digits):
        feats = [data.digit_features_ry(s) for s in digits.train]
        ids = [s.id for s in digits.train]
        full = kernel.kernel_matrix(feats, shots=128, seed=1, row_ids=ids)
        sub = kernel.kernel_matrix(feats[2:4], feats, shots=128, seed=1, row_ids=ids[2:4], col_ids=ids)
        assert np.array_equal(full.entries[2:4], sub.entries)

    def test_pin_diagonal(self, digits):
        feats = [data.digit_features_ry(s) for s in digits.train]
        km = kernel.kernel_matrix(feats, shots=64, noise=default_calibration(), pin_diagonal=True)
        assert np.all(np.diag(km.entries) == 1.0)
        assert km.mode["kind"] == "noisy"

    def test_bad_shots(self):
        with pytest.raises(ConfigurationError):
            kernel.kernel_matrix([[0, 0, 0, 0]], shots=0)

    def test_id_mismatch(self):
        with pytest.raises(ShapeError):
            kernel.kernel_matrix([[0, 0, 0, 0]], row_ids=["a", "b"])

    def test_inactive_noise_equals_plain_shots(self, digits):
        feats = [data.digit_features_ry(s) for s in digits.train]
        a = kernel.kernel_matrix(feats, shots=100, seed=2)
        b = kernel.kernel_matrix(feats, shots=100, seed=2, noise=NoiseConfig(enabled=False))
        assert np.array_equal(a.entries, b.entries)


class TestSerialization:
    def test_csv_round_trip(self):
        rng = np.random.default_rng(0)
        km = kernel.KernelMatrix(rng.random((3, 2)), ["a", "b", "c"], ["x", "y"])
        back = kernel.KernelMatrix.from_csv(km.to_csv())
        assert np.array_equal(back.entries, km.entries)
        assert back.row_ids == km.row_ids and back.col_ids == km.col_ids
        assert km.to_csv().splitlines()[0] == "id,x,y"

    def test_json_round_trip(self):
        km = kernel.KernelMatrix(np.array([[1.0, 1 / 3]]), ["a"], ["x", "y"], {"kind": "exact"})
        back = kernel.KernelMatrix.from_json(km.to_json())
        assert np.array_equal(back.entries, km.entries) and back.mode == km.mode

    @pytest.mark.parametrize("text", ["a,b\n1,2\n", "id,x\nr,abc\n", "id,x,y\nr,1\n"])
    def test_bad_csv(self, text):
        with pytest.raises(DataError):
            kernel.KernelMatrix.from_csv(text)

    def test_shape_checked(self):
        with pytest.raises(ShapeError):
            kernel.KernelMatrix(np.zeros((2, 2)), ["a"], ["x", "y"])


class TestMetrics:
    def test_distance(self):
        assert kernel.matrix_distance(np.eye(2), np.eye(2)) == 0
        assert kernel.matrix_distance([[1, 0], [0, 1]], [[0.9, 0], [0, 1]]) == pytest.approx(0.1)
        with pytest.raises(ShapeError):
            kernel.matrix_distance(np.eye(2), np.eye(3))

    def test_bhattacharyya_closed_forms(self):
        n = 3
        uniform = np.full(2**n, 2.0**-n)
        zero = np.eye(2**n)[0]
        assert kernel.bhattacharyya(uniform, uniform) == pytest.approx(1.0)
        assert kernel.bhattacharyya(uniform, zero) == pytest.approx(math.sqrt(2.0**-n))

    def test_classical_fidelity_noiseless(self):
        c = Circuit(2, (ry(0, 0.4), ms(0, 1, 0.3)))
        assert kernel.classical_fidelity(c) == pytest.approx(1.0)
        assert kernel.classical_fidelity(c, shots=4096, seed=1) > 0.99
        with pytest.raises(ConfigurationError):
            kernel.classical_fidelity(c, default_calibration())

    def test_classical_fidelity_drops_with_noise(self):
        c = Circuit(3, tuple(ms(0, 1, 0.7) for _ in range(6)))
        f = kernel.classical_fidelity(c, default_calibration(), shots=4096, seed=0)
        assert 0.8 < f < 0.99

    def test_shot_gram_distance_2048(self, digits):
        feats = [data.digit_features_ry(s) for s in digits.train]
        exact = kernel.kernel_matrix(feats)
        sampled = kernel.kernel_matrix(feats, shots=2048, seed=0)
        assert kernel.matrix_distance(sampled, exact) < 0.07
