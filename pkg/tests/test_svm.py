import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iontrap_qsvm import data, kernel, svm
from iontrap_qsvm.errors import ConvergenceError, DataError, ShapeError, TrainingError
from svm_reference import kkt_gap, solve_dual


def random_instance(seed):
    rng = np.random.default_rng(seed)
    L = int(rng.integers(2, 11))
    d = int(rng.integers(1, 6))
    X = rng.standard_normal((L, d))
    if rng.random() < 0.5:
        K = X @ X.T
    else:
        sq = ((X[:, None] - X[None]) ** 2).sum(-1)
        K = np.exp(-rng.uniform(0.1, 2) * sq)
    y = np.ones(L, int)
    y[rng.permutation(L)[: L // 2]] = -1
    C = float(rng.choice([0.1, 1.0, 10.0]))
    return K, y, C


class TestClosedForm:
    def test_identity_two_points(self):
        model = svm.train(np.eye(2), [1, -1], C=1.0)
        assert np.allclose(model.alphas, [1, 1], atol=1e-9)
        assert model.bias == pytest.approx(0.0, abs=1e-9)
        assert model.support_indices == [0, 1]

    def test_identity_two_points_predictions(self):
        model = svm.train(np.eye(2), [1, -1])
        assert svm.decision_value(model, [1, 0]) == pytest.approx(1.0)
        assert svm.decision_value(model, [0, 1]) == pytest.approx(-1.0)
        assert svm.decision_value(model, [0.5, 0.5]) == pytest.approx(0.0, abs=1e-9)
        assert svm.predict(model, [1, 0]) == 1
        assert svm.predict(model, [0, 1]) == -1

    def test_zero_decision_maps_to_positive(self):
        model = svm.SvmModel(np.array([1.0, 1.0]), np.array([1, -1]), 0.0, 1.0)
        assert svm.predict(model, [0.5, 0.5]) == 1

    def test_all_ones_gram(self):
        # the objective is constant in the feasible direction; regression-pinned
        model = svm.train(np.ones((2, 2)), [1, -1])
        assert np.allclose(model.alphas, [1, 1])
        assert model.bias == pytest.approx(0.0)
        assert svm.predict(model, [1, 1]) == 1


class TestAgainstReference:
    @pytest.mark.parametrize("seed", range(100))
    def test_objective_and_kkt(self, seed):
        K, y, C = random_instance(seed)
        model = svm.train(K, y, C=C)
        _, ref_obj = solve_dual(K, y, C)
        obj = svm.dual_objective(model.alphas, y, K)
        assert obj == pytest.approx(ref_obj, abs=1e-5)
        assert kkt_gap(model.alphas, K, y, C) <= 1e-5
        assert np.all(model.alphas >= 0) and np.all(model.alphas <= C)
        assert abs(model.alphas @ y) < 1e-9

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_kkt_property(self, seed):
        K, y, C = random_instance(seed)
        model = svm.train(K, y, C=C)
        assert kkt_gap(model.alphas, K, y, C) <= 1e-5


class TestValidation:
    def test_single_class(self):
        with pytest.raises(TrainingError):
            svm.train(np.eye(3), [1, 1, 1])

    def test_bad_labels(self):
        with pytest.raises(TrainingError):
            svm.train(np.eye(2), [1, 0])

    def test_bad_C(self):
        with pytest.raises(TrainingError):
            svm.train(np.eye(2), [1, -1], C=0)

    def test_non_finite(self):
        with pytest.raises(DataError):
            svm.train(np.array([[1, np.nan], [np.nan, 1]]), [1, -1])

    def test_shape(self):
        with pytest.raises(ShapeError):
            svm.train(np.eye(3), [1, -1])

    def test_non_convergence(self):
        K, y, C = random_instance(3)
        with pytest.raises(ConvergenceError):
            svm.train(K, y, C=C, max_iter=1)

    def test_asymmetric_gram_is_symmetrized(self):
        K = np.array([[1.0, 0.2], [0.4, 1.0]])
        a = svm.train(K, [1, -1])
        b = svm.train((K + K.T) / 2, [1, -1])
        assert np.allclose(a.alphas, b.alphas)

    def test_indefinite_gram_terminates(self):
        K = np.array([[1.0, 0.9, -0.8], [0.9, 0.2, 0.9], [-0.8, 0.9, 1.0]])
        model = svm.train(K, [1, -1, 1])
        assert model.diagnostics["min_eigenvalue"] < 0


class TestAccuracy:
    def test_fractions(self):
        model = svm.train(np.eye(2), [1, -1])
        rows = np.array([[1, 0]] * 5 + [[0, 1]])
        assert svm.accuracy(model, rows, [1] * 6) == pytest.approx(5 / 6)
        assert svm.accuracy(model, rows, [1] * 5 + [-1]) == 1.0

    def test_empty(self):
        model = svm.train(np.eye(2), [1, -1])
        with pytest.raises(DataError):
            svm.accuracy(model, np.zeros((0, 2)), [])

    def test_shape_mismatch(self):
        model = svm.train(np.eye(2), [1, -1])
        with pytest.raises(ShapeError):
            svm.accuracy(model, np.zeros((2, 3)), [1, 1])
        with pytest.raises(ShapeError):
            svm.accuracy(model, np.zeros((3, 2)), [1, 1])

    def test_json_round_trip(self):
        K, y, C = random_instance(11)
        model = svm.train(K, y, C=C)
        back = svm.SvmModel.from_json(model.to_json())
        assert np.array_equal(back.alphas, model.alphas)
        assert back.support_indices == model.support_indices and back.bias == model.bias

    def test_digit_training_accuracy(self):
        ds = data.load_digit_manifest()
        for enc, feat in (("ry", data.digit_features_ry), ("amplitude", data.digit_features_amplitude)):
            gram = kernel.kernel_matrix([feat(s) for s in ds.train], encoding=enc)
            model = svm.train(gram, [s.label for s in ds.train])
            assert svm.accuracy(model, gram, [s.label for s in ds.train]) == 1.0

    def test_support_vector_row_gets_its_label(self):
        K, y, C = random_instance(5)
        model = svm.train(K, y, C=100.0)
        free = [i for i in model.support_indices if model.alphas[i] < 100.0 * (1 - 1e-6)]
        for i in free:
            assert svm.predict(model, K[i]) == y[i]
