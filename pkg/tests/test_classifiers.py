import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy.stats import norm

from lintext.classifiers import (
    ClassifierKind,
    FeatureStats,
    HyperGrid,
    LinearModel,
    TrainingError,
    VttModel,
    feature_stats,
    predict,
    train_dlda,
    train_lda,
    train_logreg,
    train_naive_bayes,
    train_path,
    train_svm,
    train_vtt,
    vtt_score,
    vtt_theta,
)
from lintext.classifiers.svm import svm_objective
from lintext.corpus import Label

# ------------------------------------------------------------------ oracles


def primal_svm(w, b, X, y, C):
    """L1-hinge objective with the bias treated as one more weight."""
    s = np.where(y == 1, 1.0, -1.0)
    return 0.5 * (w @ w + b * b) + C * np.maximum(0.0, 1.0 - s * (X @ w + b)).sum()


def dual_qp_oracle(X, y, C, iters=200_000):
    """max sum(a) - a'Qa/2 over the box [0, C], by accelerated projected gradient."""
    s = np.where(y == 1, 1.0, -1.0)
    Xa = np.hstack([X, np.ones((len(X), 1))])
    Q = (s[:, None] * Xa) @ (s[:, None] * Xa).T
    L = np.linalg.eigvalsh(Q).max()
    a = z = np.zeros(len(y))
    t = 1.0
    for _ in range(iters):
        a_next = np.clip(z - (Q @ z - 1.0) / L, 0.0, C)
        t_next = (1 + math.sqrt(1 + 4 * t * t)) / 2
        z = a_next + (t - 1) / t_next * (a_next - a)
        a, t = a_next, t_next
    return a.sum() - 0.5 * a @ Q @ a


def logistic_loss(theta, X, y, C):
    w, b = theta[:-1], theta[-1]
    s = np.where(y == 1, 1.0, -1.0)
    return np.logaddexp(0.0, -s * (X @ w + b)).sum() + (w @ w) / (2 * C)


def central_difference(f, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def gaussian_nb_scores(X_train, y, X_test, shrinkage):
    """Log-posterior-odds of independent Gaussians with pooled, shrunk variances."""
    pos, neg = X_train[y == 1], X_train[y == 0]
    mp, mn = pos.mean(axis=0), neg.mean(axis=0)
    var = (((pos - mp) ** 2).sum(axis=0) + ((neg - mn) ** 2).sum(axis=0)) / (len(X_train) - 2)
    var = (1 - shrinkage) * var + shrinkage * var.mean()
    sd = np.sqrt(var)
    out = []
    for x in X_test:
        out.append(
            norm.logpdf(x, mp, sd).sum() - norm.logpdf(x, mn, sd).sum() + math.log(len(pos) / len(neg))
        )
    return np.array(out)


def random_2d(seed, n=20):
    r = np.random.default_rng(seed)
    y = np.array([1] * (n // 2) + [0] * (n - n // 2))
    X = r.normal(size=(n, 2)) + np.where(y[:, None] == 1, 0.8, -0.8)
    return X, y


# ------------------------------------------------------------------ VTT


class TestVtt:
    def test_feature_stats_examples(self):
        X = np.array([[1, 1, 0], [1, 1, 0], [1, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 0], [0, 0, 0], [0, 0, 0]])
        y = np.array([1, 1, 1, 1, 0, 0, 0, 0])
        st_ = feature_stats(sp.csr_matrix(X), y)
        assert st_.pos_rate.tolist() == [1.0, 0.5, 0.0]
        assert st_.neg_rate.tolist() == [0.0, 0.25, 0.0]

    def test_feature_stats_needs_both_classes(self):
        with pytest.raises(TrainingError):
            feature_stats(np.ones((3, 2)), np.ones(3))

    def test_theta_examples(self):
        th = vtt_theta(FeatureStats(pos_rate=np.array([0.3, 1.0, 0.5, 0.0, 0.0]), neg_rate=np.array([0.3, 0.0, 0.25, 0.0, 1.0])))
        assert th[0] == 0.0
        assert th[1] == pytest.approx(math.pi / 4, abs=1e-15)
        assert th[2] == pytest.approx(0.321751, abs=1e-6)
        assert th[2] == pytest.approx(math.atan(2) - math.pi / 4, abs=1e-15)
        assert th[3] == 0.0
        assert th[4] == pytest.approx(-math.pi / 4, abs=1e-15)

    def test_theta_random_grid(self, rng):
        p, n = rng.random(2000), rng.random(2000)
        p[:50], n[50:100] = 0.0, 0.0
        p[100:120] = n[100:120] = 0.0
        th = vtt_theta(FeatureStats(p, n))
        for pi, ni, t in zip(p, n, th):
            if ni > 0:
                expected = math.atan(pi / ni) - math.pi / 4
            else:
                expected = math.pi / 4 if pi > 0 else 0.0
            assert abs(t - expected) < 1e-12

    def test_score_examples(self):
        m0 = VttModel(theta=np.zeros(3), lambda_=0.0)
        score, label = predict(m0, np.zeros(3))
        assert score == 0.0 and label is Label.IRRELEVANT
        m1 = VttModel(theta=np.array([math.pi / 4, -math.pi / 4]), lambda_=0.0)
        assert vtt_score(m1, [1, 1]) == 0.0
        m2 = VttModel(theta=np.zeros(2), lambda_=0.7, beta=np.array([2.0]), ner_tool_ids=("t",))
        assert vtt_score(m2, [0, 0], [2]) == pytest.approx(-0.7)

    def test_ner_count_length_checked(self):
        m = VttModel(theta=np.zeros(2), lambda_=0.0, beta=np.array([2.0, 1.0]), ner_tool_ids=("a", "b"))
        with pytest.raises(ValueError):
            vtt_score(m, [0, 0], [1, 2, 3])

    def test_hand_evaluated_five_document_corpus(self):
        X = np.array([[1, 0, 1], [1, 1, 0], [0, 1, 1], [0, 0, 1], [1, 0, 0]], dtype=float)
        y = np.array([1, 1, 0, 0, 1])
        # positives contain f0 3/3, f1 1/3, f2 1/3; negatives f0 0/2, f1 1/2, f2 2/2
        t0 = math.pi / 4
        t1 = math.atan((1 / 3) / (1 / 2)) - math.pi / 4
        t2 = math.atan((1 / 3) / 1) - math.pi / 4
        lam = 0.1
        model = train_vtt(sp.csr_matrix(X), y, lambda_=lam)
        assert model.theta.tolist() == pytest.approx([t0, t1, t2], abs=1e-15)
        hand = [t0 + t2 - lam, t0 + t1 - lam, t1 + t2 - lam, t2 - lam, t0 - lam]
        scores = model.decision_function(sp.csr_matrix(X))
        assert scores.tolist() == pytest.approx(hand, abs=1e-15)
        assert [predict(model, row)[1] for row in X] == [
            Label.RELEVANT, Label.RELEVANT, Label.IRRELEVANT, Label.IRRELEVANT, Label.RELEVANT,
        ]  # fmt: skip

    @given(hnp.arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 6)), elements=st.sampled_from([0.0, 1.0])))
    def test_theta_bounds_and_sign(self, X):
        y = np.arange(len(X)) % 2
        s = feature_stats(X, y)
        th = vtt_theta(s)
        assert np.all(np.abs(th) <= math.pi / 4 + 1e-15)
        assert np.array_equal(np.sign(th), np.sign(s.pos_rate - s.neg_rate))

    def test_structure_with_ner_tools(self):
        X = sp.csr_matrix(np.eye(4))
        (model,) = train_path(
            ClassifierKind.VTT, X, np.array([1, 1, 0, 0]), [{"lambda_quantile": 0.5, "beta": [2.0, 4.0]}],
            ner_counts=np.ones((4, 2)), ner_tool_ids=("a", "b"),
        )  # fmt: skip
        assert len(model.theta) == 4 and len(model.beta) == 2 and model.ner_tool_ids == ("a", "b")


# ------------------------------------------------------------------ SVM


class TestSvm:
    def test_separable_pair(self):
        X = np.array([[1.0, 0.0], [-1.0, 0.0]])
        y = np.array([1, 0])
        model = train_svm(X, y, C=100.0)
        assert model.weights[1] == pytest.approx(0.0, abs=1e-12)
        assert model.weights[0] > 0
        margins = np.where(y == 1, 1, -1) * model.decision_function(X)
        assert np.all(margins >= 1 - 1e-4)

    @pytest.mark.parametrize("seed", range(5))
    def test_objective_matches_dual_qp(self, seed):
        X, y = random_2d(seed)
        model = train_svm(X, y, C=1.0)
        primal = primal_svm(model.weights, model.bias, X, y, 1.0)
        dual = dual_qp_oracle(X, y, 1.0)
        assert abs(primal - dual) <= 1e-4 * abs(dual)
        assert svm_objective(model, X, y) == pytest.approx(primal, rel=1e-12)

    def test_duplicated_data_equals_doubled_c(self):
        X, y = random_2d(3)
        a = train_svm(np.vstack([X, X]), np.concatenate([y, y]), C=0.5, tol=1e-8)
        b = train_svm(X, y, C=1.0, tol=1e-8)
        assert np.allclose(a.weights, b.weights, atol=1e-5) and a.bias == pytest.approx(b.bias, abs=1e-5)

    def test_duplicated_separable_data_keeps_boundary(self):
        X = np.array([[2.0, 1.0], [1.5, 2.0], [-1.0, -1.5], [-2.0, 0.5]])
        y = np.array([1, 1, 0, 0])
        a = train_svm(X, y, C=1e4, tol=1e-8)
        b = train_svm(np.vstack([X, X]), np.concatenate([y, y]), C=1e4, tol=1e-8)
        assert np.allclose(a.weights, b.weights, atol=1e-6) and a.bias == pytest.approx(b.bias, abs=1e-6)

    def test_non_convergence_names_cap(self):
        X, y = random_2d(1)
        with pytest.raises(TrainingError, match="within 1 epochs"):
            train_svm(X, y, C=100.0, tol=1e-12, max_epochs=1)

    def test_sparse_and_dense_agree(self):
        X, y = random_2d(2)
        assert np.allclose(train_svm(X, y).weights, train_svm(sp.csr_matrix(X), y).weights)


# ------------------------------------------------------------------ logistic regression


class TestLogReg:
    def test_balanced_no_signal(self):
        model = train_logreg(np.zeros((6, 3)), np.array([1, 0] * 3), C=1.0)
        assert np.allclose(model.weights, 0.0) and model.bias == pytest.approx(0.0, abs=1e-9)
        assert 1 / (1 + math.exp(-model.decision_function(np.zeros((1, 3)))[0])) == pytest.approx(0.5)

    def test_three_to_one_intercept(self):
        model = train_logreg(np.zeros((8, 2)), np.array([1, 1, 1, 0] * 2), C=1.0)
        assert model.bias == pytest.approx(math.log(3), abs=1e-7)

    @pytest.mark.parametrize("seed, C", [(0, 1.0), (1, 0.1), (2, 10.0), (3, 100.0)])
    def test_gradient_vanishes_by_finite_differences(self, seed, C):
        X, y = random_2d(seed)
        model = train_logreg(X, y, C=C)
        theta = np.concatenate([model.weights, [model.bias]])
        g = central_difference(lambda t: logistic_loss(t, X, y, C), theta)
        assert np.max(np.abs(g)) < 1e-6

    def test_bias_is_not_penalised(self):
        X, y = random_2d(4)
        X = X + 50.0  # a penalised bias would be dragged toward 0 here
        model = train_logreg(X, y, C=0.01)
        theta = np.concatenate([model.weights, [model.bias]])
        g = central_difference(lambda t: logistic_loss(t, X, y, 0.01), theta, h=1e-6)
        assert abs(g[-1]) < 1e-6


# ------------------------------------------------------------------ Naive Bayes


class TestNaiveBayes:
    def test_smoothing_arithmetic(self):
        X = np.array([[1], [1], [1], [0], [0], [0]])
        y = np.array([1, 1, 1, 1, 0, 0])
        model = train_naive_bayes(X, y, alpha=1.0)
        q_pos, q_neg = 4 / 6, 1 / 4
        assert model.weights[0] == pytest.approx(math.log(q_pos * (1 - q_neg) / (q_neg * (1 - q_pos))))

    def test_equal_rates_zero_weight(self):
        X = np.array([[1, 1], [0, 1], [1, 0], [0, 0]])
        model = train_naive_bayes(X, np.array([1, 1, 0, 0]), alpha=0.5)
        assert model.weights[0] == 0.0

    @pytest.mark.parametrize("alpha", [0.1, 1.0, 5.0])
    def test_probability_table_oracle(self, alpha):
        X = np.array([[1, 0], [1, 1], [0, 1], [1, 0], [0, 0], [0, 1], [0, 0]])
        y = np.array([1, 1, 1, 1, 0, 0, 0])
        model = train_naive_bayes(sp.csr_matrix(X), y, alpha=alpha)
        pos, neg = X[y == 1], X[y == 0]
        qp = [(pos[:, i].sum() + alpha) / (len(pos) + 2 * alpha) for i in range(2)]
        qn = [(neg[:, i].sum() + alpha) / (len(neg) + 2 * alpha) for i in range(2)]
        for x in ([0, 0], [0, 1], [1, 0], [1, 1]):
            lp = len(pos) / len(y)
            ln = len(neg) / len(y)
            for i in range(2):
                lp *= qp[i] if x[i] else 1 - qp[i]
                ln *= qn[i] if x[i] else 1 - qn[i]
            assert model.decision_function(np.array([x]))[0] == pytest.approx(math.log(lp / ln), abs=1e-12)

    def test_rejects_bad_alpha_and_non_binary(self):
        with pytest.raises(ValueError):
            train_naive_bayes(np.eye(2), np.array([1, 0]), alpha=0.0)
        with pytest.raises(ValueError):
            train_naive_bayes(np.array([[0.5, 1], [1, 0]]), np.array([1, 0]))


# ------------------------------------------------------------------ LDA and dLDA


class TestDiscriminants:
    def test_identity_covariance_direction(self):
        r = np.random.default_rng(7)
        Z = r.normal(size=(200, 3))
        Z = Z - Z.mean(axis=0)
        W = np.linalg.cholesky(np.linalg.inv(np.cov(Z, rowvar=False)))
        Z = Z @ W  # exactly white
        X = np.vstack([Z[:100] - Z[:100].mean(0) + [1, 2, 0], Z[100:] - Z[100:].mean(0)])
        y = np.array([1] * 100 + [0] * 100)
        model = train_lda(X, y, shrinkage=0.0)
        delta = X[y == 1].mean(0) - X[y == 0].mean(0)
        cos = model.weights @ delta / np.linalg.norm(model.weights) / np.linalg.norm(delta)
        assert cos == pytest.approx(1.0, abs=0.05)

    def test_full_shrinkage_is_mean_difference(self, rng):
        X = rng.normal(size=(30, 4)) @ rng.normal(size=(4, 4))
        y = np.arange(30) % 2
        w = train_lda(X, y, shrinkage=1.0).weights
        delta = X[y == 1].mean(0) - X[y == 0].mean(0)
        assert np.allclose(w / np.linalg.norm(w), delta / np.linalg.norm(delta), atol=1e-12)

    def test_two_by_two_closed_form(self):
        X = np.array([[2.0, 1.0], [3.0, 2.5], [2.5, 0.5], [4.0, 2.0], [0.0, 0.5], [1.0, -1.0], [-0.5, 0.0], [0.5, 1.5]])
        y = np.array([1, 1, 1, 1, 0, 0, 0, 0])
        g = 0.1
        mp, mn = X[y == 1].mean(0), X[y == 0].mean(0)
        R = np.vstack([X[y == 1] - mp, X[y == 0] - mn])
        S = R.T @ R / (len(X) - 2)
        a, b, c, d = (1 - g) * S.ravel() + g * np.trace(S) / 2 * np.eye(2).ravel()
        inv = np.array([[d, -b], [-c, a]]) / (a * d - b * c)
        w = inv @ (mp - mn)
        model = train_lda(X, y, shrinkage=g)
        assert np.max(np.abs(model.weights - w)) < 1e-10
        assert model.bias == pytest.approx(-w @ (mp + mn) / 2 + math.log(4 / 4), abs=1e-10)

    def test_lda_singular_without_shrinkage(self, rng):
        X = rng.normal(size=(5, 10))
        with pytest.raises(TrainingError, match="PCA"):
            train_lda(X, np.array([1, 1, 0, 0, 0]), shrinkage=0.0)
        train_lda(X, np.array([1, 1, 0, 0, 0]), shrinkage=0.5)

    def test_dlda_zero_variance_feature(self, rng):
        X = np.column_stack([rng.normal(size=8), np.ones(8)])
        with pytest.raises(TrainingError, match="shrinkage > 0"):
            train_dlda(X, np.arange(8) % 2, shrinkage=0.0)
        assert train_dlda(X, np.arange(8) % 2, shrinkage=0.3).weights[1] == 0.0

    def test_dlda_equal_variances_is_mean_difference(self):
        X = np.array([[1.0, 3.0], [3.0, 5.0], [-1.0, 1.0], [1.0, 3.0]])
        y = np.array([1, 1, 0, 0])
        w = train_dlda(X, y).weights
        delta = X[y == 1].mean(0) - X[y == 0].mean(0)
        assert np.allclose(w / np.linalg.norm(w), delta / np.linalg.norm(delta))

    def test_dlda_zero_mean_difference_zero_weight(self):
        X = np.array([[1.0, 0.0], [2.0, 1.0], [1.0, 5.0], [2.0, 7.0]])
        assert train_dlda(X, np.array([1, 1, 0, 0])).weights[0] == 0.0

    def test_dlda_matches_lda_on_diagonal_covariance(self):
        # within-class residuals along the axes only: pooled covariance is diagonal
        offsets = np.array([[1.0, 0], [-1, 0], [0, 2], [0, -2]])
        X = np.vstack([offsets + [3, 1], offsets + [0, 0]])
        y = np.array([1] * 4 + [0] * 4)
        test = np.random.default_rng(0).normal(size=(25, 2)) * 3
        for g in (0.0, 0.4):
            a = train_lda(X, y, shrinkage=g).decision_function(test)
            b = train_dlda(X, y, shrinkage=g).decision_function(test)
            assert np.array_equal(np.argsort(a), np.argsort(b))
            assert np.allclose(a, b, atol=1e-12)

    @pytest.mark.parametrize("g", [0.0, 0.3, 1.0])
    def test_dlda_is_gaussian_naive_bayes(self, rng, g):
        X = np.vstack([rng.normal([1, 0, 2, -1, 0.5], [1, 2, 0.5, 1, 3], size=(60, 5)),
                       rng.normal([0, 0.5, 1, 0, 0], [1, 2, 0.5, 1, 3], size=(40, 5))])  # fmt: skip
        y = np.array([1] * 60 + [0] * 40)
        test = rng.normal(size=(30, 5)) * 2
        got = train_dlda(X, y, shrinkage=g).decision_function(test)
        assert np.max(np.abs(got - gaussian_nb_scores(X, y, test, g))) < 1e-10

    def test_sparse_dlda_matches_dense(self, rng):
        X = (rng.random((40, 6)) < 0.4).astype(float)
        y = np.arange(40) % 2
        a, b = train_dlda(X, y, 0.2), train_dlda(sp.csr_matrix(X), y, 0.2)
        assert np.allclose(a.weights, b.weights, atol=1e-12) and a.bias == pytest.approx(b.bias)


# ------------------------------------------------------------------ shared behaviour


TRAINERS = {
    "vtt": lambda X, y: train_vtt(X, y, lambda_=0.3),
    "svm": lambda X, y: train_svm(X, y, C=1.0, tol=1e-10),
    "logreg": lambda X, y: train_logreg(X, y, C=1.0),
    "nb": lambda X, y: train_naive_bayes(X, y, alpha=1.0),
    "lda": lambda X, y: train_lda(X, y, shrinkage=0.5),
    "dlda": lambda X, y: train_dlda(X, y, shrinkage=0.5),
}


def _weights(model):
    return model.theta if isinstance(model, VttModel) else model.weights


@pytest.mark.parametrize("name", sorted(TRAINERS))
@given(seed=st.integers(0, 2**32 - 1))
def test_feature_permutation_invariance(name, seed):
    r = np.random.default_rng(seed)
    X = (r.random((16, 5)) < 0.5).astype(float)
    y = np.array([1, 0] * 8)
    perm = r.permutation(5)
    a, b = TRAINERS[name](X, y), TRAINERS[name](X[:, perm], y)
    assert np.allclose(_weights(a)[perm], _weights(b), atol=1e-7)
    assert np.allclose(a.decision_function(X), b.decision_function(X[:, perm]), atol=1e-7)


@pytest.mark.parametrize("name", sorted(TRAINERS))
def test_training_is_bitwise_deterministic(name, rng):
    X = (rng.random((30, 8)) < 0.5).astype(float)
    y = np.arange(30) % 2
    a, b = TRAINERS[name](X, y), TRAINERS[name](X, y)
    assert np.array_equal(_weights(a), _weights(b))
    assert np.array_equal(a.decision_function(X), b.decision_function(X))


def test_predict_tie_and_definition():
    model = LinearModel(np.array([1.0, -1.0]), 0.0, ClassifierKind.SVM)
    assert predict(model, [1.0, 1.0]) == (0.0, Label.IRRELEVANT)
    assert predict(model, [2.0, 0.5]) == (1.5, Label.RELEVANT)
    with pytest.raises(ValueError):
        predict(model, [1.0, 2.0, 3.0])


def test_vtt_predict_delegates_to_score():
    model = VttModel(theta=np.array([0.2, -0.1, 0.4]), lambda_=0.15)
    assert predict(model, [1, 1, 0])[0] == vtt_score(model, [1, 1, 0])


def test_linear_model_rejects_non_finite():
    with pytest.raises(TrainingError):
        LinearModel(np.array([np.nan]), 0.0, ClassifierKind.LDA)


class TestGrid:
    def test_defaults_and_order(self):
        g = HyperGrid()
        assert [p["C"] for p in g.points(ClassifierKind.SVM)] == [0.01, 0.1, 1.0, 10.0, 100.0]
        assert [p["shrinkage"] for p in g.points(ClassifierKind.LDA)] == [1.0, 0.9, 0.7, 0.5, 0.3, 0.1, 0.0]
        assert [p["alpha"] for p in g.points(ClassifierKind.NAIVE_BAYES)] == [0.1, 0.5, 1.0, 2.0, 5.0]
        vtt = g.points(ClassifierKind.VTT, n_ner=1)
        assert len(vtt) == 25 * 5
        assert vtt[0] == {"lambda_quantile": 1 / 26, "beta": [16.0]}

    def test_validation(self):
        with pytest.raises(ValueError):
            HyperGrid.from_dict({"svm_C": [0.0]})
        with pytest.raises(ValueError):
            HyperGrid.from_dict({"lda_shrinkage": [1.5]})
        with pytest.raises(ValueError):
            HyperGrid.from_dict({"bogus": [1]})
        assert HyperGrid.from_dict(HyperGrid().to_dict()) == HyperGrid()

    def test_failures_are_returned_per_point(self, rng):
        X = rng.normal(size=(5, 10))
        y = np.array([1, 1, 0, 0, 0])
        out = train_path(ClassifierKind.LDA, X, y, [{"shrinkage": 0.5}, {"shrinkage": 0.0}])
        assert isinstance(out[0], LinearModel) and isinstance(out[1], TrainingError)

    def test_vtt_lambda_is_training_score_quantile(self, rng):
        X = sp.csr_matrix((rng.random((20, 6)) < 0.5).astype(float))
        y = np.arange(20) % 2
        (model,) = train_path(ClassifierKind.VTT, X, y, [{"lambda_quantile": 0.25, "beta": []}])
        raw = X @ vtt_theta(feature_stats(X, y))
        assert model.lambda_ == pytest.approx(np.quantile(raw, 0.25))

    def test_path_matches_single_fits(self, rng):
        X = rng.normal(size=(40, 3))
        y = np.arange(40) % 2
        path = train_path(ClassifierKind.LDA, X, y, [{"shrinkage": 0.2}])
        assert np.allclose(path[0].weights, train_lda(X, y, 0.2).weights, atol=1e-12)
        path = train_path(ClassifierKind.DLDA, X, y, [{"shrinkage": 0.2}])
        assert np.array_equal(path[0].weights, train_dlda(X, y, 0.2).weights)
