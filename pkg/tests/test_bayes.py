import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brann import bayes, metrics
from brann.network import Network, NetworkLayout, forward, init_weights, jacobian
from brann.trainers import TrainingConfig, train, trainbr_epoch
from brann.trainers.levenberg import refresh_state


def two_param_net(w, b):
    return Network(NetworkLayout((1, 1), ("purelin",)), (np.array([[w]]),), (np.array([b]),))


class TestObjective:
    def test_zero_net_zero_targets(self):
        net = init_weights(NetworkLayout.mlp(2, [3], 1), 0).with_params(np.zeros(13))
        state = bayes.BayesState(alpha=0.7, beta=2.0)
        assert bayes.regularized_loss(net, np.ones((4, 2)), np.zeros((4, 1)), state) == 0.0

    def test_hand_arithmetic(self):
        # w = [1, 2], one residual of 1
        net = two_param_net(1.0, 2.0)
        X, Y = np.array([[0.0]]), np.array([[1.0]])
        state = bayes.BayesState(alpha=0.5, beta=2.0)
        assert bayes.regularized_loss(net, X, Y, state) == pytest.approx(4.5, abs=1e-15)

    def test_alpha_zero_is_scaled_sse(self):
        rng = np.random.default_rng(0)
        net = init_weights(NetworkLayout.mlp(2, [4], 1), 1)
        X, Y = rng.normal(size=(9, 2)), rng.normal(size=(9, 1))
        sse = bayes.sum_squared_errors(net, X, Y)
        assert bayes.regularized_loss(net, X, Y, bayes.BayesState(beta=3.0)) == 3.0 * sse
        assert sse / 9 == pytest.approx(metrics.mse(Y, forward(net, X)), abs=1e-12)

    def test_ssw_includes_biases(self):
        assert bayes.sum_squared_weights(two_param_net(0.0, 3.0)) == 9.0

    @pytest.mark.parametrize("kw", [dict(alpha=-1.0), dict(beta=0.0), dict(alpha=math.inf)])
    def test_state_validation(self, kw):
        with pytest.raises(ValueError):
            bayes.BayesState(**kw)


class TestUpdate:
    def test_hand_example(self):
        state = bayes.BayesState(alpha=1.0, beta=1.0, ssw=1.0, sse=1.0)
        new = bayes.update_hyperparameters(state, 0.25, k=2, n_targets=10)
        assert new.gamma == pytest.approx(1.5)
        assert new.alpha == pytest.approx(0.75)
        assert new.beta == pytest.approx(4.25)
        assert not new.clamped

    def test_alpha_zero_gives_k(self):
        state = bayes.BayesState(alpha=0.0, beta=1.0, ssw=2.0, sse=3.0)
        assert bayes.update_hyperparameters(state, 123.0, k=7, n_targets=50).gamma == 7.0

    def test_zero_sse_keeps_beta(self):
        state = bayes.BayesState(alpha=0.1, beta=5.0, ssw=2.0, sse=0.0)
        new = bayes.update_hyperparameters(state, 1.0, k=3, n_targets=10)
        assert new.beta == 5.0 and new.clamped

    def test_zero_ssw_keeps_alpha(self):
        state = bayes.BayesState(alpha=0.1, beta=5.0, ssw=0.0, sse=1.0)
        new = bayes.update_hyperparameters(state, 1.0, k=3, n_targets=10)
        assert new.alpha == 0.1 and new.clamped

    def test_more_parameters_than_targets(self):
        state = bayes.BayesState(alpha=0.0, beta=2.0, ssw=1.0, sse=1.0)
        new = bayes.update_hyperparameters(state, 1.0, k=20, n_targets=10)
        assert new.gamma == 20.0 and new.beta == 2.0 and new.clamped

    @given(alpha=st.floats(0, 1e6), trace=st.floats(0, 1e6), ssw=st.floats(0, 1e6),
           sse=st.floats(0, 1e6), k=st.integers(1, 200), n=st.integers(1, 500))
    def test_clamp_contract(self, alpha, trace, ssw, sse, k, n):
        state = bayes.BayesState(alpha=alpha, beta=1.0, ssw=ssw, sse=sse)
        new = bayes.update_hyperparameters(state, trace, k, n)
        assert 0.0 <= new.gamma <= k
        assert new.alpha >= bayes.ALPHA_MIN and new.beta >= bayes.BETA_MIN
        assert math.isfinite(new.alpha) and math.isfinite(new.beta)


class TestHessian:
    def test_trace_inverse_matches_dense(self):
        rng = np.random.default_rng(4)
        J = rng.normal(size=(30, 12))
        H = bayes.gauss_newton_hessian(J, 0.3, 1.7)
        np.testing.assert_allclose(H, 2 * 1.7 * J.T @ J + 0.6 * np.eye(12))
        assert bayes.hessian_trace_inverse(H) == pytest.approx(np.trace(np.linalg.inv(H)), rel=1e-10)

    def test_logdet_matches_slogdet(self):
        rng = np.random.default_rng(5)
        H = bayes.gauss_newton_hessian(rng.normal(size=(20, 6)), 0.1, 1.0)
        assert bayes.hessian_logdet(H) == pytest.approx(np.linalg.slogdet(H)[1], rel=1e-12)

    def test_singular_hessian_is_handled(self):
        # rank-one J with alpha = 0
        J = np.outer(np.ones(5), [1.0, 2.0, 3.0])
        H = bayes.gauss_newton_hessian(J, 0.0, 1.0)
        assert math.isfinite(bayes.hessian_trace_inverse(H))

    def test_logdet_nan_when_indefinite(self):
        assert math.isnan(bayes.hessian_logdet(-np.eye(3)))


class TestEvidence:
    def test_pure(self):
        state = bayes.BayesState(alpha=0.2, beta=3.0, ssw=1.5, sse=0.4)
        assert bayes.log_evidence_terms(state, 4, 20, 1.3) == bayes.log_evidence_terms(state, 4, 20, 1.3)

    def test_zero_parameters(self):
        with pytest.raises(ValueError):
            bayes.log_evidence_terms(bayes.BayesState(), 0, 10, 0.0)

    def test_missing_logdet(self):
        assert math.isnan(bayes.log_evidence_terms(bayes.BayesState(alpha=1.0), 2, 5, math.nan))

    def test_increases_on_noiseless_linear_data(self):
        x = np.linspace(-1, 1, 20).reshape(-1, 1)
        y = 0.5 * x + 0.2
        net = init_weights(NetworkLayout.mlp(1, [], 1), 0)
        state = refresh_state(net, x, y, bayes.BayesState(alpha=0.0, beta=1.0, gamma=2.0))
        mu, evidence = 0.005, []
        for _ in range(10):
            res = trainbr_epoch(net, x, y, state, mu)
            if not res.accepted:
                break
            net, state, mu = res.net, res.state, res.mu
            H = bayes.gauss_newton_hessian(jacobian(net, x), state.alpha, state.beta)
            evidence.append(bayes.log_evidence_terms(state, 2, 20, bayes.hessian_logdet(H)))
        assert len(evidence) >= 2
        assert all(b > a for a, b in zip(evidence, evidence[1:]))


class TestFixedPoints:
    def test_gamma_on_affine_fit(self):
        x = np.linspace(-1, 1, 20).reshape(-1, 1)
        net, trace = train(init_weights(NetworkLayout.mlp(1, [], 1), 0), (x, 0.5 * x + 0.2),
                           TrainingConfig(max_epochs=50))
        assert abs(trace.last.gamma - 2.0) <= 0.5

    @pytest.mark.parametrize("seed", range(3))
    def test_pure_noise_suppresses_parameters(self, seed):
        rng = np.random.default_rng(seed)
        x, y = rng.uniform(0, 1, (60, 1)), rng.uniform(0, 1, (60, 1))
        net = init_weights(NetworkLayout.mlp(1, [20], 1), seed)
        _, trace = train(net, (x, y), TrainingConfig())
        assert trace.last.gamma < 0.2 * net.n_params
