import math

import numpy as np
import pytest

from boolmf import (
    BinaryMatrix,
    FiniteConfig,
    ModelState,
    conditional_prob_one,
    generate,
    gibbs_step,
    lambda_mle,
    log_likelihood,
    logit,
    prediction_counts,
    reconstruction_error,
    run_finite,
    sigmoid,
    sweep_u,
    sweep_z,
)

from oracles import brute_conditional_posterior, random_bit_matrix, reference_sweep_rows


def make_state(rng, n=8, d=10, width=3, lam=1.0, config=None):
    X = random_bit_matrix(rng, n, d)
    Z = random_bit_matrix(rng, n, width)
    U = random_bit_matrix(rng, d, width)
    return ModelState(X, Z, U, lam, config or FiniteConfig(L=width))


# ---------------------------------------------------------------- config


def test_config_validation():
    with pytest.raises(ValueError):
        FiniteConfig(L=0)
    with pytest.raises(ValueError):
        FiniteConfig(L=2, prior_z=0.0)
    with pytest.raises(ValueError):
        FiniteConfig(L=2, prior_u=1.0)
    with pytest.raises(ValueError):
        FiniteConfig(L=2, n_samples=10, burn_in=10)
    with pytest.raises(ValueError):
        FiniteConfig(L=2, lambda_init=-0.1)


def test_state_shape_validation():
    X = BinaryMatrix(4, 5)
    with pytest.raises(ValueError):
        ModelState(X, BinaryMatrix(4, 2), BinaryMatrix(5, 3), 1.0, None)
    with pytest.raises(ValueError):
        ModelState(X, BinaryMatrix(3, 2), BinaryMatrix(5, 2), 1.0, None)


# ---------------------------------------------------------- conditional


def test_conditional_flat_likelihood_returns_prior():
    U = BinaryMatrix.from_dense([[1, 0], [1, 1], [0, 1]])
    p = conditional_prob_one([1, 0, 1], [0, 1], U, 0, 0.0, logit(0.3))
    assert p == pytest.approx(0.3, abs=1e-15)


def test_conditional_single_cell_case():
    U = BinaryMatrix.from_dense([[1]])
    p = conditional_prob_one([1], [0], U, 0, 2.0, 0.0)
    assert p == pytest.approx(sigmoid(2.0), abs=1e-15)
    assert p == pytest.approx(0.8808, abs=1e-4)


def test_conditional_inactive_code_returns_prior():
    U = BinaryMatrix.from_dense([[0, 1], [0, 1], [0, 0]])
    p = conditional_prob_one([1, 1, 0], [1, 1], U, 0, 3.0, logit(0.7))
    assert p == pytest.approx(0.7, abs=1e-15)


def test_conditional_index_out_of_range():
    U = BinaryMatrix.from_dense([[1, 0]])
    with pytest.raises(IndexError):
        conditional_prob_one([1], [1, 0], U, 2, 1.0, 0.0)


def test_conditional_matches_enumeration_oracle():
    rng = np.random.default_rng(307)
    for _ in range(200):
        n_cells = int(rng.integers(1, 5))
        width = int(rng.integers(1, 4))
        x = (rng.random(n_cells) < 0.5).astype(np.uint8)
        z = (rng.random(width) < 0.5).astype(np.uint8)
        Ud = (rng.random((n_cells, width)) < 0.5).astype(np.uint8)
        lam = float(rng.uniform(0.0, 3.0))
        prior_p = float(rng.uniform(0.05, 0.95))
        l = int(rng.integers(width))
        got = conditional_prob_one(
            x, z, BinaryMatrix.from_dense(Ud), l, lam, logit(prior_p)
        )
        want = brute_conditional_posterior(x, z, Ud, l, lam, prior_p)
        assert abs(got - want) <= 1e-12


def test_conditional_skip_logic_is_bitwise_exact():
    """The cover-skip shortcut must not change the score at all: computing
    the literal sum x~ * u * prod(1 - z*u) over every cell gives the same
    integer, hence the same probability bit for bit."""
    rng = np.random.default_rng(11)
    for _ in range(300):
        n_cells = int(rng.integers(1, 8))
        width = int(rng.integers(1, 5))
        x = (rng.random(n_cells) < 0.5).astype(np.int64)
        z = (rng.random(width) < 0.5).astype(np.int64)
        Ud = (rng.random((n_cells, width)) < 0.5).astype(np.int64)
        lam = float(rng.uniform(0.0, 4.0))
        l = int(rng.integers(width))
        score = 0
        for d in range(n_cells):
            term = (2 * x[d] - 1) * Ud[d, l]
            for lp in range(width):
                if lp != l:
                    term *= 1 - z[lp] * Ud[d, lp]
            score += term
        full = sigmoid(lam * float(score) + 0.25)
        skip = conditional_prob_one(
            x.astype(np.uint8), z.astype(np.uint8), BinaryMatrix.from_dense(Ud),
            l, lam, 0.25,
        )
        assert skip == full  # exact float equality, not approx


# ---------------------------------------------------------------- sweeps


def test_sweep_z_matches_granular_reference_exactly(rng):
    state = make_state(rng, n=9, d=20, width=4, lam=1.3)
    z_before = state.Z.to_dense()
    twin = np.random.default_rng(555)
    lib = np.random.default_rng(555)

    sweep_z(state, lib)

    rows = z_before.copy()
    u01 = twin.random(rows.shape)
    reference_sweep_rows(
        state.X.to_dense(), state.U, rows, 1.3, logit(0.5), u01
    )
    assert np.array_equal(state.Z.to_dense(), rows)


def test_sweep_u_matches_granular_reference_exactly(rng):
    state = make_state(rng, n=7, d=12, width=3, lam=0.8)
    u_before = state.U.to_dense()
    twin = np.random.default_rng(99)
    lib = np.random.default_rng(99)

    sweep_u(state, lib)

    rows = u_before.copy()
    u01 = twin.random(rows.shape)
    reference_sweep_rows(
        state.X.to_dense().T, state.Z, rows, 0.8, logit(0.5), u01
    )
    assert np.array_equal(state.U.to_dense(), rows)


def test_sweep_z_flat_likelihood_samples_prior():
    rng = np.random.default_rng(17)
    config = FiniteConfig(L=4, prior_z=0.3)
    X = random_bit_matrix(rng, 400, 6)
    state = ModelState(
        X, random_bit_matrix(rng, 400, 4), random_bit_matrix(rng, 6, 4), 0.0, config
    )
    sweep_z(state, np.random.default_rng(3))
    freq = state.Z.count_ones() / (400 * 4)
    se = math.sqrt(0.3 * 0.7 / (400 * 4))
    assert abs(freq - 0.3) < 3 * se


def test_gibbs_step_updates_lambda_to_mle(rng):
    state = make_state(rng, lam=0.5)
    gibbs_step(state, np.random.default_rng(1))
    expected = lambda_mle(prediction_counts(state.X, state.Z, state.U))
    assert state.lam == expected


def test_gibbs_step_deterministic(rng):
    a = make_state(np.random.default_rng(4), lam=0.5)
    b = make_state(np.random.default_rng(4), lam=0.5)
    for _ in range(3):
        gibbs_step(a, np.random.default_rng(8))
        gibbs_step(b, np.random.default_rng(8))
    assert a.Z == b.Z and a.U == b.U and a.lam == b.lam


def test_log_likelihood_trend_on_noiseless_data():
    improved = 0
    for seed in range(10):
        ds = generate(30, 40, 3, seed=seed)
        rng = np.random.default_rng(1000 + seed)
        config = FiniteConfig(L=3, seed=seed)
        state = ModelState(
            ds.X,
            random_bit_matrix(rng, 30, 3),
            random_bit_matrix(rng, 40, 3),
            0.5,
            config,
        )
        first = None
        for _ in range(20):
            gibbs_step(state, rng)
            ll = log_likelihood(ds.X, state.Z, state.U, state.lam)
            if first is None:
                first = ll
        improved += ll > first
    assert improved >= 9


# ---------------------------------------------------------------- runs


def test_run_finite_chain_length_and_determinism():
    ds = generate(20, 15, 2, seed=1)
    config = FiniteConfig(L=2, n_samples=200, burn_in=100, seed=5)
    chain = run_finite(ds.X, config)
    assert len(chain) == 100
    assert all(s.n_latent == 2 for s in chain.samples)
    again = run_finite(ds.X, config)
    assert np.array_equal(chain.lambda_trace(), again.lambda_trace())
    assert all(a.Z == b.Z and a.U == b.U for a, b in zip(chain.samples, again.samples))


def test_run_finite_all_ones_data():
    X = BinaryMatrix.from_dense(np.ones((20, 15), dtype=np.uint8))
    chain = run_finite(X, FiniteConfig(L=1, n_samples=40, burn_in=30, seed=2))
    last = chain.samples[-1]
    assert reconstruction_error(X, last.Z, last.U) == 0.0
    # with every cell correct the smoothed optimum is log(N*D + 1)
    assert last.lam == pytest.approx(math.log(20 * 15 + 1))


def test_run_finite_input_validation():
    with pytest.raises(ValueError):
        run_finite(BinaryMatrix(0, 4), FiniteConfig(L=1))
    with pytest.raises(ValueError):
        run_finite(BinaryMatrix(4, 0), FiniteConfig(L=1))


def test_run_finite_traces_only():
    ds = generate(10, 10, 2, seed=3)
    chain = run_finite(
        ds.X, FiniteConfig(L=2, n_samples=6, burn_in=2, seed=0), record_factors=False
    )
    assert not chain.has_factors
    assert len(chain) == 4
