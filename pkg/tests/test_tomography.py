import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from noiseless_amp.amplifier import AmplifierSpec, amplified_state, quadrature_variances
from noiseless_amp.fock import DensityOperator, coherent_state, fidelity, fock_state, purity, vacuum
from noiseless_amp.herald import ExperimentConfig, run_pipeline
from noiseless_amp.tomography import (
    QuadratureDataset,
    apply_loss,
    loss_adjoint,
    maxlik_reconstruct,
    quadrature_pdf,
    report_metrics,
    sample_quadratures,
    sidecar,
)

import oracles


def gaussian(x, mean, var=0.5):
    return np.exp(-((x - mean) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)


# ---------------------------------------------------------------- quadrature pdf


def test_vacuum_marginal_is_gaussian():
    x = np.linspace(-4, 4, 41)
    for theta in (0.0, 0.7, 2.0):
        np.testing.assert_allclose(quadrature_pdf(vacuum(6), theta, x), gaussian(x, 0.0), atol=1e-14)


def test_coherent_marginal_mean():
    x = np.linspace(-3, 6, 41)
    np.testing.assert_allclose(quadrature_pdf(coherent_state(1.0, 30), 0.0, x), gaussian(x, math.sqrt(2)), atol=1e-12)


def test_single_photon_marginal():
    x = np.linspace(-4, 4, 41)
    np.testing.assert_allclose(quadrature_pdf(fock_state(1, 5), 0.3, x), 2 * x**2 * gaussian(x, 0.0), atol=1e-14)
    assert quadrature_pdf(fock_state(1, 5), 0.0, np.array([0.0]))[0] == 0


@pytest.mark.parametrize("theta", [0.0, 1.1, 2.9])
def test_marginal_normalized_and_nonnegative(theta):
    rho = amplified_state(AmplifierSpec(2, 1.0 + 0.4j))
    total, _ = integrate.quad(lambda v: quadrature_pdf(rho, theta, np.array([v]))[0], -np.inf, np.inf, epsabs=1e-12)
    assert total == pytest.approx(1.0, abs=1e-8)
    assert quadrature_pdf(rho, theta, np.linspace(-8, 8, 801)).min() >= -1e-12


# ---------------------------------------------------------------- loss


def test_loss_identity_at_unit_efficiency():
    rho = amplified_state(AmplifierSpec(1, 0.6)).density()
    np.testing.assert_allclose(apply_loss(rho, 1.0).matrix, rho.matrix, atol=1e-15)


def test_loss_on_coherent_state():
    alpha, eta = 1.2 - 0.3j, 0.57
    out = apply_loss(coherent_state(alpha, 30), eta)
    assert fidelity(out, coherent_state(math.sqrt(eta) * alpha, 30)) == pytest.approx(1.0, abs=1e-10)


def test_loss_on_single_photon():
    out = apply_loss(fock_state(1, 3), 0.57).matrix
    np.testing.assert_allclose(out, np.diag([0.43, 0.57, 0, 0]), atol=1e-15)


@given(st.floats(0.05, 1.0), st.integers(0, 2**31))
def test_loss_paths_agree_with_each_other_and_the_oracle(eta, seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    mat = g @ g.conj().T
    rho = DensityOperator(mat / np.trace(mat))
    kraus = apply_loss(rho, eta, method="kraus").matrix
    bs = apply_loss(rho, eta, method="beam_splitter").matrix
    assert np.max(np.abs(kraus - bs)) < 1e-10
    assert np.max(np.abs(kraus - oracles.binomial_loss(rho.matrix, eta))) < 1e-12


@given(st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_loss_composes(eta1, eta2):
    rho = amplified_state(AmplifierSpec(2, 0.9)).density()
    twice = apply_loss(apply_loss(rho, eta1), eta2)
    np.testing.assert_allclose(twice.matrix, apply_loss(rho, eta1 * eta2).matrix, atol=1e-10)


def test_loss_adjoint_is_dual():
    rng = np.random.default_rng(4)
    op = rng.normal(size=(5, 5))
    op = op + op.T
    rho = amplified_state(AmplifierSpec(1, 0.7), 4).density()
    lhs = np.trace(apply_loss(rho, 0.6).matrix @ op)
    rhs = np.trace(rho.matrix @ loss_adjoint(op, 0.6))
    assert lhs == pytest.approx(rhs, abs=1e-12)


@pytest.mark.parametrize("eta", [0.0, -0.2, 1.01])
def test_loss_rejects_efficiency(eta):
    with pytest.raises(ValueError):
        apply_loss(vacuum(3), eta)


# ---------------------------------------------------------------- sampling


def test_vacuum_sample_variance():
    data = sample_quadratures(vacuum(5), 1.0, phases=[0.0], n_per_phase=100_000, seed=1)
    assert data.x.var() == pytest.approx(0.5, abs=0.01)


def test_coherent_sample_mean():
    data = sample_quadratures(coherent_state(1.0, 25), 1.0, phases=[0.0], n_per_phase=100_000, seed=2)
    assert data.x.mean() == pytest.approx(math.sqrt(2), abs=0.01)


def test_amplified_state_squeezing_is_visible():
    n = 100_000
    spec = AmplifierSpec(1, 0.8)
    data = sample_quadratures(amplified_state(spec), 1.0, phases=[0.0], n_per_phase=n, seed=5)
    vx, _ = quadrature_variances(spec)
    # standard error of a sample variance, estimated from the sample itself
    s2 = data.x.var(ddof=1)
    se = math.sqrt((stats.kurtosis(data.x, fisher=False) - (n - 3) / (n - 1)) / n) * s2
    assert abs(s2 - vx) < 3 * se
    assert s2 < 0.5 - 3 * se


@pytest.mark.parametrize("state", [vacuum(5), coherent_state(0.9 + 0.5j, 25)], ids=["vacuum", "coherent"])
def test_sampling_ks_distance(state):
    n = 10_000
    phases = [0.0, 0.8, 2.1]
    data = sample_quadratures(state, 1.0, phases=phases, n_per_phase=n, seed=7)
    for theta in phases:
        xs = data.x[np.isclose(data.theta, theta)]
        amp = state.expectation(np.diag(np.sqrt(np.arange(1, state.cutoff + 1)), 1))
        mean = math.sqrt(2) * (amp * np.exp(-1j * theta)).real
        d = stats.kstest(xs, stats.norm(mean, math.sqrt(0.5)).cdf).statistic
        assert d < 1.63 / math.sqrt(n)


def test_sampling_is_seed_deterministic():
    rho = amplified_state(AmplifierSpec(2, 1.0))
    a = sample_quadratures(rho, 0.57, n_per_phase=500, seed=9)
    b = sample_quadratures(rho, 0.57, n_per_phase=500, seed=9)
    c = sample_quadratures(rho, 0.57, n_per_phase=500, seed=10)
    np.testing.assert_array_equal(a.x, b.x)
    assert not np.array_equal(a.x, c.x)


def test_phase_streams_are_independent_of_later_phases():
    rho = coherent_state(0.5, 20)
    short = sample_quadratures(rho, 1.0, phases=[0.0, 1.0], n_per_phase=50, seed=3)
    longer = sample_quadratures(rho, 1.0, phases=[0.0, 1.0, 2.0], n_per_phase=50, seed=3)
    np.testing.assert_array_equal(short.x, longer.x[:100])


def test_sampling_requires_phases():
    with pytest.raises(ValueError):
        sample_quadratures(vacuum(3), 1.0, phases=[])


# ---------------------------------------------------------------- dataset


def test_dataset_folds_phases():
    data = QuadratureDataset([0.1, math.pi + 0.1, -0.2], [1.0, 1.0, 2.0])
    assert np.all((data.theta >= 0) & (data.theta < math.pi))
    np.testing.assert_allclose(data.theta, [0.1, 0.1, math.pi - 0.2])
    np.testing.assert_allclose(data.x, [1.0, -1.0, -2.0])


def test_dataset_rejects_bad_values():
    with pytest.raises(ValueError):
        QuadratureDataset([0.0], [float("nan")])
    with pytest.raises(ValueError):
        QuadratureDataset([0.0], [1.0], eta=0.0)


def test_dataset_csv_round_trip(tmp_path):
    data = sample_quadratures(amplified_state(AmplifierSpec(2, 1.0)), 0.57, n_per_phase=200, seed=4)
    path = data.to_csv(tmp_path / "samples.csv")
    assert path.read_text().splitlines()[0] == "theta,x"
    assert sidecar(path).exists()
    back = QuadratureDataset.from_csv(path)
    np.testing.assert_array_equal(back.x, data.x)
    np.testing.assert_array_equal(back.theta, data.theta)
    assert (back.eta, back.seed) == (data.eta, data.seed)
    assert back.counts() == data.counts()


# ---------------------------------------------------------------- reconstruction


def test_empty_dataset_is_rejected():
    with pytest.raises(ValueError):
        maxlik_reconstruct(QuadratureDataset([], []), 5)


def test_vacuum_reconstruction():
    data = sample_quadratures(vacuum(5), 1.0, seed=11)
    result = maxlik_reconstruct(data, 10)
    assert result.rho.matrix[0, 0].real > 0.99


def test_coherent_reconstruction():
    data = sample_quadratures(coherent_state(0.8, 20), 1.0, seed=12)
    result = maxlik_reconstruct(data, 20)
    assert result.converged
    assert fidelity(result.rho, coherent_state(0.8, 20)) > 0.995


def test_likelihood_monotone_and_state_physical():
    data = sample_quadratures(amplified_state(AmplifierSpec(2, 1.0)), 0.57, n_per_phase=3000, seed=13)
    result = maxlik_reconstruct(data, 15)
    assert np.all(np.diff(result.log_likelihood) >= -1e-9)
    assert result.rho.is_physical()
    assert result.rho.trace == pytest.approx(1.0, abs=1e-10)


def test_reconstruction_is_bit_deterministic():
    data = sample_quadratures(amplified_state(AmplifierSpec(1, 0.8)), 0.8, n_per_phase=1000, seed=14)
    a = maxlik_reconstruct(data, 10)
    b = maxlik_reconstruct(data, 10)
    assert a.log_likelihood == b.log_likelihood
    np.testing.assert_array_equal(a.rho.matrix, b.rho.matrix)


def test_iteration_cap_reports_non_convergence():
    data = sample_quadratures(coherent_state(0.8, 20), 1.0, n_per_phase=2000, seed=15)
    result = maxlik_reconstruct(data, 15, max_iter=3)
    assert not result.converged
    assert result.iterations == 3


def test_compensation_removes_loss():
    psi = amplified_state(AmplifierSpec(2, 1.0))
    data = sample_quadratures(psi, 0.57, seed=16)
    on = maxlik_reconstruct(data, 20, compensate_eta=True)
    off = maxlik_reconstruct(data, 20, compensate_eta=False)
    ref = psi.with_cutoff(20)
    assert purity(on.rho) > purity(off.rho)
    assert fidelity(on.rho, ref) > fidelity(off.rho, ref)
    assert fidelity(on.rho, ref) > 0.98


# ---------------------------------------------------------------- metrics


def test_metrics_of_ideal_state():
    psi = amplified_state(AmplifierSpec(2, 1.0))
    m = report_metrics(psi.density(), psi, 1.0)
    assert m.fidelity == pytest.approx(1.0, abs=1e-12)
    assert m.purity == pytest.approx(1.0, abs=1e-12)
    assert m.gain == pytest.approx(1 + 54 / 87, abs=1e-9)
    vx, vp = quadrature_variances(AmplifierSpec(2, 1.0))
    assert (m.V_x, m.V_p) == pytest.approx((vx, vp), abs=1e-9)
    np.testing.assert_allclose(m.displaced_probabilities[:3], [49 / 87, 36 / 87, 2 / 87], atol=1e-9)


def test_metrics_of_vacuum():
    m = report_metrics(vacuum(5).density(), vacuum(5), 0.0)
    assert m.fidelity == 1.0
    assert (m.V_x, m.V_p) == pytest.approx((0.5, 0.5), abs=1e-12)
    assert not m.gain_defined and math.isnan(m.gain)


def test_metrics_of_noisy_pipeline():
    cfg = ExperimentConfig(r=0.1, T=0.9, m_add=1, m_sub=1, alpha=0.8, detector="multiplexed", dark_rate=0.05)
    with pytest.warns(RuntimeWarning):
        out = run_pipeline(cfg)
    m = report_metrics(out.state, amplified_state(AmplifierSpec(1, cfg.t * 0.8)), cfg.t * 0.8)
    assert m.purity < 1
