import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noiseless_amp.fock import (
    CutoffError,
    DensityOperator,
    FockVector,
    ModeOperator,
    TwoModeState,
    beam_splitter,
    coherent_state,
    default_cutoff,
    displacement_operator,
    displacement_rows,
    fidelity,
    fock_state,
    ladder_operators,
    number_operator,
    partial_trace,
    project_mode,
    purity,
    quadrature_covariance,
    tensor,
    two_mode_squeezer,
    vacuum,
)

import oracles

amplitudes = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


def exact_columns(u, tol=1e-10):
    """Indices of basis inputs whose image is fully kept by the truncation."""
    return np.nonzero(1 - np.sum(np.abs(u) ** 2, axis=0) < tol)[0]


def assert_unitary_on_support(u, tol=1e-10):
    cols = exact_columns(u)
    assert cols.size > 0
    block = u[:, cols]
    np.testing.assert_allclose(block.conj().T @ block, np.eye(cols.size), atol=tol)
    return cols


def random_vector(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------- states


def test_coherent_vacuum_limit():
    psi = coherent_state(0.0, 5)
    np.testing.assert_allclose(psi.amplitudes, [1, 0, 0, 0, 0, 0])
    assert psi.leakage == 0.0


def test_coherent_mean_photon_number():
    psi = coherent_state(1.0, 30)
    assert abs(psi.expectation(number_operator(30)) - 1.0) < 1e-10


def test_coherent_leakage_matches_poisson_tail():
    psi = coherent_state(1.72, 40)
    assert psi.leakage < 1e-12
    for alpha, cutoff in [(1.72, 10), (2.5, 12), (0.5, 3)]:
        assert coherent_state(alpha, cutoff).leakage == pytest.approx(oracles.poisson_tail(alpha, cutoff), rel=1e-9, abs=1e-15)


@given(amplitudes)
def test_leakage_decreases_with_cutoff(alpha):
    leaks = [coherent_state(alpha, n).leakage for n in range(0, 30, 3)]
    assert all(b <= a + 1e-16 for a, b in zip(leaks, leaks[1:]))
    assert all(v >= 0 for v in leaks)


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), complex(1, float("nan"))])
def test_coherent_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        coherent_state(bad, 5)


@given(st.lists(amplitudes, min_size=1, max_size=12).filter(lambda v: max(abs(x) for x in v) > 1e-3))
def test_normalize_invariant(values):
    psi = FockVector(np.array(values)).normalize()
    assert abs(np.sum(np.abs(psi.amplitudes) ** 2) - 1) < 1e-12


def test_with_cutoff_records_truncated_weight():
    psi = coherent_state(1.5, 20)
    cut = psi.with_cutoff(4)
    assert cut.leakage >= psi.leakage
    assert cut.leakage + np.sum(np.abs(cut.amplitudes) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_values_are_immutable():
    psi = coherent_state(0.5, 5)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 0


def test_density_invariants():
    rng = np.random.default_rng(3)
    vecs = [FockVector(random_vector(rng, 6)) for _ in range(3)]
    mat = sum(w * v.density().matrix for w, v in zip([0.5, 0.3, 0.2], vecs))
    rho = DensityOperator(mat)
    assert np.max(np.abs(rho.matrix - rho.matrix.conj().T)) < 1e-12
    assert abs(rho.trace - 1) < 1e-10
    assert rho.eigenvalues().min() > -1e-10
    assert rho.is_physical()


# ---------------------------------------------------------------- operators


def test_ladder_examples():
    a, ad = ladder_operators(2)
    out = a @ fock_state(1, 2)
    np.testing.assert_allclose(out.amplitudes, [1, 0, 0])
    out = ad @ fock_state(1, 2)
    np.testing.assert_allclose(out.amplitudes, [0, 0, math.sqrt(2)])


def test_ladder_structure_and_commutator():
    n = 8
    a, ad = ladder_operators(n)
    expected = np.diag(np.sqrt(np.arange(1, n + 1)), 1)
    np.testing.assert_array_equal(a.matrix, expected)
    np.testing.assert_array_equal(ad.matrix, expected.conj().T)
    comm = (a @ ad - ad @ a).matrix
    np.testing.assert_allclose(comm[:n, :n], np.eye(n), atol=1e-14)
    assert comm[n, n] == pytest.approx(-n)


def test_number_operator_is_diagonal():
    np.testing.assert_array_equal(number_operator(4).matrix, np.diag(np.arange(5)))


# ---------------------------------------------------------------- displacement


def test_displacement_identity_at_zero():
    np.testing.assert_array_equal(displacement_operator(0, 10).matrix, np.eye(11))


@given(amplitudes)
def test_displaced_vacuum_is_coherent(alpha):
    n = default_cutoff(alpha)
    d = displacement_operator(alpha, n)
    out = d @ vacuum(n)
    np.testing.assert_allclose(out.amplitudes, coherent_state(alpha, n).amplitudes, atol=1e-10)


@given(amplitudes)
def test_displacement_inverse_and_unitary(alpha):
    n = default_cutoff(alpha)
    d = displacement_operator(alpha, n).matrix
    dm = displacement_operator(-alpha, n).matrix
    cols = assert_unitary_on_support(dm)
    assert 0 in cols
    product = (d @ dm)[np.ix_(cols, cols)]
    np.testing.assert_allclose(product, np.eye(cols.size), atol=1e-10)
    assert_unitary_on_support(d)


@pytest.mark.parametrize("alpha", [0.3, 1.0 - 0.5j, 1.72j, 2.5, -3.0 + 1.0j])
def test_displacement_matches_laguerre_oracle(alpha):
    n = default_cutoff(alpha)
    d = displacement_operator(alpha, n).matrix
    ref = oracles.displacement_matrix(alpha, n + 1)
    assert np.max(np.abs(d - ref)) < 1e-8


def test_displacement_rows_agree_with_operator():
    d = displacement_operator(1.2 + 0.4j, 30).matrix
    rows = displacement_rows(1.2 + 0.4j, 5, 30)
    np.testing.assert_allclose(rows, d[:5], atol=1e-12)


def test_displacement_cutoff_precondition():
    with pytest.raises(CutoffError):
        displacement_operator(2.0, 20)
    displacement_operator(2.0, 22)


# ---------------------------------------------------------------- beam splitter


def test_beam_splitter_identity():
    u = beam_splitter(1.0, (4, 4))
    np.testing.assert_allclose(u.matrix, np.eye(25), atol=1e-14)


def test_beam_splitter_single_photon_split():
    u = beam_splitter(0.5, (2, 2))
    out = u @ tensor(fock_state(1, 2), vacuum(2))
    amps = out.amplitudes
    assert abs(amps[1, 0]) == pytest.approx(1 / math.sqrt(2))
    assert abs(amps[0, 1]) == pytest.approx(1 / math.sqrt(2))
    assert np.sum(np.abs(amps) ** 2) == pytest.approx(1.0)


@pytest.mark.parametrize("T", [0.5, 0.9, 0.95])
def test_beam_splitter_coherent_splitting(T):
    alpha, n = 1.3, 25
    u = beam_splitter(T, (n, n))
    out = u @ tensor(coherent_state(alpha, n), vacuum(n))
    t, r = math.sqrt(T), math.sqrt(1 - T)
    ref = tensor(coherent_state(t * alpha, n), coherent_state(r * alpha, n))
    # compare on the subspace that the truncated input fully populates
    sub = 15
    np.testing.assert_allclose(out.amplitudes[:sub, :sub], ref.amplitudes[:sub, :sub], atol=1e-10)


@given(st.floats(0.01, 1.0))
def test_beam_splitter_unitary_and_number_conserving(T):
    n = 6
    u = beam_splitter(T, (n, n))
    cols = assert_unitary_on_support(u.matrix)
    # every input with total photon number <= n stays inside the truncated space
    assert cols.size >= (n + 1) * (n + 2) // 2
    t4 = u.tensor4()
    for a, b, c, d in np.argwhere(np.abs(t4) > 0):
        assert a + b == c + d


@pytest.mark.parametrize("T", [0.0, -0.1, 1.1])
def test_beam_splitter_rejects_transmittance(T):
    with pytest.raises(ValueError):
        beam_splitter(T, (3, 3))


# ---------------------------------------------------------------- squeezer


def test_squeezer_identity():
    np.testing.assert_allclose(two_mode_squeezer(0.0, (4, 4)).matrix, np.eye(25), atol=1e-14)


def test_squeezed_vacuum_amplitudes():
    r, n = 0.2, 14
    u = two_mode_squeezer(r, (n, n))
    out = (u @ tensor(vacuum(n), vacuum(n))).amplitudes
    lam = math.tanh(r)
    ref = np.diag(math.sqrt(1 - lam**2) * lam ** np.arange(n + 1))
    np.testing.assert_allclose(out, ref, atol=1e-8)
    assert np.max(np.abs(out - np.diag(np.diag(out)))) == 0.0
    reduced = partial_trace(TwoModeState(out), "B")
    assert reduced.expectation(number_operator(n)).real == pytest.approx(math.sinh(r) ** 2, abs=1e-8)


def test_squeezer_unitary():
    u = two_mode_squeezer(0.1, (12, 12)).matrix
    cols = assert_unitary_on_support(u)
    assert 0 in cols


def test_squeezer_cutoff_precondition():
    with pytest.raises(CutoffError):
        two_mode_squeezer(1.0, (5, 5))


# ---------------------------------------------------------------- composition


def test_partial_trace_of_product():
    rng = np.random.default_rng(0)
    psi = FockVector(random_vector(rng, 4))
    phi = FockVector(random_vector(rng, 3))
    np.testing.assert_allclose(partial_trace(tensor(psi, phi), "B").matrix, psi.density().matrix, atol=1e-14)
    np.testing.assert_allclose(partial_trace(tensor(psi, phi), "A").matrix, phi.density().matrix, atol=1e-14)
    rho4 = tensor(psi.density(), phi.density())
    np.testing.assert_allclose(partial_trace(rho4, "B").matrix, psi.density().matrix, atol=1e-14)


def test_project_vacuum():
    _, p = project_mode(tensor(vacuum(2), vacuum(2)), "B", 0)
    assert p == pytest.approx(1.0)
    split = beam_splitter(0.5, (2, 2)) @ tensor(fock_state(1, 2), vacuum(2))
    branch, p = project_mode(split, "B", vacuum(2))
    assert p == pytest.approx(0.5)
    assert branch.norm ** 2 == pytest.approx(0.5)


def test_project_dimension_mismatch():
    with pytest.raises(ValueError):
        project_mode(tensor(vacuum(2), vacuum(3)), "B", vacuum(2))


# ---------------------------------------------------------------- metrics


def test_fidelity_and_purity_examples():
    rng = np.random.default_rng(1)
    psi = FockVector(random_vector(rng, 5))
    assert fidelity(psi.density(), psi) == pytest.approx(1.0)
    assert purity(psi.density()) == pytest.approx(1.0)
    mixed = DensityOperator(np.diag([0.5, 0.5, 0, 0]))
    assert fidelity(mixed, fock_state(0, 3)) == pytest.approx(0.5)
    assert purity(mixed) == pytest.approx(0.5)


def test_fidelity_of_explicit_mixture():
    rng = np.random.default_rng(2)
    phis = [FockVector(random_vector(rng, 6)) for _ in range(2)]
    weights = [0.7, 0.3]
    rho = DensityOperator(sum(w * p.density().matrix for w, p in zip(weights, phis)))
    psi = FockVector(random_vector(rng, 6))
    expected = sum(w * abs(np.vdot(psi.amplitudes, p.amplitudes)) ** 2 for w, p in zip(weights, phis))
    assert fidelity(rho, psi) == pytest.approx(expected, abs=1e-14)


def test_fidelity_dimension_mismatch():
    with pytest.raises(ValueError):
        fidelity(vacuum(3).density(), vacuum(4))


def test_vacuum_and_coherent_covariance():
    for state in (vacuum(5), coherent_state(1.0 + 0.5j, 25)):
        _, cov = quadrature_covariance(state, 0.3)
        np.testing.assert_allclose(cov, 0.5 * np.eye(2), atol=1e-10)
    means, _ = quadrature_covariance(coherent_state(1.0, 25), 0.0)
    assert means[0] == pytest.approx(math.sqrt(2), abs=1e-10)


def test_mode_operator_algebra():
    a, ad = ladder_operators(3)
    assert isinstance(a.dag(), ModeOperator)
    np.testing.assert_array_equal(a.dag().matrix, ad.matrix)
    np.testing.assert_array_equal((a + ad - ad).matrix, a.matrix)
