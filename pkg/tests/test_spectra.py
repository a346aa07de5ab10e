import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lindsector.errors import ParameterError, TruncationError
from lindsector.fock import DiagonalHamiltonian, make_scully_lamb_decoherence
from lindsector.models import ModelSpec, ModelWarning, build_btc_model, build_scully_lamb
from lindsector.sectors import build_sector_matrix
from lindsector.spectra import (
    DegeneracyWarning,
    SpectrumEntry,
    compute_spectrum,
    eigendecompose,
    expectation_number,
    frame_shift_check,
    frame_shift_report,
    liouvillian_gap,
    order_entries,
    refine_eigenvalues,
    sorted_spectrum,
    steady_state,
)

from oracles import btc_populations, mean, scully_lamb_populations


def test_eigendecompose_biorthonormal():
    m = build_btc_model(1.0, 1.25, 0.1, omega_c=1.0, N=10, n_max=40)
    es = eigendecompose(build_sector_matrix(m, 1))
    np.testing.assert_allclose(es.left.conj().T @ es.right, np.eye(40), atol=1e-8)
    assert es.residuals.max() < 1e-8 * es.norm
    assert es.cond >= 1.0


def test_pure_loss_spectrum_exact():
    # pure loss blocks are triangular: lambda = -gamma (2p - k)/2 - i omega k
    gamma, omega, n_max = 0.6, 1.7, 12
    m = build_btc_model(gamma, 0.0, 0.0, omega_c=omega, n_max=n_max)
    for k in (-3, 0, 2):
        es = eigendecompose(build_sector_matrix(m, k))
        p = np.arange(max(0, k), min(n_max, n_max + k) + 1)
        expected = -gamma * (2 * p - k) / 2 - 1j * omega * k
        np.testing.assert_allclose(np.sort_complex(es.values), np.sort_complex(expected), atol=1e-12)


def test_pure_loss_gap_prefers_positive_k():
    m = build_btc_model(1.0, 0.0, 0.0, omega_c=2.0, n_max=6)
    gap = liouvillian_gap(m, k_cap=2)
    assert gap.k == 1
    assert gap.value == pytest.approx(-0.5 - 2.0j)
    entries = sorted_spectrum(m, k_cap=2)
    assert entries[0].k == 0 and abs(entries[0].value) < 1e-14
    assert entries[2].k == -1


def test_order_entries_ties():
    e = [
        SpectrumEntry(-1.0 + 2j, -2, 0, 0.0),
        SpectrumEntry(-1.0 - 2j, 2, 0, 0.0),
        SpectrumEntry(-1.0 + 1j, -1, 0, 0.0),
        SpectrumEntry(-0.5 + 0j, 0, 1, 0.0),
        SpectrumEntry(-1.0 + 1e-12 - 1j, 1, 0, 0.0),
    ]
    got = [(x.k, x.re) for x in order_entries(e, tol=1e-9)]
    assert got == [(0, -0.5), (1, -1.0 + 1e-12), (-1, -1.0), (2, -1.0), (-2, -1.0)]


def test_spectrum_conjugate_pairs():
    m = build_scully_lamb(1.0, 1.5, 0.1, 0.005, omega_c=1.0, N=5, n_max=30)
    spec = compute_spectrum(m, k_cap=3)
    for k in (1, 2, 3):
        plus = np.sort_complex(spec.systems[k].values)
        minus = np.sort_complex(np.conj(spec.systems[-k].values))
        np.testing.assert_allclose(plus, minus, atol=1e-10)


def test_spectrum_independent_of_workers():
    m = build_btc_model(1.0, 1.25, 0.1, omega_c=1.0, N=10, n_max=30)
    a = [(e.k, e.value) for e in sorted_spectrum(m, 4, workers=1)]
    b = [(e.k, e.value) for e in sorted_spectrum(m, 4, workers=3)]
    assert a == b


def test_kcap_bounds():
    m = build_btc_model(1.0, 0.5, 0.1, n_max=4)
    with pytest.raises(ParameterError):
        compute_spectrum(m, k_cap=5)
    with pytest.raises(ParameterError):
        compute_spectrum(m, k_cap=-1)


def test_detailed_balance_steady_state():
    # eta = 0: geometric distribution with ratio xi/gamma, <n> = xi/(gamma - xi)
    m = build_btc_model(1.0, 0.5, 0.0, n_max=60)
    ss = steady_state(m)
    n = np.arange(61)
    np.testing.assert_allclose(ss.occupations, 0.5**n / np.sum(0.5**n), rtol=1e-9, atol=1e-15)
    assert expectation_number(ss) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize(
    "N, n_max, frozen",
    [(10, 60, 0.2657664842533035), (20, 90, 0.2053130843740239), (40, 160, 0.16611282995695506)],
)
def test_btc_steady_state_matches_rate_equations(N, n_max, frozen):
    m = build_btc_model(1.0, 1.25, 1.0, N=N, n_max=n_max, frame="rotating")
    ss = steady_state(m)
    oracle = btc_populations(1.0, 1.25, 1.0, N, n_max)
    np.testing.assert_allclose(ss.occupations, oracle, atol=1e-12)
    assert expectation_number(ss) / N == pytest.approx(frozen, rel=1e-9)


def test_scully_lamb_steady_state_matches_rate_equations():
    m = build_scully_lamb(1.0, 1.5, 0.1, 0.005, N=10, n_max=100, frame="rotating")
    ss = steady_state(m)
    oracle = scully_lamb_populations(1.0, 1.5, 0.005, 10, 100)
    np.testing.assert_allclose(ss.occupations, oracle, atol=1e-11)
    assert expectation_number(ss) / 10 == pytest.approx(mean(oracle) / 10, rel=1e-9)


def test_steady_state_positive_and_normalized():
    ss = steady_state(build_scully_lamb(1.0, 1.2, 0.1, 0.005, omega_c=1.0, N=3, n_max=60))
    assert ss.occupations.min() >= 0
    assert ss.trace == pytest.approx(1.0, abs=1e-14)
    assert ss.min_before_clamp > -1e-10


def test_tail_weight_raises_with_state():
    m = build_btc_model(1.0, 1.75, 0.1, N=40, n_max=5)
    with pytest.raises(TruncationError) as info:
        steady_state(m)
    assert info.value.n_max == 5
    assert info.value.tail_weight > 1e-6
    assert info.value.state.tail_weight == info.value.tail_weight
    assert steady_state(m, check_tail=False).n_max == 5


def test_degenerate_steady_state_warns():
    # dephasing only: every Fock state is stationary
    n_max = 3
    m = ModelSpec("dephasing", n_max, DiagonalHamiltonian(np.zeros(4)),
                  (make_scully_lamb_decoherence(0.1, n_max),))
    with pytest.warns(DegeneracyWarning):
        steady_state(m, check_tail=False)


def test_frame_shift_small_models():
    m = build_btc_model(1.0, 1.25, 0.1, omega_c=1.0, N=10, n_max=30)
    devs = frame_shift_check(m, k_cap=3, per_sector=True)
    assert sorted(devs) == [-3, -2, -1, 0, 1, 2, 3]
    assert max(devs.values()) < 1e-10


def test_frame_shift_nonlinear_hamiltonian_reports_deviation():
    n_max = 10
    base = build_btc_model(1.0, 0.5, 0.1, n_max=n_max)
    kerr = DiagonalHamiltonian(0.2 * np.arange(n_max + 1) ** 2)
    m = ModelSpec("kerr", n_max, kerr, base.jumps)
    assert frame_shift_check(m, k_cap=2) > 1e-3


def test_refinement_recovers_ill_conditioned_eigenvalues():
    # high-lying eigenvalues of this block drift by ~1e-9 between frames
    m = build_btc_model(1.0, 1.5, 0.1, omega_c=1.0, N=10, n_max=60)
    raw = frame_shift_check(m, k_cap=5, refine=False)
    refined = frame_shift_check(m, k_cap=5)
    assert refined < 1e-10
    assert refined <= raw


def test_refine_eigenvalues_keeps_well_conditioned_values():
    M = build_sector_matrix(build_btc_model(1.0, 0.5, 0.1, N=2, n_max=15), 1)
    es = eigendecompose(M)
    values, bounds = refine_eigenvalues(M)
    cost = np.abs(values[:, None] - es.values[None, :])
    assert cost.min(axis=1).max() < 1e-12
    assert bounds.max() < 1e-12


def test_frame_shift_report_separates_condition_limited_pairs():
    # below saturation with N=1 most high-lying eigenvalues cannot be resolved
    with pytest.warns(ModelWarning):
        m = build_scully_lamb(1.0, 0.25, 0.1, 0.005, omega_c=1.0, N=1, n_max=60)
    rep = frame_shift_report(m, k_cap=5)
    assert rep.total == 641
    assert 0 < rep.excluded < rep.total
    assert rep.certified < 1e-10 < rep.deviation
    assert max(rep.per_sector.values()) == rep.deviation


def test_frame_shift_report_certifies_kerr_deviation():
    # a nonlinear Hamiltonian breaks the frame shift on well-conditioned pairs
    base = build_btc_model(1.0, 0.5, 0.1, n_max=10)
    m = ModelSpec("kerr", 10, DiagonalHamiltonian(0.2 * np.arange(11) ** 2), base.jumps)
    rep = frame_shift_report(m, k_cap=2)
    assert rep.excluded == 0 and rep.certified > 1e-3


@settings(max_examples=25, deadline=None)
@given(
    st.floats(min_value=0.0, max_value=2.0),
    st.floats(min_value=0.05, max_value=2.0),
    st.integers(min_value=1, max_value=20),
)
def test_steady_state_agrees_with_rate_equations(xi, eta, N):
    n_max = 40
    m = build_btc_model(1.0, xi, eta, N=N, n_max=n_max)
    ss = steady_state(m, check_tail=False)
    np.testing.assert_allclose(ss.occupations, btc_populations(1.0, xi, eta, N, n_max), atol=1e-10)
    assert ss.occupations.min() >= 0


def test_subnormal_pump_steady_state_is_vacuum():
    # a subnormal coupling would push the balancing scales out of float range
    m = build_btc_model(1.0, 2.2250738585072014e-308, 1.0, N=1, n_max=40)
    ss = steady_state(m)
    assert ss.occupations[0] == pytest.approx(1.0, abs=1e-12)
