import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgdelta import discretization as disc
from kgdelta import model
from kgdelta import spectra
from kgdelta.exceptions import NotAdmissible, PoleAtOne


def spec(m=1.0, alpha=0.0, gamma=0.0, p=3.0, omega=0.0):
    return model.ModelParams(m, alpha, gamma, p).at(omega)


def spec_at_ratio(ratio, omega, p, m=1.0):
    """Spec with beta = ratio * beta_max, realized through gamma alone."""
    kappa = math.sqrt(m * m - omega * omega)
    return spec(m=m, gamma=ratio * 2 * kappa, omega=omega, p=p)


@pytest.fixture(scope="module")
def pt_grid():
    return disc.make_grid(30, 6000)


@pytest.fixture(scope="module")
def pt_ops(pt_grid):
    s = spec()
    ph = disc.discrete_profile(pt_grid, s)
    return disc.build_L_plus(pt_grid, s, ph), disc.build_L_minus(pt_grid, s, ph)


def toeplitz(grid, c):
    n = grid.n
    return disc.DiscreteOperator(np.full(n, 2 / grid.h ** 2 + c), np.full(n - 1, -1 / grid.h ** 2), "toeplitz", grid)


# -- inertia and bisection --------------------------------------------------

def test_inertia_identity_like():
    g = disc.make_grid(5, 50)
    op = disc.DiscreteOperator(np.ones(g.n), np.zeros(g.n - 1), "id", g)
    assert spectra.inertia_count(op, 0.0) == 0
    assert spectra.inertia_count(op, 1.5) == g.n


def test_inertia_poschl_teller(pt_ops):
    lp, lm = pt_ops
    assert spectra.inertia_count(lp, -1e-6) == 1
    assert spectra.inertia_count(lm, -1e-6) == 0


def test_inertia_vectorized_matches_scalar(pt_ops):
    shifts = np.linspace(-4, 2, 13)
    counts = spectra.inertia_counts(pt_ops[0], shifts)
    assert list(counts) == [spectra.inertia_count(pt_ops[0], s) for s in shifts]
    assert np.all(np.diff(counts) >= 0)


def test_inertia_exact_eigenvalue_shift_is_handled():
    g = disc.make_grid(5, 10)
    op = disc.DiscreteOperator(np.array([1.0, 2.0, 3.0] * 3), np.zeros(8), "diag", g)
    assert spectra.inertia_count(op, 2.0) in (3, 6)


def test_eig_bisect_poschl_teller(pt_ops):
    lp, lm = pt_ops
    assert np.allclose(spectra.eig_bisect(lp, 2), [-3, 0], atol=1e-3)
    assert abs(spectra.eig_bisect(lm, 1)[0]) < 1e-4


def test_eig_bisect_toeplitz():
    g = disc.make_grid(4, 40)
    c = 0.7
    op = toeplitz(g, c)
    j = np.arange(1, 11)
    expected = 2 / g.h ** 2 * (1 - np.cos(j * math.pi * g.h / (2 * g.L))) + c
    got = spectra.eig_bisect(op, 10)
    assert np.allclose(got, expected, rtol=0, atol=1e-9)


def test_eig_bisect_consistent_with_inertia(pt_ops):
    lp = pt_ops[0]
    eigs = spectra.eig_bisect(lp, 4)
    for k, e in enumerate(eigs):
        assert spectra.inertia_count(lp, e - 1e-8) <= k
        assert spectra.inertia_count(lp, e + 1e-8) >= k + 1


def test_eigenvector_is_eigenvector():
    g = disc.make_grid(20, 800)
    op = disc.build_L_plus(g, spec(gamma=0.3, omega=0.4))
    e = spectra.eig_bisect(op, 1)[0]
    vec = spectra.eigenvector(op, e)
    assert np.linalg.norm(op.matvec(vec) - e * vec) < 1e-6


# -- counts -----------------------------------------------------------------

def test_count_examples():
    s = spec(omega=0.5)
    kappa = s.kappa
    g = disc.make_grid(30 / kappa, 3000)
    assert spectra.count_negative_Lpm(g, spec(gamma=-0.5 * kappa, omega=0.5)) == (1, 0)
    assert spectra.count_negative_Lpm(g, spec(gamma=0.5 * kappa, omega=0.5)) == (2, 0)
    assert spectra.count_negative_Lpm(g, s) == (1, 0)


def test_count_not_admissible():
    with pytest.raises(NotAdmissible):
        spectra.count_negative_Lpm(disc.make_grid(30, 600), spec(gamma=2.5))


@pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
@pytest.mark.parametrize("omega", [0.0, 0.3, 0.6])
def test_count_sweep(p, omega):
    for ratio in (-0.9, -0.5, -0.1, 0.0, 0.1, 0.5, 0.9):
        s = spec_at_ratio(ratio, omega, p)
        g = disc.grid_for(s, h=0.02)
        expected = (2 if s.beta > 0 else 1, 0)
        assert spectra.count_negative_Lpm(g, s) == expected, (ratio, omega, p)
        assert spectra.full_block_counts(g, s) == model.n_omega(s)


@pytest.mark.parametrize("gamma", [0.0, 0.5, -0.5])
def test_radial_count(gamma):
    s = spec(gamma=gamma, omega=0.3)
    assert spectra.count_negative_radial(disc.grid_for(s, h=0.01), s) == 1


def test_radial_operator_ground_state_matches_full_line():
    s = spec(gamma=0.5, omega=0.3)
    g = disc.grid_for(s, h=0.01)
    full = spectra.eig_bisect(disc.build_L_plus(g, s, disc.discrete_profile(g, s)), 2)
    rad = spectra.eig_bisect(spectra.radial_operator(g, s), 1)
    # the even ground state is shared; the odd one is lost on the half line
    assert rad[0] == pytest.approx(full[0], abs=1e-8)


# -- kernel -----------------------------------------------------------------

def test_kernel_check_beta_zero(pt_grid):
    d = spectra.kernel_check(pt_grid, spec())
    assert d.ok
    assert d.lplus_correlation > 1 - 1e-6
    assert d.lminus_correlation > 1 - 1e-6
    assert abs(d.lplus_eigenvalue) < d.zero_tol


def test_kernel_check_beta_nonzero():
    s = spec(gamma=0.3)
    d = spectra.kernel_check(disc.grid_for(s), s)
    assert d.ok
    assert d.lplus_correlation is None
    assert abs(d.lplus_eigenvalue) > 10 * d.zero_tol


@pytest.mark.parametrize("kwargs", [dict(gamma=-0.6, omega=0.5), dict(alpha=0.5, gamma=0.2, omega=0.7, p=2.0)])
def test_kernel_lminus_correlates_with_profile(kwargs):
    s = spec(**kwargs)
    d = spectra.kernel_check(disc.grid_for(s), s)
    assert abs(d.lminus_eigenvalue) < d.zero_tol
    assert d.lminus_correlation > 1 - 1e-6


def test_spectrum_report(pt_ops):
    lp = pt_ops[0]
    rep = spectra.spectrum_report(lp, spec(), cutoff=0.5)
    assert np.allclose(rep.eigenvalues_below, [-3, 0], atol=1e-3)
    assert rep.negative_count == 1
    assert len(rep.zero_modes) == 1
    assert np.all(rep.eigenvalues_below < 0.5)


# -- Lambda map -------------------------------------------------------------

def test_lambda_map_examples():
    assert spectra.lambda_map(0.0, 0.3) == 0.0
    assert spectra.lambda_map(0.5, 0.5) == pytest.approx(0.75)
    assert spectra.lambda_map(1 + 0.3 ** 2, 0.3) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(PoleAtOne):
        spectra.lambda_map(1.0, 0.2)


def test_lambda_inverse_examples():
    assert spectra.lambda_inverse(0.75, 0.5, "Minus") == pytest.approx(0.5)
    assert spectra.lambda_inverse(0.75, 0.5, spectra.Branch.Plus) == pytest.approx(1.5)
    assert spectra.lambda_inverse(0.0, 0.4, "Minus") == 0.0
    assert spectra.lambda_inverse(0.0, 0.4, "Plus") == pytest.approx(1.16)
    assert spectra.lambda_inverse(1.0, 0.0, "Minus") == spectra.lambda_inverse(1.0, 0.0, "Plus") == 1.0


def test_lambda_round_trip_grid():
    for omega in (0.0, 0.3, 0.6, 0.9):
        for mu in np.linspace(-5, 5, 41):
            for branch in spectra.Branch:
                lam = spectra.lambda_inverse(mu, omega, branch)
                if abs(lam - 1.0) > 1e-2:
                    assert abs(spectra.lambda_map(lam, omega) - mu) < 1e-12 * max(1.0, abs(mu))


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(0, 0.99), st.sampled_from(["Minus", "Plus"]))
def test_lambda_round_trip(mu, omega, branch):
    lam = spectra.lambda_inverse(mu, omega, branch)
    if lam == 1.0:
        return
    # evaluating Lambda near its pole amplifies the rounding of lam by |Lambda'(lam)|
    cond = 1.0 + omega ** 2 / (1.0 - lam) ** 2
    assert abs(spectra.lambda_map(lam, omega) - mu) < 1e-12 * max(1.0, abs(mu)) * cond
    assert (lam < 1) if branch == "Minus" else (lam > 1)


@settings(max_examples=100, deadline=None)
@given(st.floats(-20, 0.999), st.floats(-20, 0.999), st.floats(0, 0.99))
def test_lambda_map_increasing_below_pole(a, b, omega):
    if a == b:
        return
    lo, hi = sorted((a, b))
    assert spectra.lambda_map(lo, omega) < spectra.lambda_map(hi, omega)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.001, 50), st.floats(1.001, 50), st.floats(0, 0.99))
def test_lambda_map_increasing_above_pole(a, b, omega):
    if a == b:
        return
    lo, hi = sorted((a, b))
    assert spectra.lambda_map(lo, omega) < spectra.lambda_map(hi, omega)


def test_ess_edges_examples():
    assert spectra.ess_spectrum_edges(spec(omega=0.5)) == pytest.approx((0.5, 1.0, 1.5))
    assert spectra.ess_spectrum_edges(spec(m=0.6)) == pytest.approx((0.36, 1.0, 1.0))
    assert spectra.ess_spectrum_edges(spec(m=1.5)) == pytest.approx((1.0, 1.0, 2.25))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 3), st.floats(0.01, 0.99))
def test_ess_edges_bracket_one(m, frac):
    s1, one, s2 = spectra.ess_spectrum_edges(spec(m=m, omega=frac * m))
    assert 0 < s1 < 1 < s2 and one == 1.0


def test_ess_edge_approached_from_above_as_L_grows():
    s = spec(omega=0.3)
    onsets = []
    for L in (10, 20, 40):
        g = disc.make_grid(L, int(L * 100))
        op = disc.build_L_minus(g, s, model.phi(s, g.x))
        onsets.append(spectra.eig_bisect(op, 2)[1])
    assert all(o > s.kappa_sq for o in onsets)
    assert onsets[0] > onsets[1] > onsets[2]


# -- block operator ---------------------------------------------------------

@pytest.mark.parametrize("gamma", [-0.5, 0.5])
def test_block_reduction_check(gamma):
    s = spec(gamma=gamma, omega=0.4)
    chk = spectra.block_reduction_check(disc.make_grid(15, 200), s)
    assert chk.counts_agree
    assert chk.dense_negative_count == model.n_omega(s)
    assert chk.max_mismatch < 1e-6
    assert np.all(chk.negative_eigenvalues < 0)


def test_block_operator_is_symmetric():
    B = spectra.assemble_block_operator(disc.make_grid(5, 30), spec(gamma=0.2, omega=0.5))
    assert np.array_equal(B, B.T)
