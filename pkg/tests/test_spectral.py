import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectra.digraph import structure_report
from spectra.ensemble import EnsembleParams, SparseMatrix, StandardNormal, derive_trial_seed, sample_matrix
from spectra.spectral import (
    DenseLogSquaring,
    NilpotentInput,
    SparseMatvecChain,
    StructuralRadiusUndefined,
    choose_backend,
    dense_doubling_log_norms,
    dense_power_log_norm,
    estimate_radius,
    gelfand_upper,
    kostin_lower,
    matvec,
    operator_norm,
    power_norm,
    rmatvec,
    structural_radius,
)

from conftest import cycle_matrix, random_digraph

NEG_INF = -math.inf
TWO_CYCLE = SparseMatrix.from_dense([[0, 2], [8, 0]])
NILPOTENT = SparseMatrix.from_dense([[0, 5], [0, 0]])
PERM3 = cycle_matrix(3, [0, 1, 2])


def kostin_oracle(norm_a, norm_an, uk, n, k):
    """Linear-domain evaluation of the explicit lower bound at 60 digits."""
    mpmath.mp.dps = 60
    n, k = mpmath.mpf(n), mpmath.mpf(k)
    e = mpmath.log(n - 1) / mpmath.log(n)
    sigma = (n - 1) ** 3 / (n - 2) ** 2 * k**e
    nu = (n - 1) ** 2 / (n - 2) * k**e
    cn = n ** (3 * n / 2)
    return cn ** (-sigma / k) * (mpmath.mpf(norm_a) ** n / norm_an) ** (-nu / k) * uk


# --- matvec ------------------------------------------------------------------


def test_matvec_examples():
    assert np.array_equal(matvec(SparseMatrix.from_edges(3, []), [1.0, 2.0, 3.0]), np.zeros(3))
    y = matvec(PERM3, [1.0, 2.0, 3.0])
    assert sorted(y.tolist()) == [1.0, 2.0, 3.0]
    assert np.array_equal(matvec(TWO_CYCLE, [1.0, 1.0]), [2.0, 8.0])
    with pytest.raises(ValueError):
        matvec(TWO_CYCLE, [1.0, 2.0, 3.0])


@settings(max_examples=40)
@given(st.integers(1, 15), st.integers(0, 2**32))
def test_matvec_matches_dense(n, seed):
    rng = np.random.default_rng(seed)
    a = random_digraph(rng, n, 0.3, self_loops=True)
    x = rng.standard_normal(n)
    np.testing.assert_allclose(matvec(a, x), a.to_dense() @ x, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(rmatvec(a, x), a.to_dense().T @ x, rtol=1e-12, atol=1e-12)


# --- norms ---------------------------------------------------------------------


def test_operator_norm_examples():
    ident = operator_norm(lambda x: x, lambda x: x, 5)
    assert ident.log_value == pytest.approx(0.0, abs=1e-12)
    diag = np.array([1.0, 2.0, 3.0])
    est = operator_norm(lambda x: diag * x, lambda x: diag * x, 3)
    assert est.value == pytest.approx(3.0, rel=1e-9)
    est = operator_norm(lambda x: matvec(TWO_CYCLE, x), lambda x: rmatvec(TWO_CYCLE, x), 2)
    assert est.value == pytest.approx(8.0, rel=1e-12) and est.converged
    with pytest.raises(ValueError):
        operator_norm(lambda x: x, lambda x: x, 0)


def test_operator_norm_reports_nonconvergence():
    rng = np.random.default_rng(0)
    m = rng.standard_normal((40, 40))
    est = operator_norm(lambda x: m @ x, lambda x: m.T @ x, 40, rel_tol=1e-300, max_iter=3)
    assert not est.converged and est.iterations == 3


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 20), st.integers(0, 2**32))
def test_power_iteration_never_exceeds_true_norm(n, seed):
    rng = np.random.default_rng(seed)
    a = random_digraph(rng, n, 0.4, self_loops=True)
    for k in (1, 3):
        est = power_norm(a, k, SparseMatvecChain(k))
        true = np.linalg.norm(np.linalg.matrix_power(a.to_dense(), k), 2)
        if true == 0:
            assert est.log_value == NEG_INF
        else:
            assert est.log_value <= math.log(true) + 1e-12
            if est.converged:
                assert est.log_value == pytest.approx(math.log(true), abs=1e-4)


def test_power_norm_examples():
    for backend in (SparseMatvecChain(2), DenseLogSquaring(2)):
        assert power_norm(NILPOTENT, 2, backend).log_value == NEG_INF
        assert power_norm(TWO_CYCLE, 2, backend).value == pytest.approx(16.0, rel=1e-12)
    for k in (1, 2, 4, 7, 64):
        assert power_norm(PERM3, k, SparseMatvecChain(k)).value == pytest.approx(1.0, rel=1e-12)


def test_backend_validation():
    with pytest.raises(ValueError):
        DenseLogSquaring(3)
    with pytest.raises(ValueError):
        power_norm(TWO_CYCLE, 4, DenseLogSquaring(2))
    assert isinstance(choose_backend(100, 64), DenseLogSquaring)
    assert isinstance(choose_backend(2000, 64), SparseMatvecChain)
    assert isinstance(choose_backend(2000, 1 << 17), DenseLogSquaring)
    assert isinstance(choose_backend(100, 3), SparseMatvecChain)


def test_dense_squaring_survives_huge_powers():
    # ||A^(2^40)|| = 10^(2^40): far beyond float range, fine in logs
    a = np.diag([10.0, 1.0])
    log = dense_doubling_log_norms(a, 40)[-1]
    assert log == pytest.approx(2**40 * math.log(10.0), rel=1e-14)
    tiny = np.diag([1e-3, 1e-5])
    assert dense_power_log_norm(tiny, 10**6) == pytest.approx(10**6 * math.log(1e-3), rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 300), st.integers(0, 2**32))
def test_binary_power_matches_matrix_power(n, k, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) / math.sqrt(n)
    exact = np.linalg.norm(np.linalg.matrix_power(a, k), 2)
    got = dense_power_log_norm(a, k)
    if exact == 0 or not np.isfinite(exact) or exact < 1e-250:
        return
    assert got == pytest.approx(math.log(exact), abs=1e-8 * max(1.0, k))


# --- Gelfand -------------------------------------------------------------------


def test_gelfand_examples():
    assert gelfand_upper(NILPOTENT, 2, DenseLogSquaring(2)) == NEG_INF
    for k in (1, 2, 8, 1024):
        assert gelfand_upper(PERM3, k, DenseLogSquaring(k)) == pytest.approx(0.0, abs=1e-14)
    assert gelfand_upper(TWO_CYCLE, 2, DenseLogSquaring(2)) == pytest.approx(math.log(4.0), abs=1e-14)


def test_doubling_monotone_dense_and_sparse():
    rng = np.random.default_rng(4)
    for _ in range(30):
        a = random_digraph(rng, 30, 0.1, self_loops=True)
        logs = dense_doubling_log_norms(a, 16)
        ups = [lg / 2**j for j, lg in enumerate(logs)]
        for u1, u2 in zip(ups, ups[1:]):
            assert u2 <= u1 + 1e-12
        sparse = [gelfand_upper(a, 2**j, SparseMatvecChain(2**j)) for j in range(6)]
        for u1, u2 in zip(sparse, sparse[1:]):
            if u1 != NEG_INF:
                assert u2 <= u1 + 1e-6 * max(1.0, abs(u1))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.01, 100.0), st.booleans())
def test_scale_equivariance(seed, c, negate):
    c = -c if negate else c
    rng = np.random.default_rng(seed)
    a = random_digraph(rng, 12, 0.15)
    ca = a.scaled(c)
    rep = structure_report(a)
    if rep.cycles_only and not rep.acyclic:
        assert structural_radius(ca, rep) == pytest.approx(structural_radius(a, rep) + math.log(abs(c)), abs=1e-12)
    for k in (1, 4, 1 << 20):
        g, gc = gelfand_upper(a, k, DenseLogSquaring(k)), gelfand_upper(ca, k, DenseLogSquaring(k))
        if g == NEG_INF:
            assert gc == NEG_INF
        else:
            assert gc == pytest.approx(g + math.log(abs(c)), abs=1e-12)


# --- Kostin lower bound ----------------------------------------------------------


def test_kostin_three_cycle_matches_oracle():
    k = 2**20
    got = kostin_lower(0.0, 0.0, 0.0, 3, k)
    oracle = kostin_oracle(1, 1, 1, 3, k)
    assert got == pytest.approx(float(mpmath.log(oracle)), abs=1e-13)
    assert got == pytest.approx(-0.2372, abs=5e-5)
    assert math.exp(got) == pytest.approx(0.789, abs=1e-3)


@settings(max_examples=60)
@given(
    st.integers(3, 40),
    st.integers(1, 60),
    st.floats(-5, 5),
    st.floats(0, 20),
    st.floats(-3, 3),
)
def test_kostin_matches_linear_oracle(n, j, log_a, gap, log_uk):
    k = 2**j
    log_an = n * log_a - gap  # ||A^n|| <= ||A||^n
    got = kostin_lower(log_a, log_an, log_uk, n, k)
    oracle = kostin_oracle(mpmath.e**log_a, mpmath.e**log_an, mpmath.e**log_uk, n, k)
    assert got == pytest.approx(float(mpmath.log(oracle)), rel=1e-10, abs=1e-10)


def test_kostin_scale_shift():
    base = kostin_lower(0.3, 1.1, 0.2, 7, 2**12)
    c = math.log(3.7)
    assert kostin_lower(0.3 + c, 1.1 + 7 * c, 0.2 + c, 7, 2**12) == pytest.approx(base + c, abs=1e-12)


def test_kostin_preconditions():
    with pytest.raises(ValueError, match="requires n > 2"):
        kostin_lower(0.0, 0.0, 0.0, 2, 4)
    with pytest.raises(NilpotentInput):
        kostin_lower(0.0, NEG_INF, 0.0, 5, 4)


def test_kostin_limit_monotone_on_three_cycle():
    lows = []
    for j in (10, 20, 30, 40):
        k = 2**j
        uk = gelfand_upper(PERM3, k, DenseLogSquaring(k))
        lows.append(kostin_lower(0.0, dense_power_log_norm(PERM3, 3), uk, 3, k))
    assert all(b > a for a, b in zip(lows, lows[1:]))
    assert lows[-1] < 0 and lows[-1] > -2e-3


# --- structural radius and dispatcher ------------------------------------------------


def test_structural_radius_examples():
    assert structural_radius(NILPOTENT) == NEG_INF
    assert math.exp(structural_radius(TWO_CYCLE)) == pytest.approx(4.0, rel=1e-15)
    a = SparseMatrix.from_edges(5, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 3)], [1, 1, 8, 1, 1])
    assert math.exp(structural_radius(a)) == pytest.approx(2.0, rel=1e-15)
    chord = SparseMatrix.from_edges(3, [(0, 1), (1, 2), (2, 0), (0, 2)])
    with pytest.raises(StructuralRadiusUndefined):
        structural_radius(chord)


def test_structural_radius_self_loop():
    a = SparseMatrix.from_edges(3, [(0, 0), (0, 1), (1, 2), (2, 1)], [-3.0, 1.0, 2.0, 2.0])
    assert math.exp(structural_radius(a)) == pytest.approx(3.0, rel=1e-15)


def test_structural_radius_against_eigenvalues():
    rng = np.random.default_rng(6)
    checked = 0
    while checked < 200:
        n = int(rng.integers(2, 30))
        a = random_digraph(rng, n, float(rng.uniform(0.3, 1.2)) / n)
        rep = structure_report(a)
        if not rep.cycles_only or rep.acyclic:
            continue
        rho = np.max(np.abs(np.linalg.eigvals(a.to_dense())))
        assert math.exp(structural_radius(a, rep)) == pytest.approx(rho, rel=1e-8)
        checked += 1


def test_estimate_radius_dispatch():
    acyclic = SparseMatrix.from_edges(4, [(0, 1), (1, 2), (0, 3)], [1.0, 2.0, 3.0])
    rb = estimate_radius(acyclic)
    assert rb.method == "ExactAcyclic" and rb.exact_log_radius == NEG_INF and not rb.entries

    rb = estimate_radius(TWO_CYCLE, [2], cross_check=True)
    assert rb.method == "ExactCycles"
    assert math.exp(rb.exact_log_radius) == pytest.approx(4.0)
    assert math.exp(rb.entries[0].log_upper) == pytest.approx(4.0, rel=1e-14)
    assert rb.entries[0].log_lower is None  # n = 2: no explicit lower bound

    chord = SparseMatrix.from_edges(3, [(0, 1), (1, 2), (2, 0), (0, 2)], [1.0, 1.0, 1.0, 1.0])
    rb = estimate_radius(chord, [2, 4, 1 << 20])
    assert rb.method == "Sandwich"
    rho = np.max(np.abs(np.linalg.eigvals(chord.to_dense())))
    for e in rb.entries:
        assert e.log_lower <= math.log(rho) <= e.log_upper + 1e-9
    assert rb.entries[-1].log_upper == pytest.approx(math.log(rho), abs=1e-5)


def test_acyclic_draw_is_exactly_nilpotent():
    params = EnsembleParams.from_degree(400, 0.3, weights=StandardNormal())
    rng = np.random.default_rng(1)
    found = 0
    for t in range(40):
        z = sample_matrix(params, derive_trial_seed(12, t))
        rep = structure_report(z)
        if not rep.acyclic:
            continue
        assert estimate_radius(z, report=rep).method == "ExactAcyclic"
        for x in [np.ones(z.n)] + [rng.standard_normal(z.n) for _ in range(10)]:
            for _ in range(z.n):
                x = matvec(z, x)
            assert not np.any(x)
        found += 1
    assert found > 10


def test_sandwich_on_cycle_only_draws():
    ks = [2**j for j in range(1, 21)]
    checked = 0
    t = 0
    while checked < 100:
        z = sample_matrix(EnsembleParams.from_degree(100, 0.5), derive_trial_seed(13, t))
        t += 1
        rep = structure_report(z)
        if rep.acyclic or not rep.cycles_only:
            continue
        rb = estimate_radius(z, ks, report=rep, cross_check=True)
        for e in rb.entries:
            assert e.log_lower <= rb.exact_log_radius <= e.log_upper + 1e-9
        checked += 1


def test_sparse_and_dense_backends_agree():
    z = sample_matrix(EnsembleParams.from_degree(200, 4.0), 3)
    for k in (1, 2, 8):
        d = gelfand_upper(z, k, DenseLogSquaring(k))
        s = gelfand_upper(z, k, SparseMatvecChain(k))
        assert s <= d + 1e-12
        assert s == pytest.approx(d, abs=1e-6)
