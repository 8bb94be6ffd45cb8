import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from cvdefinetti import bounds, fock, projectors, symmetric
from cvdefinetti.fock import GaussianParams, TruncatedOperator

slow = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])

r_vals = st.floats(-1.0, 1.0)
q_vals = st.floats(0.05, 0.95)
amp = st.floats(0.0, 2.0)
phase = st.floats(0.0, 2 * math.pi)


@slow
@given(r=r_vals, mag=amp, ph=phase)
def test_variance_law_and_uncertainty(r, mag, ph):
    v = fock.squeezed_coherent(GaussianParams.from_alpha(mag * complex(math.cos(ph), math.sin(ph)), r=r))
    x, y = fock.quadratures(v.dim)
    vx, vy = fock.moment(x, v, 2), fock.moment(y, v, 2)
    assert abs(vx - math.exp(-2 * r) / 4) <= 1e-6
    assert abs(vy - math.exp(2 * r) / 4) <= 1e-6
    assert abs(vx * vy - 1 / 16) <= 1e-8
    assert abs(np.vdot(v.amplitudes, v.amplitudes).real - 1) <= 1e-10


@slow
@given(r=st.floats(-1.5, 1.5))
def test_squeezed_vacuum_parity(r):
    v = fock.squeezed_coherent(GaussianParams(r=r))
    assert np.abs(v.amplitudes[1::2]).max() <= 1e-10


@slow
@given(lo=st.floats(-1.0, 1.0), width=st.floats(0.0, 1.5), extra=st.floats(0.0, 0.5))
def test_spectral_projector_properties(lo, width, extra):
    x, _ = fock.quadratures(40)
    p = fock.spectral_projector(x, lo, lo + width)
    wider = fock.spectral_projector(x, lo, lo + width + extra)
    m = p.entries
    assert np.abs(m @ m - m).max() <= 1e-9
    assert np.abs(m - m.conj().T).max() <= 1e-12
    assert np.trace(wider.entries).real >= np.trace(m).real - 1e-9


@settings(max_examples=200, deadline=None)
@given(q=q_vals, r=st.floats(-0.8, 0.8), n0=st.floats(1.0, 200.0), d=st.floats(0.0, 0.5),
       k=st.integers(10, 10**8), ratio=st.integers(3, 200))
def test_scalar_swap_symmetry(q, r, n0, d, k, ratio):
    n = k * ratio
    rel = lambda a, b: abs(a - b) <= 1e-12 * max(abs(a), abs(b), 1e-300)
    assert rel(bounds.gamma_upper_bound(d, n0, r, q), bounds.gamma_upper_bound(d, n0, -r, 1 - q))
    assert rel(bounds.closed_form_threshold(k, n, q, r), bounds.closed_form_threshold(k, n, 1 - q, -r))
    assert rel(bounds.lemma3_error(k, n, q), bounds.lemma3_error(k, n, 1 - q))
    assert rel(bounds.delta_choice(k, n, q), bounds.delta_choice(k, n, 1 - q))


@settings(max_examples=100, deadline=None)
@given(q=q_vals, r=st.floats(-0.8, 0.8), k=st.integers(10, 10**7), ratio=st.integers(3, 200))
def test_solve_min_n0_postcondition(q, r, k, ratio):
    n = k * ratio
    n0 = bounds.solve_min_n0(k, n, q, r)
    assert bounds.chain_slack(n0, k, n, q, r) >= -1e-9


@settings(max_examples=100, deadline=None)
@given(n0=st.floats(0.1, 50.0), r=st.floats(-1.0, 1.0), frac=st.floats(0.0, 0.999))
def test_kernel_tail_bound_property(n0, r, frac):
    a = frac * math.sqrt(n0)
    assert projectors.kernel_tail(a, n0, r) < projectors.kernel_tail_bound(a, n0, r) * (1 + 1e-12)


@settings(max_examples=50, deadline=None)
@given(n0=st.floats(0.1, 100.0))
def test_w1_weights_monotone(n0):
    w = projectors.w1_weights(n0, 60)
    assert np.all(np.diff(w) >= 0)
    assert np.all((w > 0) & (w <= 1))


@settings(max_examples=10, deadline=None)
@given(q=st.sampled_from([0.3, 0.5, 0.7]), r=st.sampled_from([0.0, 0.2, -0.2]),
       n0=st.sampled_from([2.0, 3.0]), delta=st.floats(0.0, 0.5))
def test_gamma_dominance_property(q, r, n0, delta):
    p = projectors.build_povm_set(q, r, n0, projectors.headroom_dim(n0, r))
    res = bounds.solve_overlap(p.U1, p.V1, delta)
    assert res.gap <= 1e-7
    assert res.primal <= bounds.gamma_upper_bound(delta, n0, r, q) + 1e-6
    assert bounds.convexity_violation(res.evaluations) <= 1e-10


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rank=st.integers(1, 2))
def test_restricted_projector_permutation_invariance(seed, rank):
    import itertools
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    b = q[:, :rank]
    spec = symmetric.SymmetricSpec(d=3, n=3, k=1, P0=TruncatedOperator(b @ b.conj().T, hermitian=True,
                                                                       projector=True))
    r = symmetric.restricted_projector(spec).entries
    assert np.abs(r @ r - r).max() <= 1e-10
    for perm in itertools.permutations(range(spec.copies)):
        t = symmetric.permutation_matrix(3, perm)
        assert np.abs(t @ r - r @ t).max() <= 1e-12
    p = symmetric.restricted_sym_projector(spec).entries
    assert np.abs(p @ p - p).max() <= 1e-10
