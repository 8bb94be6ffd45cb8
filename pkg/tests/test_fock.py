import math

import numpy as np
import pytest

from cvdefinetti import fock
from cvdefinetti.errors import InvalidParameterError, SpectralRangeError, TruncationError
from cvdefinetti.fock import GaussianParams


def coherent_amplitudes(alpha, dim):
    # closed-form Poisson amplitudes, independent of any matrix exponential
    m = np.arange(dim)
    logfact = np.array([math.lgamma(k + 1) for k in m])
    mag = np.exp(-abs(alpha) ** 2 / 2 + m * math.log(abs(alpha)) - logfact / 2) if alpha else (m == 0) * 1.0
    return mag * np.exp(1j * np.angle(alpha) * m)


def squeezed_vacuum_amplitudes(r, dim):
    out = np.zeros(dim)
    t = math.tanh(r)
    for j in range(dim // 2 + dim % 2):
        if 2 * j < dim:
            out[2 * j] = (-t) ** j * math.sqrt(math.factorial(2 * j)) / (2**j * math.factorial(j))
    return out / math.sqrt(math.cosh(r))


def test_annihilation_entries():
    a = fock.annihilation(3).entries
    expected = np.array([[0, 1, 0], [0, 0, math.sqrt(2)], [0, 0, 0]])
    assert np.allclose(a, expected, atol=0)


def test_commutator_truncation_corner():
    dim = 7
    a = fock.annihilation(dim)
    comm = (a @ a.dag() - a.dag() @ a).entries
    diag = np.real(np.diag(comm))
    assert np.allclose(diag[:-1], 1.0)
    assert diag[-1] == pytest.approx(-(dim - 1))
    assert np.allclose(comm - np.diag(np.diag(comm)), 0)


def test_annihilation_lowers_one_photon():
    a = fock.annihilation(5).entries
    e1 = np.eye(5)[1]
    assert np.allclose(a @ e1, np.eye(5)[0])


@pytest.mark.parametrize("dim", [1, 0, -3])
def test_small_dim_rejected(dim):
    with pytest.raises(InvalidParameterError):
        fock.annihilation(dim)


def test_quadrature_commutator():
    x, y = fock.quadratures(12)
    c = (x @ y - y @ x).entries
    assert np.allclose(np.diag(c)[:-1], 0.5j)


def test_vacuum_variance():
    x, _ = fock.quadratures(10)
    vac = fock.FockVector(np.eye(10)[0])
    assert fock.moment(x, vac, 2) == pytest.approx(0.25, abs=1e-10)


def test_number_identity_spectrum():
    dim = 60
    x, y = fock.quadratures(dim)
    w = np.linalg.eigvalsh((x @ x + y @ y).entries)
    m = np.arange(dim // 3 + 1)
    assert np.allclose(w[: m.size], m + 0.5, atol=1e-8)


def test_gaussian_unitary_identity():
    u = fock.gaussian_unitary(GaussianParams(), 20)
    assert np.allclose(u.entries, np.eye(20))


def test_squeeze_parity():
    u = fock.gaussian_unitary(GaussianParams(r=0.5), 60)
    vac = u.entries[:, 0]
    assert np.abs(vac[1::2]).max() <= 1e-10


def test_squeezed_vacuum_matches_closed_form():
    u = fock.gaussian_unitary(GaussianParams(r=0.5), 60)
    assert np.allclose(u.entries[:, 0], squeezed_vacuum_amplitudes(0.5, 60), atol=1e-10)


def test_displacement_poisson_statistics():
    u = fock.gaussian_unitary(GaussianParams(alpha_re=1.0), 40)
    probs = np.abs(u.entries[:11, 0]) ** 2
    expected = [math.exp(-1) / math.factorial(m) for m in range(11)]
    assert np.allclose(probs, expected, atol=1e-8)


def test_gaussian_unitary_truncation_error():
    with pytest.raises(TruncationError) as err:
        fock.gaussian_unitary(GaussianParams(alpha_re=4.0), 12)
    assert err.value.suggested_dim > 12
    with pytest.raises(TruncationError):
        fock.gaussian_unitary(GaussianParams(r=0.5), 60, min_levels=40)


def test_gaussian_unitary_low_block_unitary():
    u = fock.gaussian_unitary(GaussianParams(alpha_re=0.7, r=0.3, theta=0.4), 80, min_levels=20)
    block = u.entries[:, :20]
    assert np.abs(block.conj().T @ block - np.eye(20)).max() < 1e-8


def test_unitary_levels_counts_exact_columns():
    u = np.eye(6, dtype=complex)
    u[:, 4] *= 0.5
    assert fock.unitary_levels(u) == 4


def test_invalid_gaussian_params():
    with pytest.raises(InvalidParameterError):
        GaussianParams(r=2.5)
    with pytest.raises(InvalidParameterError):
        GaussianParams(alpha_re=float("nan"))


def test_squeezed_coherent_vacuum():
    v = fock.squeezed_coherent(GaussianParams(), 16)
    assert np.allclose(v.amplitudes, np.eye(16)[0])


@pytest.mark.parametrize("alpha", [0.5, 1.3 - 0.7j, 2j])
def test_coherent_state_amplitudes(alpha):
    v = fock.squeezed_coherent(GaussianParams.from_alpha(alpha))
    ref = coherent_amplitudes(alpha, v.dim)
    assert np.allclose(v.amplitudes, ref / np.linalg.norm(ref), atol=1e-9)


def test_squeezed_variances():
    v = fock.squeezed_coherent(GaussianParams(r=0.5), 70)
    x, y = fock.quadratures(70)
    assert fock.moment(x, v, 2) == pytest.approx(math.exp(-1) / 4, abs=1e-6)
    assert fock.moment(y, v, 2) == pytest.approx(math.exp(1) / 4, abs=1e-6)
    assert fock.moment(x, v, 2) == pytest.approx(0.091970, abs=1e-6)


def test_displacement_leaves_variance():
    v = fock.squeezed_coherent(GaussianParams(alpha_re=2.0, r=0.3))
    x, _ = fock.quadratures(v.dim)
    assert fock.moment(x, v, 2) == pytest.approx(math.exp(-0.6) / 4, abs=1e-6)
    assert fock.moment(x, v, 1) == pytest.approx(2.0, abs=1e-8)


def test_mean_of_coherent_state():
    x, _ = fock.quadratures(40)
    assert fock.moment(x, fock.FockVector(np.eye(40)[0]), 1) == pytest.approx(0.0, abs=1e-14)
    v = fock.FockVector(coherent_amplitudes(1.0, 40) / np.linalg.norm(coherent_amplitudes(1.0, 40)))
    assert fock.moment(x, v, 1) == pytest.approx(1.0, abs=1e-8)


def test_negative_squeezing_swaps_variances():
    v = fock.squeezed_coherent(GaussianParams(r=-0.5))
    _, y = fock.quadratures(v.dim)
    assert fock.moment(y, v, 2) == pytest.approx(math.exp(-1) / 4, abs=1e-6)


def test_squeezed_coherent_explicit_dim_too_small():
    with pytest.raises(TruncationError):
        fock.squeezed_coherent(GaussianParams(alpha_re=3.0), 10)


def test_fock_vector_normalization_check():
    with pytest.raises(InvalidParameterError):
        fock.FockVector(np.ones(4))


def test_moment_dim_mismatch():
    x, _ = fock.quadratures(8)
    with pytest.raises(InvalidParameterError):
        fock.moment(x, fock.FockVector(np.eye(10)[0]), 1)


def test_hermitian_flag_checked():
    m = np.array([[0, 1], [0, 0]])
    with pytest.raises(InvalidParameterError):
        fock.TruncatedOperator(m, hermitian=True)
    with pytest.raises(InvalidParameterError):
        fock.TruncatedOperator(np.eye(2) * 2, hermitian=True, projector=True)


def test_spectral_projector_full_and_empty():
    x, _ = fock.quadratures(20)
    w = x.spectrum[0]
    full = fock.spectral_projector(x, w[0], w[-1])
    assert np.allclose(full.entries, np.eye(20))
    empty = fock.spectral_projector(x, 0.01, 0.011) if not np.any((w > 0.009) & (w < 0.012)) else None
    assert empty is not None and np.allclose(empty.entries, 0)


def test_spectral_projector_rank_and_monotonicity():
    dim = 40
    x, _ = fock.quadratures(dim)
    x2 = x @ x
    xs = np.linalg.eigvalsh(x.entries)
    ranks = []
    for c in [0.1, 0.5, 1.0, 2.0]:
        p = fock.spectral_projector(x2, -1.0, c)
        rank = int(round(np.trace(p.entries).real))
        assert rank == int(np.sum(xs**2 <= c))
        assert np.abs(p.entries @ p.entries - p.entries).max() < 1e-9
        ranks.append(rank)
    assert ranks == sorted(ranks)


def test_spectral_projector_refuses_unreliable_window():
    x, _ = fock.quadratures(18)
    with pytest.raises(SpectralRangeError):
        fock.spectral_projector(x, -1.0, 2.5)


def test_beam_splitter_vacuum_and_single_photon():
    dim = 6
    b = fock.beam_splitter(dim).entries
    vac = np.zeros(dim * dim)
    vac[0] = 1
    assert np.allclose(b @ vac, vac)
    one = np.zeros(dim * dim)
    one[1 * dim + 0] = 1
    out = b @ one
    assert abs(out[1 * dim]) ** 2 == pytest.approx(0.5, abs=1e-8)
    assert abs(out[0 * dim + 1]) ** 2 == pytest.approx(0.5, abs=1e-8)


def test_beam_splitter_conserves_photons():
    dim = 6
    b = fock.beam_splitter(dim).entries
    n = np.diag(np.add.outer(np.arange(dim), np.arange(dim)).ravel().astype(float))
    assert np.abs(b @ n - n @ b).max() <= 1e-8
    assert np.allclose(b.conj().T @ b, np.eye(dim * dim), atol=1e-8)


def test_beam_splitter_cap():
    with pytest.raises(InvalidParameterError):
        fock.beam_splitter(70)


def test_f_xy_vacuum():
    v, res = fock.f_xy_state(0.0, 0.0, 0.0, 20)
    assert np.allclose(v.amplitudes, np.eye(20)[0])
    assert res <= 1e-10


def test_f_xy_residual_and_eigenvalue():
    dim = 80
    v, res = fock.f_xy_state(1.0, 0.5, 0.3, dim)
    assert res <= 1e-6
    ap = fock.bogoliubov_annihilation(0.3, dim).entries
    lam = np.vdot(v.amplitudes, ap @ v.amplitudes)
    assert lam == pytest.approx(complex(math.exp(-0.3), 0.5 * math.exp(0.3)), abs=1e-8)


def test_f_xy_out_of_range():
    with pytest.raises(SpectralRangeError):
        fock.f_xy_state(10.0, 0.0, 0.0, 30)


def test_tail_mass_definition():
    amps = np.zeros(20)
    amps[-2:] = [0.6, 0.8]
    assert fock.tail_mass(amps) == pytest.approx(1.0)


def test_auto_dim_rule():
    assert fock.auto_dim(GaussianParams()) == 32
    assert fock.auto_dim(GaussianParams(alpha_re=3.0, r=0.5), energy=4.0) == math.ceil(8 * (9 + math.e * 4))


def test_truncation_monotonicity():
    p = GaussianParams(alpha_re=1.0, alpha_im=-0.5, r=0.4)
    v = fock.squeezed_coherent(p)
    big = int(1.5 * v.dim)
    vb = fock.squeezed_coherent(p, big)
    x, _ = fock.quadratures(v.dim)
    xb, _ = fock.quadratures(big)
    assert abs(fock.moment(x, v, 2) - fock.moment(xb, vb, 2)) < 1e-5


def test_to_csv(tmp_path):
    path = tmp_path / "op.csv"
    fock.to_csv(fock.annihilation(3), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "row,col,re,im"
    assert len(lines) == 10
