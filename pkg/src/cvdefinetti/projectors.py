"""Biased verification POVMs and the operators used to certify their overlap bound.

Every operator inequality ``L <= R`` is certified by the smallest eigenvalue of
``R - L``. Certification is done on the lowest two thirds of the Fock levels,
where truncated quadratures still behave like their infinite-dimensional
counterparts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, gammaincc

from . import fock
from .errors import InvalidParameterError, NumericalConsistencyError, TruncationError
from .fock import TruncatedOperator

ROUTE_TOL = 1e-6
CHAIN_TOL = 1e-7


def headroom_dim(n0: float, r: float) -> int:
    """Smallest cutoff accepted for threshold ``n0`` at squeezing ``r``."""
    return math.ceil(8 * (n0 * math.exp(2 * abs(r)) + 1))


def low_block(dim: int) -> int:
    return (2 * dim) // 3


def _validate(q, r, n0, dim):
    if not 0.0 < q < 1.0:
        raise InvalidParameterError("q must lie strictly between 0 and 1")
    if not n0 > 0:
        raise InvalidParameterError(f"n0 must be positive, got {n0}")
    if not math.isfinite(r) or abs(r) > fock.R_MAX:
        raise InvalidParameterError(f"|r| must not exceed {fock.R_MAX}, got {r}")
    need = headroom_dim(n0, r)
    if dim < need:
        raise TruncationError(f"dim={dim} lacks energy headroom for n0={n0}, r={r}",
                              suggested_dim=need)


@dataclass(frozen=True, eq=False)
class PovmSet:
    q: float
    r: float
    n0: float
    dim: int
    U0: TruncatedOperator
    U1: TruncatedOperator
    V0: TruncatedOperator
    V1: TruncatedOperator
    W1: TruncatedOperator


def quadratic_form(r: float, dim: int) -> TruncatedOperator:
    """``exp(2r) X^2 + exp(-2r) Y^2``, equal to ``n' + 1/2`` away from the cutoff."""
    x, y = fock.quadratures(dim)
    q = math.exp(2 * r) * (x @ x) + math.exp(-2 * r) * (y @ y)
    reliable = (0.0, dim * math.exp(-2 * abs(r)) / 8 + 1)
    return TruncatedOperator(q.entries, hermitian=True, reliable=reliable)


def bogoliubov_number(r: float, dim: int) -> TruncatedOperator:
    """Number operator of ``a' = cosh(r) a + sinh(r) a^dag``."""
    ap = fock.bogoliubov_annihilation(r, dim)
    n = ap.dag() @ ap
    return TruncatedOperator(n.entries, hermitian=True,
                             reliable=(0.0, dim * math.exp(-2 * abs(r)) / 8))


def w1_weights(n0: float, count: int) -> np.ndarray:
    """``Gamma(m+1, n0) / Gamma(m+1)`` for ``m = 0 .. count-1``.

    This is the regularized upper incomplete gamma function, i.e. the
    probability that a Poisson(n0) variable is at most ``m``.
    """
    if not n0 > 0:
        raise InvalidParameterError(f"n0 must be positive, got {n0}")
    return gammaincc(np.arange(count) + 1.0, n0)


def build_w1(r: float, n0: float, dim: int) -> TruncatedOperator:
    """Operator diagonal in the Bogoliubov number basis with weights :func:`w1_weights`."""
    _, v = bogoliubov_number(r, dim).spectrum
    weights = w1_weights(n0, dim)
    return TruncatedOperator((v * weights) @ v.conj().T, hermitian=True)


def squeezed_number_projector(r: float, levels: int, dim: int) -> TruncatedOperator:
    """Projector onto ``S(r)|m>`` for ``m < levels``, built from the squeeze unitary."""
    s = fock.squeezed_number_states(r, levels, dim)
    return TruncatedOperator(s @ s.conj().T, hermitian=True)


def kernel_tail(v, n0: float, r: float = 0.0):
    """Gaussian-kernel tail ``(e^-r/sqrt(pi)) int_{|x|>=sqrt(n0)} exp(-e^-2r (x-v)^2) dx``.

    Equivalently the probability that ``v + e^r Z / sqrt(2)`` (Z standard
    normal) lands outside ``[-sqrt(n0), sqrt(n0)]``.
    """
    v = np.asarray(v, dtype=float)
    s = math.sqrt(n0)
    k = math.exp(-r)
    return 0.5 * (erfc(k * (s - v)) + erfc(k * (s + v)))


def kernel_tail_bound(a, n0: float, r: float = 0.0):
    """Closed-form upper bound on :func:`kernel_tail` for ``0 <= a < sqrt(n0)``."""
    a = np.asarray(a, dtype=float)
    t = math.exp(-r) * (math.sqrt(n0) - a)
    return np.exp(-t**2) / (math.sqrt(math.pi) * t)


def build_smoothers(r: float, n0: float, dim: int) -> tuple[TruncatedOperator, TruncatedOperator]:
    """Heterodyne-marginal operators ``A = F(X)`` and ``C = G(Y)``.

    ``A`` is the probability that a squeezed-heterodyne X outcome falls in
    ``x^2 >= e^-2r n0/2``. In units where the Bogoliubov quadrature has vacuum
    variance 1/2 this is ``kernel_tail(sqrt(2) e^r X, n0)``. ``C`` is the same
    with ``Y`` and ``-r``.
    """
    _validate(0.5, r, n0, dim)
    x, y = fock.quadratures(dim)
    sx = math.sqrt(2) * math.exp(r)
    sy = math.sqrt(2) * math.exp(-r)
    a_op = fock.operator_function(x, lambda v: kernel_tail(sx * v, n0))
    c_op = fock.operator_function(y, lambda v: kernel_tail(sy * v, n0))
    return a_op, c_op


def build_povm_set(q: float, r: float, n0: float, dim: int) -> PovmSet:
    """Assemble ``{U0, U1, V0, V1, W1}`` and cross-check ``V0`` two ways.

    ``V0`` is the spectral projector of the quadratic form onto ``<= n0 + 1``.
    It is compared with the projector onto squeezed number states
    ``S(r)|m>``, ``m + 1/2 <= n0 + 1``, built from the squeeze unitary.
    """
    _validate(q, r, n0, dim)
    x, y = fock.quadratures(dim)
    bx = math.sqrt(math.exp(-2 * r) * n0 / 2)
    by = math.sqrt(math.exp(2 * r) * n0 / 2)
    u0 = q * fock.spectral_projector(x, -bx, bx) + (1 - q) * fock.spectral_projector(y, -by, by)
    eye = fock.identity(dim)

    v0 = fock.spectral_projector(quadratic_form(r, dim), -np.inf, n0 + 1)
    levels = math.floor(n0 + 0.5) + 1
    v0_b = squeezed_number_projector(r, levels, dim)
    k = low_block(dim)
    diff = np.linalg.norm((v0.entries - v0_b.entries)[:k, :k], 2)
    if diff > ROUTE_TOL:
        raise NumericalConsistencyError(
            f"V0 routes disagree on the low block by {diff:.2e} (dim={dim})")

    w1 = build_w1(r, n0, dim)
    v1 = TruncatedOperator((eye - v0).entries, hermitian=True, projector=True)
    return PovmSet(q=q, r=r, n0=n0, dim=dim, U0=u0, U1=eye - u0, V0=v0, V1=v1, W1=w1)


def min_eig_gap(lhs: TruncatedOperator, rhs: TruncatedOperator, block: int | None = None) -> float:
    """Smallest eigenvalue of ``rhs - lhs``, optionally on the first ``block`` levels."""
    if lhs.size != rhs.size:
        raise InvalidParameterError(f"dimension mismatch: {lhs.size} vs {rhs.size}")
    if not (lhs.hermitian and rhs.hermitian):
        raise InvalidParameterError("min_eig_gap requires hermitian operators")
    m = rhs.entries - lhs.entries
    if block is not None:
        m = m[:block, :block]
    return float(np.linalg.eigvalsh(m)[0])


def remainder_bracket(n0: float, r: float, q: float) -> float:
    """``q e^r exp(-n0 e^-2r / 9) + (1-q) e^-r exp(-n0 e^2r / 9)``."""
    return (q * math.exp(r) * math.exp(-n0 * math.exp(-2 * r) / 9)
            + (1 - q) * math.exp(-r) * math.exp(-n0 * math.exp(2 * r) / 9))


def certify_chain(q: float, r: float, n0: float, dim: int, tol: float = CHAIN_TOL,
                  povm: PovmSet | None = None) -> list[dict]:
    """Certify each step of the chain bounding ``V1`` by ``U1``.

    Returns one record per inequality. The four stated steps are ``i`` to
    ``iv``; the ``supplementary`` records carry the union bound
    ``W1 <= A + C``, the ``q(1-q)`` weighting actually needed for ``iv``, and
    step ``iii`` with the tighter remainder constant.
    """
    if povm is None:
        povm = build_povm_set(q, r, n0, dim)
    a_op, c_op = build_smoothers(r, n0, dim)
    eye = fock.identity(dim)
    k = low_block(dim)
    qn0 = float(gammaincc(n0 + 1, n0))
    bracket = remainder_bracket(n0, r, q)
    mix = q * a_op + (1 - q) * c_op
    eps_safe = 3 * bracket
    eps_tight = 3 / math.sqrt(math.pi * n0) * bracket
    quad_fail = povm.U1  # q P[X^2 > ..] + (1-q) P[Y^2 > ..]

    def gap(lhs, rhs):
        return min_eig_gap(lhs, rhs, block=k)

    steps = [
        ("i", min(gap(povm.V1, (1 / qn0) * povm.W1),
                  gap((1 / qn0) * povm.W1, 2.0 * povm.W1)), False),
        ("ii", gap(math.sqrt(q * (1 - q)) * povm.W1, mix), False),
        ("iii", gap(mix, quad_fail + eps_safe * eye), False),
        ("iv", gap(povm.V1, (2 / (q * (1 - q))) * povm.U1
                   + (6 / (q * (1 - q)) * bracket) * eye), False),
        ("ii_union", gap(povm.W1, a_op + c_op), True),
        ("ii_weighted", gap(q * (1 - q) * povm.W1, mix), True),
        ("iii_tight", gap(mix, quad_fail + eps_tight * eye), True),
    ]
    params = {"q": q, "r": r, "n0": n0}
    return [
        {"inequality_id": name, "params": params, "dim": dim, "min_eig_gap": value,
         "tolerance": tol, "pass": bool(value >= -tol), "supplementary": supp}
        for name, value, supp in steps
    ]
