"""Permutation-symmetric and restricted symmetric projectors on small qudit registers."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NumericalConsistencyError
from .fock import TruncatedOperator

MAX_TOTAL_DIM = 1024
IDEMPOTENCY_TOL = 1e-10


def _guard(d: int, m: int):
    if d < 2 or m < 1:
        raise InvalidParameterError(f"need d >= 2 and at least one copy, got d={d}, m={m}")
    if d**m > MAX_TOTAL_DIM:
        raise InvalidParameterError(f"d^m = {d**m} exceeds the guard {MAX_TOTAL_DIM}")


@dataclass(frozen=True, eq=False)
class SymmetricSpec:
    """``d``-level sites, ``n + k`` copies, reference-subspace projector ``P0`` on one site."""

    d: int
    n: int
    k: int
    P0: TruncatedOperator

    def __post_init__(self):
        if not 2 <= self.d <= 4:
            raise InvalidParameterError(f"d must lie in 2..4, got {self.d}")
        if not 1 <= self.n <= 5:
            raise InvalidParameterError(f"n must lie in 1..5, got {self.n}")
        # k = n is allowed so that the smallest case (n = k = 1) can be built
        if not 0 <= self.k <= self.n:
            raise InvalidParameterError(f"k must lie in 0..n, got {self.k}")
        _guard(self.d, self.copies)
        if self.P0.size != self.d:
            raise InvalidParameterError(f"P0 acts on dimension {self.P0.size}, expected {self.d}")
        p = self.P0.entries
        if np.abs(p - p.conj().T).max() > 1e-12 or np.abs(p @ p - p).max() > IDEMPOTENCY_TOL:
            raise InvalidParameterError("P0 must be an orthogonal projector")

    @property
    def copies(self) -> int:
        return self.n + self.k


def _digits(d: int, m: int) -> np.ndarray:
    """Row ``i`` holds the base-``d`` digits of basis index ``i`` (first site most significant)."""
    idx = np.arange(d**m)
    return np.stack([(idx // d ** (m - 1 - s)) % d for s in range(m)], axis=1)


def permutation_matrix(d: int, perm) -> np.ndarray:
    """Operator moving the tensor factor at site ``i`` to site ``perm[i]``."""
    m = len(perm)
    _guard(d, m)
    digs = _digits(d, m)
    moved = np.empty_like(digs)
    moved[:, list(perm)] = digs
    weights = d ** np.arange(m - 1, -1, -1)
    target = moved @ weights
    out = np.zeros((d**m, d**m))
    out[target, np.arange(d**m)] = 1.0
    return out


def sym_projector(d: int, m: int) -> TruncatedOperator:
    """Average of all ``m!`` permutation operators on ``(C^d)^m``."""
    _guard(d, m)
    acc = np.zeros((d**m, d**m))
    for perm in itertools.permutations(range(m)):
        acc += permutation_matrix(d, perm)
    return TruncatedOperator(acc / math.factorial(m), hermitian=True, projector=True, modes=m)


def _kron_all(factors) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out


def restricted_projector(spec: SymmetricSpec) -> TruncatedOperator:
    """Sum over bit strings of length ``n + k`` with at most ``k`` ones of
    ``P_{b_1} x ... x P_{b_{n+k}}``, where ``P_1 = I - P0``."""
    p0 = spec.P0.entries
    p1 = np.eye(spec.d) - p0
    m = spec.copies
    acc = np.zeros((spec.d**m, spec.d**m), dtype=complex)
    for bits in itertools.product((0, 1), repeat=m):
        if sum(bits) <= spec.k:
            acc += _kron_all(p1 if b else p0 for b in bits)
    return TruncatedOperator(acc, hermitian=True, projector=True, modes=m)


def restricted_sym_projector(spec: SymmetricSpec) -> TruncatedOperator:
    """Product of :func:`restricted_projector` and :func:`sym_projector`; the factors commute."""
    prod = restricted_projector(spec).entries @ sym_projector(spec.d, spec.copies).entries
    err = np.abs(prod @ prod - prod).max()
    if err > IDEMPOTENCY_TOL:
        raise NumericalConsistencyError(f"restricted symmetric projector not idempotent ({err:.2e})")
    prod = (prod + prod.conj().T) / 2
    return TruncatedOperator(prod, hermitian=True, projector=True, modes=spec.copies)


def rank(op: TruncatedOperator, tol: float = 1e-8) -> int:
    return int(np.sum(np.linalg.eigvalsh(op.entries) > tol))


def basis_projector(d: int, states) -> TruncatedOperator:
    """Projector onto the span of the given computational basis states of one site."""
    p = np.zeros((d, d))
    for s in states:
        p[s, s] = 1.0
    return TruncatedOperator(p, hermitian=True, projector=True)
