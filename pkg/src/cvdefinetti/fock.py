"""Truncated single- and two-mode Fock-space operator algebra.

Conventions used throughout the package:

* ``X = (a + a^dag) / 2`` and ``Y = (a - a^dag) / (2i)``, so ``[X, Y] = i/2``
  and the vacuum variance of either quadrature is 1/4.
* ``D(alpha) = exp(alpha a^dag - alpha* a)`` so that ``<X> = Re(alpha)``.
* ``S(r) = exp(r (a^2 - a^dag^2) / 2)``; for ``r > 0`` the X quadrature is
  the narrow one, ``Var(X) = exp(-2r)/4``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from .errors import InvalidParameterError, SpectralRangeError, TruncationError

R_MAX = 2.0
TAIL_TOL = 1e-10
MAX_DIM = 2048
BEAM_SPLITTER_CAP = 64

_HERM_RTOL = 1e-12
_PROJ_TOL = 1e-9


@dataclass(frozen=True)
class GaussianParams:
    """Parameters of ``|alpha, theta, r> = D(alpha) R(theta) S(r) |0>``."""

    alpha_re: float = 0.0
    alpha_im: float = 0.0
    theta: float = 0.0
    r: float = 0.0

    def __post_init__(self):
        vals = (self.alpha_re, self.alpha_im, self.theta, self.r)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidParameterError(f"Gaussian parameters must be finite, got {vals}")
        if abs(self.r) > R_MAX:
            raise InvalidParameterError(f"|r| must not exceed {R_MAX}, got {self.r}")

    @property
    def alpha(self) -> complex:
        return complex(self.alpha_re, self.alpha_im)

    @classmethod
    def from_alpha(cls, alpha: complex, theta: float = 0.0, r: float = 0.0) -> "GaussianParams":
        alpha = complex(alpha)
        return cls(alpha.real, alpha.imag, theta, r)


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """Dense matrix of an operator on the lowest ``dim`` levels of each mode.

    ``hermitian`` and ``projector`` are checked on construction. ``reliable``
    optionally records the part of the spectrum that is trustworthy despite
    truncation; :func:`spectral_projector` refuses to cut outside it.
    """

    entries: np.ndarray
    hermitian: bool = False
    projector: bool = False
    reliable: tuple[float, float] | None = None
    modes: int = 1

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidParameterError(f"operator matrix must be square, got shape {m.shape}")
        dim = round(m.shape[0] ** (1.0 / self.modes))
        if dim**self.modes != m.shape[0] or dim < 2:
            raise InvalidParameterError(
                f"matrix size {m.shape[0]} is not a valid {self.modes}-mode cutoff"
            )
        if self.projector and not self.hermitian:
            raise InvalidParameterError("a projector must be flagged hermitian")
        if self.hermitian:
            scale = max(np.abs(m).max(), 1.0)
            if np.abs(m - m.conj().T).max() > _HERM_RTOL * scale:
                raise InvalidParameterError("matrix flagged hermitian is not hermitian")
            m = (m + m.conj().T) / 2
        if self.projector and np.abs(m @ m - m).max() > _PROJ_TOL:
            raise InvalidParameterError("matrix flagged as projector is not idempotent")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        """Fock cutoff per mode."""
        return round(self.entries.shape[0] ** (1.0 / self.modes))

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Ascending eigenvalues and eigenvectors (hermitian operators only)."""
        if not self.hermitian:
            raise InvalidParameterError("spectrum requires a hermitian operator")
        w, v = np.linalg.eigh(self.entries)
        return w, v

    def dag(self) -> "TruncatedOperator":
        return TruncatedOperator(self.entries.conj().T, self.hermitian, self.projector,
                                 self.reliable, self.modes)

    def _wrap(self, m, hermitian) -> "TruncatedOperator":
        if hermitian is None:
            scale = max(np.abs(m).max(), 1.0)
            hermitian = bool(np.abs(m - m.conj().T).max() <= _HERM_RTOL * scale)
        return TruncatedOperator(m, hermitian=hermitian, modes=self.modes)

    def _check_compatible(self, other):
        if self.size != other.size or self.modes != other.modes:
            raise InvalidParameterError(f"dimension mismatch: {self.size} vs {other.size}")

    def __add__(self, other):
        if isinstance(other, TruncatedOperator):
            self._check_compatible(other)
            return self._wrap(self.entries + other.entries, self.hermitian and other.hermitian)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, TruncatedOperator):
            self._check_compatible(other)
            return self._wrap(self.entries - other.entries, self.hermitian and other.hermitian)
        return NotImplemented

    def __neg__(self):
        return self._wrap(-self.entries, self.hermitian)

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, complex, np.number)):
            real = complex(scalar).imag == 0
            return self._wrap(self.entries * scalar, self.hermitian and real)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, TruncatedOperator):
            self._check_compatible(other)
            return self._wrap(self.entries @ other.entries, None)
        return NotImplemented


@dataclass(frozen=True, eq=False)
class FockVector:
    """Normalized amplitude vector in a truncated Fock space."""

    amplitudes: np.ndarray
    tail_tol: float = TAIL_TOL
    tail_mass: float = field(init=False)

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex)
        if v.ndim != 1 or v.size < 2:
            raise InvalidParameterError("amplitudes must be a vector of length >= 2")
        norm = np.vdot(v, v).real
        if abs(norm - 1.0) > 1e-10:
            raise InvalidParameterError(f"state is not normalized (norm^2 = {norm!r})")
        tail = tail_mass(v)
        if tail > self.tail_tol:
            raise TruncationError(
                f"truncation tail mass {tail:.3e} exceeds {self.tail_tol:.1e}",
                suggested_dim=_grow(v.size),
            )
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)
        object.__setattr__(self, "tail_mass", tail)

    @property
    def dim(self) -> int:
        return self.amplitudes.size


def tail_mass(amplitudes) -> float:
    """Probability carried by the top 10% of retained levels."""
    amplitudes = np.asarray(amplitudes)
    ntop = max(1, math.ceil(amplitudes.size / 10))
    return float(np.sum(np.abs(amplitudes[-ntop:]) ** 2))


def _grow(dim: int) -> int:
    return math.ceil(1.5 * dim)


def _check_dim(dim):
    if not isinstance(dim, (int, np.integer)) or dim < 2:
        raise InvalidParameterError(f"dim must be an integer >= 2, got {dim!r}")


def _work_dim(dim: int) -> int:
    # generators are exponentiated with this much headroom, then cropped
    return dim + max(16, dim // 2)


def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def annihilation(dim: int) -> TruncatedOperator:
    _check_dim(dim)
    return TruncatedOperator(_ladder(dim))


def creation(dim: int) -> TruncatedOperator:
    return annihilation(dim).dag()


def number(dim: int) -> TruncatedOperator:
    _check_dim(dim)
    return TruncatedOperator(np.diag(np.arange(dim, dtype=float)), hermitian=True)


def identity(dim: int, modes: int = 1) -> TruncatedOperator:
    _check_dim(dim)
    return TruncatedOperator(np.eye(dim**modes), hermitian=True, projector=True, modes=modes)


def quadrature_window(dim: int) -> tuple[float, float]:
    """Range of truncated quadrature eigenvalues treated as reliable."""
    edge = math.sqrt(2 * dim) / 3
    return (-edge, edge)


def quadratures(dim: int) -> tuple[TruncatedOperator, TruncatedOperator]:
    """Return the truncated ``X = (a + a^dag)/2`` and ``Y = (a - a^dag)/(2i)``."""
    _check_dim(dim)
    a = _ladder(dim)
    window = quadrature_window(dim)
    x = TruncatedOperator((a + a.conj().T) / 2, hermitian=True, reliable=window)
    y = TruncatedOperator((a - a.conj().T) / 2j, hermitian=True, reliable=window)
    return x, y


def unitary_levels(u: np.ndarray, tol: float = 1e-6) -> int:
    """Number of leading columns of a cropped unitary that remain orthonormal to ``tol``."""
    loss = 1.0 - np.sum(np.abs(u) ** 2, axis=0)
    bad = np.flatnonzero(np.abs(loss) > tol)
    m = int(bad[0]) if bad.size else u.shape[1]
    while m > 0:
        block = u[:, :m]
        if np.abs(block.conj().T @ block - np.eye(m)).max() <= tol:
            break
        m -= 1
    return m


def gaussian_unitary(params: GaussianParams, dim: int, min_levels: int = 1) -> TruncatedOperator:
    """Matrix of ``D(alpha) R(theta) S(r)`` on the lowest ``dim`` levels.

    Each factor is exponentiated in an enlarged space and the product is
    cropped to ``dim``. Only the leading columns whose images fit inside the
    cutoff are exact; at least ``min_levels`` of them must stay orthonormal
    to 1e-6 (see :func:`unitary_levels`).
    """
    _check_dim(dim)
    work = _work_dim(dim)
    a = _ladder(work)
    ad = a.conj().T
    u = np.eye(work, dtype=complex)
    if params.r != 0.0:
        u = expm(0.5 * params.r * (a @ a - ad @ ad))
    if params.theta != 0.0:
        u = np.exp(-1j * params.theta * np.arange(work))[:, None] * u
    if params.alpha != 0:
        u = expm(params.alpha * ad - np.conj(params.alpha) * a) @ u
    u = u[:dim, :dim]
    levels = unitary_levels(u)
    if levels < min_levels:
        raise TruncationError(
            f"Gaussian unitary is unitary on only {levels} of the {min_levels} requested levels",
            suggested_dim=_grow(dim),
        )
    return TruncatedOperator(u)


def squeezed_number_states(r: float, levels: int, dim: int) -> np.ndarray:
    """Columns ``S(r)|m>`` for ``m < levels``, cropped to ``dim`` levels."""
    _check_dim(dim)
    work = _work_dim(dim)
    a = _ladder(work)
    ad = a.conj().T
    cols = expm(0.5 * r * (a @ a - ad @ ad))[:, :levels]
    lost = 1.0 - np.sum(np.abs(cols[:dim]) ** 2, axis=0).min()
    if lost > TAIL_TOL:
        raise TruncationError(f"squeezed number states lose {lost:.2e} of their norm",
                              suggested_dim=_grow(dim))
    return cols[:dim]


def auto_dim(params: GaussianParams, energy: float | None = None) -> int:
    """Starting cutoff for a state; with a context energy this is final."""
    if energy is None:
        return 32
    return max(32, math.ceil(8 * (abs(params.alpha) ** 2 + math.exp(2 * abs(params.r)) * energy)))


def _state_amplitudes(params: GaussianParams, dim: int) -> np.ndarray:
    work = _work_dim(dim)
    a = _ladder(work)
    ad = a.conj().T
    v = np.zeros(work, dtype=complex)
    v[0] = 1.0
    if params.r != 0.0:
        v = expm(0.5 * params.r * (a @ a - ad @ ad))[:, 0]
    if params.theta != 0.0:
        v = np.exp(-1j * params.theta * np.arange(work)) * v
    if params.alpha != 0:
        v = expm(params.alpha * ad - np.conj(params.alpha) * a) @ v
    return v[:dim]


def squeezed_coherent(params: GaussianParams, dim: int | None = None,
                      tail_tol: float = TAIL_TOL, energy: float | None = None) -> FockVector:
    """State ``D(alpha) R(theta) S(r)|0>`` truncated to ``dim`` levels.

    With ``dim=None`` the cutoff is chosen automatically: from ``energy`` when
    given, otherwise by geometric growth until the tail mass is small enough.
    """
    if dim is not None:
        _check_dim(dim)
        amp = _state_amplitudes(params, dim)
        tail = tail_mass(amp)
        if tail > tail_tol:
            raise TruncationError(f"tail mass {tail:.3e} exceeds {tail_tol:.1e}",
                                  suggested_dim=_grow(dim))
        return FockVector(amp / np.linalg.norm(amp), tail_tol)

    d = auto_dim(params, energy)
    while d <= MAX_DIM:
        amp = _state_amplitudes(params, d)
        if tail_mass(amp) <= tail_tol:
            return FockVector(amp / np.linalg.norm(amp), tail_tol)
        d = _grow(d)
    raise TruncationError(f"no cutoff up to {MAX_DIM} reaches tail mass {tail_tol:.1e}")


def moment(op: TruncatedOperator, vec: FockVector, order: int = 1) -> float:
    """Mean (order 1) or variance (order 2) of a hermitian operator."""
    if op.size != vec.dim:
        raise InvalidParameterError(f"dimension mismatch: operator {op.size}, state {vec.dim}")
    if not op.hermitian:
        raise InvalidParameterError("moment requires a hermitian operator")
    v = vec.amplitudes
    av = op.entries @ v
    mean = np.vdot(v, av).real
    if order == 1:
        return float(mean)
    if order == 2:
        return float(np.vdot(av, av).real - mean**2)
    raise InvalidParameterError(f"order must be 1 or 2, got {order!r}")


def operator_function(op: TruncatedOperator, f) -> TruncatedOperator:
    """Apply a real scalar function to a hermitian operator via its eigenbasis."""
    w, v = op.spectrum
    vals = np.asarray(f(w), dtype=float)
    return TruncatedOperator((v * vals) @ v.conj().T, hermitian=True, modes=op.modes)


def spectral_projector(op: TruncatedOperator, lo: float, hi: float) -> TruncatedOperator:
    """Projector onto the eigenvectors of ``op`` with eigenvalue in ``[lo, hi]``.

    A window edge that actually cuts the spectrum must lie inside
    ``op.reliable`` when that range is set.
    """
    w, v = op.spectrum
    if op.reliable is not None:
        rlo, rhi = op.reliable
        if lo > w[0] and lo < rlo:
            raise SpectralRangeError(f"lower window edge {lo} below reliable range {op.reliable}")
        if hi < w[-1] and hi > rhi:
            raise SpectralRangeError(f"upper window edge {hi} above reliable range {op.reliable}")
    eps = 1e-9 * max(1.0, np.abs(w).max())
    keep = (w >= lo - eps) & (w <= hi + eps)
    basis = v[:, keep]
    return TruncatedOperator(basis @ basis.conj().T, hermitian=True, projector=True,
                             modes=op.modes)


def beam_splitter(dim: int, cap: int = BEAM_SPLITTER_CAP) -> TruncatedOperator:
    """Two-mode ``exp[pi/4 (a1 a2^dag - a1^dag a2)]``, basis index ``m1*dim + m2``.

    The generator conserves total photon number, so it is exponentiated one
    excitation block at a time. Blocks with total number below ``dim`` are
    complete and therefore exact.
    """
    _check_dim(dim)
    if dim > cap:
        raise InvalidParameterError(f"two-mode cutoff {dim} exceeds memory cap {cap}")
    a = _ladder(dim)
    eye = np.eye(dim)
    a1, a2 = np.kron(a, eye), np.kron(eye, a)
    gen = (np.pi / 4) * (a1 @ a2.conj().T - a1.conj().T @ a2)
    total = np.add.outer(np.arange(dim), np.arange(dim)).ravel()
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for n in range(2 * dim - 1):
        idx = np.flatnonzero(total == n)
        out[np.ix_(idx, idx)] = expm(gen[np.ix_(idx, idx)])
    return TruncatedOperator(out, modes=2)


def bogoliubov_annihilation(r: float, dim: int) -> TruncatedOperator:
    """``a' = cosh(r) a + sinh(r) a^dag``; its vacuum is ``S(r)|0>``."""
    a = _ladder(dim)
    return TruncatedOperator(math.cosh(r) * a + math.sinh(r) * a.conj().T)


def f_xy_state(x: float, y: float, r: float, dim: int) -> tuple[FockVector, float]:
    """Squeezed coherent state with Bogoliubov-mode eigenvalue ``e^-r x + i e^r y``.

    The state is ``S(r)|lambda>``, the eigenvector of ``a'`` (see
    :func:`bogoliubov_annihilation`). Returns the state and the eigen-residual
    ``||(a' - lambda)|f>||``.
    """
    _check_dim(dim)
    lam = complex(math.exp(-r) * x, math.exp(r) * y)
    if abs(lam) > math.sqrt(dim) / 3:
        raise SpectralRangeError(f"eigenvalue {lam} outside the reliable range for dim={dim}")
    # S(r) D(lam) = D(lam cosh r - lam* sinh r) S(r)
    alpha = lam * math.cosh(r) - lam.conjugate() * math.sinh(r)
    vec = squeezed_coherent(GaussianParams.from_alpha(alpha, r=r), dim)
    ap = bogoliubov_annihilation(r, dim).entries
    residual = float(np.linalg.norm(ap @ vec.amplitudes - lam * vec.amplitudes))
    return vec, residual


def to_csv(obj, path) -> None:
    """Dump an operator or state as ``row, col, re, im`` rows (col is 0 for states)."""
    data = obj.entries if isinstance(obj, TruncatedOperator) else obj.amplitudes[:, None]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "re", "im"])
        for (i, j), z in np.ndenumerate(data):
            w.writerow([i, j, repr(float(z.real)), repr(float(z.imag))])
