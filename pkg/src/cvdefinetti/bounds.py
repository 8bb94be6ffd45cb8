"""Scalar bound evaluators, a numerical overlap oracle and threshold solvers."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidParameterError, NumericalConsistencyError
from .fock import TruncatedOperator
from .projectors import remainder_bracket

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5) - 1) / 2


def _check_q_open(q):
    if not 0.0 < q < 1.0:
        raise InvalidParameterError("q must lie strictly between 0 and 1")


@dataclass(frozen=True)
class ProtocolParams:
    """Verification protocol: ``k`` checked subsystems, ``n`` key subsystems.

    ``delta`` defaults to :func:`delta_choice`; ``n0`` defaults to
    :func:`closed_form_threshold`.
    """

    k: int
    n: int
    q: float
    r: float = 0.0
    n0: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.k < 1 or self.n < 1:
            raise InvalidParameterError(f"k and n must be >= 1, got k={self.k}, n={self.n}")
        _check_q_open(self.q)
        if not math.isfinite(self.r):
            raise InvalidParameterError(f"r must be finite, got {self.r}")
        if self.delta is None:
            object.__setattr__(self, "delta", delta_choice(self.k, self.n, self.q))
        elif not 0.0 < self.delta < 1.0:
            raise InvalidParameterError(f"delta must lie in (0, 1), got {self.delta}")
        if self.n0 is None:
            object.__setattr__(self, "n0", closed_form_threshold(self.k, self.n, self.q, self.r))
        elif not self.n0 > 0:
            raise InvalidParameterError(f"n0 must be positive, got {self.n0}")

    @property
    def key_fraction(self) -> float:
        return self.k / (self.n + self.k)


@dataclass
class BoundReport:
    gamma_analytic: float
    gamma_numeric: float | None
    lemma1: float
    lemma3: float
    n0_closed: float
    n0_numeric: float
    chain_ratio: float
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def gamma_upper_bound(delta: float, n0: float, r: float, q: float) -> float:
    """Analytic upper bound on the complementary overlap ``gamma_{U1->V1}(delta)``."""
    _check_q_open(q)
    if not n0 > 0:
        raise InvalidParameterError(f"n0 must be positive, got {n0}")
    if delta < 0:
        raise InvalidParameterError(f"delta must be non-negative, got {delta}")
    w = q * (1 - q)
    return 2 / w * delta + 6 / w * remainder_bracket(n0, r, q)


def lemma1_tail(k: int, delta: float) -> float:
    """``8 k^(3/2) exp(-k delta^2)``."""
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    return 8 * k**1.5 * math.exp(-k * delta**2)


def lemma3_error(k: int, n: int, q: float) -> float:
    """``8 k^(3/2) exp(-4 q (1-q) k^3 / (25 (k+n)^2))``."""
    if k < 1 or n < 1:
        raise InvalidParameterError(f"k and n must be >= 1, got k={k}, n={n}")
    if not 0.0 <= q <= 1.0:
        raise InvalidParameterError(f"q must lie in [0, 1], got {q}")
    return 8 * k**1.5 * math.exp(-4 * q * (1 - q) * k**3 / (25 * (k + n) ** 2))


def delta_choice(k: int, n: int, q: float) -> float:
    return 2 * q * (1 - q) * k / (5 * (n + k))


def closed_form_threshold(k: int, n: int, q: float, r: float) -> float:
    """Sufficient threshold ``9 e^(2|r|) ln[12 (k+n)/k (e^r/(1-q) + e^-r/q)]``."""
    _check_q_open(q)
    inner = 12 * (k + n) / k * (math.exp(r) / (1 - q) + math.exp(-r) / q)
    return 9 * math.exp(2 * abs(r)) * math.log(inner)


def closed_form_threshold_variants(k: int, n: int, q: float, r: float) -> dict:
    """Threshold with the alternative prefactor ``q e^(2|r|)`` for comparison."""
    base = closed_form_threshold(k, n, q, r)
    return {"prefactor_9": base, "prefactor_q": base * q / 9}


def chain_slack(n0: float, k: int, n: int, q: float, r: float) -> float:
    """``k/(n+k) - gamma(delta) - delta`` at the prescribed deviation."""
    d = delta_choice(k, n, q)
    return k / (n + k) - gamma_upper_bound(d, n0, r, q) - d


def chain_ratio(n0: float, k: int, n: int, q: float, r: float) -> float:
    """``(gamma(delta) + delta) / (k/(n+k))``; at most 1 when the chain closes."""
    d = delta_choice(k, n, q)
    return (gamma_upper_bound(d, n0, r, q) + d) / (k / (n + k))


def solve_min_n0(k: int, n: int, q: float, r: float, rtol: float = 1e-6) -> float:
    """Smallest ``n0`` for which ``gamma(delta) + delta <= k/(n+k)``.

    Bisection on ``[0, 100 * closed form]``; the returned point always
    satisfies the inequality.
    """
    _check_q_open(q)
    d = delta_choice(k, n, q)
    if (1 + 2 / (q * (1 - q))) * d >= k / (n + k):
        raise InvalidParameterError(
            "no n0 satisfies the chain with the prescribed deviation (slack <= 0)")
    lo, hi = 0.0, 100 * closed_form_threshold(k, n, q, r)
    while chain_slack(hi, k, n, q, r) < 0:
        lo, hi = hi, 2 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if chain_slack(mid, k, n, q, r) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def symmetric_baseline(k: int, n: int) -> float:
    """Closed-form threshold at ``q = 1/2`` and no squeezing."""
    return closed_form_threshold(k, n, 0.5, 0.0)


@dataclass
class DualResult:
    """Outcome of :func:`solve_overlap`.

    ``primal`` is the value of an explicitly constructed feasible state,
    ``dual`` the minimum of the Lagrange dual; ``gap = dual - primal``.
    """

    primal: float
    dual: float
    lam: float
    gap: float
    feasible: bool
    evaluations: list = field(default_factory=list)


def _top(h: np.ndarray, u: np.ndarray, v: np.ndarray, pick_max_u: bool):
    """Top eigenpair of ``h``; inside a degenerate top eigenspace pick the
    vector with extreme ``<U>``."""
    w, vec = np.linalg.eigh(h)
    scale = max(1.0, np.abs(w).max())
    top = vec[:, w >= w[-1] - 1e-12 * scale]
    if top.shape[1] > 1:
        uw, uv = np.linalg.eigh(top.conj().T @ u @ top)
        psi = top @ uv[:, -1 if pick_max_u else 0]
    else:
        psi = top[:, 0]
    return w[-1], np.vdot(psi, u @ psi).real, np.vdot(psi, v @ psi).real


def solve_overlap(U1: TruncatedOperator, V1: TruncatedOperator, delta: float,
                  tol: float = 1e-7, xtol: float = 1e-11, lam_hi: float = 4.0) -> DualResult:
    """Solve ``sup tr(V1 s)`` over density matrices with ``tr(U1 s) <= delta``.

    The dual ``g(lam) = lam delta + maxeig(V1 - lam U1)`` is convex and is
    minimized by golden-section search. A feasible primal state is a mixture
    of the top eigenvectors on either side of the minimizer.

    When ``delta`` is at most ``tol`` the constraint forces the state into
    the numerical kernel of ``U1``; the value is then the top eigenvalue of
    ``V1`` compressed onto that kernel, or 0 if the kernel is empty.
    """
    if U1.size != V1.size:
        raise InvalidParameterError(f"dimension mismatch: {U1.size} vs {V1.size}")
    if not (U1.hermitian and V1.hermitian):
        raise InvalidParameterError("U1 and V1 must be hermitian")
    if not 0.0 <= delta <= 1.0:
        raise InvalidParameterError(f"delta must lie in [0, 1], got {delta}")
    u, v = U1.entries, V1.entries
    uw, uv = U1.spectrum

    if delta <= tol:
        kernel = uv[:, uw <= tol]
        if kernel.shape[1] == 0:
            return DualResult(0.0, 0.0, math.inf, 0.0, False)
        val = float(np.linalg.eigvalsh(kernel.conj().T @ v @ kernel)[-1])
        return DualResult(val, val, math.inf, 0.0, True)
    if delta < uw[0]:
        # tr(U1 s) >= min eig(U1) > delta for every state
        return DualResult(0.0, 0.0, math.inf, 0.0, False)

    evaluations = []

    def g(lam):
        val = lam * delta + np.linalg.eigvalsh(v - lam * u)[-1]
        evaluations.append((lam, val))
        return val

    lo, hi = 0.0, lam_hi
    # expand until g is increasing at the right end
    while g(hi * 1.001) < g(hi):
        lo, hi = hi / 2, hi * 2
        if hi > 1e12:
            raise NumericalConsistencyError("dual search range diverged")

    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    gc, gd = g(c), g(d)
    while b - a > xtol * (1 + b):
        if gc <= gd:
            b, d, gd = d, c, gc
            c = b - GOLDEN * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + GOLDEN * (b - a)
            gd = g(d)
    lam = 0.5 * (a + b)
    dual = min(g(lam), g(0.0))
    if g(0.0) <= dual:
        lam = 0.0

    # primal: bracket lam so that the top eigenvector's <U1> straddles delta,
    # then bisect; golden section alone only fixes lam to ~sqrt(eps)
    def side(l, pick_max_u):
        return _top(v - l * u, u, v, pick_max_u)[1:]

    if lam == 0.0 or side(0.0, False)[0] <= delta:
        u0, v0 = side(0.0, False)
        if u0 <= delta:
            return DualResult(float(v0), float(dual), 0.0, float(dual - v0), True, evaluations)
    h = max(b - a, 1e-9 * (1 + lam))
    for _ in range(60):
        l_lo, l_hi = max(lam - h, 0.0), lam + h
        u_lo, v_lo = side(l_lo, True)
        u_hi, v_hi = side(l_hi, False)
        if u_hi <= delta <= u_lo:
            break
        h *= 2
    else:
        raise NumericalConsistencyError("could not construct a feasible primal state")
    for _ in range(80):
        if l_hi - l_lo <= 4 * np.finfo(float).eps * (1 + l_hi):
            break
        mid = 0.5 * (l_lo + l_hi)
        um_max, vm_max = side(mid, True)
        um_min, vm_min = side(mid, False)
        if um_max >= delta >= um_min:
            # degenerate top eigenspace at mid covers delta
            l_lo = l_hi = mid
            u_lo, v_lo, u_hi, v_hi = um_max, vm_max, um_min, vm_min
            break
        if um_min > delta:
            l_lo, u_lo, v_lo = mid, um_min, vm_min
        else:
            l_hi, u_hi, v_hi = mid, um_max, vm_max
    t = 1.0 if u_lo == u_hi else (delta - u_hi) / (u_lo - u_hi)
    primal = t * v_lo + (1 - t) * v_hi

    return DualResult(float(primal), float(dual), float(lam), float(dual - primal), True,
                      evaluations)


def gamma_numeric(U1: TruncatedOperator, V1: TruncatedOperator, delta: float,
                  tol: float = 1e-7, q: float | None = None) -> float:
    """Complementary overlap of two truncated POVM elements; checks the duality gap.

    Passing the bias ``q`` sets the initial dual search range to
    ``[0, 4/min(q, 1-q)]``.
    """
    lam_hi = 4.0 if q is None else 4.0 / min(q, 1 - q)
    res = solve_overlap(U1, V1, delta, tol=tol, lam_hi=lam_hi)
    if res.gap > tol:
        raise NumericalConsistencyError(f"duality gap {res.gap:.2e} exceeds {tol:.1e}")
    return res.primal


def convexity_violation(evaluations) -> float:
    """Largest violation of convexity among recorded ``(lam, g)`` pairs."""
    pts = sorted(set(evaluations))
    worst = 0.0
    for (x0, y0), (x1, y1), (x2, y2) in zip(pts, pts[1:], pts[2:]):
        if x2 - x0 <= 0:
            continue
        interp = y0 + (y2 - y0) * (x1 - x0) / (x2 - x0)
        worst = max(worst, y1 - interp)
    return worst


def bound_report(protocol: ProtocolParams, povm=None) -> BoundReport:
    """Evaluate every scalar bound for a protocol; ``gamma_numeric`` needs a PovmSet."""
    k, n, q, r = protocol.k, protocol.n, protocol.q, protocol.r
    d = protocol.delta
    n0_closed = closed_form_threshold(k, n, q, r)
    gnum = None
    if povm is not None:
        gnum = gamma_numeric(povm.U1, povm.V1, d, q=q)
    if log.isEnabledFor(logging.DEBUG):
        alt = 6 / (q * (1 - q)) * (q * math.exp(r) + (1 - q) * math.exp(-r)) \
            * math.exp(-protocol.n0 * math.exp(-2 * abs(r)) / q)
        log.debug("remainder with exponent divisor q instead of 9: %g", alt)
        log.debug("threshold variants: %s", closed_form_threshold_variants(k, n, q, r))
    return BoundReport(
        gamma_analytic=gamma_upper_bound(d, protocol.n0, r, q),
        gamma_numeric=gnum,
        lemma1=lemma1_tail(k, d),
        lemma3=lemma3_error(k, n, q),
        n0_closed=n0_closed,
        n0_numeric=solve_min_n0(k, n, q, r),
        chain_ratio=chain_ratio(n0_closed, k, n, q, r),
        params={"k": k, "n": n, "q": q, "r": r, "n0": protocol.n0, "delta": d},
    )
