"""Monte Carlo of the biased homodyne verification step on product Gaussian sources."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erf
from scipy.stats import norm

from .bounds import ProtocolParams, lemma1_tail
from .errors import InvalidParameterError
from .fock import GaussianParams

KINDS = ("iid_squeezed_coherent", "iid_with_excess_noise")


@dataclass(frozen=True)
class SourceModel:
    kind: str = "iid_squeezed_coherent"
    params: GaussianParams = field(default_factory=GaussianParams)
    excess_variance: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown source kind {self.kind!r}")
        if not math.isfinite(self.excess_variance) or self.excess_variance < 0:
            raise InvalidParameterError(
                f"excess_variance must be finite and >= 0, got {self.excess_variance}")
        if self.kind == "iid_squeezed_coherent" and self.excess_variance != 0:
            raise InvalidParameterError("a pure squeezed coherent source has no excess noise")
        if self.params.theta != 0.0:
            # the quadrature laws below assume the squeezing axis is aligned with X
            raise InvalidParameterError("rotated sources are not supported")

    def quadrature_law(self, basis: str) -> tuple[float, float]:
        """Mean and standard deviation of the homodyne outcome in ``basis``."""
        r = self.params.r
        if basis == "X":
            mean, var = self.params.alpha_re, math.exp(-2 * r) / 4
        elif basis == "Y":
            mean, var = self.params.alpha_im, math.exp(2 * r) / 4
        else:
            raise InvalidParameterError(f"basis must be 'X' or 'Y', got {basis!r}")
        return mean, math.sqrt(var + self.excess_variance)


@dataclass
class RunRecord:
    protocol: ProtocolParams
    source: SourceModel
    seed: int
    streams: int
    trials: int
    pass_count: int
    pass_prob_mc: float
    pass_prob_analytic: float
    wilson_ci_95: tuple[float, float]
    x_fraction: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["wilson_ci_95"] = list(self.wilson_ci_95)
        return d


def stream_rng(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


def sample_homodyne(source: SourceModel, basis: str, rng: np.random.Generator,
                    size: int | None = None):
    mean, sd = source.quadrature_law(basis)
    return rng.normal(mean, sd, size)


def thresholds(protocol: ProtocolParams) -> tuple[float, float]:
    """Squared-outcome acceptance bounds ``(e^-2r n0/2, e^2r n0/2)`` for X and Y."""
    r, n0 = protocol.r, protocol.n0
    return math.exp(-2 * r) * n0 / 2, math.exp(2 * r) * n0 / 2


def _interval_prob(mean: float, sd: float, half_width: float) -> float:
    """``Pr[|Z| <= half_width]`` for ``Z ~ N(mean, sd^2)``."""
    return float(norm.cdf((half_width - mean) / sd) - norm.cdf((-half_width - mean) / sd))


def per_measurement_pass(protocol: ProtocolParams, source: SourceModel) -> float:
    tx, ty = thresholds(protocol)
    px = _interval_prob(*source.quadrature_law("X"), math.sqrt(tx))
    py = _interval_prob(*source.quadrature_law("Y"), math.sqrt(ty))
    return protocol.q * px + (1 - protocol.q) * py


def analytic_pass_probability(protocol: ProtocolParams, source: SourceModel) -> float:
    """Probability that all ``k`` measurements pass."""
    return per_measurement_pass(protocol, source) ** protocol.k


def matched_vacuum_pass(n0: float) -> float:
    """Per-measurement pass probability for a squeezed vacuum matching the protocol."""
    return float(erf(math.sqrt(n0)))


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    p = successes / trials
    denom = 1 + z**2 / trials
    centre = (p + z**2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z**2 / (4 * trials**2)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _split(trials: int, streams: int) -> list[int]:
    base, extra = divmod(trials, streams)
    return [base + (1 if s < extra else 0) for s in range(streams)]


def _run_stream(protocol, source, trials, rng):
    k = protocol.k
    tx, ty = thresholds(protocol)
    mx, sx = source.quadrature_law("X")
    my, sy = source.quadrature_law("Y")
    is_x = rng.random((trials, k)) < protocol.q
    z = rng.standard_normal((trials, k))
    outcome = np.where(is_x, mx + sx * z, my + sy * z)
    bound = np.where(is_x, tx, ty)
    passed = np.all(outcome**2 <= bound, axis=1)
    return int(passed.sum()), int(is_x.sum())


def run_verification(protocol: ProtocolParams, source: SourceModel, trials: int,
                     seed: int = 0, streams: int = 1) -> RunRecord:
    """Simulate ``trials`` verification rounds; each round passes iff all ``k``
    squared outcomes are within their basis threshold."""
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    if streams < 1:
        raise InvalidParameterError(f"streams must be >= 1, got {streams}")
    passes = xs = 0
    for s, count in enumerate(_split(trials, streams)):
        if count:
            p, x = _run_stream(protocol, source, count, stream_rng(seed, s))
            passes += p
            xs += x
    return RunRecord(
        protocol=protocol, source=source, seed=seed, streams=streams, trials=trials,
        pass_count=passes, pass_prob_mc=passes / trials,
        pass_prob_analytic=analytic_pass_probability(protocol, source),
        wilson_ci_95=wilson_interval(passes, trials),
        x_fraction=xs / (trials * protocol.k),
    )


@dataclass
class Lemma1Report:
    k: int
    n: int
    p_u: float
    p_v: float
    delta: float
    trials: int
    violations: int
    empirical: float
    mc_sigma: float
    bound: float
    vacuous: bool
    consistent: bool
    note: str = ""


def _clip_identity(x):
    return np.minimum(1.0, x)


def lemma1_mc_check(kbits: int, nbits: int, p_u: float, p_v: float, delta: float,
                    trials: int, seed: int = 0,
                    gamma: Callable[[np.ndarray], np.ndarray] = _clip_identity) -> Lemma1Report:
    """Empirical frequency of ``f_V > gamma(f_U + delta) + delta`` for a product source.

    ``f_U`` is the ones-frequency of ``kbits`` Bernoulli(``p_u``) draws and
    ``f_V`` that of ``nbits`` Bernoulli(``p_v``) draws. The default ``gamma``
    is the overlap function of ``U = V``.
    """
    for name, p in (("p_u", p_u), ("p_v", p_v)):
        if not 0.0 <= p <= 1.0:
            raise InvalidParameterError(f"{name} must lie in [0, 1], got {p}")
    if delta <= 0:
        raise InvalidParameterError(f"delta must be positive, got {delta}")
    if trials < 1 or kbits < 1 or nbits < 1:
        raise InvalidParameterError("kbits, nbits and trials must be >= 1")
    rng = stream_rng(seed, 0)
    f_u = rng.binomial(kbits, p_u, trials) / kbits
    f_v = rng.binomial(nbits, p_v, trials) / nbits
    violations = int(np.sum(f_v > gamma(f_u + delta) + delta))
    emp = violations / trials
    sigma = math.sqrt(max(emp * (1 - emp), 1.0 / trials) / trials)
    bound = lemma1_tail(kbits, delta)
    vacuous = bound > 1
    return Lemma1Report(
        k=kbits, n=nbits, p_u=p_u, p_v=p_v, delta=delta, trials=trials,
        violations=violations, empirical=emp, mc_sigma=sigma, bound=bound, vacuous=vacuous,
        consistent=vacuous or emp <= bound + 3 * sigma,
        note="bound>1, no test" if vacuous else "",
    )
