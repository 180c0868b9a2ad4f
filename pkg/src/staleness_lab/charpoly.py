"""Characteristic polynomials of gradient descent with stale updates.

A worker that applies a gradient computed ``tau`` steps ago turns the usual
one-dimensional contraction ``x_{t+1} = x_t - eta*a*x_t`` into a delay
recurrence ``x_{t+1} = x_t - eta*a*x_{t-tau}``.  Substituting ``x_t = z^t``
gives a polynomial in ``z`` whose root magnitudes decide stability.  This
module builds those polynomials for the optimizer variants we study:

* plain:            ``z^(tau+1) - z^tau + eta*a``
* momentum:         ``z^(tau+1) - (1+m) z^tau + m z^(tau-1) + eta*(1-m)*a``
* shifted momentum: ``z^(tau+2) - z^(tau+1) + (eta*(1-m)*a - m) z + m``
* random delay:     ``z^(K+1) - z^K + eta*a * sum_k p_k z^(K-k)``

where ``a`` is the curvature of the loss along the mode under study and the
random-delay form averages over a probability mass function on delays with
maximum support ``K``.  Small ``tau`` makes exponents collide (for example the
``m z^(tau-1)`` term lands on the constant when ``tau = 1``), so builders
accumulate coefficients by exponent instead of writing to fixed slots.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

PROB_SUM_TOL = 1e-12
MAX_TAU = 10_000

PLAIN = "plain"
MOMENTUM = "momentum"
SHIFTED_MOMENTUM = "shifted"
VARIANTS = (PLAIN, MOMENTUM, SHIFTED_MOMENTUM)


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial stored as ascending coefficients ``c0 + c1 z + ...``.

    Trailing zero coefficients (the high powers) are trimmed on construction
    so ``degree`` always refers to a nonzero leading coefficient.
    """

    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        cs = tuple(float(c) for c in self.coeffs)
        while len(cs) > 1 and cs[-1] == 0.0:
            cs = cs[:-1]
        if not cs or all(c == 0.0 for c in cs):
            raise ValueError("polynomial must have a nonzero coefficient")
        object.__setattr__(self, "coeffs", cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z: complex) -> complex:
        result = 0.0 + 0.0j if isinstance(z, complex) else 0.0
        for c in reversed(self.coeffs):
            result = result * z + c
        return result

    def to_csv_row(self) -> str:
        """Ascending coefficients as one CSV row, shortest round-trip floats."""
        return ",".join(repr(c) for c in self.coeffs)

    @classmethod
    def from_csv_row(cls, row: str) -> "Polynomial":
        return cls(tuple(float(tok) for tok in row.strip().split(",")))

    def to_json(self) -> str:
        return json.dumps(list(self.coeffs))

    @classmethod
    def from_json(cls, text: str) -> "Polynomial":
        values = json.loads(text)
        if not isinstance(values, list):
            raise ValueError("expected a JSON array of coefficients")
        return cls(tuple(float(v) for v in values))


@dataclass(frozen=True)
class DelayModel:
    """Distribution of gradient staleness: a constant delay or a finite pmf.

    ``delays`` are distinct non-negative integers in ascending order and
    ``probs`` the matching masses, summing to 1 within ``PROB_SUM_TOL``.
    A constant delay is the single-entry point mass.
    """

    delays: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        delays = tuple(int(d) for d in self.delays)
        probs = tuple(float(p) for p in self.probs)
        if len(delays) != len(probs) or not delays:
            raise ValueError("delays and probs must be equal-length, non-empty")
        if any(d < 0 for d in delays):
            raise ValueError("delays must be non-negative")
        if any(b <= a for a, b in zip(delays, delays[1:])):
            raise ValueError("delays must be strictly increasing")
        if any(not 0.0 < p <= 1.0 for p in probs):
            raise ValueError("probabilities must lie in (0, 1]")
        if abs(math.fsum(probs) - 1.0) > PROB_SUM_TOL:
            raise ValueError("probabilities must sum to 1")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def constant(cls, tau: int) -> "DelayModel":
        if tau < 0 or tau > MAX_TAU:
            raise ValueError(f"constant delay must be in [0, {MAX_TAU}]")
        return cls((int(tau),), (1.0,))

    @classmethod
    def pmf(cls, entries) -> "DelayModel":
        """Build from ``{delay: prob}`` or an iterable of (delay, prob) pairs.

        Delays must be positive here; a zero delay only makes sense as the
        constant model.
        """
        pairs = sorted(dict(entries).items())
        if any(k < 1 for k, _ in pairs):
            raise ValueError("pmf delays must be positive integers")
        return cls(tuple(k for k, _ in pairs), tuple(p for _, p in pairs))

    @property
    def is_constant(self) -> bool:
        return len(self.delays) == 1

    @property
    def tau(self) -> int:
        if not self.is_constant:
            raise ValueError("tau is only defined for a constant delay")
        return self.delays[0]

    @property
    def max_delay(self) -> int:
        return self.delays[-1]

    def expected_delay(self) -> float:
        return math.fsum(k * p for k, p in zip(self.delays, self.probs))


@dataclass(frozen=True)
class OptimizerSpec:
    """Optimizer variant plus its scalar hyperparameters.

    ``variant`` is one of ``plain`` (no momentum), ``momentum`` (a single
    central velocity) or ``shifted`` (each worker keeps its own velocity,
    so the velocity it reuses is as stale as the gradient).
    """

    variant: str
    eta: float
    m: float = 0.0

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not (self.eta > 0.0 and math.isfinite(self.eta)):
            raise ValueError("eta must be positive and finite")
        if not 0.0 <= self.m < 1.0:
            raise ValueError("m must lie in [0, 1)")
        if self.variant == PLAIN and self.m != 0.0:
            raise ValueError("plain variant has no momentum; m must be 0")

    def with_eta(self, eta: float) -> "OptimizerSpec":
        return OptimizerSpec(self.variant, eta, self.m)


def _check_scalars(eta: float, a: float, tau: int) -> None:
    if not (eta > 0.0 and math.isfinite(eta)):
        raise ValueError("eta must be positive and finite")
    if not (a > 0.0 and math.isfinite(a)):
        raise ValueError("a must be positive and finite")
    if not isinstance(tau, int) or isinstance(tau, bool):
        raise ValueError("tau must be an integer")
    if tau < 0 or tau > MAX_TAU:
        raise ValueError(f"tau must be in [0, {MAX_TAU}]")


def _poly_from_terms(terms) -> Polynomial:
    # Accumulate by exponent: small tau makes several terms share a slot.
    acc: dict[int, float] = {}
    for exp, coef in terms:
        acc[exp] = acc.get(exp, 0.0) + coef
    coeffs = [0.0] * (max(acc) + 1)
    for exp, coef in acc.items():
        coeffs[exp] = coef
    return Polynomial(tuple(coeffs))


def char_poly_plain(eta: float, a: float, tau: int) -> Polynomial:
    """``z^(tau+1) - z^tau + eta*a``, the plain stale-gradient polynomial.

    At ``tau = 0`` the two leading terms collide with the constant structure
    and the result degenerates to the familiar ``z - (1 - eta*a)``.
    """
    _check_scalars(eta, a, tau)
    return _poly_from_terms([(tau + 1, 1.0), (tau, -1.0), (0, eta * a)])


def char_poly_momentum(eta: float, a: float, tau: int, m: float) -> Polynomial:
    """Heavy-ball variant with one central velocity buffer.

    ``z^(tau+1) - (1+m) z^tau + m z^(tau-1) + eta*(1-m)*a`` for ``tau >= 1``.
    At ``tau = 0`` that form would carry ``z^-1``; multiplying through by
    ``z`` gives the degree-2 polynomial ``z^2 - (1 + m - eta*(1-m)*a) z + m``
    (the gradient term shifts onto ``z`` and merges there).
    """
    _check_scalars(eta, a, tau)
    if not 0.0 <= m < 1.0:
        raise ValueError("m must lie in [0, 1)")
    grad = eta * (1.0 - m) * a
    if tau == 0:
        terms = [(2, 1.0), (1, -(1.0 + m)), (1, grad), (0, m)]
    else:
        terms = [(tau + 1, 1.0), (tau, -(1.0 + m)), (tau - 1, m), (0, grad)]
    return _poly_from_terms(terms)


def char_poly_shifted(eta: float, a: float, tau: int, m: float) -> Polynomial:
    """Per-worker-velocity variant: ``z^(tau+2) - z^(tau+1) +
    (eta*(1-m)*a - m) z + m``.

    The velocity a worker reuses is as stale as its gradient, which moves the
    momentum feedback out to lag ``tau + 1`` and, unlike the central-velocity
    variant, lets larger ``m`` tolerate larger step sizes.
    """
    _check_scalars(eta, a, tau)
    if not 0.0 <= m < 1.0:
        raise ValueError("m must lie in [0, 1)")
    grad = eta * (1.0 - m) * a
    terms = [(tau + 2, 1.0), (tau + 1, -1.0), (1, grad - m), (0, m)]
    return _poly_from_terms(terms)


def char_poly_stochastic(eta: float, a: float, delay: DelayModel) -> Polynomial:
    """Expected-dynamics polynomial for a random delay drawn from ``delay``.

    With maximum support ``K`` this is ``z^(K+1) - z^K + eta*a * sum_k p_k
    z^(K-k)``.  A point mass reproduces the constant-delay polynomial exactly.
    """
    if not (eta > 0.0 and math.isfinite(eta)):
        raise ValueError("eta must be positive and finite")
    if not (a > 0.0 and math.isfinite(a)):
        raise ValueError("a must be positive and finite")
    big_k = delay.max_delay
    terms = [(big_k + 1, 1.0), (big_k, -1.0)]
    terms += [(big_k - k, eta * a * p) for k, p in zip(delay.delays, delay.probs)]
    return _poly_from_terms(terms)


def char_poly(optimizer: OptimizerSpec, a: float, delay: DelayModel) -> Polynomial:
    """Dispatch to the right builder for an optimizer/delay combination.

    Random delays are only analyzed for the plain variant; combining them
    with momentum raises.
    """
    if delay.is_constant:
        tau = delay.tau
        if optimizer.variant == PLAIN:
            return char_poly_plain(optimizer.eta, a, tau)
        if optimizer.variant == MOMENTUM:
            return char_poly_momentum(optimizer.eta, a, tau, optimizer.m)
        return char_poly_shifted(optimizer.eta, a, tau, optimizer.m)
    if optimizer.variant != PLAIN:
        raise ValueError("random delay analysis is only supported for plain")
    return char_poly_stochastic(optimizer.eta, a, delay)


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def pmf_uniform(lo: int, hi: int) -> DelayModel:
    """Uniform delay on the integers ``lo..hi`` inclusive."""
    if not 1 <= lo <= hi:
        raise ValueError("need 1 <= lo <= hi")
    n = hi - lo + 1
    return DelayModel.pmf((k, 1.0 / n) for k in range(lo, hi + 1))


def pmf_discrete_gaussian(mu: int) -> DelayModel:
    """Discretized normal delay centred on ``mu`` with unit width.

    Mass at ``k`` in ``1..2*mu`` is the normal probability of the interval
    ``(k-0.5, k+0.5)``, renormalized over the truncated support.  The mean
    sits within 1e-6 of ``mu`` once ``mu >= 6``; for smaller ``mu`` the
    dropped left tail biases it up by a visible but harmless amount.
    """
    if mu < 1:
        raise ValueError("mu must be a positive integer")
    raw = [_norm_cdf(k + 0.5 - mu) - _norm_cdf(k - 0.5 - mu) for k in range(1, 2 * mu + 1)]
    total = math.fsum(raw)
    # Far-tail intervals underflow to exactly zero mass; drop them rather
    # than carry entries the delay model cannot represent.
    return DelayModel.pmf(
        (k, raw[k - 1] / total) for k in range(1, 2 * mu + 1) if raw[k - 1] > 0.0
    )
