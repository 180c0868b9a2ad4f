"""Step-size thresholds: where stale-gradient descent stops converging.

For the plain variant with constant delay the boundary is known in closed
form: the recurrence is stable exactly when ``eta * a < 2 sin(pi / (4 tau +
2))``.  Its reciprocal is nearly linear in the delay, ``1 / (eta* a) ~=
(2 tau + 1) / pi``, which is what makes the practical rescaling rule in
``scale_lr`` work.  For everything else (momentum variants, random delays)
the boundary is found numerically by bisecting the step size against the
largest root magnitude of the characteristic polynomial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .charpoly import DelayModel, OptimizerSpec, char_poly
from .errors import NoConvergence, NoThreshold
from .roots import all_roots

ETA_A_CAP = 16.0
BRACKET_START = 1e-6

METHOD_ANALYTIC = "analytic"
METHOD_BISECTION = "bisection"
METHOD_SIMULATION = "simulation"


@dataclass(frozen=True)
class ThresholdResult:
    """A located stability boundary in step size.

    ``bracket`` is the final (stable, unstable) eta pair; ``eta_star`` is its
    midpoint and ``hi - lo <= tolerance * eta_star`` holds on return.
    ``max_root_residual`` is the root-solver residual of the dominant root at
    ``eta_star`` (NaN when the boundary came from simulation, not roots).
    """

    eta_star: float
    method: str
    bracket: tuple[float, float]
    tolerance: float
    variant: str
    m: float
    a: float
    delay: DelayModel
    max_root_residual: float


def analytic_threshold_plain(a: float, tau: int) -> float:
    """Exact threshold ``(2 / a) sin(pi / (4 tau + 2))`` for the plain variant.

    At ``tau = 0`` this is the familiar ``2 / a``; the delay shrinks the
    usable step size roughly in proportion to ``1 / (2 tau + 1)``.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return (2.0 / a) * math.sin(math.pi / (4 * tau + 2))


def taylor_inverse_threshold(tau: int) -> float:
    """First-order reciprocal threshold ``(2 tau + 1) / pi``.

    Undefined at ``tau = 0``: the expansion is around large delay and the
    delay-free case needs no approximation.
    """
    if tau < 1:
        raise ValueError("the linear approximation needs tau >= 1")
    return (2 * tau + 1) / math.pi


def scale_lr(eta0: float, tau: int) -> float:
    """Rescale a delay-free step size for training under delay ``tau``.

    ``eta0 * pi / (4 (tau + 0.5))``: the ratio of the delayed to undelayed
    threshold, with the sine linearized.  Useful as a drop-in rule when a
    well-tuned eta0 is known for synchronous training.
    """
    if eta0 <= 0:
        raise ValueError("eta0 must be positive")
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return eta0 * math.pi / (4.0 * (tau + 0.5))


def effective_lr(eta: float, m: float) -> float:
    """Long-run step size ``eta / (1 - m)`` of a momentum update."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    if not 0.0 <= m < 1.0:
        raise ValueError("m must lie in [0, 1)")
    return eta / (1.0 - m)


def dampened_lr(eta_eff: float, m: float) -> float:
    """Invert :func:`effective_lr`: the raw eta that yields ``eta_eff``."""
    if eta_eff <= 0:
        raise ValueError("eta_eff must be positive")
    if not 0.0 <= m < 1.0:
        raise ValueError("m must lie in [0, 1)")
    return eta_eff * (1.0 - m)


def _nonzero_roots(roots) -> tuple[complex, ...]:
    return tuple(r for r in roots if r != 0)


def _bisect_eta(
    stable, a: float, rel_tol: float, start_eta_a: float = BRACKET_START
) -> tuple[float, float]:
    """Bracket and bisect a stability boundary along eta.

    ``stable(eta)`` must flip from True to False exactly once as eta grows.
    Doubles from ``start_eta_a / a`` until instability, then bisects until
    the bracket is narrower than ``rel_tol`` times its midpoint.  Returns the
    final (stable, unstable) pair.  Shared by the root-magnitude search here
    and the trajectory-verdict searches built on simulators (which need a
    larger start: classifying a nearly-motionless run takes forever).
    """
    eta = start_eta_a / a
    eta_lo = None
    while True:
        if eta * a > ETA_A_CAP:
            raise NoThreshold(
                f"still stable at eta*a = {eta * a:.3g}; no boundary below the cap"
            )
        if stable(eta):
            eta_lo = eta
            eta *= 2.0
        else:
            eta_hi = eta
            break
    if eta_lo is None:
        raise NoThreshold("unstable already at the smallest probe; nothing to bracket")

    while eta_hi - eta_lo > rel_tol * 0.5 * (eta_lo + eta_hi):
        mid = 0.5 * (eta_lo + eta_hi)
        if mid <= eta_lo or mid >= eta_hi:
            break  # float resolution exhausted
        if stable(mid):
            eta_lo = mid
        else:
            eta_hi = mid
    return eta_lo, eta_hi


def numeric_threshold(
    variant: str,
    a: float,
    delay: DelayModel,
    m: float = 0.0,
    rel_tol: float = 1e-8,
) -> ThresholdResult:
    """Bisect the step size against the dominant characteristic root.

    Brackets by doubling eta from ``1e-6 / a`` until the largest root
    magnitude exceeds 1, then bisects until the bracket is narrower than
    ``rel_tol`` times its midpoint.  Random delays are supported for the
    plain variant only.

    Raises
    ------
    NoThreshold
        If ``eta * a`` passes 16 with the system still stable (no boundary
        in the searchable range).
    NoConvergence
        Propagated from the root solver.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    if isinstance(delay, int):
        delay = DelayModel.constant(delay)

    warm: tuple[complex, ...] | None = None

    def dominant(eta: float) -> float:
        nonlocal warm
        poly = char_poly(OptimizerSpec(variant, eta, m), a, delay)
        rs = all_roots(poly, start=warm)
        warm = _nonzero_roots(rs.roots)
        return rs.max_magnitude

    eta_lo, eta_hi = _bisect_eta(lambda eta: dominant(eta) <= 1.0, a, rel_tol)
    eta_star = 0.5 * (eta_lo + eta_hi)
    star_roots = all_roots(char_poly(OptimizerSpec(variant, eta_star, m), a, delay), start=warm)
    return ThresholdResult(
        eta_star=eta_star,
        method=METHOD_BISECTION,
        bracket=(eta_lo, eta_hi),
        tolerance=rel_tol,
        variant=variant,
        m=m,
        a=a,
        delay=delay,
        max_root_residual=star_roots.residuals[0],
    )


@dataclass(frozen=True)
class CurveRow:
    """One threshold along a delay sweep; ``error`` set if the search failed."""

    x: float
    result: ThresholdResult | None
    error: str | None

    @property
    def inv_a_eta(self) -> float:
        if self.result is None:
            raise ValueError("failed row has no threshold")
        return 1.0 / (self.result.a * self.result.eta_star)


@dataclass(frozen=True)
class ThresholdCurve:
    """Thresholds across delays plus the least-squares line through
    ``1 / (a eta*)`` versus delay (or expected delay)."""

    rows: tuple[CurveRow, ...]
    slope: float
    intercept: float
    r_squared: float

    def to_csv(self) -> str:
        lines = ["tau_or_Etau,eta_star,inv_a_eta,method,max_root_residual"]
        for row in self.rows:
            if row.result is None:
                lines.append(f"{row.x!r},,,failed,")
            else:
                r = row.result
                lines.append(
                    f"{row.x!r},{r.eta_star!r},{row.inv_a_eta!r},{r.method},{r.max_root_residual!r}"
                )
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_csv())


def _fit_line(xs: list[float], ys: list[float]) -> tuple[float, float, float]:
    n = len(xs)
    if n < 2:
        return math.nan, math.nan, math.nan
    xbar = math.fsum(xs) / n
    ybar = math.fsum(ys) / n
    sxx = math.fsum((x - xbar) ** 2 for x in xs)
    if sxx == 0.0:
        return math.nan, math.nan, math.nan
    sxy = math.fsum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    ss_res = math.fsum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    ss_tot = math.fsum((y - ybar) ** 2 for y in ys)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2


def threshold_curve(
    variant: str,
    a: float,
    delays,
    m: float = 0.0,
    rel_tol: float = 1e-8,
) -> ThresholdCurve:
    """Sweep :func:`numeric_threshold` across delays and fit the reciprocal.

    ``delays`` may mix plain integers (constant delay) and DelayModel
    instances; the x coordinate is the delay or its expectation.  A failed
    search marks its row and the sweep continues; failed rows are excluded
    from the fit.
    """
    rows: list[CurveRow] = []
    for d in delays:
        model = DelayModel.constant(d) if isinstance(d, int) else d
        x = float(model.expected_delay())
        try:
            res = numeric_threshold(variant, a, model, m=m, rel_tol=rel_tol)
            rows.append(CurveRow(x=x, result=res, error=None))
        except (NoThreshold, NoConvergence) as exc:
            rows.append(CurveRow(x=x, result=None, error=str(exc)))
    good = [r for r in rows if r.result is not None]
    slope, intercept, r2 = _fit_line([r.x for r in good], [r.inv_a_eta for r in good])
    return ThresholdCurve(rows=tuple(rows), slope=slope, intercept=intercept, r_squared=r2)
