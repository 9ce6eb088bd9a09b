"""First-exit analytics for driftless unit-variance Brownian motion.

Everything here is expressed in normalized units: a motion started inside an
interval of width ``a`` exits on the time scale ``a**2``, and a symmetric
threshold ``d`` around the start point corresponds to the interval
``(-d, d)`` of width ``2 d``.  The survival probability (no exit by time t)
has the classical eigenfunction expansion

    P(T > t) = (4/pi) * sum_{k>=0} exp(-(2k+1)^2 pi^2 t / (2 a^2))
                       * sin((2k+1) pi v0 / a) / (2k+1)

for a start at ``v0 in (0, a)``.  At the centre (``v0 = a/2``) the sine
factor alternates between +1 and -1, so the series is alternating with
super-exponentially decaying terms and the first omitted term bounds the
truncation error.

From the single-motion survival everything else follows:

* the minimum of ``n`` independent exit times survives with the n-th power,
* its expectation is the integral of that power over all times, and
* the probability that an unslotted random-access transmission collides is
  one minus the squared probability that two consecutive, independent
  inter-transmission gaps both exceed the packet duration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .errors import NumericalError, ParameterError

__all__ = [
    "IntervalExitQuery",
    "SurvivalResult",
    "survival_single",
    "survival_min_of_n",
    "expected_min_exit",
    "aloha_loss_probability",
]

# Below this value of t / width^2 a centred motion has essentially no chance
# of having reached either wall (the exit probability is < 2 exp(-1250)), so
# the slow-converging series is skipped and the survival reported as 1.
_SHORT_TIME_RATIO = 1e-4
_MAX_TERMS = 100_000
# Series tolerance used when the survival appears inside a quadrature; the
# integrand must be accurate well below the quadrature target.
_QUAD_SERIES_TOL = 1e-13


@dataclass(frozen=True)
class IntervalExitQuery:
    """A survival-probability query for one motion in a fixed interval.

    Attributes
    ----------
    start : float
        Starting point, strictly inside ``(0, width)``.
    width : float
        Interval width, > 0.
    time : float
        Elapsed time, >= 0.
    tolerance : float
        Absolute truncation tolerance for the series, in (0, 1).
    """

    start: float
    width: float
    time: float
    tolerance: float = 1e-12

    def __post_init__(self):
        if not self.width > 0.0:
            raise ParameterError(f"width must be > 0, got {self.width}")
        if not 0.0 < self.start < self.width:
            raise ParameterError(
                f"start must lie strictly inside (0, {self.width}), got {self.start}")
        if not self.time >= 0.0:
            raise ParameterError(f"time must be >= 0, got {self.time}")
        if not 0.0 < self.tolerance < 1.0:
            raise ParameterError(
                f"tolerance must be in (0, 1), got {self.tolerance}")


@dataclass(frozen=True)
class SurvivalResult:
    """Survival probability plus truncation diagnostics.

    ``truncation_bound`` is the exponential envelope of the first omitted
    series term (<= the query tolerance by construction) and ``raw_value``
    the partial sum before clamping into [0, 1].
    """

    probability: float
    terms_used: int
    truncation_bound: float
    raw_value: float


def survival_single(query: IntervalExitQuery) -> SurvivalResult:
    """Probability that the motion has not left the interval by ``time``.

    The eigenfunction series is summed until the envelope
    ``(4/pi) exp(-(2k+1)^2 pi^2 t / (2 width^2))`` of the next term drops
    below ``tolerance``; at the centred start the series alternates, so that
    envelope bounds the tail.  For very small times (``time/width**2`` below
    1e-4) with the start far from both walls relative to ``sqrt(time)`` the
    survival is 1 to far better than any representable tolerance and is
    returned directly; small-time queries started close to a wall fall
    through to the series.
    """
    a = query.width
    v0 = query.start
    t = query.time
    tol = query.tolerance

    if t / (a * a) < _SHORT_TIME_RATIO:
        wall = min(v0, a - v0)
        # one-sided reflection bound on the exit probability
        if t == 0.0 or 2.0 * math.exp(-wall * wall / (2.0 * t)) < tol * 1e-3:
            return SurvivalResult(1.0, 1, 0.0, 1.0)

    c = math.pi * math.pi * t / (2.0 * a * a)
    pref = 4.0 / math.pi
    phase = math.pi * v0 / a
    total = 0.0
    k = 0
    while True:
        odd = 2 * k + 1
        envelope = pref * math.exp(-odd * odd * c)
        if k >= 1 and envelope < tol:
            bound = envelope
            break
        total += pref * math.exp(-odd * odd * c) * math.sin(odd * phase) / odd
        k += 1
        if k >= _MAX_TERMS:
            raise NumericalError(
                f"survival series did not reach tolerance {tol} within "
                f"{_MAX_TERMS} terms (time/width^2 = {t / (a * a):.3e})",
                partial_value=total, error_bound=envelope)
    probability = min(1.0, max(0.0, total))
    return SurvivalResult(probability, k, bound, total)


def survival_min_of_n(n: int, normalized_time: float, tolerance: float = 1e-12) -> float:
    """Survival of the *earliest* of ``n`` independent threshold crossings.

    Each motion starts at the centre of a unit-threshold interval
    ``(-1, 1)``; ``normalized_time`` is in units of threshold^2.  By
    independence this is the single-motion survival raised to the n-th
    power, so the absolute accuracy degrades to about ``n * tolerance``.
    """
    if not isinstance(n, (int,)) or isinstance(n, bool) or n < 1:
        raise ParameterError(f"n must be an integer >= 1, got {n!r}")
    s = survival_single(IntervalExitQuery(start=1.0, width=2.0,
                                          time=normalized_time,
                                          tolerance=tolerance))
    return s.probability ** n


def expected_min_exit(n: int, tolerance: float = 1e-8) -> float:
    """Mean time until the first of ``n`` motions crosses a unit threshold.

    Computed as the integral over time of the min-of-n survival.  The
    integration range is split at

        t* = (8/pi^2) * (ln(1/tolerance) + n ln(4/pi)),

    beyond which the integrand is below ``(4/pi)^n exp(-n pi^2 t / 8)`` whose
    tail integral is under ``0.82 * tolerance**n`` and is dropped; [0, t*] is
    handled by adaptive quadrature with an absolute target of tolerance/8.
    For ``n = 1`` the exact value is 1 (in threshold^2 units), which the
    quadrature reproduces; it is not special-cased.
    """
    if not isinstance(n, (int,)) or isinstance(n, bool) or n < 1:
        raise ParameterError(f"n must be an integer >= 1, got {n!r}")
    if not 0.0 < tolerance < 1.0:
        raise ParameterError(f"tolerance must be in (0, 1), got {tolerance}")

    t_star = (8.0 / math.pi**2) * (math.log(1.0 / tolerance)
                                   + n * math.log(4.0 / math.pi))
    series_tol = min(_QUAD_SERIES_TOL, tolerance / 8.0)

    def integrand(t: float) -> float:
        return survival_min_of_n(n, t, tolerance=series_tol)

    result = integrate.quad(integrand, 0.0, t_star,
                            epsabs=tolerance / 8.0, epsrel=1e-10,
                            limit=200, full_output=True)
    value, abserr = result[0], result[1]
    if len(result) > 3:  # quad appended a warning message
        raise NumericalError(
            f"quadrature for expected_min_exit({n}) did not converge: "
            f"{result[3]}", partial_value=value, error_bound=abserr)
    if abserr > tolerance:
        raise NumericalError(
            f"quadrature error {abserr:.3e} above tolerance {tolerance:.3e} "
            f"for expected_min_exit({n})", partial_value=value,
            error_bound=abserr)
    return value


def aloha_loss_probability(rho: float, num_agents: int, mean_exit: float,
                           tolerance: float = 1e-12) -> float:
    """Packet-loss probability of unslotted random access at network load ``rho``.

    A packet occupies the channel for ``tau = rho * mean_exit`` (threshold^2
    units) and is lost iff its interval overlaps the previous or the next
    transmission attempt.  Consecutive inter-attempt gaps are independent
    copies of the min-of-n crossing time, so

        p = 1 - P(T > tau)^2,

    with ``P(T > tau)`` the min-of-n survival at normalized time
    ``mean_exit * rho``.  Non-decreasing in ``rho``.
    """
    if not rho > 0.0:
        raise ParameterError(f"rho must be > 0, got {rho}")
    if not mean_exit > 0.0:
        raise ParameterError(f"mean_exit must be > 0, got {mean_exit}")
    survive = survival_min_of_n(num_agents, mean_exit * rho, tolerance)
    return min(1.0, max(0.0, 1.0 - survive * survive))
