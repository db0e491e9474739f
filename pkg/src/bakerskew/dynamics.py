"""Orbit iteration and the quantitative one-dimensional certificates.

Implements the two workhorse facts about f(z) = z + 1 + e^(-z) used by the
rest of the engine:

  * half-plane invariance: for R > |log Re a| the half plane {Re z > R}
    is forward invariant under z + a + e^(-z) (verify_absorbing);
  * the real orbit x_k = f^k(x0) drifts one unit per step and stays inside
    (x0 + k - delta, x0 + k + delta) whenever x0 satisfies the two
    closed-form admissibility conditions

        sum_{j>=0} e^(-x0 - j/2)  =  e^(-x0) / (1 - e^(-1/2))  <  delta
        e^(-x0 + 4 delta)  <  delta

    (choose_x0 / verify_onedim).  The deviation |x_k - (x0 + k)| is in fact
    bounded by the partial sum sum_{j<k} e^(-x0 - j/2), which the verifier
    asserts to 1e-10 slack.

Escape classification for general skew orbits uses a 10-step monotone
growth confirmation window above a real-part threshold, so transient
excursions are never misread as escape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    PrecisionConfig,
    RangeOverflowError,
    SkewProduct,
    eval_skew,
)

# geometric tail sum_{j>=0} e^(-j/2) of the admissibility condition
GEOM_TAIL = 1.0 / (1.0 - math.exp(-0.5))

ESCAPE_WINDOW = 10


# ---------------------------------------------------------------------------
# orbit traces
# ---------------------------------------------------------------------------


@dataclass
class OrbitTrace:
    """Finite orbit (z_k, w_k) with per-step diagnostics and a verdict.

    verdict       "escaped" | "returned" | "budget-exhausted" | "overflow"
    verdict_step  step completing the escape window, the return step, or the
                  step whose evaluation overflowed (points stop before it);
                  None for budget-exhausted.
    """

    points: list
    verdict: str
    verdict_step: int | None
    escape_re: float
    return_radius: float

    @property
    def re_z(self) -> list:
        return [float((p[0]).real) if hasattr(p[0], "real") else float(p[0]) for p in self.points]

    @property
    def abs_z(self) -> list:
        return [abs(complex(p[0])) for p in self.points]

    @property
    def abs_w(self) -> list:
        return [abs(complex(p[1])) for p in self.points]

    def to_csv(self) -> str:
        lines = ["k,re_z,im_z,abs_z,re_w,im_w"]
        for k, (z, w) in enumerate(self.points):
            z, w = complex(z), complex(w)
            lines.append(f"{k},{z.real!r},{z.imag!r},{abs(z)!r},{w.real!r},{w.imag!r}")
        return "\n".join(lines) + "\n"


def iterate(
    F: SkewProduct,
    p0: tuple,
    max_steps: int,
    escape_re: float,
    return_radius: float,
    prec: PrecisionConfig | None = None,
) -> OrbitTrace:
    """Iterate F from p0, classifying the orbit.

    Escape is certified once Re(z_k) exceeds escape_re with monotone growth
    over ESCAPE_WINDOW consecutive steps; iteration then continues to the
    budget so the full trace is available.  Return (|z_k| <= return_radius,
    k >= 1) and overflow stop the trace.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    if not escape_re > return_radius > 0:
        raise ValueError("need escape_re > return_radius > 0")

    points = [p0]
    verdict = "budget-exhausted"
    verdict_step: int | None = None
    run = 0
    escape_step: int | None = None
    prev_re = complex(p0[0]).real

    for k in range(1, max_steps + 1):
        try:
            p = eval_skew(F, points[-1], prec)
        except RangeOverflowError:
            verdict, verdict_step = "overflow", k
            break
        points.append(p)
        z = complex(p[0])
        if abs(z) <= return_radius:
            verdict, verdict_step = "returned", k
            break
        if z.real > escape_re and z.real > prev_re:
            run += 1
            if run >= ESCAPE_WINDOW and escape_step is None:
                escape_step = k
        else:
            run = 0
        prev_re = z.real
    if verdict == "budget-exhausted" and escape_step is not None:
        verdict, verdict_step = "escaped", escape_step

    return OrbitTrace(points, verdict, verdict_step, escape_re, return_radius)


# ---------------------------------------------------------------------------
# one-dimensional certificates
# ---------------------------------------------------------------------------


def x0_preconditions(x0: float, delta: float) -> tuple:
    """Values of the two admissibility conditions at x0 (each must be < delta)."""
    return (math.exp(-x0) * GEOM_TAIL, math.exp(-x0 + 4 * delta))


def choose_x0(delta: float) -> float:
    """Smallest x0 on the 0.05-grid above log 2 meeting both conditions.

    Both are monotone decreasing in x0, so the scan stops at the first hit.
    """
    if not 0 < delta <= 0.1:
        raise ValueError("delta must lie in (0, 1/10]")
    m = math.floor(20 * math.log(2)) + 1
    while True:
        x0 = m / 20.0
        s, e = x0_preconditions(x0, delta)
        if s < delta and e < delta:
            return x0
        m += 1


def fiber_orbit(x0: float, K: int) -> list:
    """x_k = f^k(x0) for a = 1 on the real axis, k = 0..K."""
    xs = [x0]
    for _ in range(K):
        xs.append(xs[-1] + 1.0 + math.exp(-xs[-1]))
    return xs


def deviation_partial_sum(x0: float, k: int) -> float:
    """sum_{j<k} e^(-x0 - j/2), the proof's bound on |x_k - (x0 + k)|."""
    return math.exp(-x0) * (1.0 - math.exp(-k / 2.0)) / (1.0 - math.exp(-0.5))


@dataclass
class OneDimCertificate:
    """Result of verify_onedim; passed means every bound held."""

    x0: float
    delta: float
    K: int
    max_deviation: float
    precondition_margins: tuple  # (geometric-sum value, exp value); each < delta on pass
    passed: bool
    failure: str | None = None
    worst_k: int = -1
    max_pair_diff: float = 0.0  # worst sampled |f(z) - f(ztilde)| over the disks
    partial_sum_slack: float = 0.0  # max over k of deviation_k - partial_sum_k

    def to_dict(self) -> dict:
        return {
            "kind": "onedim",
            "x0": self.x0,
            "delta": self.delta,
            "K": self.K,
            "max_deviation": self.max_deviation,
            "precondition_sum": self.precondition_margins[0],
            "precondition_exp": self.precondition_margins[1],
            "passed": self.passed,
            "failure": self.failure,
            "worst_k": self.worst_k,
            "max_pair_diff": self.max_pair_diff,
            "partial_sum_slack": self.partial_sum_slack,
        }


def verify_onedim(
    x0: float,
    delta: float,
    K: int,
    pairs_per_disk: int = 100,
    seed: int = 42,
) -> OneDimCertificate:
    """Verify the orbit interval bound and the disk distortion bound.

    Checks, for k = 0..K:
      * |x_k - (x0 + k)| < delta, and moreover the deviation never exceeds
        the partial sum sum_{j<k} e^(-x0 - j/2) by more than 1e-10;
      * for pairs_per_disk seeded random pairs (z, ztilde) in the closed
        disk D(x0 + k, 4 delta), |f(z) - f(ztilde)| < 10 delta.
    """
    margins = x0_preconditions(x0, delta)
    if not (margins[0] < delta and margins[1] < delta):
        which = "sum" if margins[0] >= delta else "exp"
        return OneDimCertificate(
            x0, delta, K, math.inf, margins, False, failure=f"precondition ({which} bound violated)"
        )

    xs = fiber_orbit(x0, K)
    max_dev, worst_k, slack = 0.0, -1, -math.inf
    for k, xk in enumerate(xs):
        dev = abs(xk - (x0 + k))
        slack = max(slack, dev - deviation_partial_sum(x0, k))
        if dev > max_dev:
            max_dev, worst_k = dev, k
    if max_dev >= delta:
        return OneDimCertificate(
            x0, delta, K, max_dev, margins, False, failure="interval bound", worst_k=worst_k,
            partial_sum_slack=slack,
        )
    if slack > 1e-10:
        return OneDimCertificate(
            x0, delta, K, max_dev, margins, False, failure="partial-sum sharpening",
            worst_k=worst_k, partial_sum_slack=slack,
        )

    rng = np.random.default_rng(seed)
    max_pair = 0.0
    pair_worst_k = worst_k
    for k in range(K + 1):
        r = 4 * delta * np.sqrt(rng.random(2 * pairs_per_disk))
        t = 2 * np.pi * rng.random(2 * pairs_per_disk)
        pts = (x0 + k) + r * np.exp(1j * t)
        fz = pts + 1.0 + np.exp(-pts)
        d = np.abs(fz[:pairs_per_disk] - fz[pairs_per_disk:])
        dm = float(d.max())
        if dm > max_pair:
            max_pair, pair_worst_k = dm, k
    if max_pair >= 10 * delta:
        return OneDimCertificate(
            x0, delta, K, max_dev, margins, False, failure="disk distortion bound",
            worst_k=pair_worst_k, max_pair_diff=max_pair, partial_sum_slack=slack,
        )

    return OneDimCertificate(
        x0, delta, K, max_dev, margins, True, worst_k=worst_k, max_pair_diff=max_pair,
        partial_sum_slack=slack,
    )


# ---------------------------------------------------------------------------
# absorbing half-plane
# ---------------------------------------------------------------------------


def absorbing_report(a: complex, R: float, samples: int, seed: int = 42) -> dict:
    """Sampled invariance of {Re z > R} under z + a + e^(-z).

    Draws Re(z) uniform in (R, R + 100) and Im(z) uniform in [-100, 100];
    reports violations of Re(f(z)) > R.
    """
    a = complex(a)
    if a.real <= 0:
        raise ValueError("Re(a) must be positive")
    if not R > abs(math.log(a.real)):
        raise ValueError("need R > |log Re a|")
    rng = np.random.default_rng(seed)
    x = R + 100.0 * rng.random(samples)
    y = -100.0 + 200.0 * rng.random(samples)
    re_f = x + a.real + np.exp(-x) * np.cos(y)
    bad = re_f <= R
    count = int(bad.sum())
    return {
        "kind": "absorbing",
        "a": [a.real, a.imag],
        "R": R,
        "samples": samples,
        "violations": count,
        "min_margin": float((re_f - R).min()),
        "passed": count == 0,
    }


def verify_absorbing(a: complex, R: float, samples: int, seed: int = 42) -> bool:
    return absorbing_report(a, R, samples, seed)["passed"]
