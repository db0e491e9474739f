"""Order-of-growth estimation and the bulging certificate.

For F(z, w) = (f(z) + w h(z, w), g(w)) with f(z) = z + a + e^(-z), orbits
started in U_{r,R} x D(0, eps) with U_{r,R} = {Re z > r, |z| < R} satisfy

    (1)  Re(z_k) > r + k Re(a)/4        (2)  |z_k| < R + 2 k |a|

for every k, provided eps is small enough that the perturbation budget

    e^{(R + 2k|a|)^p} * alpha^k * eps  <  Re(a)/4        (sub-exponential)

holds for all k, where p bounds the growth of h on the orbit range:
log log M(sigma; h) <= p log sigma.  find_epsilon performs that scan given
p; calibrate_growth_exponent measures the smallest valid p on a sampled
radius range, since an exponent that only holds asymptotically can admit
real violations at finite radii.  The super-attracting branch replaces
alpha^k by the doubly exponential |w_k| <= C_g^{1+d+...+d^{k-1}} |w|^{d^k}.

certify_escape follows a single orbit past the reach of floating point by
switching to exact log-tracking (zeta = log z) once the w h(z, w) term
dominates, with the accumulated linearization error bounded explicitly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    PrecisionConfig,
    Perturbation,
    RangeOverflowError,
    SkewProduct,
    eval_skew,
)

LOG_FLOAT_MIN = -700.0  # conservative log threshold below which binary64 underflows


# ---------------------------------------------------------------------------
# maximum modulus and order of growth
# ---------------------------------------------------------------------------


def _log_abs_poly(coeffs: tuple, u: np.ndarray) -> np.ndarray:
    """log|p(u)| elementwise, stable for |u| >> 1 via the reversed expansion
    p(u) = u^d * (c_d + c_{d-1}/u + ...)."""
    c = np.asarray(coeffs, dtype=complex)
    d = len(c) - 1
    out = np.empty(u.shape, dtype=float)
    big = np.abs(u) > 2.0
    if big.any():
        inv = 1.0 / u[big]
        acc = np.zeros_like(inv)
        for cj in c:  # ascending -> Horner in 1/u leaves c_d + c_{d-1}/u + ...
            acc = acc * inv + cj
        out[big] = d * np.log(np.abs(u[big])) + np.log(np.abs(acc))
    if (~big).any():
        acc = np.zeros_like(u[~big])
        for cj in c[::-1]:
            acc = acc * u[~big] + cj
        with np.errstate(divide="ignore"):
            out[~big] = np.log(np.abs(acc))
    return out


def log_max_modulus(h: Perturbation, r1: float, r2: float, boundary_samples: int = 4096) -> float:
    """log of the sampled maximum of |h| on the distinguished boundary
    {|z| = r1, |w| = r2}, computed without forming |h| in linear scale."""
    if r1 <= 0 or r2 <= 0:
        raise ValueError("radii must be positive")
    if boundary_samples < 256:
        raise ValueError("boundary_samples must be >= 256")
    if h.variant == "zero":
        raise ValueError("h = 0 has no maximum modulus growth")

    th = 2 * np.pi * (np.arange(boundary_samples) + 0.5) / boundary_samples
    if h.variant == "exp_k":
        z = r1 * np.exp(1j * th)
        return float(np.max((z**h.k).real))
    if h.variant == "poly_z":
        u = (r1 * np.exp(1j * th) - complex(h.center)) / h.scale
        return float(np.max(_log_abs_poly(h.coeffs, u)))
    if h.variant == "poly_w":
        w = r2 * np.exp(1j * th)
        return float(np.max(_log_abs_poly(h.coeffs, w)))
    # poly_zw on an angle grid in both variables
    m = max(64, int(math.isqrt(boundary_samples)))
    tz = 2 * np.pi * (np.arange(m) + 0.5) / m
    z = (r1 * np.exp(1j * tz))[:, None]
    w = (r2 * np.exp(1j * tz))[None, :]
    acc = np.zeros((m, m), dtype=complex)
    for row in reversed(h.matrix):
        rw = np.zeros_like(w)
        for c in reversed(row):
            rw = rw * w + c
        acc = acc * z + rw
    with np.errstate(divide="ignore"):
        return float(np.max(np.log(np.abs(acc))))


def max_modulus(h: Perturbation, r1: float, r2: float, boundary_samples: int = 4096) -> float:
    """Sampled max of |h| on {|z| = r1, |w| = r2}; the maximum principle makes
    boundary sampling sufficient.  Signals when the true value is not
    representable in binary64."""
    lm = log_max_modulus(h, r1, r2, boundary_samples)
    if lm > 709.0:
        raise RangeOverflowError(f"max modulus exceeds representable range (log = {lm:.6g})")
    return math.exp(lm)


@dataclass(frozen=True)
class OrderEstimate:
    """Regression slope of log log M(r, r2; h) against log r."""

    slope: float
    r_grid: tuple
    r2: float
    residual: float
    half_slopes: tuple  # slopes over the lower and upper halves of the grid

    def to_dict(self) -> dict:
        return {
            "kind": "order",
            "slope": self.slope,
            "r_grid": list(self.r_grid),
            "r2": self.r2,
            "residual": self.residual,
            "half_slopes": list(self.half_slopes),
        }


def _ls_slope(x: np.ndarray, y: np.ndarray) -> tuple:
    A = np.vstack([x, np.ones_like(x)]).T
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ sol - y) ** 2)))
    return float(sol[0]), resid


def estimate_order(
    h: Perturbation, r2: float, r_grid: list, boundary_samples: int = 2048
) -> OrderEstimate:
    """Least-squares slope of log log M versus log r on the given grid.

    Requires at least 5 strictly increasing radii spanning two decades and
    M(r, r2; h) > 1 everywhere on the grid so the double log exists.
    """
    grid = [float(r) for r in r_grid]
    if len(grid) < 5 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("r_grid must be strictly increasing with length >= 5")
    if grid[-1] / grid[0] < 100.0:
        raise ValueError("r_grid must span at least two decades")
    logM = np.array([log_max_modulus(h, r, r2, boundary_samples) for r in grid])
    if np.any(logM <= 0):
        raise ValueError("M(r, r2; h) <= 1 somewhere on the grid; order slope undefined")
    x = np.log(np.array(grid))
    y = np.log(logM)
    slope, resid = _ls_slope(x, y)
    half = (len(grid) + 1) // 2
    s_lo, _ = _ls_slope(x[:half], y[:half])
    s_hi, _ = _ls_slope(x[len(grid) - half :], y[len(grid) - half :])
    return OrderEstimate(slope, tuple(grid), r2, resid, (s_lo, s_hi))


def calibrate_growth_exponent(
    h: Perturbation,
    r2: float,
    sigma_lo: float,
    sigma_hi: float,
    points: int = 64,
    margin: float = 0.02,
    grid_step: float = 0.05,
) -> float:
    """Smallest grid exponent p with M(sigma, r2; h) <= e^(sigma^p) on the whole
    sampled range [sigma_lo, sigma_hi], i.e. p > log log M / log sigma + margin.

    An exponent valid only asymptotically can fail at the finite radii an
    orbit actually visits, so the budget scan must use a p that holds on the
    range it is applied to.  Raises when no p < 1 works (use the
    super-attracting branch instead).
    """
    if not 1.0 < sigma_lo < sigma_hi:
        raise ValueError("need 1 < sigma_lo < sigma_hi")
    sig = np.geomspace(sigma_lo, sigma_hi, points)
    p_req = 0.0
    for s in sig:
        lm = log_max_modulus(h, float(s), r2)
        if lm <= 0:
            continue  # M <= 1 imposes no constraint
        p_req = max(p_req, math.log(lm) / math.log(s))
    p = grid_step * math.ceil((p_req + margin) / grid_step)
    if p >= 1.0:
        raise ValueError(
            f"required exponent {p_req:.4f} leaves no p < 1; sub-exponential budget inapplicable"
        )
    return p


# ---------------------------------------------------------------------------
# epsilon searches
# ---------------------------------------------------------------------------


def find_epsilon(
    a: complex,
    alpha: float,
    rho_plus_tau: float,
    R: float,
    delta_g: float,
    prec: PrecisionConfig | None = None,
) -> tuple:
    """Scan the budget factor e^{(R + 2k|a|)^p} alpha^k against Re(a)/4.

    Returns (N, epsilon): N is the first step index from which the factor
    stays below Re(a)/4 (checked on the analytically monotone tail), and
    epsilon = half of Re(a)/4 divided by the largest factor before N, capped
    at half of min(1, delta_g).  The combined inequality factor * eps <
    Re(a)/4 then holds for every k >= 0.
    """
    a = complex(a)
    if rho_plus_tau >= 1.0:
        raise ValueError("rho_plus_tau must be < 1 (sub-exponential branch hypothesis)")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if R <= 0 or a.real <= 0:
        raise ValueError("need R > 0 and Re(a) > 0")

    p, two_a, ln_alpha = rho_plus_tau, 2 * abs(a), math.log(alpha)
    log_target = math.log(a.real / 4.0)

    # first k where d/dk[(R + 2|a|k)^p + k ln(alpha)] <= 0; log-factor is
    # concave in k, so it is monotone decreasing from k_mono on
    s_crit = (p * two_a / (-ln_alpha)) ** (1.0 / (1.0 - p))
    k_mono = max(0, math.ceil((s_crit - R) / two_a))

    max_logfac = -math.inf
    k = 0
    while True:
        logfac = (R + two_a * k) ** p + k * ln_alpha
        if k >= k_mono and logfac < log_target:
            N = k
            break
        max_logfac = max(max_logfac, logfac)
        k += 1
        if k > 50_000_000:
            raise RuntimeError("budget scan failed to terminate")

    log_cap = math.log(0.5 * min(1.0, delta_g))
    if N == 0:
        log_eps = log_cap  # factor already below target at every step
    else:
        log_eps = min(math.log(0.5) + log_target - max_logfac, log_cap)

    if prec is not None and prec.mode == "extended":
        import gmpy2

        with gmpy2.context(precision=prec.bits):
            return N, gmpy2.exp(gmpy2.mpfr(log_eps))
    if log_eps < LOG_FLOAT_MIN:
        raise RangeOverflowError(
            f"epsilon = exp({log_eps:.6g}) underflows binary64; rerun with extended precision"
        )
    return N, math.exp(log_eps)


@dataclass(frozen=True)
class SuperAttractingBudget:
    """Parameters of the super-attracting branch: g(w) = w^d q(w) with
    |g(w)| <= C_g |w|^d near 0, whence |w_k| <= C_g^{1+d+...+d^{k-1}} |w|^{d^k}.

    C = log(C_g)/(1 - d) is derived; t > 0 must satisfy log(1/t) + C > 0.
    """

    d: int
    C_g: float
    t: float = 0.0
    C: float = field(init=False)

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if self.C_g <= 0:
            raise ValueError("C_g must be positive")
        C = math.log(self.C_g) / (1 - self.d)
        object.__setattr__(self, "C", C)
        if self.t == 0.0:
            object.__setattr__(self, "t", math.exp(C) / 2)
        if not math.log(1.0 / self.t) + C > 0:
            raise ValueError("t too large: need log(1/t) + C > 0")


def find_epsilon_super(
    a: complex,
    budget: SuperAttractingBudget,
    rho1: float,
    R: float,
    delta_g: float = 1.0,
    prec: PrecisionConfig | None = None,
    k_cap: int = 400,
) -> tuple:
    """Super-attracting analogue of find_epsilon.

    The constraint e^{(R + 2k|a|)^{rho1 + 1}} e^C e^{-d^k (log(1/eps) + C)}
    < Re(a)/4 for all k is equivalent to log(1/eps) + C exceeding every

        B_k = ((R + 2k|a|)^{rho1 + 1} + C + log(4 / Re a)) / d^k.

    The d^k denominator crushes B_k after finitely many steps; N is one past
    the binding (largest) B_k.  epsilon is halved below the exact threshold
    and capped below min(t, delta_g); values that underflow binary64 require
    extended precision.
    """
    a = complex(a)
    if not rho1 >= 0 or not math.isfinite(rho1):
        raise ValueError("rho1 must be finite and nonnegative")
    two_a = 2 * abs(a)
    off = budget.C + math.log(4.0 / a.real)
    max_B, argmax = -math.inf, 0
    for k in range(k_cap + 1):
        B = ((R + two_a * k) ** (rho1 + 1.0) + off) / budget.d**k
        if B > max_B:
            max_B, argmax = B, k
        elif B < max(1e-9 * abs(max_B), 1e-12) and k > argmax + 3:
            break
    N = argmax + 1
    log_eps = min(budget.C - max_B - math.log(2.0), math.log(min(budget.t, delta_g) / 2.0))

    if prec is not None and prec.mode == "extended":
        import gmpy2

        with gmpy2.context(precision=prec.bits):
            return N, gmpy2.exp(gmpy2.mpfr(log_eps))
    if log_eps < LOG_FLOAT_MIN:
        raise RangeOverflowError(
            f"epsilon = exp({log_eps:.6g}) underflows binary64; rerun with extended precision"
        )
    return N, math.exp(log_eps)


# ---------------------------------------------------------------------------
# sampled orbit-bound verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BulgeCertificate:
    """Parameters and outcome of a sampled orbit-bound verification."""

    a: complex
    alpha: float
    rho_plus_tau: float
    L: float
    r: float
    R: float
    N: int
    epsilon: float
    K_steps: int
    sample_count: int
    violations: tuple = ()
    checked: bool = False

    def __post_init__(self) -> None:
        if not self.L <= self.r < self.R:
            raise ValueError("need L <= r < R")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")

    @property
    def passed(self) -> bool:
        return self.checked and not self.violations

    def to_dict(self) -> dict:
        return {
            "kind": "bulge",
            "a": [complex(self.a).real, complex(self.a).imag],
            "alpha": self.alpha,
            "rho_plus_tau": self.rho_plus_tau,
            "L": self.L,
            "r": self.r,
            "R": self.R,
            "N": self.N,
            "epsilon": self.epsilon,
            "K_steps": self.K_steps,
            "sample_count": self.sample_count,
            "violations": list(self.violations),
            "passed": self.passed,
        }


def _eval_h_grid(h: Perturbation, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    if h.variant == "zero":
        return np.zeros_like(z)
    if h.variant == "poly_z":
        u = (z - complex(h.center)) / h.scale
        acc = np.zeros_like(u)
        for c in reversed(h.coeffs):
            acc = acc * u + c
        return acc
    if h.variant == "poly_w":
        acc = np.zeros_like(w)
        for c in reversed(h.coeffs):
            acc = acc * w + c
        return acc
    if h.variant == "exp_k":
        return np.exp(z**h.k)
    acc = np.zeros_like(z)
    for row in reversed(h.matrix):
        rw = np.zeros_like(w)
        for c in reversed(row):
            rw = rw * w + c
        acc = acc * z + rw
    return acc


def _eval_g_grid(gmap, w: np.ndarray) -> np.ndarray:
    if gmap.variant == "linear":
        return complex(gmap.lam) * w
    if gmap.variant == "poly":
        acc = np.zeros_like(w)
        for c in reversed(gmap.coeffs):
            acc = acc * w + c
        return acc
    q = np.zeros_like(w)
    for c in reversed(gmap.q_coeffs):
        q = q * w + c
    return w**gmap.d * q


def sample_box(r: float, R: float, epsilon: float, n: int, seed: int) -> tuple:
    """Stratified (grid + jitter) samples of U_{r,R} x D(0, epsilon)."""
    rng = np.random.default_rng(seed)
    b = math.sqrt(max(R * R - r * r, 0.0)) or R
    g = math.ceil(math.sqrt(2.5 * n))
    zs = np.empty(0, dtype=complex)
    while zs.size < n:
        i, j = np.meshgrid(np.arange(g), np.arange(g), indexing="ij")
        x = r + (i.ravel() + rng.random(g * g)) * (R - r) / g
        y = -b + (j.ravel() + rng.random(g * g)) * (2 * b) / g
        cand = x + 1j * y
        keep = (np.abs(cand) < R) & (cand.real > r)
        zs = np.concatenate([zs, cand[keep]])
        g = math.ceil(g * 1.5)
    zs = zs[:n]
    m = math.ceil(math.sqrt(n))
    i, j = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    rad = epsilon * (1 - 1e-9) * np.sqrt((i.ravel() + rng.random(m * m)) / m)
    ang = 2 * np.pi * (j.ravel() + rng.random(m * m)) / m
    ws = (rad * np.exp(1j * ang))[:n]
    return zs, ws


def verify_bulge_bounds(F: SkewProduct, cert: BulgeCertificate, seed: int = 42) -> BulgeCertificate:
    """Iterate sampled starting points and assert both orbit bounds per step.

    Bounds: Re(z_k) > r + k Re(a)/4 and |z_k| < R + 2 k |a| for k = 1..K.
    Violations (including non-finite arithmetic, which voids the orbit's
    certificate prerequisites) are recorded with full context, capped at 100
    entries.  Sampling runs in binary64.
    """
    a = complex(cert.a)
    z, w = sample_box(cert.r, cert.R, cert.epsilon, cert.sample_count, seed)
    rate, two_a = a.real / 4.0, 2 * abs(a)
    violations: list = []
    alive = np.ones(z.shape, dtype=bool)
    for k in range(1, cert.K_steps + 1):
        z = z + a + np.exp(-z) + w * _eval_h_grid(F.h, z, w)
        w = _eval_g_grid(F.g, w)
        finite = np.isfinite(z) & np.isfinite(w)
        re_ok = z.real > cert.r + k * rate
        abs_ok = np.abs(z) < cert.R + two_a * k
        sane = np.abs(z) >= z.real  # |z| >= Re(z), asserted literally
        bad = alive & (~finite | ~re_ok | ~abs_ok | ~sane)
        if bad.any():
            for idx in np.nonzero(bad)[0]:
                if len(violations) >= 100:
                    break
                which = (
                    "overflow" if not finite[idx]
                    else "re_bound" if not re_ok[idx]
                    else "abs_bound" if not abs_ok[idx]
                    else "abs_ge_re"
                )
                violations.append(
                    {"sample": int(idx), "k": k, "which": which,
                     "z": [float(z.real[idx]), float(z.imag[idx])]}
                )
            alive &= ~bad
    return replace(cert, violations=tuple(violations), checked=True)


# ---------------------------------------------------------------------------
# single-orbit escape certification past floating-point range
# ---------------------------------------------------------------------------


@dataclass
class EscapeCertificate:
    """Escape-rate verdict for one orbit.

    entry_step   first k with Re(z_k) > r (the bound applies from here on)
    passed       Re(z_k) > r + (k - entry_step) * rate for entry_step <= k <= K
    log_regime_from   step at which tracking switched to zeta = log z
    err_bound    accumulated bound on |log z - zeta| at the final step
    """

    p0: tuple
    K: int
    r: float
    rate: float
    entry_step: int | None = None
    passed: bool = False
    failures: list = field(default_factory=list)
    log_regime_from: int | None = None
    err_bound: float = 0.0
    final_log_re: float = 0.0  # log|z_K| (natural), from floats or the log regime

    def to_dict(self) -> dict:
        z0, w0 = complex(self.p0[0]), complex(self.p0[1])
        return {
            "kind": "escape",
            "z0": [z0.real, z0.imag],
            "w0": [w0.real, w0.imag],
            "K": self.K,
            "r": self.r,
            "rate": self.rate,
            "entry_step": self.entry_step,
            "passed": self.passed,
            "failures": self.failures,
            "log_regime_from": self.log_regime_from,
            "err_bound": self.err_bound,
            "final_log_re": self.final_log_re,
        }


def certify_escape(F: SkewProduct, p0: tuple, K: int, r: float) -> EscapeCertificate:
    """Certify Re(z_k) > r + (k - k0) Re(a)/4 up to step K, where k0 is the
    first entry into {Re z > r}.

    Floating-point iteration is used while it is exact enough; once the
    dominant term w c_d (z/s)^d exceeds everything else by 20 orders of
    magnitude and |z| is large, the orbit is continued as
    zeta_{k+1} = log w_k + log c_d + d (zeta_k - log s), with the discarded
    log1p correction accumulated into err_bound (amplified by d per step).
    Only poly_z perturbations and linear base maps support the log regime;
    orbits that never leave float range do not need it.
    """
    h, g = F.h, F.g
    a = complex(F.f.a)
    rate = a.real / 4.0
    cert = EscapeCertificate(p0, K, r, rate)
    if h.variant not in ("poly_z", "zero"):
        raise ValueError("certify_escape supports poly_z or zero perturbations")

    d = len(h.coeffs) - 1 if h.variant == "poly_z" else 0
    c_lead = complex(h.coeffs[-1]) if d >= 0 and h.variant == "poly_z" else 0j
    abs_coeff_sum = sum(abs(complex(c)) for c in h.coeffs) if h.variant == "poly_z" else 0.0
    switch_abs = 10.0 ** (250.0 / max(d, 1))

    z, w = complex(p0[0]), complex(p0[1])
    entry: int | None = 0 if z.real > r else None
    zeta: complex | None = None
    lw: complex | None = None
    err = 0.0

    for k in range(1, K + 1):
        if zeta is None:
            # float phase
            if h.variant == "poly_z" and w != 0 and abs(z) > switch_abs:
                # dominance check before switching representation
                u = (z - complex(h.center)) / h.scale
                log_dom = math.log(abs(w)) + math.log(abs(c_lead)) + d * math.log(abs(u))
                log_rest = max(math.log(abs(z) + abs(a) + 1.0),
                               math.log(abs(w) * abs_coeff_sum + 1e-300) + (d - 1) * math.log(abs(u)))
                if g.variant == "linear" and log_dom - log_rest > 46:  # 20 decimal orders
                    zeta = cmath.log(z)
                    lw = cmath.log(w)
                    cert.log_regime_from = k
                else:
                    cert.failures.append({"k": k, "why": "log regime unavailable"})
                    break
            if zeta is None:
                (z, w) = eval_skew(F, (z, w))
                z = complex(z)
                if entry is None and z.real > r:
                    entry = k
                if entry is not None and not z.real > r + (k - entry) * rate:
                    cert.failures.append({"k": k, "why": "re_bound", "re_z": z.real})
                cert.final_log_re = math.log(abs(z)) if abs(z) > 0 else -math.inf
                continue

        # log phase: zeta' = log w + log c_d + d*(zeta - log s) + log1p(xi)
        assert zeta is not None and lw is not None
        lz = zeta.real
        log_dom = lw.real + math.log(abs(c_lead)) + d * (lz - math.log(h.scale))
        log_rest = np.logaddexp(lz, lw.real + math.log(abs_coeff_sum) + (d - 1) * (lz - math.log(h.scale)))
        log_xi = log_rest - log_dom + 1.0
        if log_xi > -3.0:
            cert.failures.append({"k": k, "why": "dominance lost in log regime"})
            break
        zeta = lw + cmath.log(c_lead) + d * (zeta - math.log(h.scale))
        err = d * err + 1.2 * math.exp(log_xi)
        lw = lw + cmath.log(complex(g.lam))
        arg_budget = abs(zeta.imag) + err
        if arg_budget >= 1.0:
            cert.failures.append({"k": k, "why": "argument drift uncertifiable", "arg": arg_budget})
            break
        # Re z >= e^{Re zeta - err} cos(|Im zeta| + err); certified when its log
        # clears log(r + k * rate)
        log_re_lower = zeta.real - err + math.log(math.cos(arg_budget))
        if entry is None:
            entry = k
        if not log_re_lower > math.log(r + (k - entry) * rate):
            cert.failures.append({"k": k, "why": "re_bound (log regime)"})
        cert.final_log_re = zeta.real

    cert.entry_step = entry
    cert.err_bound = err
    cert.passed = entry is not None and not cert.failures
    return cert
