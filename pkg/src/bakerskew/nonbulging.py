"""Finite-stage construction of a perturbation h with returning orbits.

Stage by stage, a polynomial h_k is produced that (a) nearly coincides with
h_{k-1} on a growing rectangle H_k containing the dynamics seen so far and
(b) is nearly the constant -x_{k+1}/g^k(w_k) on the disk D_k around the
fiber orbit, so that the orbit of (x_0, w_k) under F_{h_k}(z, w) =
(f(z) + w h_k(z), g(w)) tracks the fiber for k steps and is then thrown
back near the origin at step k+1.  Six properties are verified per stage:

  (1) 0 < |w_k| < min(1/(k+1), delta_g)
  (2) 0 < delta_k < 1
  (3) pi_z F_{h_k}^k(x_0, w_k) lands within delta of x_k
  (4) sup over D_k of |h_k + x_{k+1}/g^k(w_k)| below 1
  (5) sup over H_k of |h_k - h_{k-1}| below eps_k = 2^{-(k+1)} min{delta_j}
  (6) any h-tilde within delta_k of h_{k-1} on H_k moves the k-step orbit
      by less than delta: enforced by a first-order amplification bound and
      random polynomial probes, reported as certified-to-first-order, not
      proved

The budgets eps_k telescope (sum_{j >= m} eps_j < delta_{m+1}), which is
what keeps every later h_K inside the stage-m tolerance on H_{m+1} and
makes verify_return's bound |pi_z F_{h_K}^{n+1}(x_0, w_n)| <= 3 reachable.

The fiber map is fixed at f(z) = z + 1 + e^{-z} (a = 1), matching the
orbit-tracking certificates in dynamics.  w_k is taken as large as the halving
grid permits because |x_{k+1}/g^k(w_k)| is the dynamic range the stage fit
must bridge across a gap of width 1/2 - 4 delta; spending the freedom in
w_k is what keeps that range small.  When a stage fit cannot reach eps_k
within the degree budget, build_stage_k raises StageFailure carrying the
required dynamic range; run_construction(keep_going=True) records the
failure and continues with the best polynomial achieved so that later
stages and the contrast experiment still have concrete data.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    STANDARD,
    BaseMap,
    PrecisionConfig,
    RangeOverflowError,
    dump_json,
    iterate_base,
)
from .dynamics import choose_x0, fiber_orbit
from .runge import (
    CompactSet,
    CompactSetUnion,
    ConditioningError,
    PolynomialApproximant,
    TargetSpec,
    fit_auto,
)


def _safe_abs(z: complex) -> float:
    """|z| saturating to inf instead of raising when components are huge."""
    try:
        return abs(z)
    except OverflowError:
        return math.inf


def _eval_poly(coeffs, center: complex, scale: float, z):
    u = (np.asarray(z, dtype=complex) - complex(center)) / scale
    acc = np.zeros_like(u)
    for c in reversed(coeffs):
        acc = acc * u + complex(c)
    return acc


def default_base_map() -> BaseMap:
    return BaseMap("linear", lam=0.5, delta_g=0.9)


# ---------------------------------------------------------------------------
# stage records
# ---------------------------------------------------------------------------


@dataclass
class StageReport:
    """Outcome of the six per-stage property checks."""

    k: int
    prop1_ok: bool
    prop2_ok: bool
    prop3_margin: float
    prop4_margin: float
    prop5_margin: float | None  # None at stage 0 (no predecessor)
    eps_k: float
    prop6_delta_probe: tuple
    prop6_certified: bool
    amplification_bound: float
    sandwich_ok: bool
    fit_degree: int
    fit_error: float
    required_dynamic_range: float
    delta: float
    failure: str | None = None

    @property
    def passed(self) -> bool:
        return (
            self.failure is None
            and self.prop1_ok
            and self.prop2_ok
            and self.prop3_margin < self.delta
            and self.prop4_margin < 1.0
            and (self.prop5_margin is None or self.prop5_margin < self.eps_k)
            and self.prop6_certified
            and self.sandwich_ok
        )

    def to_dict(self) -> dict:
        return {
            "kind": "stage_report",
            "k": self.k,
            "prop1_ok": self.prop1_ok,
            "prop2_ok": self.prop2_ok,
            "prop3_margin": self.prop3_margin,
            "prop4_margin": self.prop4_margin,
            "prop5_margin": self.prop5_margin,
            "eps_k": self.eps_k,
            "prop6_delta_probe": list(self.prop6_delta_probe),
            "prop6_certified": self.prop6_certified,
            "amplification_bound": self.amplification_bound,
            "sandwich_ok": self.sandwich_ok,
            "fit_degree": self.fit_degree,
            "fit_error": self.fit_error,
            "required_dynamic_range": self.required_dynamic_range,
            "delta": self.delta,
            "failure": self.failure,
            "passed": self.passed,
        }


@dataclass
class StageState:
    """Everything stage k hands to stage k+1."""

    k: int
    h_k: PolynomialApproximant
    w_k: complex
    delta_k: float
    eps_k: float
    x_orbit: tuple  # x_0 .. x_{k+1} on the fiber
    D_sets: tuple
    H_set: CompactSet | None
    report: StageReport

    def to_dict(self) -> dict:
        return {
            "kind": "stage",
            "k": self.k,
            "h_k": self.h_k.to_dict(),
            "w_k": [complex(self.w_k).real, complex(self.w_k).imag],
            "delta_k": self.delta_k,
            "eps_k": self.eps_k,
            "x_orbit": list(self.x_orbit),
            "report": self.report.to_dict(),
        }


class StageFailure(RuntimeError):
    """A stage could not meet its fit budget (or probe validation collapsed).

    Carries the best approximant achieved so a keep-going pipeline can
    proceed with explicit, recorded degradation.
    """

    def __init__(self, k: int, diagnostic: dict, best: PolynomialApproximant | None = None):
        super().__init__(f"stage {k} failed: {diagnostic}")
        self.k = k
        self.diagnostic = diagnostic
        self.best = best


# ---------------------------------------------------------------------------
# orbits under a concrete polynomial perturbation
# ---------------------------------------------------------------------------


def _orbit_z(h: PolynomialApproximant, g: BaseMap, z0: complex, w0: complex, steps: int) -> list:
    """z_0..z_steps of F_h = (f(z) + w h(z), g(w)) started at (z0, w0),
    with f(z) = z + 1 + e^(-z).  Non-finite values propagate as inf."""
    zs = [complex(z0)]
    w = complex(w0)
    z = complex(z0)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            z = z + 1.0 + complex(np.exp(-z)) + w * complex(h.eval(z))
            w = complex(iterate_base(g, w, 1))
            zs.append(z)
    return zs


def _g_power(g: BaseMap, w: complex, k: int) -> complex:
    return complex(iterate_base(g, w, k))


# ---------------------------------------------------------------------------
# stage 0
# ---------------------------------------------------------------------------


def init_stage0(delta: float, g: BaseMap | None = None) -> StageState:
    """w_0 = delta_g/2, h_0 the constant -x_1/w_0, delta_0 = 1/2.

    The one-step orbit is then exact: f(x_0) + w_0 h_0 = x_1 - x_1 = 0, and
    property (4) holds with margin 0 because h_0 + x_1/g^0(w_0) vanishes
    identically.
    """
    if not 0 < delta <= 0.1:
        raise ValueError("delta must lie in (0, 1/10]")
    g = g or default_base_map()
    x0 = choose_x0(delta)
    xs = fiber_orbit(x0, 1)
    w0 = g.delta_g / 2.0
    h0 = PolynomialApproximant(
        coeffs=(complex(-xs[1] / w0),), degree=0, center=0j, scale=1.0,
        per_set_error=(0.0,), fit_residual=(0.0,), stable=True,
    )
    D0 = CompactSet.disk(complex(x0), 4 * delta)
    report = StageReport(
        k=0,
        prop1_ok=0 < abs(w0) < min(1.0, g.delta_g),
        prop2_ok=True,  # delta_0 = 1/2
        prop3_margin=0.0,
        prop4_margin=float(np.max(np.abs(h0.eval(D0.boundary_points(256)) + xs[1] / w0))),
        prop5_margin=None,
        eps_k=0.25,
        prop6_delta_probe=(),
        prop6_certified=True,
        amplification_bound=0.0,
        sandwich_ok=True,
        fit_degree=0,
        fit_error=0.0,
        required_dynamic_range=abs(xs[1] / w0),
        delta=delta,
    )
    return StageState(
        k=0, h_k=h0, w_k=complex(w0), delta_k=0.5, eps_k=0.25,
        x_orbit=tuple(xs), D_sets=(D0,), H_set=None, report=report,
    )


# ---------------------------------------------------------------------------
# stage k > 0
# ---------------------------------------------------------------------------


def choose_w_k(prev: StageState, delta: float, g: BaseMap | None = None) -> complex:
    """Largest w on the halving grid below min(1/(k+1), delta_g)/2 whose
    k-step orbit under F_{h_{k-1}} stays within delta - delta/10 of the
    fiber orbit at every step.

    As w -> 0 the orbit converges to the fiber orbit, so the scan
    terminates for any evaluable h_{k-1}; hitting the precision floor first
    means extended precision is needed.
    """
    g = g or default_base_map()
    k = prev.k + 1
    xs = fiber_orbit(prev.x_orbit[0], k)
    w = 0.5 * min(1.0 / (k + 1), g.delta_g)
    tol = delta - delta / 10.0
    while True:
        zs = _orbit_z(prev.h_k, g, xs[0], w, k)
        ok = all(
            math.isfinite(z.real) and math.isfinite(z.imag) and _safe_abs(z - xs[j]) <= tol
            for j, z in enumerate(zs)
        )
        if ok:
            return complex(w)
        w *= 0.5
        if w < 1e-300:
            raise RangeOverflowError(
                f"w_{k} fell below the binary64 floor; rerun with extended precision"
            )


def _lipschitz_on_disk(h: PolynomialApproximant, disk: CompactSet, n: int = 128) -> float:
    """Sampled max of |h'| on the disk boundary (maximum principle again)."""
    dc = tuple((j * complex(c)) / h.scale for j, c in enumerate(h.coeffs) if j > 0)
    if not dc:
        return 0.0
    z = disk.boundary_points(n)
    return float(np.max(np.abs(_eval_poly(dc, h.center, h.scale, z))))


def _sample_H(H: CompactSet, k: int, seed: int) -> np.ndarray:
    """Boundary grid of 64(k+1) points plus 512 seeded interior points."""
    bpts = H.boundary_points(64 * (k + 1), phase=0.0)
    rng = np.random.default_rng(seed)
    xi = H.x_min + rng.random(512) * (H.x_max - H.x_min)
    yi = -H.y_abs + rng.random(512) * (2 * H.y_abs)
    return np.concatenate([bpts, xi + 1j * yi])


def choose_delta_k(
    prev: StageState,
    w_k: complex,
    delta: float,
    g: BaseMap | None = None,
    seed: int = 42,
    probes: int = 8,
    max_halvings: int = 40,
) -> tuple:
    """First-order amplification bound for property (6) plus probe validation.

    A perturbation of h_{k-1} by at most delta_k on H_k shifts z_{j+1} by at
    most |g^j(w_k)| delta_k amplified through the remaining steps by factors
    1 + e^{-Re z_i} + |g^i(w_k)| Lip_i (the z-derivative of one step along
    the orbit).  delta_k = min(1/2, delta/(4A)) leaves a 4x safety margin,
    then random degree-<=5 polynomial probes scaled to sup norm delta_k on
    H_k must actually keep the k-step deviation below delta; failures halve
    delta_k and re-probe.

    Returns (delta_k, A, probe_deviations, certified).
    """
    g = g or default_base_map()
    k = prev.k + 1
    x0 = prev.x_orbit[0]
    zs = _orbit_z(prev.h_k, g, x0, w_k, k - 1) if k > 1 else [complex(x0)]
    H_k = CompactSet.rect(-float(k), x0 + k - 0.5, float(k + 1))
    D_all = list(prev.D_sets)

    A = 0.0
    for j in range(k):
        term = abs(_g_power(g, w_k, j))
        for i in range(j + 1, k):
            zi = zs[i] if i < len(zs) else zs[-1]
            lip = _lipschitz_on_disk(prev.h_k, D_all[i]) if i < len(D_all) else 0.0
            term *= 1.0 + math.exp(-min(zi.real, 700.0)) + abs(_g_power(g, w_k, i)) * lip
        A += term
    if not math.isfinite(A):
        raise RangeOverflowError("amplification bound overflowed; rerun with extended precision")

    delta_k = min(0.5, delta / (4.0 * A)) if A > 0 else 0.5
    rng = np.random.default_rng(seed + 7919 * k)
    Hpts = _sample_H(H_k, k, seed + 7919 * k + 1)
    base_orbit = _orbit_z(prev.h_k, g, x0, w_k, k)

    probe_polys = []
    for _ in range(probes):
        deg = int(rng.integers(0, 6))
        raw = rng.standard_normal(deg + 1) + 1j * rng.standard_normal(deg + 1)
        probe_polys.append(raw)

    center, scale = complex(x0 + 0.25 * k, 0.0), max(H_k.x_max - H_k.x_min, 2 * H_k.y_abs) / 2

    for _ in range(max_halvings):
        devs = []
        ok = True
        for raw in probe_polys:
            sup = float(np.max(np.abs(_eval_poly(tuple(raw), center, scale, Hpts))))
            p = tuple(c * (delta_k / sup) for c in raw)
            perturbed = PolynomialApproximant(
                coeffs=p, degree=len(p) - 1, center=center, scale=scale,
                per_set_error=(), fit_residual=(), stable=True,
            )

            def h_tilde_eval(z, base=prev.h_k, pp=perturbed):
                return base.eval(z) + pp.eval(z)

            zt = complex(x0)
            w = complex(w_k)
            good = True
            with np.errstate(over="ignore", invalid="ignore"):
                for _step in range(k):
                    zt = zt + 1.0 + complex(np.exp(-zt)) + w * complex(h_tilde_eval(zt))
                    w = complex(iterate_base(g, w, 1))
                    if not (math.isfinite(zt.real) and math.isfinite(zt.imag)):
                        good = False
                        break
            dev = _safe_abs(zt - base_orbit[k]) if good else math.inf
            devs.append(dev)
            if not dev < delta:
                ok = False
        if ok:
            return delta_k, A, tuple(devs), True
        delta_k *= 0.5
    return delta_k, A, tuple(devs), False


def build_stage_k(
    prev: StageState,
    w_k: complex,
    delta_k: float,
    delta: float,
    g: BaseMap | None = None,
    prec: PrecisionConfig = STANDARD,
    max_degree: int = 256,
    seed: int = 42,
    prop6_info: tuple | None = None,
) -> StageState:
    """Fit h_k to (h_{k-1} on H_k, -x_{k+1}/g^k(w_k) on D_k) within eps_k and
    verify the six properties.

    Raises StageFailure (carrying the best approximant and the required
    dynamic range |x_{k+1}/g^k(w_k)|) when the budget is unreachable within
    the degree limit.
    """
    g = g or default_base_map()
    k = prev.k + 1
    x0 = prev.x_orbit[0]
    xs = fiber_orbit(x0, k + 1)
    D_k = CompactSet.disk(complex(x0 + k), 4 * delta)
    H_k = CompactSet.rect(-float(k), x0 + k - 0.5, float(k + 1))
    deltas = _collect_deltas(prev) + (delta_k,)
    eps_k = 2.0 ** (-(k + 1)) * min(deltas)

    gk = _g_power(g, w_k, k)
    if gk == 0:
        raise RangeOverflowError(f"g^{k}(w_{k}) underflowed to zero; extended precision required")
    c_k = -xs[k + 1] / gk
    required_range = abs(c_k)

    union = CompactSetUnion(
        sets=(H_k, D_k),
        targets=(
            TargetSpec.poly(prev.h_k.coeffs, prev.h_k.center, prev.h_k.scale),
            TargetSpec.const(c_k),
        ),
    )
    try:
        best, achieved = fit_auto(union, tol=eps_k * (1 - 1e-9), max_degree=max_degree, prec=prec)
    except ConditioningError as exc:
        raise StageFailure(k, {"why": str(exc), "eps_k": eps_k,
                               "required_dynamic_range": required_range}) from exc

    probe_devs, certified, A = (), True, 0.0
    if prop6_info is not None:
        A, probe_devs, certified = prop6_info

    report = _stage_report(
        k, best, prev, w_k, delta_k, eps_k, xs, D_k, H_k, g, delta,
        required_range, A, probe_devs, certified, seed,
    )
    state = StageState(
        k=k, h_k=best, w_k=complex(w_k), delta_k=delta_k, eps_k=eps_k,
        x_orbit=tuple(xs), D_sets=prev.D_sets + (D_k,), H_set=H_k, report=report,
    )
    if not achieved:
        report.failure = (
            f"fit stalled at certified error {best.error:.3g} > eps_{k} = {eps_k:.3g} "
            f"(degree {best.degree}); required dynamic range {required_range:.3g}"
        )
        raise StageFailure(
            k,
            {"eps_k": eps_k, "best_error": best.error, "best_degree": best.degree,
             "required_dynamic_range": required_range},
            best=best,
        )
    return state


def _collect_deltas(state: StageState) -> tuple:
    # deltas are accumulated forward by the pipeline and stashed on the
    # state; a state used standalone only knows its own delta_k
    ds = getattr(state, "_deltas", None)
    if ds is not None:
        return tuple(ds)
    return (state.delta_k,)


def _stage_report(
    k, h_k, prev, w_k, delta_k, eps_k, xs, D_k, H_k, g, delta,
    required_range, A, probe_devs, certified, seed,
) -> StageReport:
    orbit = _orbit_z(h_k, g, xs[0], w_k, k)
    prop3 = _safe_abs(orbit[k] - xs[k])
    d_dense = D_k.boundary_points(1000, phase=0.23)
    prop4 = float(np.max(np.abs(h_k.eval(d_dense) - (-xs[k + 1] / _g_power(g, w_k, k)))))
    Hpts = _sample_H(H_k, k, seed + 104729 * k)
    prop5 = float(np.max(np.abs(h_k.eval(Hpts) - prev.h_k.eval(Hpts))))
    sandwich = all(
        _safe_abs(orbit[j] - (xs[0] + j)) <= 4 * delta for j in range(k + 1)
    )
    return StageReport(
        k=k,
        prop1_ok=0 < abs(w_k) < min(1.0 / (k + 1), g.delta_g),
        prop2_ok=0 < delta_k < 1,
        prop3_margin=prop3,
        prop4_margin=prop4,
        prop5_margin=prop5,
        eps_k=eps_k,
        prop6_delta_probe=tuple(probe_devs),
        prop6_certified=certified,
        amplification_bound=A,
        sandwich_ok=sandwich,
        fit_degree=h_k.degree,
        fit_error=h_k.error,
        required_dynamic_range=required_range,
        delta=delta,
    )


# ---------------------------------------------------------------------------
# final return check and the pipeline
# ---------------------------------------------------------------------------


@dataclass
class ReturnReport:
    """verify_return outcome: per-n telescoping and return bounds."""

    K: int
    entries: list = field(default_factory=list)
    passed: bool = False

    def to_dict(self) -> dict:
        return {"kind": "return_report", "K": self.K, "entries": self.entries,
                "passed": self.passed}


def verify_return(stages: Sequence[StageState], K: int | None = None,
                  g: BaseMap | None = None, seed: int = 42) -> ReturnReport:
    """With h = h_K, check for each n < K: the telescoped closeness
    ||h_K - h_n|| < delta_{n+1} sampled on H_{n+1}, then the return bound
    |pi_z F_{h_K}^{n+1}(x_0, w_n)| <= 3 and ||(z, w)|| < 4.

    The step-(n+1) bound decomposes as |f(z_n) - x_{n+1}| (below 1 when the
    orbit tracked the fiber) plus |g^n(w_n) h_K(z_n) + x_{n+1}| (below 2 by
    the D_n sup bound); both terms are recorded per n.
    """
    g = g or default_base_map()
    K = K if K is not None else stages[-1].k
    hK = stages[K].h_k
    x0 = stages[0].x_orbit[0]
    rep = ReturnReport(K=K)
    all_ok = True
    for n in range(K):
        st_next = stages[n + 1]
        H = st_next.H_set
        Hpts = _sample_H(H, n + 1, seed + 15485863 * (n + 1))
        tele = float(np.max(np.abs(hK.eval(Hpts) - stages[n].h_k.eval(Hpts))))
        tele_ok = tele < st_next.delta_k

        w_n = stages[n].w_k
        zs = _orbit_z(hK, g, x0, w_n, n + 1)
        z_end = zs[n + 1]
        w_end = _g_power(g, w_n, n + 1)
        xs = stages[K].x_orbit
        z_n = zs[n]
        with np.errstate(over="ignore", invalid="ignore"):
            t1 = _safe_abs(z_n + 1.0 + complex(np.exp(-z_n)) - xs[n + 1])
            t2 = _safe_abs(_g_power(g, w_n, n) * complex(hK.eval(z_n)) + xs[n + 1])
        az = _safe_abs(z_end)
        ret_ok = az <= 3.0
        norm = math.hypot(az, _safe_abs(w_end)) if math.isfinite(az) else math.inf
        norm_ok = norm < 4.0
        entry = {
            "n": n,
            "telescoping": tele,
            "delta_next": st_next.delta_k,
            "telescoping_ok": tele_ok,
            "abs_z": az,
            "return_ok": ret_ok,
            "norm": norm,
            "norm_ok": norm_ok,
            "term_f_drift": t1,
            "term_disk_sup": t2,
        }
        rep.entries.append(entry)
        all_ok = all_ok and tele_ok and ret_ok and norm_ok
    rep.passed = all_ok
    return rep


@dataclass
class ConstructionResult:
    params: dict
    stages: list
    failures: list
    return_report: ReturnReport | None
    passed: bool

    def to_dict(self) -> dict:
        return {
            "kind": "construction",
            "params": self.params,
            "stages": [s.to_dict() for s in self.stages],
            "failures": self.failures,
            "return_report": self.return_report.to_dict() if self.return_report else None,
            "passed": self.passed,
        }


def run_construction(
    K: int = 5,
    delta: float = 0.1,
    g: BaseMap | None = None,
    keep_going: bool = False,
    prec: PrecisionConfig = STANDARD,
    max_degree: int = 256,
    seed: int = 42,
    out_dir: str | None = None,
) -> ConstructionResult:
    """Run stages 0..K and the final return verification.

    keep_going records StageFailure diagnostics and continues with the best
    polynomial the failed fit achieved, so downstream consumers (the return
    check, the contrast experiment, artifact writers) always receive K+1
    concrete stages; every degradation is visible in the per-stage reports.
    """
    g = g or default_base_map()
    params = {
        "K": K, "delta": delta, "seed": seed, "max_degree": max_degree,
        "prec": prec.mode if prec.mode == "standard" else f"extended:{prec.digits}",
        "g": {"variant": g.variant, "lam": [complex(g.lam).real, complex(g.lam).imag],
              "delta_g": g.delta_g},
    }
    stages = [init_stage0(delta, g)]
    deltas = [stages[0].delta_k]
    setattr(stages[0], "_deltas", tuple(deltas))
    failures: list = []

    for k in range(1, K + 1):
        prev = stages[-1]
        try:
            w_k = choose_w_k(prev, delta, g)
            dk, A, probe_devs, certified = choose_delta_k(prev, w_k, delta, g, seed=seed)
            if not certified:
                failures.append({"k": k, "why": "probe validation collapsed",
                                 "delta_k": dk, "amplification": A})
                if not keep_going:
                    raise StageFailure(k, failures[-1])
            state = build_stage_k(
                prev, w_k, dk, delta, g, prec=prec, max_degree=max_degree, seed=seed,
                prop6_info=(A, probe_devs, certified),
            )
        except StageFailure as exc:
            failures.append({"k": exc.k, **{k2: _jsonable(v) for k2, v in exc.diagnostic.items()}})
            if not keep_going or exc.best is None:
                raise
            xs = fiber_orbit(stages[0].x_orbit[0], k + 1)
            D_k = CompactSet.disk(complex(xs[0] + k), 4 * delta)
            H_k = CompactSet.rect(-float(k), xs[0] + k - 0.5, float(k + 1))
            eps_k = 2.0 ** (-(k + 1)) * min(deltas + [dk])
            report = _stage_report(
                k, exc.best, prev, w_k, dk, eps_k, xs, D_k, H_k, g, delta,
                exc.diagnostic.get("required_dynamic_range", math.inf),
                A, probe_devs, certified, seed,
            )
            report.failure = (
                f"fit stalled at certified error {exc.best.error:.6g} > eps_{k} = {eps_k:.6g}; "
                f"required dynamic range {exc.diagnostic.get('required_dynamic_range', 0):.6g}"
            )
            state = StageState(
                k=k, h_k=exc.best, w_k=complex(w_k), delta_k=dk, eps_k=eps_k,
                x_orbit=tuple(xs), D_sets=prev.D_sets + (D_k,), H_set=H_k, report=report,
            )
        except RangeOverflowError as exc:
            failures.append({"k": k, "why": str(exc)})
            raise
        deltas.append(state.delta_k)
        setattr(state, "_deltas", tuple(deltas))
        stages.append(state)

    return_report = verify_return(stages, K, g, seed=seed) if len(stages) == K + 1 else None
    passed = (
        all(s.report.passed for s in stages)
        and return_report is not None
        and return_report.passed
    )
    result = ConstructionResult(params, stages, failures, return_report, passed)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for s in stages:
            with open(os.path.join(out_dir, f"stage_{s.k}.json"), "w") as fh:
                fh.write(dump_json(s.to_dict()))
        with open(os.path.join(out_dir, "construction_report.json"), "w") as fh:
            fh.write(dump_json(result.to_dict()))
    return result


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def load_stages(dir_path: str, K: int, delta: float = 0.1) -> list:
    """Rebuild enough of each StageState from stage_k.json files to replay
    verify_return (h_k, w_k, delta_k, x_orbit, H_k geometry)."""
    import json

    stages = []
    for k in range(K + 1):
        with open(os.path.join(dir_path, f"stage_{k}.json")) as fh:
            doc = json.load(fh)
        hd = doc["h_k"]
        h = PolynomialApproximant(
            coeffs=tuple(complex(re, im) for re, im in hd["coeffs"]),
            degree=hd["degree"],
            center=complex(hd["basis"]["center"][0], hd["basis"]["center"][1]),
            scale=hd["basis"]["scale"],
            per_set_error=tuple(hd["per_set_error"]),
            fit_residual=(),
            stable=hd["stable"],
        )
        x_orbit = tuple(doc["x_orbit"])
        x0 = x_orbit[0]
        H = CompactSet.rect(-float(k), x0 + k - 0.5, float(k + 1)) if k > 0 else None
        D_sets = tuple(CompactSet.disk(complex(x0 + j), 4 * delta) for j in range(k + 1))
        rep = doc["report"]
        report = StageReport(
            k=k, prop1_ok=rep["prop1_ok"], prop2_ok=rep["prop2_ok"],
            prop3_margin=rep["prop3_margin"], prop4_margin=rep["prop4_margin"],
            prop5_margin=rep["prop5_margin"], eps_k=rep["eps_k"],
            prop6_delta_probe=tuple(rep["prop6_delta_probe"]),
            prop6_certified=rep["prop6_certified"],
            amplification_bound=rep["amplification_bound"],
            sandwich_ok=rep["sandwich_ok"], fit_degree=rep["fit_degree"],
            fit_error=rep["fit_error"],
            required_dynamic_range=rep["required_dynamic_range"],
            delta=rep["delta"], failure=rep["failure"],
        )
        stages.append(StageState(
            k=k, h_k=h, w_k=complex(doc["w_k"][0], doc["w_k"][1]),
            delta_k=doc["delta_k"], eps_k=doc["eps_k"], x_orbit=x_orbit,
            D_sets=D_sets, H_set=H, report=report,
        ))
    return stages
