"""Constructive polynomial approximation on disjoint compact sets.

Targets are piecewise data: each compact set in a union carries its own
holomorphic target (a constant or a polynomial), and fit() produces one
polynomial close to all of them simultaneously in sup norm.  Because the
error p - target is holomorphic on each set, the maximum principle lets
boundary sampling certify the sup over the whole set.

The basis is scaled-centered monomials ((z - z_c)/s)^j with z_c, s from the
union's bounding box; raw monomials are hopelessly ill-conditioned on sets
of diameter much larger than 1.  The least-squares solve is numpy's SVD
lstsq under column equilibration (rank-revealing, equivalent in behavior to
column-pivoted QR for this use) in standard precision, and a
twice-reorthogonalized Gram-Schmidt QR over gmpy2 in extended precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import STANDARD, NumericContext, Perturbation, PrecisionConfig, context_for


class ConditioningError(ValueError):
    """Least-squares system numerically rank deficient at this degree."""


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompactSet:
    """A closed disk or a closed axis-aligned rectangle symmetric about R.

    Disk(center, radius); Rect(x_min, x_max, y_abs) = [x_min, x_max] x
    [-y_abs, y_abs].
    """

    variant: str
    center: complex = 0j
    radius: float = 0.0
    x_min: float = 0.0
    x_max: float = 0.0
    y_abs: float = 0.0

    def __post_init__(self) -> None:
        if self.variant == "disk":
            if self.radius <= 0:
                raise ValueError("disk radius must be positive")
        elif self.variant == "rect":
            if not self.x_min < self.x_max:
                raise ValueError("need x_min < x_max")
            if self.y_abs <= 0:
                raise ValueError("y_abs must be positive")
        else:
            raise ValueError(f"unknown compact set variant {self.variant!r}")

    @staticmethod
    def disk(center: complex, radius: float) -> "CompactSet":
        return CompactSet("disk", center=complex(center), radius=float(radius))

    @staticmethod
    def rect(x_min: float, x_max: float, y_abs: float) -> "CompactSet":
        return CompactSet("rect", x_min=float(x_min), x_max=float(x_max), y_abs=float(y_abs))

    def bbox(self) -> tuple:
        if self.variant == "disk":
            c, r = complex(self.center), self.radius
            return (c.real - r, c.real + r, c.imag - r, c.imag + r)
        return (self.x_min, self.x_max, -self.y_abs, self.y_abs)

    def boundary_points(self, n: int, phase: float = 0.0) -> np.ndarray:
        """n boundary points uniform in arclength; phase in [0,1) rotates the
        sample positions along the boundary (fresh resamples use a nonzero
        phase so certification never reuses fit nodes)."""
        t = (np.arange(n) + 0.5 + phase) / n
        if self.variant == "disk":
            return complex(self.center) + self.radius * np.exp(2j * np.pi * t)
        w, h = self.x_max - self.x_min, 2 * self.y_abs
        P = 2 * (w + h)
        s = t * P
        pts = np.empty(n, dtype=complex)
        # walk edges: bottom (left to right), right (up), top (right to left), left (down)
        e0, e1, e2 = w, w + h, 2 * w + h
        m = s < e0
        pts[m] = self.x_min + s[m] - 1j * self.y_abs
        m = (s >= e0) & (s < e1)
        pts[m] = self.x_max + 1j * (s[m] - e0 - self.y_abs)
        m = (s >= e1) & (s < e2)
        pts[m] = self.x_max - (s[m] - e1) + 1j * self.y_abs
        m = s >= e2
        pts[m] = self.x_min + 1j * (self.y_abs - (s[m] - e2))
        return pts

    def distance_to(self, other: "CompactSet") -> float:
        """Conservative set distance from centers and boxes (exact for
        disk-disk, box separation otherwise)."""
        if self.variant == "disk" and other.variant == "disk":
            return abs(complex(self.center) - complex(other.center)) - self.radius - other.radius
        ax0, ax1, ay0, ay1 = self.bbox()
        bx0, bx1, by0, by1 = other.bbox()
        dx = max(bx0 - ax1, ax0 - bx1, 0.0)
        dy = max(by0 - ay1, ay0 - by1, 0.0)
        box_gap = math.hypot(dx, dy)
        if self.variant == "disk" or other.variant == "disk":
            # box distance underestimates disk separation only through corners;
            # refine disk-rect with the exact point-box distance
            if self.variant == "disk" and other.variant == "rect":
                disk, rect = self, other
            elif self.variant == "rect" and other.variant == "disk":
                disk, rect = other, self
            else:
                return box_gap
            c = complex(disk.center)
            px = min(max(c.real, rect.x_min), rect.x_max)
            py = min(max(c.imag, -rect.y_abs), rect.y_abs)
            return math.hypot(c.real - px, c.imag - py) - disk.radius
        return box_gap


@dataclass(frozen=True)
class TargetSpec:
    """Per-set holomorphic target: a constant or a polynomial (optionally in
    a scaled-centered basis of its own)."""

    variant: str
    value: complex = 0j
    coeffs: tuple = ()
    center: complex = 0j
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.variant not in ("const", "poly"):
            raise ValueError(f"unknown target variant {self.variant!r}")
        if self.variant == "poly" and not self.coeffs:
            raise ValueError("polynomial target needs coefficients")
        if self.scale <= 0:
            raise ValueError("target scale must be positive")

    @staticmethod
    def const(value: complex) -> "TargetSpec":
        return TargetSpec("const", value=complex(value))

    @staticmethod
    def poly(coeffs, center: complex = 0j, scale: float = 1.0) -> "TargetSpec":
        return TargetSpec("poly", coeffs=tuple(complex(c) for c in coeffs),
                          center=complex(center), scale=float(scale))

    def eval(self, z: np.ndarray) -> np.ndarray:
        if self.variant == "const":
            return np.full(np.shape(z), complex(self.value), dtype=complex)
        u = (np.asarray(z, dtype=complex) - complex(self.center)) / self.scale
        acc = np.zeros_like(u)
        for c in reversed(self.coeffs):
            acc = acc * u + c
        return acc


@dataclass(frozen=True)
class CompactSetUnion:
    """Pairwise-disjoint compact sets with per-set targets.

    Finitely many disjoint disks and rectangles always leave the complement
    connected, which is what makes one polynomial for all targets possible;
    that fact is assumed, only disjointness is checked.
    """

    sets: tuple
    targets: tuple

    def __post_init__(self) -> None:
        if not self.sets:
            raise ValueError("union must contain at least one set")
        if len(self.sets) != len(self.targets):
            raise ValueError("one target per set required")
        for i in range(len(self.sets)):
            for j in range(i + 1, len(self.sets)):
                d = self.sets[i].distance_to(self.sets[j])
                if d <= 0:
                    raise ValueError(f"sets {i} and {j} are not disjoint (distance {d:.3g})")

    def basis_frame(self) -> tuple:
        """(center, scale) from the union bounding box."""
        xs0, xs1, ys0, ys1 = zip(*(s.bbox() for s in self.sets))
        x0, x1, y0, y1 = min(xs0), max(xs1), min(ys0), max(ys1)
        center = complex((x0 + x1) / 2, (y0 + y1) / 2)
        scale = max((x1 - x0) / 2, (y1 - y0) / 2, 1e-9)
        return center, scale


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


@dataclass
class PolynomialApproximant:
    """Polynomial in the scaled basis ((z - center)/scale)^j with certified
    sampled sup errors per set."""

    coeffs: tuple
    degree: int
    center: complex
    scale: float
    per_set_error: tuple
    fit_residual: tuple  # per-set sup error on the fit nodes themselves
    stable: bool
    prec_mode: str = "standard"
    rank: int = -1  # numerical rank of the fit system (-1: not recorded)

    def eval(self, z) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            u = (np.asarray(z, dtype=complex) - complex(self.center)) / self.scale
            acc = np.zeros_like(u)
            for c in reversed(self.coeffs):
                acc = acc * u + complex(c)
        return acc

    @property
    def error(self) -> float:
        return max(self.per_set_error)

    def raw_coeffs(self) -> tuple:
        """Coefficients in plain monomials z^j (ascending).  The expansion
        loses accuracy rapidly with degree; refuse past 64."""
        if self.degree > 64:
            raise ValueError("raw monomial expansion unstable past degree 64")
        base = np.array([-complex(self.center) / self.scale, 1.0 / self.scale])
        acc = np.array([complex(self.coeffs[-1])])
        for c in reversed(self.coeffs[:-1]):
            acc = np.convolve(acc, base)
            acc[0] += complex(c)
        return tuple(acc)

    def to_perturbation(self) -> Perturbation:
        return Perturbation("poly_z", coeffs=tuple(complex(c) for c in self.coeffs),
                            center=complex(self.center), scale=float(self.scale))

    def to_dict(self) -> dict:
        return {
            "kind": "approximant",
            "degree": self.degree,
            "basis": {"center": [complex(self.center).real, complex(self.center).imag],
                      "scale": self.scale},
            "coeffs": [[complex(c).real, complex(c).imag] for c in self.coeffs],
            "per_set_error": list(self.per_set_error),
            "stable": self.stable,
            "prec_mode": self.prec_mode,
        }


def _vander(u: np.ndarray, degree: int) -> np.ndarray:
    return u[:, None] ** np.arange(degree + 1)[None, :]


def _lstsq_standard(A: np.ndarray, b: np.ndarray, degree: int) -> tuple:
    """Equilibrated SVD least squares.  Mild rank deficiency is expected at
    high degree (trailing basis directions fall below machine noise) and the
    truncated minimum-norm solution is exactly the rank-revealing answer;
    only a severe collapse (rank below a quarter of the columns) means the
    basis or degree is wrong for the geometry."""
    colscale = np.max(np.abs(A), axis=0)
    if np.any(colscale == 0):
        raise ConditioningError("zero basis column; reduce degree")
    As = A / colscale
    sol, _, rank, _ = np.linalg.lstsq(As, b, rcond=None)
    if rank < max(1, (degree + 1) // 4):
        raise ConditioningError(
            f"rank {rank} of {degree + 1} columns: system numerically singular; "
            "reduce degree or recenter/rescale the basis"
        )
    return sol / colscale, int(rank)


def _lstsq_extended(A_rows: list, b: list, degree: int, ctx: NumericContext):
    """Least squares via classical Gram-Schmidt with reorthogonalization,
    entirely in gmpy2 arithmetic.  Cost grows as rows * degree^2; intended
    for moderate degrees where binary64 conditioning is the blocker."""
    import gmpy2

    n = degree + 1
    with ctx.guard():
        cols = [[ctx.complex_(row[j]) for row in A_rows] for j in range(n)]
        rhs = [ctx.complex_(v) for v in b]
        m = len(rhs)
        Q: list = []
        R = [[gmpy2.mpc(0) for _ in range(n)] for _ in range(n)]
        for j in range(n):
            v = cols[j][:]
            for _pass in range(2):
                for i in range(len(Q)):
                    s = gmpy2.mpc(0)
                    qi = Q[i]
                    for t in range(m):
                        s += gmpy2.mpc(qi[t].real, -qi[t].imag) * v[t]
                    R[i][j] += s
                    for t in range(m):
                        v[t] -= s * qi[t]
            nrm = gmpy2.sqrt(sum((v[t].real**2 + v[t].imag**2) for t in range(m)))
            if nrm == 0 or not gmpy2.is_finite(nrm):
                raise ConditioningError("extended QR broke down; reduce degree")
            R[j][j] = nrm
            Q.append([v[t] / nrm for t in range(m)])
        # back substitution on R c = Q^* b
        qb = []
        for i in range(n):
            s = gmpy2.mpc(0)
            qi = Q[i]
            for t in range(m):
                s += gmpy2.mpc(qi[t].real, -qi[t].imag) * rhs[t]
            qb.append(s)
        c = [gmpy2.mpc(0)] * n
        for i in range(n - 1, -1, -1):
            s = qb[i]
            for j in range(i + 1, n):
                s -= R[i][j] * c[j]
            c[i] = s / R[i][i]
        return [complex(ci) for ci in c]


def fit(
    union: CompactSetUnion,
    degree: int,
    fit_samples: int | None = None,
    prec: PrecisionConfig = STANDARD,
) -> PolynomialApproximant:
    """Least-squares polynomial matching every per-set target on boundary
    samples, certified on an independent 8x denser phase-shifted resample.

    fit_samples is per set and must be >= 4*(degree+1) (default exactly
    that, floored at 64).  The returned approximant is marked unstable when
    the certification pass exceeds twice the fit-node residual, which is the
    symptom of fitting the sample set rather than the function.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    n_fit = fit_samples if fit_samples is not None else max(4 * (degree + 1), 64)
    if n_fit < 4 * (degree + 1):
        raise ValueError(f"fit_samples must be >= 4*(degree+1) = {4 * (degree + 1)}")

    center, scale = union.basis_frame()
    zs = [s.boundary_points(n_fit) for s in union.sets]
    z_all = np.concatenate(zs)
    b_all = np.concatenate([t.eval(z) for t, z in zip(union.targets, zs)])
    u = (z_all - center) / scale
    A = _vander(u, degree)

    if prec.mode == "standard":
        sol, rank = _lstsq_standard(A, b_all, degree)
        coeffs = tuple(sol)
    else:
        ctx = context_for(prec)
        coeffs = tuple(_lstsq_extended(A.tolist(), b_all.tolist(), degree, ctx))
        rank = degree + 1  # CGS2 breakdown would have raised

    approx = PolynomialApproximant(
        coeffs=coeffs, degree=degree, center=center, scale=scale,
        per_set_error=(), fit_residual=(), stable=True, prec_mode=prec.mode,
        rank=rank,
    )
    fit_res = []
    off = 0
    for z in zs:
        r = float(np.max(np.abs(approx.eval(z) - b_all[off:off + len(z)])))
        fit_res.append(r)
        off += len(z)
    approx.fit_residual = tuple(fit_res)
    cert = sup_error(approx, union, dense_samples=max(8 * n_fit, 1000), phase=0.37)
    approx.per_set_error = tuple(cert)
    approx.stable = all(
        c <= 2.0 * f + 1e-14 for c, f in zip(cert, fit_res)
    )
    return approx


def sup_error(
    p: PolynomialApproximant,
    union: CompactSetUnion,
    dense_samples: int = 1000,
    phase: float = 0.11,
) -> list:
    """Per-set sup of |p - target| on a fresh boundary resample (>= 1000
    points per set).  Refreshes the approximant's certificate in place and
    re-evaluates its stability flag."""
    if dense_samples < 1000:
        raise ValueError("dense_samples must be >= 1000 per set")
    errs = []
    for s, t in zip(union.sets, union.targets):
        z = s.boundary_points(dense_samples, phase=phase)
        errs.append(float(np.max(np.abs(p.eval(z) - t.eval(z)))))
    p.per_set_error = tuple(errs)
    if p.fit_residual:
        p.stable = all(c <= 2.0 * f + 1e-14 for c, f in zip(errs, p.fit_residual))
    return errs


def fit_auto(
    union: CompactSetUnion,
    tol: float,
    max_degree: int = 256,
    start_degree: int = 8,
    prec: PrecisionConfig = STANDARD,
) -> tuple:
    """Double the degree until the certified error reaches tol or degrees or
    conditioning run out.  Returns (best approximant, achieved flag); the
    best approximant is kept even on failure so callers can report how close
    the fit came."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    best: PolynomialApproximant | None = None
    degree = start_degree
    while degree <= max_degree:
        try:
            cand = fit(union, degree, prec=prec)
        except ConditioningError:
            break
        if best is None or cand.error < best.error:
            best = cand
        if cand.error <= tol:
            return cand, True
        degree *= 2
    if best is None:
        raise ConditioningError(f"no fit possible up to degree {max_degree}")
    return best, False
