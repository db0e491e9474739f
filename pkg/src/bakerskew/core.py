"""Scalar arithmetic and map families for skew products F(z, w) = (f(z) + w*h(z, w), g(w)).

The fiber map is f(z) = z + a + e^(-z) with Re(a) > 0; the base map g fixes
0 with an attracting (or super-attracting) multiplier, so {w = 0} is an
invariant fiber on which F restricts to f.

Two scalar backends are available, selected by PrecisionConfig:

  standard   native binary64 complex arithmetic (cmath)
  extended   gmpy2 mpc/mpfr at a configurable decimal digit count

Every evaluation routine is generic over the backend: it accepts plain
Python numbers or gmpy2 scalars and computes at the precision of the
context it is handed.  Arithmetic that leaves the representable range
raises RangeOverflowError instead of propagating Inf/NaN; downstream
certificates must never be assembled from non-finite values.
"""

from __future__ import annotations

import cmath
import contextlib
import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import gmpy2


class RangeOverflowError(ArithmeticError):
    """A map evaluation left the representable range of the active scalar."""


# ---------------------------------------------------------------------------
# precision contexts
# ---------------------------------------------------------------------------

_LOG2_10 = 3.321928094887362


@dataclass(frozen=True)
class PrecisionConfig:
    """Scalar precision selector.

    mode    "standard" (binary64) or "extended" (gmpy2 software floats)
    digits  decimal digits for extended mode; >= 16 always
    """

    mode: str = "standard"
    digits: int = 16

    def __post_init__(self) -> None:
        if self.mode not in ("standard", "extended"):
            raise ValueError(f"unknown precision mode {self.mode!r}")
        if self.digits < 16:
            raise ValueError("digits must be >= 16")

    @classmethod
    def parse(cls, text: str) -> "PrecisionConfig":
        """Parse "standard" or "extended:<digits>"."""
        if text == "standard":
            return cls("standard")
        if text == "extended":
            return cls("extended", 32)
        if text.startswith("extended:"):
            return cls("extended", int(text.split(":", 1)[1]))
        raise ValueError(f"cannot parse precision {text!r}")

    @property
    def bits(self) -> int:
        return int(self.digits * _LOG2_10) + 8


STANDARD = PrecisionConfig()


class NumericContext:
    """Uniform scalar operations over the configured backend.

    Extended-mode arithmetic written with Python operators picks up the
    gmpy2 context that is active on the current thread, so any code doing
    multi-step arithmetic on extended scalars must run inside
    ``with ctx.guard():``.  The eval_* functions in this module do that;
    callers composing their own formulas from lifted scalars must do the
    same.
    """

    def __init__(self, cfg: PrecisionConfig = STANDARD) -> None:
        self.cfg = cfg
        self.extended = cfg.mode == "extended"

    def guard(self):
        """Context manager activating this precision for operator arithmetic."""
        if self.extended:
            return gmpy2.context(precision=self.cfg.bits)
        return contextlib.nullcontext()

    # -- construction (call under guard() in extended mode) -----------------

    def complex_(self, re: Any, im: Any = 0) -> Any:
        return gmpy2.mpc(re, im) if self.extended else complex(re, im)

    def real_(self, x: Any) -> Any:
        return gmpy2.mpfr(x) if self.extended else float(x)

    def lift(self, z: Any) -> Any:
        """Bring a number into this backend (lossless from binary64)."""
        if self.extended:
            if isinstance(z, (complex, gmpy2.mpc)):
                return gmpy2.mpc(z)
            return gmpy2.mpfr(z)
        if isinstance(z, gmpy2.mpc):
            return complex(z)
        if isinstance(z, gmpy2.mpfr):
            return float(z)
        return z

    # -- elementary functions ------------------------------------------------

    def exp(self, z: Any) -> Any:
        if self.extended:
            out = gmpy2.exp(z)
        else:
            try:
                out = cmath.exp(z) if isinstance(z, complex) else math.exp(z)
            except OverflowError as exc:
                raise RangeOverflowError("exp overflow") from exc
        self.require_finite(out, "exp")
        return out

    def log(self, z: Any) -> Any:
        if self.extended:
            return gmpy2.log(z)
        return cmath.log(z) if isinstance(z, complex) else math.log(z)

    # -- predicates ------------------------------------------------------------

    @staticmethod
    def is_finite(z: Any) -> bool:
        if isinstance(z, (gmpy2.mpc, gmpy2.mpfr)):
            return bool(gmpy2.is_finite(z))
        if isinstance(z, complex):
            return cmath.isfinite(z)
        return math.isfinite(z)

    def require_finite(self, z: Any, what: str) -> Any:
        if not self.is_finite(z):
            raise RangeOverflowError(f"{what} produced a non-finite value")
        return z


_STD_CTX = NumericContext(STANDARD)


def context_for(prec: PrecisionConfig | None) -> NumericContext:
    if prec is None or prec.mode == "standard":
        return _STD_CTX
    return NumericContext(prec)


# ---------------------------------------------------------------------------
# map families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FatouMap:
    """f(z) = z + a + e^(-z) with Re(a) > 0."""

    a: complex

    def __post_init__(self) -> None:
        a = complex(self.a)
        if not cmath.isfinite(a):
            raise ValueError("a must be finite")
        if a.real <= 0:
            raise ValueError(f"Re(a) must be positive, got {a.real}")
        object.__setattr__(self, "a", a)


@dataclass(frozen=True)
class BaseMap:
    """Base map g with attracting fixed point 0.

    variant   "linear"  g(w) = lam * w, 0 < |lam| < 1
              "poly"    g(w) = attracting polynomial, coeffs ascending,
                        coeffs[0] = 0 and |coeffs[1]| < 1
              "super"   g(w) = w^d * q(w), d >= 2, q(0) != 0
    delta_g   radius of a disk inside the immediate attracting basin
    alpha     contraction bound: |g(w)| <= alpha * |w| expected on |w| <= delta_g
    """

    variant: str
    lam: complex = 0j
    coeffs: tuple = ()
    d: int = 0
    q_coeffs: tuple = ()
    delta_g: float = 1.0
    alpha: float = 0.0

    def __post_init__(self) -> None:
        if self.delta_g <= 0:
            raise ValueError("delta_g must be positive")
        if self.variant == "linear":
            if not (0 < abs(self.lam) < 1):
                raise ValueError("linear multiplier needs 0 < |lam| < 1")
            if self.alpha == 0.0:
                object.__setattr__(self, "alpha", abs(self.lam))
        elif self.variant == "poly":
            if not self.coeffs or self.coeffs[0] != 0:
                raise ValueError("poly variant needs coeffs with p(0) = 0")
            if len(self.coeffs) < 2 or not abs(self.coeffs[1]) < 1:
                raise ValueError("poly variant needs |p'(0)| < 1")
        elif self.variant == "super":
            if self.d < 2:
                raise ValueError("super variant needs d >= 2")
            if not self.q_coeffs or self.q_coeffs[0] == 0:
                raise ValueError("super variant needs q(0) != 0")
        else:
            raise ValueError(f"unknown base-map variant {self.variant!r}")
        if self.variant != "linear" and not (0 < self.alpha < 1):
            raise ValueError("alpha in (0,1) required for non-linear variants")

    def validate(self, samples: int = 1000, seed: int = 42) -> bool:
        """Sampled check of the basin contract |g(w)| <= |w| on |w| <= delta_g."""
        import random

        rng = random.Random(seed)
        for _ in range(samples):
            r = self.delta_g * math.sqrt(rng.random())
            t = 2 * math.pi * rng.random()
            w = complex(r * math.cos(t), r * math.sin(t))
            if abs(eval_base(self, w)) > abs(w) + 1e-15:
                return False
        return True


@dataclass(frozen=True)
class Perturbation:
    """The function h(z, w) multiplying w in the first coordinate.

    variant   "zero"     h = 0
              "poly_z"   polynomial in z: sum coeffs[j] * ((z - center)/scale)^j
              "poly_zw"  polynomial in z and w: matrix[i][j] * z^i * w^j
              "exp_k"    h = e^(z^k), k >= 1
              "poly_w"   polynomial in w alone (ascending coeffs)
    center, scale   affine basis for poly_z; identity (0, 1) by default.
    """

    variant: str
    coeffs: tuple = ()
    matrix: tuple = ()
    k: int = 0
    center: complex = 0j
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.variant not in ("zero", "poly_z", "poly_zw", "exp_k", "poly_w"):
            raise ValueError(f"unknown perturbation variant {self.variant!r}")
        if self.variant == "exp_k" and self.k < 1:
            raise ValueError("exponential family needs k >= 1")
        if self.variant in ("poly_z", "poly_w") and not self.coeffs:
            raise ValueError("polynomial variant needs coefficients")
        if self.variant == "poly_zw" and not self.matrix:
            raise ValueError("poly_zw variant needs a coefficient matrix")
        if self.scale <= 0:
            raise ValueError("scale must be positive")


ZERO_PERTURBATION = Perturbation("zero")


@dataclass(frozen=True)
class SkewProduct:
    """F(z, w) = (f(z) + w*h(z, w), g(w)); the fiber {w = 0} is invariant."""

    f: FatouMap
    h: Perturbation
    g: BaseMap


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _horner(coeffs: Sequence, x: Any, ctx: NumericContext) -> Any:
    """Nested multiplication from the highest degree down."""
    acc = ctx.complex_(0)
    for c in reversed(coeffs):
        acc = acc * x + ctx.lift(c)
    return acc


def eval_fatou(f: FatouMap, z: Any, prec: PrecisionConfig | None = None) -> Any:
    """f(z) = z + a + e^(-z); overflow of e^(-z) is signaled, not saturated."""
    ctx = context_for(prec)
    with ctx.guard():
        z = ctx.lift(z)
        out = z + ctx.lift(f.a) + ctx.exp(-z)
        return ctx.require_finite(out, "eval_fatou")


def eval_base(g: BaseMap, w: Any, prec: PrecisionConfig | None = None) -> Any:
    ctx = context_for(prec)
    with ctx.guard():
        w = ctx.lift(w)
        if g.variant == "linear":
            out = ctx.lift(g.lam) * w
        elif g.variant == "poly":
            out = _horner(g.coeffs, w, ctx)
        else:  # super: w^d * q(w)
            out = w**g.d * _horner(g.q_coeffs, w, ctx)
        return ctx.require_finite(out, "eval_base")


def iterate_base(g: BaseMap, w: Any, k: int, prec: PrecisionConfig | None = None) -> Any:
    """g^k(w)."""
    for _ in range(k):
        w = eval_base(g, w, prec)
    return w


def eval_perturbation(h: Perturbation, z: Any, w: Any, prec: PrecisionConfig | None = None) -> Any:
    ctx = context_for(prec)
    with ctx.guard():
        z = ctx.lift(z)
        if h.variant == "zero":
            return ctx.complex_(0)
        if h.variant == "poly_z":
            u = (z - ctx.lift(h.center)) / ctx.real_(h.scale)
            return ctx.require_finite(_horner(h.coeffs, u, ctx), "eval_perturbation")
        if h.variant == "poly_w":
            return ctx.require_finite(_horner(h.coeffs, ctx.lift(w), ctx), "eval_perturbation")
        if h.variant == "exp_k":
            return ctx.exp(z**h.k)
        # poly_zw: rows indexed by the z power, inner Horner over w
        w = ctx.lift(w)
        acc = ctx.complex_(0)
        for row in reversed(h.matrix):
            acc = acc * z + _horner(row, w, ctx)
        return ctx.require_finite(acc, "eval_perturbation")


def eval_skew(F: SkewProduct, p: tuple, prec: PrecisionConfig | None = None) -> tuple:
    """One step of F.  With w = 0 the first coordinate is exactly eval_fatou(f, z)
    and the second is exactly 0 (short-circuited, no rounding through h)."""
    z, w = p
    ctx = context_for(prec)
    if w == 0:
        with ctx.guard():
            zero = ctx.complex_(0)
        return (eval_fatou(F.f, z, prec), zero)
    fz = eval_fatou(F.f, z, prec)
    hz = eval_perturbation(F.h, z, w, prec)
    gw = eval_base(F.g, w, prec)
    with ctx.guard():
        z1 = fz + ctx.lift(w) * hz
        ctx.require_finite(z1, "eval_skew")
    return (z1, gw)


# ---------------------------------------------------------------------------
# JSON configuration
# ---------------------------------------------------------------------------


def _c(pair: Any) -> complex:
    if isinstance(pair, (int, float)):
        return complex(pair, 0.0)
    return complex(pair[0], pair[1])


def _pair(z: complex) -> list:
    z = complex(z)
    return [z.real, z.imag]


def skew_from_config(doc: dict) -> SkewProduct:
    """Build a SkewProduct from the JSON document

    {"fatou": {"a": [re, im]},
     "g": {"variant": "linear", "lambda": [re, im], "delta_g": r, "alpha": x},
     "h": {"variant": "poly_z", "coeffs": [[re, im], ...], "center": [re, im], "scale": s}}

    Coefficient lists are ascending-degree.  g variants: linear (lambda),
    poly (coeffs), super (d, q_coeffs).  h variants: zero, poly_z, poly_zw
    (coeffs as a matrix, rows indexed by the z power), exp_k (k), poly_w.
    """
    f = FatouMap(_c(doc["fatou"]["a"]))

    gd = doc.get("g", {"variant": "linear", "lambda": [0.5, 0.0]})
    variant = gd["variant"]
    delta_g = float(gd.get("delta_g", 1.0))
    alpha = float(gd.get("alpha", 0.0))
    if variant == "linear":
        g = BaseMap("linear", lam=_c(gd["lambda"]), delta_g=delta_g, alpha=alpha)
    elif variant == "poly":
        g = BaseMap("poly", coeffs=tuple(_c(c) for c in gd["coeffs"]), delta_g=delta_g, alpha=alpha)
    elif variant == "super":
        g = BaseMap("super", d=int(gd["d"]), q_coeffs=tuple(_c(c) for c in gd["q_coeffs"]),
                    delta_g=delta_g, alpha=alpha)
    else:
        raise ValueError(f"unknown g variant {variant!r}")

    hd = doc.get("h", {"variant": "zero"})
    hv = hd["variant"]
    if hv == "zero":
        h = ZERO_PERTURBATION
    elif hv in ("poly_z", "poly_w"):
        h = Perturbation(hv, coeffs=tuple(_c(c) for c in hd["coeffs"]),
                         center=_c(hd.get("center", [0.0, 0.0])),
                         scale=float(hd.get("scale", 1.0)))
    elif hv == "poly_zw":
        h = Perturbation("poly_zw", matrix=tuple(tuple(_c(c) for c in row) for row in hd["coeffs"]))
    elif hv == "exp_k":
        h = Perturbation("exp_k", k=int(hd["k"]))
    else:
        raise ValueError(f"unknown h variant {hv!r}")

    return SkewProduct(f, h, g)


def skew_to_config(F: SkewProduct) -> dict:
    gd: dict = {"variant": F.g.variant, "delta_g": F.g.delta_g, "alpha": F.g.alpha}
    if F.g.variant == "linear":
        gd["lambda"] = _pair(F.g.lam)
    elif F.g.variant == "poly":
        gd["coeffs"] = [_pair(c) for c in F.g.coeffs]
    else:
        gd["d"] = F.g.d
        gd["q_coeffs"] = [_pair(c) for c in F.g.q_coeffs]

    hd: dict = {"variant": F.h.variant}
    if F.h.variant in ("poly_z", "poly_w"):
        hd["coeffs"] = [_pair(c) for c in F.h.coeffs]
        hd["center"] = _pair(F.h.center)
        hd["scale"] = F.h.scale
    elif F.h.variant == "poly_zw":
        hd["coeffs"] = [[_pair(c) for c in row] for row in F.h.matrix]
    elif F.h.variant == "exp_k":
        hd["k"] = F.h.k

    return {"fatou": {"a": _pair(F.f.a)}, "g": gd, "h": hd}


# ---------------------------------------------------------------------------
# deterministic serialization helpers
# ---------------------------------------------------------------------------


def json_scalar(x: Any) -> Any:
    """Reduce a scalar to a JSON-stable form: floats stay floats (repr is
    shortest round-trip), extended scalars become decimal strings, complex
    becomes [re, im]."""
    if isinstance(x, gmpy2.mpfr):
        return str(x)
    if isinstance(x, gmpy2.mpc):
        return [str(x.real), str(x.imag)]
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _sanitize(obj: Any) -> Any:
    """Strict-JSON form: non-finite floats become their repr strings (the
    stdlib would emit bare Infinity/NaN tokens, which strict parsers
    reject), complex/extended scalars go through json_scalar."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    out = json_scalar(obj)
    if out is not obj:
        return _sanitize(out)
    return obj


def dump_json(obj: Any) -> str:
    """Canonical JSON: sorted keys, newline-terminated, no timestamps."""

    def default(x: Any) -> Any:
        out = json_scalar(x)
        if out is x and not isinstance(x, (int, float, str, bool, type(None), list, dict)):
            raise TypeError(f"cannot serialize {type(x)}")
        return out

    return json.dumps(_sanitize(obj), sort_keys=True, allow_nan=False, default=default) + "\n"
