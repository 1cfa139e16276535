"""Closed-form catalog of the sesquicommuting kernel families.

Every family is written as ``k(z) = r(z) + n(z)/d(z)`` with ``r, n, d``
entire and the zeros of ``d`` on [-2, 2] removable.  All evaluation goes
through :mod:`sesquiop.series` jets, so derivatives of any order come from
the same expressions as the values.  Within ``window(s)`` of a
removable point s the quotient is replaced by its degree-``TAYLOR_DEGREE``
expansion about that point.

Parameters on the imaginary axis are handled by plain complex arithmetic.
Zero parameters (gamma, mu, mu1, mu2) select the analytic limits through
``sinh(a z)/a -> z`` and ``sinh(2a)/a -> 2``.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field, replace
from math import factorial
from typing import Callable

import numpy as np

from . import series as S
from .series import Jet

SINGULAR_WINDOW = 1e-3
# z = +-2 sit a distance 2 from the nearest pole (z = +-4), so the series
# there stays exact on a wider window; the quotient just outside a 1e-3
# window would lose about seven digits in k''
EDGE_WINDOW = 2e-2
TAYLOR_DEGREE = 12
MAX_TAYLOR_ORDER = 30
DOMAIN_SLACK = 1e-12
SPECIAL_MATCH_TOL = 1e-12


class SpecError(ValueError):
    """Base class for kernel specification problems."""


class SpecParseError(SpecError):
    pass


class AxisViolation(SpecError):
    pass


class ZeroAlpha(SpecError):
    pass


class BadSpecialCase(SpecError):
    pass


class NonImaginaryTau(SpecError):
    pass


class InvalidParameter(SpecError):
    pass


class EvalOutOfDomain(ValueError):
    pass


class OrderTooLarge(ValueError):
    pass


class Family(str, enum.Enum):
    ITEM1 = "item1"
    ITEM2 = "item2"
    ITEM3 = "item3"
    REMARK_EXAMPLE = "remark_example"


@dataclass(frozen=True)
class KernelSpec:
    """Family selector plus parameters; the single source of truth for k, b, c.

    Parameters not used by ``family`` are ignored.  ``tau`` is the gauge
    exponent (purely imaginary), ``scale`` a real multiple of the kernel.
    """

    family: Family
    gamma: float = 1.0
    mu: complex = 1.0
    alpha: float = 1.0
    mu1: complex = 0.0
    mu2: complex = 0.0
    c0: complex = 0.0
    special_coeff: complex = 0.0
    special_sign: str = "+"
    tau: complex = 0.0
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        for name in ("mu", "mu1", "mu2", "c0", "special_coeff", "tau"):
            object.__setattr__(self, name, complex(getattr(self, name)))


@dataclass(frozen=True)
class ValidatedSpec:
    spec: KernelSpec
    gamma_limit: bool = False
    mu_limit: bool = False
    mu1_limit: bool = False
    mu2_limit: bool = False

    @property
    def family(self):
        return self.spec.family

    @property
    def limit_flags(self):
        return {k: v for k, v in asdict(self).items() if k.endswith("_limit")}


def _on_axis(z: complex) -> bool:
    return z.real * z.imag == 0.0


def _special_pattern(spec: KernelSpec) -> bool:
    # mu1 = i*mu, mu2 = i*(mu +- pi/2) with mu real
    if spec.mu1.real != 0.0 or spec.mu2.real != 0.0:
        return False
    shift = math.pi / 2 if spec.special_sign == "+" else -math.pi / 2
    diff = spec.mu2.imag - spec.mu1.imag - shift
    return abs(diff) <= SPECIAL_MATCH_TOL * max(1.0, abs(spec.mu2.imag))


def validate_spec(spec: KernelSpec) -> ValidatedSpec:
    fam = spec.family
    if spec.tau.real != 0.0:
        raise NonImaginaryTau(f"tau must be purely imaginary, got {spec.tau!r}")
    if not np.isfinite(spec.scale) or spec.scale == 0.0:
        raise InvalidParameter("scale must be a nonzero real number")
    if spec.special_sign not in ("+", "-"):
        raise InvalidParameter(f"special_sign must be '+' or '-', got {spec.special_sign!r}")
    if fam is Family.ITEM1:
        if not _on_axis(spec.mu):
            raise AxisViolation(f"mu={spec.mu!r} is neither real nor imaginary")
        return ValidatedSpec(spec, gamma_limit=spec.gamma == 0.0, mu_limit=spec.mu == 0)
    if fam is Family.ITEM2:
        if spec.mu.imag != 0.0:
            raise AxisViolation(f"item2 needs real mu, got {spec.mu!r}")
        if spec.alpha == 0.0:
            raise ZeroAlpha("item2 requires alpha != 0")
        return ValidatedSpec(spec, mu_limit=spec.mu == 0)
    if fam is Family.ITEM3:
        for name in ("mu1", "mu2"):
            if not _on_axis(getattr(spec, name)):
                raise AxisViolation(f"{name}={getattr(spec, name)!r} is neither real nor imaginary")
        if spec.special_coeff != 0 and not _special_pattern(spec):
            raise BadSpecialCase(
                "special_coeff needs mu1 = i*mu, mu2 = i*(mu %s pi/2)" % spec.special_sign
            )
        return ValidatedSpec(spec, mu1_limit=spec.mu1 == 0, mu2_limit=spec.mu2 == 0)
    return ValidatedSpec(spec)


def _ensure_valid(spec) -> ValidatedSpec:
    return spec if isinstance(spec, ValidatedSpec) else validate_spec(spec)


# ---------------------------------------------------------------------------
# family building blocks
# ---------------------------------------------------------------------------

def _sinh2_over(a: complex) -> complex:
    """sinh(2a)/a with the a -> 0 limit 2."""
    if abs(a) < S.SMALL_PARAM:
        return 2.0 + 4.0 * a * a / 3.0 + 0j
    return complex(np.sinh(2 * a) / a)


def _parts(vspec: ValidatedSpec, z: Jet):
    """(regular, numerator, denominator) jets of the ungauged kernel."""
    s = vspec.spec
    fam = s.family
    if fam is Family.ITEM1:
        return None, S.sinhc(s.mu, z), S.sinhc(s.gamma, z)
    if fam is Family.ITEM2:
        reg = s.alpha * S.exp(-1j * s.mu * z)
        return reg, S.sin(s.mu * z), z
    q = 0.25j * math.pi
    den = S.sin(0.5 * math.pi * z)
    if fam is Family.ITEM3:
        num = (_sinh2_over(s.mu2) * S.sinhc(s.mu1, z) * S.exp(-q * z)
               + _sinh2_over(s.mu1) * S.sinhc(s.mu2, z) * S.exp(q * z))
        return None, num, den
    # 1/cos(pi z/4) = 2 sin(pi z/4)/sin(pi z/2) puts both terms over one
    # denominator, so the poles at z = +-2 cancel inside the quotient.
    num = 2.0 * S.sin(0.25 * math.pi * z) * S.exp(-q * z) + z * S.exp(q * z)
    return None, num, den


def window(center: float) -> float:
    """Half-width of the Taylor fallback around a removable point."""
    return EDGE_WINDOW if abs(center) == 2.0 else SINGULAR_WINDOW


def _singular_points(fam: Family):
    if fam in (Family.ITEM3, Family.REMARK_EXAMPLE):
        return (-2.0, 0.0, 2.0)
    return (0.0,)


def _base_taylor(vspec: ValidatedSpec, center: float, order: int) -> Jet:
    """Series of the ungauged kernel about a removable point (order `order`)."""
    z = Jet.variable(np.array([center]), order + 1)
    reg, num, den = _parts(vspec, z)
    q = num.shift(1) / den.shift(1)
    if reg is not None:
        q = q + reg.truncate(order)
    return q


def _reexpand(poly: Jet, t, order: int) -> np.ndarray:
    """Normalized coefficients of a polynomial re-expanded about offsets t."""
    c = poly.coeffs[:, 0]
    deg = c.size - 1
    out = np.zeros((order + 1,) + np.shape(t), dtype=np.complex128)
    for m in range(min(order, deg) + 1):
        acc = np.zeros(np.shape(t), dtype=np.complex128)
        for n in range(deg, m - 1, -1):
            acc = acc * t + math.comb(n, m) * c[n]
        out[m] = acc
    return out


@dataclass(frozen=True)
class KernelFn:
    """Evaluator for k(z) and its derivatives on [-2, 2].

    ``extra`` holds additive analytic terms (jet -> jet); it is only used to
    build perturbed controls for the verification checks.
    """

    vspec: ValidatedSpec
    extra: tuple = ()
    label: str = ""
    taylor_centers: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.taylor_centers:
            for s in _singular_points(self.vspec.family):
                self.taylor_centers[s] = _base_taylor(self.vspec, s, TAYLOR_DEGREE)

    @property
    def spec(self):
        return self.vspec.spec

    def jet(self, z, order: int = 2) -> Jet:
        z = np.asarray(z, dtype=float)
        if np.any(np.abs(z) > 2.0 + DOMAIN_SLACK):
            raise EvalOutOfDomain("kernel is defined on [-2, 2] only")
        flat = z.reshape(-1)
        coeffs = np.empty((order + 1, flat.size), dtype=np.complex128)
        far = np.ones(flat.size, dtype=bool)
        for s, poly in self.taylor_centers.items():
            near = np.abs(flat - s) < window(s)
            if near.any():
                coeffs[:, near] = _reexpand(poly, flat[near] - s, order)
                far &= ~near
        if far.any():
            zj = Jet.variable(flat[far], order)
            reg, num, den = _parts(self.vspec, zj)
            q = num / den
            if reg is not None:
                q = q + reg
            coeffs[:, far] = q.coeffs
        k = Jet(coeffs)
        zj = Jet.variable(flat, order)
        s = self.spec
        if s.tau != 0:
            k = S.exp(s.tau * zj) * k
        if s.scale != 1.0:
            k = k * s.scale
        for term in self.extra:
            k = k + term(zj)
        return Jet(k.coeffs.reshape((order + 1,) + z.shape))

    def __call__(self, z):
        return self.jet(z, 0).value

    k = __call__

    def k_prime(self, z):
        return self.jet(z, 1).deriv(1)

    def k_second(self, z):
        return self.jet(z, 2).deriv(2)

    def taylor(self, order: int = TAYLOR_DEGREE + 2):
        return kernel_taylor(self, order)

    def perturbed(self, term: Callable[[Jet], Jet], label: str = "perturbed") -> "KernelFn":
        return KernelFn(self.vspec, self.extra + (term,), label, dict(self.taylor_centers))


def make_kernel(spec) -> KernelFn:
    vspec = _ensure_valid(spec)
    return KernelFn(vspec, label=vspec.family.value)


def kernel_taylor(spec, order: int) -> list[complex]:
    """k_0..k_order in the convention k(z) = sum k_n z^n / n!."""
    if order > MAX_TAYLOR_ORDER:
        raise OrderTooLarge(f"order {order} exceeds {MAX_TAYLOR_ORDER}")
    kfn = spec if isinstance(spec, KernelFn) else make_kernel(spec)
    vspec = kfn.vspec
    z = Jet.variable(np.array([0.0]), order)
    k = _base_taylor(vspec, 0.0, order)
    s = vspec.spec
    if s.tau != 0:
        k = S.exp(s.tau * z) * k
    k = k * s.scale
    for term in kfn.extra:
        k = k + term(z)
    return [complex(factorial(n) * k.coeffs[n, 0]) for n in range(order + 1)]


# ---------------------------------------------------------------------------
# Sturm-Liouville coefficients
# ---------------------------------------------------------------------------

def _base_coefficients(s: KernelSpec, y: Jet):
    fam = s.family
    if fam is Family.ITEM1:
        # (cosh 2gy - cosh 2g)/(2g^2) written as a product: no cancellation as g -> 0
        b = S.sinhc(s.gamma, y + 1.0) * S.sinhc(s.gamma, y - 1.0)
        c = (s.gamma ** 2 - s.mu ** 2) * b + s.c0
        return b, c
    if fam is Family.ITEM2:
        b = y * y - 1.0
        c = 1j * s.mu * (2.0 * y) + s.mu ** 2 * b + s.mu / s.alpha
        return b, c
    b = -S.cos(0.5 * math.pi * y)
    if fam is Family.REMARK_EXAMPLE:
        return b, (math.pi ** 2 / 32) * S.exp(0.5j * math.pi * y)
    mu1, mu2 = s.mu1, s.mu2
    bp = 0.5 * math.pi * S.sin(0.5 * math.pi * y)
    c = 1j * (mu2 ** 2 - mu1 ** 2) / math.pi * bp - (math.pi ** 2 / 16 + (mu1 ** 2 + mu2 ** 2) / 2) * b
    if s.special_coeff != 0:
        mu = mu1.imag
        sgn = 1.0 if s.special_sign == "+" else -1.0
        c = c + s.special_coeff * S.exp(-2j * (math.pi / 4 + sgn * mu) * y)
    return b, c


@dataclass(frozen=True)
class CoefficientPair:
    """b and c of L u = (b u')' + c u, with derivatives of any order."""

    vspec: ValidatedSpec

    def jets(self, y, order: int = 2):
        y = np.asarray(y, dtype=float)
        s = self.vspec.spec
        yj = Jet.variable(y, order + 1)
        b, c = _base_coefficients(s, yj)
        if s.tau != 0:
            # M^{-1} L M^{-1} with M = e^{tau y}: b -> e^{-2 tau y} b,
            # c -> e^{-2 tau y} (c - tau b' + tau^2 b)
            g = S.exp(-2.0 * s.tau * yj)
            bp = b.derivative()
            c = g.truncate(order) * (c.truncate(order) - s.tau * bp + s.tau ** 2 * b.truncate(order))
            b = g * b
        return b.truncate(order), c.truncate(order)

    def b_deriv(self, y, m: int = 0):
        return self.jets(y, m)[0].deriv(m)

    def c_deriv(self, y, m: int = 0):
        return self.jets(y, m)[1].deriv(m)

    def b(self, y):
        return self.b_deriv(y, 0)

    def b_prime(self, y):
        return self.b_deriv(y, 1)

    def b_second(self, y):
        return self.b_deriv(y, 2)

    def c(self, y):
        return self.c_deriv(y, 0)

    def c_prime(self, y):
        return self.c_deriv(y, 1)


def make_coefficients(spec) -> CoefficientPair:
    return CoefficientPair(_ensure_valid(spec))


def gauge_transform(spec, tau: complex) -> ValidatedSpec:
    """Multiply the kernel by e^{tau z}; the operator becomes M^{-1} L M^{-1}.

    Successive gauges compose additively in tau.
    """
    vspec = _ensure_valid(spec)
    tau = complex(tau)
    if tau.real != 0.0:
        raise NonImaginaryTau(f"tau must be purely imaginary, got {tau!r}")
    if tau == 0:
        return vspec
    return validate_spec(replace(vspec.spec, tau=vspec.spec.tau + tau))


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------

_COMPLEX_FIELDS = ("mu", "mu1", "mu2", "c0", "special_coeff")


def _parse_complex(name, value):
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise SpecParseError(f"field {name!r} must be [re, im] or a real number")


def spec_from_dict(d: dict) -> KernelSpec:
    if not isinstance(d, dict) or "family" not in d:
        raise SpecParseError("spec document must be an object with a 'family' field")
    try:
        family = Family(d["family"])
    except ValueError as e:
        raise SpecParseError(f"unknown family {d['family']!r}") from e
    kw = {"family": family}
    known = set(_COMPLEX_FIELDS) | {"family", "gamma", "alpha", "special_sign", "tau_im", "scale"}
    unknown = set(d) - known
    if unknown:
        raise SpecParseError(f"unknown fields: {sorted(unknown)}")
    try:
        for name in _COMPLEX_FIELDS:
            if name in d:
                kw[name] = _parse_complex(name, d[name])
        for name in ("gamma", "alpha", "scale"):
            if name in d:
                kw[name] = float(d[name])
        if "tau_im" in d:
            kw["tau"] = complex(0.0, float(d["tau_im"]))
        if "special_sign" in d:
            kw["special_sign"] = str(d["special_sign"])
    except (TypeError, ValueError) as e:
        raise SpecParseError(str(e)) from e
    return KernelSpec(**kw)


def spec_to_dict(spec) -> dict:
    if isinstance(spec, ValidatedSpec):
        spec = spec.spec
    out = {"family": spec.family.value}
    for name in _COMPLEX_FIELDS:
        z = getattr(spec, name)
        out[name] = [z.real, z.imag]
    out["gamma"] = spec.gamma
    out["alpha"] = spec.alpha
    out["special_sign"] = spec.special_sign
    out["tau_im"] = spec.tau.imag
    out["scale"] = spec.scale
    return out


def load_spec(path) -> KernelSpec:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise SpecParseError(f"{path}: {e}") from e
    return spec_from_dict(doc)


def dump_spec(spec, path):
    with open(path, "w") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")
