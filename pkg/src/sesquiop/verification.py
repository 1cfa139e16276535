"""Residual checks for the operator identities.

Every residual is relative: the size of the identity's defect divided by
the size of its largest participating term or by the product of the
participating operator norms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discretization import MAX_NODES, Grid, build_K, build_L, build_grid, compose
from .kernels import KernelFn, OrderTooLarge, _ensure_valid, kernel_taylor, make_coefficients, make_kernel

TOL_FUNCTIONAL = 1e-9
TOL_TAYLOR = 1e-10
TOL_DISCRETE = 1e-6
MAX_TAYLOR_N = 12


@dataclass
class ResidualReport:
    name: str
    grid_or_order: int
    residual: float
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def to_dict(self):
        return {
            "name": self.name,
            "n": int(self.grid_or_order),
            "residual": float(self.residual),
            "tolerance": float(self.tolerance),
            "pass": self.passed,
            "details": _plain(self.details),
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def _split(spec, kernel):
    """(validated spec, kernel evaluator) with an optional kernel override."""
    if isinstance(spec, KernelFn):
        return spec.vspec, spec
    vspec = _ensure_valid(spec)
    return vspec, kernel if kernel is not None else make_kernel(vspec)


# ---------------------------------------------------------------------------
# pointwise relation
# ---------------------------------------------------------------------------

def admissible_points(m: int):
    """Tensor grid (y, z) on [-1,1] x [-2,2] restricted to y + z in [-1, 1]."""
    y = np.linspace(-1.0, 1.0, m)
    z = np.linspace(-2.0, 2.0, m)
    Y, Z = np.meshgrid(y, z, indexing="ij")
    keep = np.abs(Y + Z) <= 1.0 + 1e-15
    return Y[keep], np.clip(Z[keep], -2.0, 2.0)


def relation_terms(coef, k, kp, kpp, y, z):
    """The six terms of the relation with L1 = L2, in order."""
    yz = np.clip(y + z, -1.0, 1.0)
    bj = coef.jets(y, 1)[0]
    bj2 = coef.jets(yz, 1)
    b_y, bp_y = bj.deriv(0), bj.deriv(1)
    b_yz, bp_yz = bj2[0].deriv(0), bj2[0].deriv(1)
    c_y = coef.c(y)
    c_yz = bj2[1].deriv(0)
    return [
        b_y * np.conj(kpp),
        -b_yz * kpp,
        -bp_y * np.conj(kp),
        -bp_yz * kp,
        c_y * np.conj(k),
        -c_yz * k,
    ]


def _relative(terms):
    total = np.abs(sum(terms)).max()
    scale = max(np.abs(t).max() for t in terms)
    return float(total / scale) if scale > 0 else float(total)


def functional_residual_R(spec, m: int = 200, tolerance: float = TOL_FUNCTIONAL, kernel=None) -> ResidualReport:
    """Sup-residual of the pointwise relation over the admissible (y, z) set.

    Both the relation as written and its z -> -z reflection are evaluated;
    the check passes when either one is below ``tolerance``.
    """
    vspec, kfn = _split(spec, kernel)
    coef = make_coefficients(vspec)
    y, z = admissible_points(m)
    kj = kfn.jet(z, 2)
    k, kp, kpp = kj.deriv(0), kj.deriv(1), kj.deriv(2)
    direct = _relative(relation_terms(coef, k, kp, kpp, y, z))
    # reflected kernel: k(-z), -k'(-z), k''(-z)
    kr = kfn.jet(-z, 2)
    reflected = _relative(relation_terms(coef, kr.deriv(0), -kr.deriv(1), kr.deriv(2), y, z))
    best = min(direct, reflected)
    return ResidualReport(
        "functional_R",
        m,
        best,
        tolerance,
        {
            "residual_direct": direct,
            "residual_reflected": reflected,
            "variant": "direct" if direct <= reflected else "reflected",
            "points": int(y.size),
            "kernel": kfn.label,
        },
    )


# ---------------------------------------------------------------------------
# Taylor relation at z = 0
# ---------------------------------------------------------------------------

def taylor_residual(spec, n_max: int = 8, y_samples: int = 20, tolerance: float = TOL_TAYLOR,
                    k_coeffs=None, kernel=None) -> ResidualReport:
    """n-th z-derivative of the pointwise relation at z = 0, for n = 0..n_max.

    ``k_coeffs`` overrides the Taylor coefficients k_0..k_{n_max+2} (used by
    the series-level negative control).
    """
    if n_max > MAX_TAYLOR_N:
        raise OrderTooLarge(f"n_max {n_max} exceeds {MAX_TAYLOR_N}")
    vspec, kfn = _split(spec, kernel)
    if k_coeffs is None:
        k_coeffs = kernel_taylor(kfn, n_max + 2)
    k = np.asarray(k_coeffs, dtype=np.complex128)
    if k.size < n_max + 3:
        raise ValueError(f"need {n_max + 3} Taylor coefficients, got {k.size}")
    y = np.linspace(-1.0, 1.0, y_samples)
    bj, cj = make_coefficients(vspec).jets(y, max(n_max + 1, 2))
    bd = bj.derivatives()
    cd = cj.derivatives()

    per_n = []
    conj_form = []
    for n in range(n_max + 1):
        sgn = (-1.0) ** n
        terms = [sgn * bd[0] * k[n + 2], sgn * bd[1] * k[n + 1], sgn * cd[0] * k[n]]
        # same left block without assuming k(-z) = conj(k(z))
        left_conj = [bd[0] * np.conj(k[n + 2]), -bd[1] * np.conj(k[n + 1]), cd[0] * np.conj(k[n])]
        right = []
        for j in range(n + 1):
            cnj = math.comb(n, j)
            right += [
                -cnj * bd[n - j] * k[j + 2],
                -cnj * bd[n - j + 1] * k[j + 1],
                -cnj * cd[n - j] * k[j],
            ]
        per_n.append(_relative(terms + right))
        conj_form.append(_relative(left_conj + right))

    # diagnostic only, never gated: -k0 c' + 2 k1 c + k1 b'' - 3 k2 b' + 2 k3 b,
    # a constraint that presumes a gauge-fixed k1
    k4 = np.zeros(4, dtype=np.complex128)
    k4[: min(4, k.size)] = k[:4]
    lo = -k4[0] * cd[1] + 2 * k4[1] * cd[0] + k4[1] * bd[2] - 3 * k4[2] * bd[1] + 2 * k4[3] * bd[0]
    lo_scale = max(np.abs(k4).max() * max(np.abs(bd[:3]).max(), np.abs(cd[:2]).max()), 1e-300)

    return ResidualReport(
        "taylor",
        n_max,
        max(per_n),
        tolerance,
        {
            "per_n": per_n,
            "conjugate_form_per_n": conj_form,
            "y_samples": y_samples,
            "low_order_constraint": float(np.abs(lo).max() / lo_scale),
        },
    )


# ---------------------------------------------------------------------------
# discrete identities
# ---------------------------------------------------------------------------

def _rel_comm(a, b, c, d, na, nb):
    """||a b - c d||_F / (na nb)."""
    return float(np.linalg.norm(a @ b - c @ d) / (na * nb))


def _sesqui_at(vspec, kfn, grid):
    K = build_K(kfn, grid).matrix
    L = build_L(vspec, grid).matrix
    nK, nL = np.linalg.norm(K), np.linalg.norm(L)
    return K, L, nK, nL, _rel_comm(K.conj(), L, L, K, nK, nL)


def sesquicommutator_residual(spec, grid: Grid, tolerance: float = TOL_DISCRETE, kernel=None,
                              refine: bool = True) -> ResidualReport:
    """||conj(K) L - L K||_F / (||K||_F ||L||_F), plus the same on a 2n grid."""
    vspec, kfn = _split(spec, kernel)
    K, L, nK, nL, r = _sesqui_at(vspec, kfn, grid)
    details = {
        "commutation": _rel_comm(K, L, L, K, nK, nL),
        "reflected": _rel_comm(K, L, L, K.conj(), nK, nL),
        "L_symmetry": float(np.abs(L - L.T).max() / np.abs(L).max()),
        "K_hermitian": float(np.abs(K - K.conj().T).max()),
        "kernel": kfn.label,
    }
    strong = build_L(vspec, grid, form="strong").matrix
    details["strong_form"] = _rel_comm(K.conj(), strong, strong, K, nK, np.linalg.norm(strong))
    details["strong_form_L_symmetry"] = float(np.abs(strong - strong.T).max() / np.abs(strong).max())
    if refine and 2 * grid.n <= MAX_NODES:
        r2 = _sesqui_at(vspec, kfn, build_grid(2 * grid.n))[-1]
        details["residual_2n"] = r2
        details["decay_ratio"] = r2 / r if r > 0 else float("nan")
    return ResidualReport("sesquicommutator", grid.n, r, tolerance, details)


def derived_identities_residual(spec, grid: Grid, tolerance: float = TOL_DISCRETE, kernel=None):
    """Residuals of the identities implied by sesquicommutation.

    (i)   L K^H K = conj(K^H K) L
    (ii)  K L^H L = L^H L K
    (iii) K^H L^H L = L^H L K^H
    """
    vspec, kfn = _split(spec, kernel)
    K = build_K(kfn, grid)
    L = build_L(vspec, grid)
    KK = compose(K, mode="adjoint_times_self").matrix
    LL = compose(L, mode="adjoint_times_self").matrix
    k, l = K.matrix, L.matrix
    nK, nL, nKK, nLL = (np.linalg.norm(a) for a in (k, l, KK, LL))
    kh = k.conj().T
    return [
        ResidualReport("derived_L_KhK", grid.n, _rel_comm(l, KK, KK.conj(), l, nL, nKK), tolerance),
        ResidualReport("derived_K_LhL", grid.n, _rel_comm(k, LL, LL, k, nK, nLL), tolerance),
        ResidualReport("derived_Kh_LhL", grid.n, _rel_comm(kh, LL, LL, kh, nK, nLL), tolerance),
    ]


# ---------------------------------------------------------------------------
# negative controls
# ---------------------------------------------------------------------------

def quadratic_exp_term(eps: float = 0.1):
    """Additive term eps * z^2 e^{iz}; keeps k(-z) = conj(k(z))."""
    from . import series as S

    def term(z):
        return eps * (z * z) * S.exp(1j * z)

    return term


def perturbed_kernel(spec, eps: float = 0.1) -> KernelFn:
    return make_kernel(spec).perturbed(quadratic_exp_term(eps), f"perturbed(eps={eps:g})")


def perturbed_taylor(spec, n_max: int = 8, index: int = 3, delta: float = 1e-2):
    k = kernel_taylor(spec, n_max + 2)
    k[index] += delta
    return k
