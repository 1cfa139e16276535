"""Spectrum of K and the spectral consequences of sesquicommutation.

Eigenvectors of the symmetrized Nystrom matrix carry white roundoff noise
of relative size ~ eps ||K|| / |lambda|.  L^H L has norm ~ n^4, so applied
to a raw eigenvector it mostly measures that noise.  The L^H L check
therefore first truncates the eigenvector's orthonormal-Legendre expansion
at its noise plateau (``chop``); the raw residual is reported alongside.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .discretization import Grid, build_K, build_L, legendre_basis
from .kernels import KernelFn, _ensure_valid, make_kernel

SIMPLE_GAP = 1e-6
# eigenvalues below this multiple of n * eps * |lambda_max| are unresolved
RESOLVE_FACTOR = 1e3
CHOP_FACTOR = 100.0


class DegenerateEigenvalue(ValueError):
    pass


class NearZeroDenominator(ValueError):
    pass


@dataclass
class Eigensystem:
    """Full eigendecomposition of K~, sorted by |lambda| descending."""

    values: np.ndarray
    vectors: np.ndarray
    gaps: np.ndarray
    simple: np.ndarray
    clusters: list

    def top(self, count):
        return self.values[:count], self.vectors[:, :count]


@dataclass
class PairReport:
    index: int
    lam: float
    gap: float
    simple: bool
    llstar_residual: float
    llstar_raw: float
    chop_modes: int
    sigma: complex | None = None
    sigma_residual: float | None = None
    rayleigh_imag: float = 0.0
    chain_constant: float | None = None

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        if self.sigma is not None:
            d["sigma"] = [self.sigma.real, self.sigma.imag]
            d["sigma_abs"] = abs(self.sigma)
        return d


@dataclass
class SpectralReport:
    eigenvalues: list
    per_pair: list
    grid_n: int
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "per_pair": [p.to_dict() for p in self.per_pair],
            "grid_n": self.grid_n,
            "details": self.details,
        }

    def rows(self):
        """Flat CSV rows, one per eigenpair."""
        out = []
        for p in self.per_pair:
            s = p.sigma
            out.append({
                "lambda": p.lam,
                "gap": p.gap,
                "llstar_residual": p.llstar_residual,
                "sigma_re": s.real if s is not None else "",
                "sigma_im": s.imag if s is not None else "",
                "sigma_residual": p.sigma_residual if p.sigma_residual is not None else "",
                "simple": p.simple,
            })
        return out


def normalize_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    piv = vectors[idx, np.arange(vectors.shape[1])]
    return vectors * (np.abs(piv) / piv)[None, :]


def _gaps(values: np.ndarray, n: int):
    lam_max = np.abs(values).max() if values.size else 0.0
    floor = RESOLVE_FACTOR * n * np.finfo(float).eps * lam_max
    resolved = np.abs(values) > floor
    gaps = np.empty(values.size)
    for i, v in enumerate(values):
        others = np.delete(values, i)
        d = np.abs(others - v).min() if others.size else np.inf
        gaps[i] = d / max(abs(v), floor, np.finfo(float).tiny)
    return gaps, resolved


def _clusters(values, gaps, resolved):
    """Index groups that must be treated as one eigenspace."""
    order = np.argsort(values)
    groups = []
    null = [int(i) for i in range(values.size) if not resolved[i]]
    current = []
    for i in order:
        if not resolved[i]:
            continue
        if current:
            prev = current[-1]
            scale = max(abs(values[i]), abs(values[prev]))
            if abs(values[i] - values[prev]) <= SIMPLE_GAP * scale:
                current.append(int(i))
                continue
            groups.append(current)
        current = [int(i)]
    if current:
        groups.append(current)
    if null:
        groups.append(null)
    return [g for g in groups if len(g) > 1 or not resolved[g[0]]]


def eigendecompose_K(spec, grid: Grid, count: int | None = None, kernel=None) -> Eigensystem:
    """Dense Hermitian eigendecomposition of the symmetrized Nystrom matrix.

    The full system is kept (clusters need every vector); ``count`` only
    validates the request.
    """
    if count is not None and count > grid.n:
        raise ValueError(f"count {count} exceeds grid size {grid.n}")
    kfn = kernel if kernel is not None else (spec if isinstance(spec, KernelFn) else make_kernel(spec))
    K = build_K(kfn, grid).matrix
    K = 0.5 * (K + K.conj().T)
    vals, vecs = np.linalg.eigh(K)
    order = np.lexsort((-vals, -np.abs(vals)))
    vals = vals[order]
    vecs = normalize_phase(vecs[:, order])
    gaps, resolved = _gaps(vals, grid.n)
    clusters = _clusters(vals, gaps, resolved)
    simple = resolved & (gaps > SIMPLE_GAP)
    for g in clusters:
        simple[g] = False
    return Eigensystem(vals, vecs, gaps, simple, clusters)


def chop(u: np.ndarray, basis: np.ndarray):
    """Drop the Legendre modes of ``u`` that sit on its roundoff plateau.

    The plateau level is the median coefficient magnitude over the upper
    half of the modes; everything past the last coefficient that exceeds
    ``CHOP_FACTOR`` times that level is removed.
    """
    coef = basis.T @ u
    mag = np.abs(coef)
    n = mag.size
    plateau = np.median(mag[n // 2:])
    above = np.nonzero(mag > CHOP_FACTOR * plateau)[0]
    keep = int(above.max()) + 1 if above.size else n
    return basis[:, :keep] @ coef[:keep], keep


class _LOperator:
    """Applies L~^H L~ as two products; the product matrix is never formed."""

    def __init__(self, L: np.ndarray):
        self.L = L

    def apply(self, u):
        return self.L @ u

    def apply_adjoint(self, u):
        return self.L.conj().T @ u

    def normal(self, u):
        return self.apply_adjoint(self.apply(u))


def _llstar(op: _LOperator, u):
    v = op.normal(u)
    rho = np.vdot(u, v) / np.vdot(u, u)
    nv = np.linalg.norm(v)
    return float(np.linalg.norm(v - rho * u) / nv) if nv > 0 else 0.0


def extract_sigma(spec, grid: Grid, eigenpair, L: np.ndarray | None = None, simple: bool = True):
    """Best sigma in L~u = sigma conj(u) and the relative defect.

    ``eigenpair`` is ``(lambda, u)`` or just ``u``.  Least squares along
    conj(u) gives sigma = u^T L~ u / u^H u.  The products are accumulated in
    extended precision: ||L~|| grows like n^2 while |sigma| is O(1), so in
    double precision the rounding of L~u alone would shift sigma by ~1e-12
    under a phase rotation of u.
    """
    if not simple:
        raise DegenerateEigenvalue("sigma is only defined for simple eigenvalues")
    u = eigenpair[1] if isinstance(eigenpair, tuple) else eigenpair
    if L is None:
        L = build_L(spec.vspec if isinstance(spec, KernelFn) else spec, grid).matrix
    ue = np.asarray(u).astype(np.clongdouble)
    Lu = L.astype(np.clongdouble) @ ue
    den = np.vdot(ue, ue).real
    if den < 1e-300:
        raise NearZeroDenominator("eigenvector has zero norm")
    sigma_e = (ue @ Lu) / den
    nLu = np.linalg.norm(Lu.astype(np.complex128))
    defect = (Lu - sigma_e * ue.conj()).astype(np.complex128)
    res = float(np.linalg.norm(defect) / nLu) if nLu > 0 else 0.0
    return complex(sigma_e), res


def check_LstarL_invariance(spec, grid: Grid, count: int = 10, kernel=None) -> SpectralReport:
    """Eigenvectors of K versus L^H L, plus sigma for the simple ones."""
    if isinstance(spec, KernelFn):
        kernel, spec = spec, spec.vspec
    vspec = _ensure_valid(spec)
    kfn = kernel if kernel is not None else make_kernel(vspec)
    count = min(count, grid.n)
    eig = eigendecompose_K(vspec, grid, count, kernel=kfn)
    K = build_K(kfn, grid).matrix
    L = build_L(vspec, grid).matrix
    op = _LOperator(L)
    basis = legendre_basis(grid)
    eps = np.finfo(float).eps
    nK, nL = np.linalg.norm(K), np.linalg.norm(L)
    r = float(np.linalg.norm(K.conj() @ L - L @ K) / (nK * nL))
    # sigma-defect bound: commutator defect plus eigenvector roundoff, over the gap
    defect = r * nK * nL + eps * np.linalg.norm(K, 2) * np.linalg.norm(L, 2)
    cluster_of = {i: g for g in eig.clusters for i in g}

    pairs = []
    for i in range(count):
        u = eig.vectors[:, i]
        lam = float(eig.values[i])
        raw = _llstar(op, u)
        rq = np.vdot(u, K @ u)
        if i in cluster_of:
            V = eig.vectors[:, cluster_of[i]]
            v = op.normal(u)
            nv = np.linalg.norm(v)
            resid = v - V @ (V.conj().T @ v)
            res = float(np.linalg.norm(resid) / nv) if nv > 0 else 0.0
            pairs.append(PairReport(i, lam, float(eig.gaps[i]), False, res, raw, grid.n,
                                    rayleigh_imag=float(abs(rq.imag))))
            continue
        uc, keep = chop(u, basis)
        res = _llstar(op, uc)
        pr = PairReport(i, lam, float(eig.gaps[i]), bool(eig.simple[i]), res, raw, keep,
                        rayleigh_imag=float(abs(rq.imag)))
        if pr.simple:
            pr.sigma, pr.sigma_residual = extract_sigma(vspec, grid, (lam, u), L=L)
            gap_abs = eig.gaps[i] * abs(lam)
            bound = defect / (gap_abs * np.linalg.norm(L @ u))
            pr.chain_constant = float(pr.sigma_residual / bound)
        pairs.append(pr)
    return SpectralReport(
        [float(v) for v in eig.values[:count]],
        pairs,
        grid.n,
        {"clusters": [len(g) for g in eig.clusters], "kernel": kfn.label, "sesquicommutator": r},
    )
