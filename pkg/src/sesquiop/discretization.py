"""Nystrom matrices for K and collocation matrices for L on one Gauss-Legendre grid.

All matrices live in symmetrized coordinates: a nodal matrix ``A`` is
stored as ``diag(sqrt(w)) A diag(1/sqrt(w))``.  The Euclidean inner product
there is the quadrature inner product, so a self-adjoint K becomes a
Hermitian matrix and adjoints are plain conjugate transposes.
"""
from __future__ import annotations

import enum
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .kernels import KernelFn, _ensure_valid, make_coefficients, make_kernel, spec_to_dict

MIN_NODES = 4
MAX_NODES = 4096


class BadSize(ValueError):
    pass


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Grid:
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    diff1: np.ndarray
    diff2: np.ndarray
    bary: np.ndarray = field(repr=False)

    @property
    def sqrt_weights(self):
        return np.sqrt(self.weights)

    def diff1_symmetrized(self):
        sw = self.sqrt_weights
        return sw[:, None] * self.diff1 / sw[None, :]


def build_grid(n: int) -> Grid:
    """Gauss-Legendre nodes/weights and barycentric differentiation matrices."""
    if not (MIN_NODES <= int(n) <= MAX_NODES):
        raise BadSize(f"grid size must be in [{MIN_NODES}, {MAX_NODES}], got {n}")
    n = int(n)
    x, w = _accel.gauss_legendre(n)
    # barycentric weights of Legendre points, up to a common factor
    v = (-1.0) ** np.arange(n) * np.sqrt((1.0 - x * x) * w)
    d1, d2 = _accel.bary_diffmats(x, v)
    for a in (x, w, v, d1, d2):
        a.setflags(write=False)
    return Grid(n, x, w, d1, d2, v)


class Coords(str, enum.Enum):
    SYMMETRIZED = "symmetrized"


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    matrix: np.ndarray
    label: str
    spec_hash: str
    coords: Coords = Coords.SYMMETRIZED

    @property
    def n(self):
        return self.matrix.shape[0]

    def nodal(self, grid: Grid) -> np.ndarray:
        """The same operator acting on plain node samples."""
        sw = grid.sqrt_weights
        return self.matrix / sw[:, None] * sw[None, :]


def spec_hash(spec, grid: Grid | None = None) -> str:
    if isinstance(spec, KernelFn):
        doc = {"spec": spec_to_dict(spec.vspec), "extra": spec.label if spec.extra else ""}
    else:
        doc = {"spec": spec_to_dict(spec)}
    if grid is not None:
        doc["n"] = grid.n
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha1(blob).hexdigest()[:16]


def _kernel(spec_or_kernel) -> KernelFn:
    if isinstance(spec_or_kernel, KernelFn):
        return spec_or_kernel
    return make_kernel(spec_or_kernel)


def build_K(spec, grid: Grid) -> DiscreteOperator:
    """Symmetrized Nystrom matrix sqrt(w_i) k(x_i - x_j) sqrt(w_j).

    ``spec`` may also be a (possibly perturbed) :class:`KernelFn`.
    """
    kfn = _kernel(spec)
    x = grid.nodes
    sw = grid.sqrt_weights
    kmat = kfn(x[:, None] - x[None, :])
    return DiscreteOperator(sw[:, None] * kmat * sw[None, :], "K", spec_hash(kfn, grid))


def build_L(spec, grid: Grid, form: str = "weak") -> DiscreteOperator:
    """Matrix of u -> (b u')' + c u.

    ``form="weak"`` (default) is the Galerkin form -Dt^T diag(b) Dt + diag(c)
    with Dt the symmetrized first-derivative matrix; it is exactly complex
    symmetric.  ``form="strong"`` is the collocation D diag(b) D + diag(c),
    kept for comparison.
    """
    if isinstance(spec, KernelFn):
        spec = spec.vspec
    vspec = _ensure_valid(spec)
    coef = make_coefficients(vspec)
    x = grid.nodes
    b = coef.b(x)
    c = coef.c(x)
    if form == "weak":
        dt = grid.diff1_symmetrized()
        a = -(dt.T @ (b[:, None] * dt))
        a = 0.5 * (a + a.T)
        mat = a + np.diag(c)
    elif form == "strong":
        d = grid.diff1
        nodal = d @ (b[:, None] * d) + np.diag(c)
        sw = grid.sqrt_weights
        mat = sw[:, None] * nodal / sw[None, :]
    else:
        raise ValueError(f"unknown form {form!r}")
    return DiscreteOperator(mat, "L" if form == "weak" else "L_strong", spec_hash(vspec, grid))


class ComposeMode(str, enum.Enum):
    PRODUCT = "product"
    ADJOINT_TIMES_SELF = "adjoint_times_self"
    CONJUGATE = "conjugate"


def compose(a: DiscreteOperator, b: DiscreteOperator | None = None, mode="product") -> DiscreteOperator:
    mode = ComposeMode(mode)
    if mode is ComposeMode.PRODUCT:
        if b is None:
            raise ValueError("product needs two operators")
        if a.matrix.shape != b.matrix.shape or a.coords != b.coords:
            raise GridMismatch(f"cannot multiply {a.label} ({a.n}) by {b.label} ({b.n})")
        return DiscreteOperator(a.matrix @ b.matrix, f"{a.label}*{b.label}", a.spec_hash)
    if b is not None and b.matrix.shape != a.matrix.shape:
        raise GridMismatch(f"{a.label} and {b.label} live on different grids")
    if mode is ComposeMode.ADJOINT_TIMES_SELF:
        m = a.matrix.conj().T @ a.matrix
        return DiscreteOperator(0.5 * (m + m.conj().T), f"{a.label}^H*{a.label}", a.spec_hash)
    return DiscreteOperator(a.matrix.conj(), f"conj({a.label})", a.spec_hash)


def _write_atomic(path: str, text: str):
    tmp = f"{path}.{os.getpid()}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def export_operator(op: DiscreteOperator, stem) -> tuple[str, str]:
    """Write ``stem.json`` (header) and ``stem.csv`` (row-major re,im pairs)."""
    stem = str(stem)
    header = {"label": op.label, "n": op.n, "spec_hash": op.spec_hash, "coords": op.coords.value}
    rows = (",".join(f"{v.real:.17g},{v.imag:.17g}" for v in row) for row in op.matrix)
    _write_atomic(stem + ".csv", "\n".join(rows) + "\n")
    _write_atomic(stem + ".json", json.dumps(header, indent=2, sort_keys=True) + "\n")
    return stem + ".json", stem + ".csv"


def import_operator(stem) -> DiscreteOperator:
    stem = str(stem)
    with open(stem + ".json") as fh:
        header = json.load(fh)
    raw = np.loadtxt(stem + ".csv", delimiter=",", ndmin=2)
    m = raw[:, 0::2] + 1j * raw[:, 1::2]
    if m.shape != (header["n"], header["n"]):
        raise ValueError(f"{stem}.csv has shape {m.shape}, header says n={header['n']}")
    return DiscreteOperator(m, header["label"], header["spec_hash"], Coords(header["coords"]))


def legendre_basis(grid: Grid, m: int | None = None) -> np.ndarray:
    """Orthonormal Legendre polynomials 0..m-1 in symmetrized coordinates.

    Column p holds sqrt(w_i) * sqrt(p + 1/2) P_p(x_i); the columns are
    orthonormal because Gauss quadrature is exact up to degree 2n-1.
    """
    m = grid.n if m is None else m
    x = grid.nodes
    P = np.empty((grid.n, m))
    P[:, 0] = np.sqrt(0.5)
    if m > 1:
        P[:, 1] = np.sqrt(1.5) * x
    for p in range(1, m - 1):
        a = np.sqrt((2 * p + 1) * (2 * p + 3)) / (p + 1)
        b = p / (p + 1) * np.sqrt((2 * p + 3) / (2 * p - 1))
        P[:, p + 1] = a * x * P[:, p] - b * P[:, p - 1]
    return grid.sqrt_weights[:, None] * P
