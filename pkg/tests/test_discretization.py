"""Grid, Nystrom K, weak-form L, composition and export."""
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from specs import CLEAN
from sesquiop import Family, KernelSpec, make_coefficients, make_kernel
from sesquiop.discretization import (
    BadSize,
    ComposeMode,
    GridMismatch,
    build_grid,
    build_K,
    build_L,
    compose,
    export_operator,
    import_operator,
    legendre_basis,
)

PI = math.pi


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [4, 5, 16, 33, 128, 513])
def test_grid_against_high_precision(n):
    g = build_grid(n)
    assert abs(g.weights.sum() - 2) < 1e-13
    assert np.all(np.diff(g.nodes) > 0)
    assert np.all(np.abs(g.nodes) < 1)
    with mp.workdps(40):
        for i in range(0, n, max(1, n // 12)):
            x = mp.findroot(lambda t: mp.legendre(n, t), mp.mpf(g.nodes[i]), tol=1e-30, verify=False)
            w = 2 / ((1 - x ** 2) * mp.diff(lambda t: mp.legendre(n, t), x) ** 2)
            assert abs(g.nodes[i] - x) < 1e-15
            assert abs(g.weights[i] - w) < 1e-11 * w
    # numpy's own rule is less accurate for large n; loose sanity check only
    x, w = np.polynomial.legendre.leggauss(n)
    np.testing.assert_allclose(g.weights, w, rtol=1e-8)


def test_quadrature_exactness():
    g = build_grid(16)
    assert abs(g.weights @ g.nodes ** 2 - 2 / 3) < 1e-14
    for n in (8, 30, 64):
        g = build_grid(n)
        d = 2 * n - 2
        assert abs(g.weights @ g.nodes ** d - 2 / (d + 1)) < 1e-12


def test_diff1_monomials():
    g = build_grid(32)
    np.testing.assert_allclose(g.diff1 @ g.nodes ** 3, 3 * g.nodes ** 2, atol=1e-9)
    for n in (8, 64):
        g = build_grid(n)
        for j in range(1, min(n - 1, 10) + 1):
            np.testing.assert_allclose(g.diff1 @ g.nodes ** j, j * g.nodes ** (j - 1), atol=1e-8)


def test_diff2_consistent_with_diff1():
    g = build_grid(64)
    u = np.exp(g.nodes)
    assert np.linalg.norm(g.diff1 @ (g.diff1 @ u) - g.diff2 @ u) < 1e-6
    np.testing.assert_allclose(g.diff2 @ u, u, rtol=1e-8)


def test_grid_is_immutable():
    g = build_grid(8)
    with pytest.raises(ValueError):
        g.nodes[0] = 0.0


@pytest.mark.parametrize("n", [0, 3, 4097])
def test_bad_size(n):
    with pytest.raises(BadSize):
        build_grid(n)


def test_legendre_basis_orthonormal():
    g = build_grid(256)
    P = legendre_basis(g)
    assert np.abs(P.T @ P - np.eye(256)).max() < 1e-12


# ---------------------------------------------------------------------------
# K
# ---------------------------------------------------------------------------

def test_constant_kernel_matrix():
    g = build_grid(24)
    K = build_K(KernelSpec(Family.ITEM1, gamma=1.0, mu=1.0), g).matrix
    sw = np.sqrt(g.weights)
    np.testing.assert_allclose(K, np.outer(sw, sw), atol=1e-15)
    ev = np.linalg.eigvalsh(K)
    assert abs(ev[-1] - 2) < 1e-13
    assert np.linalg.matrix_rank(K, tol=1e-10) == 1


@pytest.mark.parametrize("name", sorted(CLEAN))
def test_K_hermitian(name):
    K = build_K(CLEAN[name], build_grid(64))
    assert K.label == "K"
    assert np.abs(K.matrix - K.matrix.conj().T).max() < 1e-12


def test_top_eigenvalue_converges():
    spec = KernelSpec(Family.ITEM2, alpha=1.0, mu=PI)
    top = [np.abs(np.linalg.eigvalsh(build_K(spec, build_grid(n)).matrix)).max() for n in (32, 64, 128)]
    assert abs(top[1] - top[2]) < 1e-10


@pytest.mark.parametrize("name", ["item2", "item3", "remark"])
def test_symmetrization_similarity(name):
    g = build_grid(48)
    kfn = make_kernel(CLEAN[name])
    x, w = g.nodes, g.weights
    plain = kfn(x[:, None] - x[None, :]) * w[None, :]
    a = np.sort_complex(np.linalg.eigvals(plain))
    b = np.sort_complex(np.linalg.eigvalsh(build_K(kfn, g).matrix).astype(complex))
    np.testing.assert_allclose(a, b, atol=1e-10)


@pytest.mark.parametrize("name", ["item2", "remark"])
def test_nystrom_against_adaptive_quadrature(name):
    spec = CLEAN[name]
    g = build_grid(128)
    op = build_K(spec, g)
    got = op.nodal(g) @ np.exp(g.nodes)
    ko = O.kernel(spec)
    with mp.workdps(20):
        for i in range(0, 128, 9):
            x = mp.mpf(g.nodes[i])
            ref = complex(mp.quad(lambda y: ko(x - y) * mp.exp(y), [-1, x, 1]))
            assert abs(got[i] - ref) < 1e-9 * (1 + abs(ref))


# ---------------------------------------------------------------------------
# L
# ---------------------------------------------------------------------------

def test_L_constant_input_gives_c():
    g = build_grid(32)
    spec = KernelSpec(Family.ITEM2, alpha=1.0, mu=1.0)
    L = build_L(spec, g).nodal(g)
    np.testing.assert_allclose(L @ np.ones(32), make_coefficients(spec).c(g.nodes), atol=1e-12)


def test_L_legendre_eigenrelation():
    # ((y^2 - 1) u')' with u = P2 is +6 P2
    g = build_grid(64)
    L = build_L(KernelSpec(Family.ITEM2, alpha=1.0, mu=0.0), g).nodal(g)
    p2 = (3 * g.nodes ** 2 - 1) / 2
    np.testing.assert_allclose(L @ p2, 6 * p2, atol=1e-8)


def test_L_remark_constant():
    g = build_grid(32)
    L = build_L(CLEAN["remark"], g).nodal(g)
    np.testing.assert_allclose(L @ np.ones(32), PI ** 2 / 32 * np.exp(0.5j * PI * g.nodes), atol=1e-12)


@pytest.mark.parametrize("name", sorted(CLEAN))
def test_weak_L_is_complex_symmetric(name):
    L = build_L(CLEAN[name], build_grid(64)).matrix
    assert np.abs(L - L.T).max() <= 1e-14 * np.abs(L).max()


@pytest.mark.parametrize("form", ["weak", "strong"])
def test_L_smooth_function(form):
    # (b u')' + c u for u = e^y, b = y^2 - 1, c = mu/alpha + ...
    spec = KernelSpec(Family.ITEM2, alpha=2.0, mu=1.5)
    g = build_grid(96)
    cp = make_coefficients(spec)
    y = g.nodes
    u = np.exp(y)
    exact = cp.b_prime(y) * u + cp.b(y) * u + cp.c(y) * u
    got = build_L(spec, g, form=form).nodal(g) @ u
    assert np.abs(got - exact).max() < 1e-8


def test_L_strong_form_not_symmetric():
    L = build_L(CLEAN["item2"], build_grid(64), form="strong")
    assert L.label == "L_strong"
    assert np.abs(L.matrix - L.matrix.T).max() > 1e-6 * np.abs(L.matrix).max()
    with pytest.raises(ValueError):
        build_L(CLEAN["item2"], build_grid(8), form="nope")


# ---------------------------------------------------------------------------
# compose and export
# ---------------------------------------------------------------------------

def test_adjoint_times_self_psd():
    M = compose(build_L(CLEAN["item3"], build_grid(48)), mode="adjoint_times_self").matrix
    assert np.abs(M - M.conj().T).max() < 1e-12 * np.abs(M).max()
    assert np.linalg.eigvalsh(M).min() > -1e-12 * np.abs(M).max()


def test_conjugate_same_spectrum():
    K = build_K(CLEAN["remark"], build_grid(40))
    C = compose(K, mode=ComposeMode.CONJUGATE)
    np.testing.assert_allclose(np.linalg.eigvalsh(C.matrix), np.linalg.eigvalsh(K.matrix), atol=1e-13)
    assert C.label == "conj(K)"


def test_product_rank_one():
    K = build_K(KernelSpec(Family.ITEM1, gamma=1.0, mu=1.0), build_grid(20))
    np.testing.assert_allclose(compose(K, K).matrix, 2 * K.matrix, atol=1e-13)
    with pytest.raises(ValueError):
        compose(K)


def test_compose_grid_mismatch():
    a = build_K(CLEAN["item2"], build_grid(16))
    b = build_K(CLEAN["item2"], build_grid(20))
    with pytest.raises(GridMismatch):
        compose(a, b)


def test_spec_hash_distinguishes():
    g = build_grid(16)
    assert build_K(CLEAN["item2"], g).spec_hash != build_K(CLEAN["item3"], g).spec_hash
    assert build_K(CLEAN["item2"], g).spec_hash != build_K(CLEAN["item2"], build_grid(17)).spec_hash
    assert build_K(CLEAN["item2"], g).spec_hash == build_K(CLEAN["item2"], build_grid(16)).spec_hash


def test_export_roundtrip(tmp_path):
    op = build_L(CLEAN["item3_special"], build_grid(12))
    js, cs = export_operator(op, tmp_path / "L")
    back = import_operator(tmp_path / "L")
    assert np.array_equal(back.matrix, op.matrix)
    assert back.label == op.label and back.spec_hash == op.spec_hash
    assert len(open(cs).readline().split(",")) == 24


@settings(max_examples=25, deadline=None)
@given(n=st.integers(4, 200))
def test_grid_properties(n):
    g = build_grid(n)
    assert abs(g.weights.sum() - 2) < 1e-13
    assert np.all(g.weights > 0)
    np.testing.assert_allclose(g.nodes, -g.nodes[::-1], atol=1e-15)
    np.testing.assert_allclose(g.diff1 @ np.ones(n), 0, atol=1e-10 * n ** 2)
