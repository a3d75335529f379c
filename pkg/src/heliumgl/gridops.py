"""Second-order finite differences on a collocated, ghost-padded grid.

Boundary conditions are realised by reflecting the interior across each
boundary face into ghost layers:

* ``"even"``    scalar, zero normal derivative (phi, theta, p, rho, ...)
* ``"odd"``     scalar, zero face value
* ``"noslip"``  vector, every component odd (v_n = 0)
* ``"slip"``    vector, normal component odd, tangential components even
  with an optional outward normal-derivative datum (v_s . n = 0 together
  with the curl condition ``(curl v_s) x n = omega``)

Two layers of public functions are provided.  ``ext`` plus the ``*_e``
kernels act on already-extended arrays and shrink them by one layer per
derivative; the stepper composes them so that nested operators
(``curl(curl v)``, ``div(a (x) a)``) see one consistent set of ghost
values.  The plain functions (``grad``, ``div``, ...) take interior arrays
and return interior arrays.
"""

from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import Grid

EVEN, ODD, NOSLIP, SLIP = "even", "odd", "noslip", "slip"


class PoissonError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(f"{msg} (residual {residual:.3e})")
        self.residual = residual


# ------------------------------------------------------------ ghost handling

def _reflect(f, axis, depth, odd, datum, h):
    n = f.shape[axis]
    lo_sl = [slice(None)] * f.ndim
    hi_sl = [slice(None)] * f.ndim
    lo_sl[axis] = slice(depth - 1, None, -1)
    hi_sl[axis] = slice(n - 1, n - 1 - depth, -1)
    lo, hi = f[tuple(lo_sl)], f[tuple(hi_sl)]
    if odd:
        lo, hi = -lo, -hi
    if datum:
        # outward derivative across the face equals ``datum``
        shape = [1] * f.ndim
        shape[axis] = depth
        dist = ((2 * np.arange(depth, 0, -1) - 1) * h).reshape(shape)
        lo = lo + datum * dist
        hi = hi + datum * np.flip(dist, axis)
    return np.concatenate([lo, f, hi], axis=axis)


def ext(f, grid: Grid, rule: str = EVEN, depth: int = 1, omega=(0.0, 0.0, 0.0)):
    """Return ``f`` padded with ``depth`` ghost layers on every resolved axis."""
    f = np.asarray(f)
    h = grid.spacing
    if rule in (EVEN, ODD):
        out = f
        lead = f.ndim - grid.dim
        for ax in range(grid.dim):
            out = _reflect(out, lead + ax, depth, rule == ODD, 0.0, h[ax])
        return out
    if rule not in (NOSLIP, SLIP):
        raise ValueError(f"unknown ghost rule {rule!r}")
    comps = []
    for c in range(3):
        out = f[c]
        for ax in range(grid.dim):
            odd = rule == NOSLIP or c == ax
            datum = omega[c] if (rule == SLIP and c != ax) else 0.0
            out = _reflect(out, ax, depth, odd, datum, h[ax])
        comps.append(out)
    return np.stack(comps)


def trim(f, grid: Grid, k: int = 1):
    """Drop ``k`` layers from each resolved axis (last ``dim`` axes)."""
    if k == 0:
        return f
    sl = (Ellipsis,) + (slice(k, -k),) * grid.dim
    return f[sl]


def _cd(f, ax, grid):
    """Centred difference along resolved axis ``ax`` of an extended scalar."""
    if ax >= grid.dim:
        return np.zeros_like(trim(f, grid))
    h = grid.spacing[ax]
    nd = f.ndim
    a = nd - grid.dim + ax
    hi = [slice(1, -1)] * nd
    lo = [slice(1, -1)] * nd
    for i in range(nd - grid.dim):
        hi[i] = lo[i] = slice(None)
    hi[a] = slice(2, None)
    lo[a] = slice(None, -2)
    return (f[tuple(hi)] - f[tuple(lo)]) / (2.0 * h)


def grad_e(fE, grid):
    first = _cd(fE, 0, grid)
    out = np.zeros((3,) + first.shape, dtype=first.dtype)
    out[0] = first
    for a in range(1, grid.dim):
        out[a] = _cd(fE, a, grid)
    return out


def div_e(vE, grid):
    out = _cd(vE[0], 0, grid)
    for a in range(1, grid.dim):
        out = out + _cd(vE[a], a, grid)
    return out


def curl_e(vE, grid):
    # derivatives along unresolved axes vanish
    out = np.zeros_like(trim(vE, grid))
    out[1] = -_cd(vE[2], 0, grid)
    out[2] = _cd(vE[1], 0, grid)
    if grid.dim > 1:
        out[0] = _cd(vE[2], 1, grid)
        out[2] -= _cd(vE[0], 1, grid)
    return out


def lap_e(fE, grid):
    """Compact three-point Laplacian per resolved axis."""
    out = np.zeros_like(trim(fE, grid))
    for ax in range(grid.dim):
        h = grid.spacing[ax]
        nd = fE.ndim
        a = nd - grid.dim + ax
        c, p, m = ([slice(1, -1)] * nd for _ in range(3))
        for i in range(nd - grid.dim):
            c[i] = p[i] = m[i] = slice(None)
        p[a] = slice(2, None)
        m[a] = slice(None, -2)
        out = out + (fE[tuple(p)] - 2.0 * fE[tuple(c)] + fE[tuple(m)]) / h**2
    return out


def div_coeff_grad_e(kE, fE, grid):
    """Flux form of div(k grad f) with arithmetic face averages of ``k``."""
    out = np.zeros_like(trim(fE, grid))
    for ax in range(grid.dim):
        h = grid.spacing[ax]
        nd = fE.ndim
        a = nd - grid.dim + ax
        c, p, m = ([slice(1, -1)] * nd for _ in range(3))
        p[a] = slice(2, None)
        m[a] = slice(None, -2)
        c, p, m = tuple(c), tuple(p), tuple(m)
        kp = 0.5 * (kE[p] + kE[c])
        km = 0.5 * (kE[c] + kE[m])
        out = out + (kp * (fE[p] - fE[c]) - km * (fE[c] - fE[m])) / h**2
    return out


def div_tensor_e(TE, grid):
    """Row-wise divergence ``(div T)_i = sum_j d_j T_ij`` of an extended tensor."""
    return np.stack([sum(_cd(TE[i, j], j, grid) for j in range(3)) for i in range(3)])


def advect_e(vn, fE, grid):
    """``(v_n . grad) f`` for a scalar or vector ``f`` (``vn`` is interior)."""
    out = vn[0] * _cd(fE, 0, grid)
    for a in range(1, grid.dim):
        out = out + vn[a] * _cd(fE, a, grid)
    return out


def vector_grad_e(vE, grid):
    """Velocity-gradient tensor ``G_ij = d_j v_i``."""
    return np.stack([grad_e(vE[i], grid) for i in range(3)])


# --------------------------------------------------------- interior wrappers

def grad(f, grid: Grid, rule: str = EVEN):
    return grad_e(ext(f, grid, rule), grid)


def div(v, grid: Grid, rule: str = SLIP, omega=(0.0, 0.0, 0.0)):
    return div_e(ext(v, grid, rule, omega=omega), grid)


def curl(v, grid: Grid, rule: str = SLIP, omega=(0.0, 0.0, 0.0)):
    """Curl with all three components; identically zero in 1D for x-only fields."""
    out = curl_e(ext(v, grid, rule, omega=omega), grid)
    if grid.dim == 1:
        out[:] = 0.0
    return out


def lap(f, grid: Grid, rule: str = EVEN):
    return lap_e(ext(f, grid, rule), grid)


def vector_lap(v, grid: Grid, rule: str = SLIP, omega=(0.0, 0.0, 0.0)):
    """Componentwise ``div(grad v_i)`` with the centred stencils of ``grad``/``div``."""
    vE = ext(v, grid, rule, depth=2, omega=omega)
    return np.stack([div_e(grad_e(vE[i], grid), grid) for i in range(3)])


def grad_div(v, grid: Grid, rule: str = SLIP, omega=(0.0, 0.0, 0.0)):
    vE = ext(v, grid, rule, depth=2, omega=omega)
    return grad_e(div_e(vE, grid), grid)


def curl_curl(v, grid: Grid, rule: str = SLIP, omega=(0.0, 0.0, 0.0)):
    vE = ext(v, grid, rule, depth=2, omega=omega)
    return curl_e(curl_e(vE, grid), grid)


def div_coeff_grad(k, f, grid: Grid, k_rule: str = EVEN, f_rule: str = EVEN):
    return div_coeff_grad_e(ext(k, grid, k_rule), ext(f, grid, f_rule), grid)


def div_outer(a, grid: Grid, rule: str = SLIP):
    """``div(a (x) a)``; ``a`` is padded with ``rule`` before forming the tensor."""
    aE = ext(a, grid, rule)
    return div_tensor_e(aE[:, None] * aE[None, :], grid)


def boundary_flux(f, v, grid: Grid, f_rule: str = EVEN, v_rule: str = SLIP,
                  omega=(0.0, 0.0, 0.0)) -> float:
    """Discrete boundary term of centred summation by parts.

    ``sum(f*div(v) + grad(f).v) * cell_volume`` equals this value exactly
    (to roundoff) for any ghost rules.
    """
    fE = ext(f, grid, f_rule)
    vE = ext(v, grid, v_rule, omega=omega)
    total = 0.0
    for ax in range(grid.dim):
        h = grid.spacing[ax]
        area = grid.cell_volume / h
        a = ax
        n = fE.shape[a]
        take = lambda arr, i: np.take(arr, i, axis=a)  # noqa: E731
        inner = [slice(1, -1)] * grid.dim
        inner[a] = slice(None)
        fa = fE[tuple(inner)]
        va = vE[ax][tuple(inner)]
        hi = take(fa, n - 2) * take(va, n - 1) + take(fa, n - 1) * take(va, n - 2)
        lo = take(fa, 0) * take(va, 1) + take(fa, 1) * take(va, 0)
        total += 0.5 * area * float(np.sum(hi - lo))
    return total


# ------------------------------------------------------------ linear solvers

def _lap1d(n, h):
    main = -2.0 * np.ones(n)
    main[0] = main[-1] = -1.0
    off = np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1]) / h**2


@lru_cache(maxsize=32)
def laplacian_matrix(grid: Grid):
    """Sparse compact Neumann Laplacian matching :func:`lap` with even ghosts."""
    Lx = _lap1d(grid.nx, grid.hx)
    if grid.dim == 1:
        return Lx.tocsr()
    Ly = _lap1d(grid.ny, grid.hy)
    return (sp.kron(Lx, sp.identity(grid.ny)) + sp.kron(sp.identity(grid.nx), Ly)).tocsr()


@lru_cache(maxsize=32)
def _pinned_lu(grid: Grid):
    L = laplacian_matrix(grid).tolil()
    L[0, :] = 0.0
    L[0, 0] = 1.0
    return spla.splu(L.tocsc())


class PoissonResult(NamedTuple):
    u: np.ndarray
    residual: float
    iterations: int
    mean_removed: float


def poisson_neumann(rhs, grid: Grid, tol: float = 1e-10, max_iter: int = 5) -> PoissonResult:
    """Solve ``lap(u) = rhs - mean(rhs)`` with zero-flux ghosts and ``mean(u) = 0``.

    A sparse LU factorisation of the row-pinned operator is followed by
    iterative refinement until the max-norm residual drops below ``tol``.
    ``mean_removed`` reports the compatibility correction applied to ``rhs``.
    """
    b = np.asarray(rhs, dtype=float).ravel()
    mean = float(b.mean())
    b = b - mean
    L = laplacian_matrix(grid)
    lu = _pinned_lu(grid)
    u = np.zeros_like(b)
    res = b.copy()
    for it in range(1, max_iter + 1):
        r = res.copy()
        r[0] = 0.0
        u += lu.solve(r)
        u -= u.mean()
        res = b - L @ u
        rnorm = float(np.max(np.abs(res)))
        if rnorm <= tol:
            return PoissonResult(u.reshape(grid.shape), rnorm, it, mean)
    raise PoissonError("Neumann Poisson solve did not converge", rnorm)


def linear_operator_matrix(fn, n_in: int, n_out: int):
    """Assemble the sparse matrix of a linear map on flat arrays by probing."""
    cols = []
    e = np.zeros(n_in)
    for j in range(n_in):
        e[j] = 1.0
        cols.append(sp.csc_matrix(np.asarray(fn(e)).ravel()[:, None]))
        e[j] = 0.0
    M = sp.hstack(cols).tocsr()
    M.eliminate_zeros()
    assert M.shape == (n_out, n_in)
    return M


@lru_cache(maxsize=32)
def projection_operators(grid: Grid):
    """Sparse ``grad`` (even ghosts) and ``div`` (no-slip ghosts) matrices.

    The pressure projection composes them as ``D diag(c) G`` so the
    corrected velocity satisfies the discrete constraint with exactly the
    stencil that :func:`div` applies to ``v_n``.
    """
    N = int(np.prod(grid.shape))
    vshape = (3,) + grid.shape
    G = linear_operator_matrix(lambda f: grad(f.reshape(grid.shape), grid, EVEN), N, 3 * N)
    D = linear_operator_matrix(lambda v: div(v.reshape(vshape), grid, NOSLIP), 3 * N, N)
    return G, D


@lru_cache(maxsize=32)
def weighted_laplacian(grid: Grid):
    """Precomputed assembly of ``D diag(c) G`` for per-cell weights ``c``.

    Returns ``(indptr, indices, B, diag)``: the CSR pattern of the product
    (diagonal always included), a sparse matrix ``B`` with
    ``data = B @ c``, and the positions of the diagonal entries.
    """
    G, D = projection_operators(grid)
    N = G.shape[1]
    Dc = D.tocoo()
    Gr = G.tocsr()
    counts = np.diff(Gr.indptr)[Dc.col]
    i = np.repeat(Dc.row, counts)
    kk = np.repeat(Dc.col, counts)
    starts = np.repeat(Gr.indptr[Dc.col], counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    gpos = starts + offs
    j = Gr.indices[gpos]
    val = np.repeat(Dc.data, counts) * Gr.data[gpos]
    keys = np.concatenate([i * N + j, np.arange(N) * (N + 1)])
    uniq, inv = np.unique(keys, return_inverse=True)
    inv = inv[: len(i)]
    B = sp.csr_matrix((val, (inv, kk % N)), shape=(len(uniq), N))
    rows, cols = np.divmod(uniq, N)
    indptr = np.searchsorted(rows, np.arange(N + 1))
    diag = np.searchsorted(uniq, np.arange(N) * (N + 1))
    return indptr, cols, B, diag


def _assemble(coef, grid: Grid, scale=1.0, shift=None):
    """CSR matrix ``scale * D diag(coef) G - diag(shift)``."""
    indptr, cols, B, diag = weighted_laplacian(grid)
    N = len(indptr) - 1
    data = scale * (B @ np.asarray(coef, dtype=float).ravel())
    if shift is not None:
        data[diag] -= np.asarray(shift, dtype=float).ravel()
    return sp.csr_matrix((data, cols, indptr), shape=(N, N))


def solve_projection(coef, rhs, grid: Grid, tol: float):
    """Solve ``div_noslip(coef * grad_even p) = rhs`` for zero-mean ``p``.

    ``rhs`` is made compatible by subtracting its mean.  Returns
    ``(p, mean_removed)``.  The system is bordered with the mean constraint
    so the constant null space is removed without pinning a cell.
    """
    M = _assemble(coef, grid)
    N = M.shape[0]
    b = np.asarray(rhs, dtype=float).ravel()
    mean = float(b.mean())
    b = b - mean
    ones = sp.csr_matrix(np.ones((1, N)) / N)
    K = sp.bmat([[M, ones.T], [ones, None]], format="csc")
    sol = spla.spsolve(K, np.concatenate([b, [0.0]]))
    p = sol[:N]
    res = float(np.max(np.abs(M @ p - b))) if N else 0.0
    scale = max(1.0, float(np.max(np.abs(b))))
    if not np.isfinite(res) or res > tol * scale:
        raise PoissonError("pressure projection did not converge", res)
    return p.reshape(grid.shape), mean


def solve_helmholtz(h, coef, helm, rhs, grid: Grid, tol: float):
    """Solve ``h div_noslip(coef grad_even p) - helm p = rhs``.

    With ``helm >= 0`` and not identically zero the operator is negative
    definite, so no mean constraint is needed.
    """
    K = _assemble(coef, grid, h, helm).tocsc()
    b = np.asarray(rhs, dtype=float).ravel()
    p = spla.spsolve(K, b)
    res = float(np.max(np.abs(K @ p - b)))
    scale = max(1.0, float(np.max(np.abs(b))))
    if not np.isfinite(res) or res > tol * scale:
        p = p + spla.spsolve(K, b - K @ p)
        res = float(np.max(np.abs(K @ p - b)))
        if not np.isfinite(res) or res > tol * scale:
            raise PoissonError("pressure projection did not converge", res)
    return p.reshape(grid.shape)
