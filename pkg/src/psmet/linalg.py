"""Dense complex linear algebra for small Hermitian problems.

Everything the rest of the package needs: a cyclic-Jacobi Hermitian
eigensolver, PSD testing, 2x2 symmetric inversion, and quadrature inner
products on a momentum grid. All functions are pure; inputs are never
mutated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Relative tolerance for accepting a matrix as Hermitian.
HERMITICITY_TOL = 1e-12
# Allowed negativity for density-matrix eigenvalues and |Tr - 1|.
DENSITY_TOL = 1e-10


def hermiticity_defect(a: np.ndarray) -> float:
    """max |A_ij - conj(A_ji)|, the distance from being Hermitian."""
    a = np.asarray(a)
    return float(np.abs(a - a.conj().T).max()) if a.size else 0.0


def require_hermitian(a: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Validate Hermiticity within ``tol`` (relative to max |entry|).

    Returns the exactly Hermitian average (A + A^dag)/2 so downstream
    arithmetic never sees the sub-tolerance asymmetry.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(float(np.abs(a).max()), 1.0)
    defect = hermiticity_defect(a)
    if defect > tol * scale:
        raise ValueError(
            f"matrix is not Hermitian: max asymmetry {defect:.3e} "
            f"exceeds {tol:.1e} * max|A| = {tol * scale:.3e}"
        )
    return (a + a.conj().T) / 2


def require_density(a: np.ndarray, tol: float = DENSITY_TOL) -> np.ndarray:
    """Validate that ``a`` is a density matrix (Hermitian, trace 1, PSD)."""
    a = require_hermitian(a)
    tr = complex(np.trace(a))
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix trace deviates from 1 by {abs(tr - 1.0):.3e}")
    lo = psd_min_eig(a)
    if lo < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
    return a


def eig_hermitian(
    a: np.ndarray,
    tol: float = HERMITICITY_TOL,
    max_sweeps: int = 60,
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    a : (n, n) array_like, Hermitian within ``tol``.
    max_sweeps : number of full cyclic sweeps before giving up.

    Returns
    -------
    vals : (n,) real eigenvalues, sorted descending.
    vecs : (n, n) unitary; column k is the eigenvector of vals[k],
        so ``a = vecs @ diag(vals) @ vecs.conj().T``.
    """
    h = require_hermitian(a, tol)
    n = h.shape[0]
    v = np.eye(n, dtype=complex)
    if n == 1:
        return np.array([h[0, 0].real]), v

    scale = max(float(np.abs(h).max()), 1.0)
    # Off-diagonal entries below this are "zero" at double precision; a few
    # ulps above eps*scale, the floor rounding noise can actually reach.
    stop = 5e-15 * scale
    for _ in range(max_sweeps):
        if np.abs(h - np.diag(np.diag(h))).max() <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                hpq = h[p, q]
                mag = abs(hpq)
                if mag <= stop:
                    continue
                # Phase factor pulls the pivot onto the real axis, then a
                # standard real rotation annihilates it.
                phase = hpq / mag
                tau = (h[q, q].real - h[p, p].real) / (2.0 * mag)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # Columns transform by the plane rotation ...
                col_p = h[:, p].copy()
                col_q = h[:, q].copy()
                h[:, p] = c * col_p - s * np.conj(phase) * col_q
                h[:, q] = s * phase * col_p + c * col_q
                # ... and rows by its conjugate transpose.
                row_p = h[p, :].copy()
                row_q = h[q, :].copy()
                h[p, :] = c * row_p - s * phase * row_q
                h[q, :] = s * np.conj(phase) * row_p + c * row_q
                h[p, q] = 0.0
                h[q, p] = 0.0
                col_p = v[:, p].copy()
                col_q = v[:, q].copy()
                v[:, p] = c * col_p - s * np.conj(phase) * col_q
                v[:, q] = s * phase * col_p + c * col_q
    if np.abs(h - np.diag(np.diag(h))).max() > stop:
        raise RuntimeError(f"Jacobi sweep did not converge in {max_sweeps} sweeps")

    vals = np.diag(h).real.copy()
    order = np.argsort(vals)[::-1]
    return vals[order], v[:, order]


def psd_min_eig(a: np.ndarray, tol: float = HERMITICITY_TOL) -> float:
    """Minimum eigenvalue of a Hermitian matrix.

    The caller decides positivity by comparing against its own tolerance.
    """
    vals, _ = eig_hermitian(a, tol)
    return float(vals[-1])


def invert_sym_2x2(a: np.ndarray) -> np.ndarray:
    """Invert a real symmetric 2x2 matrix by the adjugate formula."""
    a = np.asarray(a, dtype=float)
    if a.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {a.shape}")
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    if abs(det) <= 1e-14:
        raise ValueError(f"matrix is numerically singular: det = {det:.3e}")
    return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / det


def inv_psd(a: np.ndarray) -> np.ndarray:
    """Inverse of a Hermitian positive-definite matrix via its spectrum.

    Generic-dimension companion to :func:`invert_sym_2x2`.
    """
    vals, vecs = eig_hermitian(a)
    if vals[-1] <= 0.0:
        raise ValueError(f"matrix is not positive definite: min eigenvalue {vals[-1]:.3e}")
    return (vecs / vals) @ vecs.conj().T


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Discretized momentum axis with trapezoidal weights.

    points must be strictly increasing and weights strictly positive;
    grid_inner(f, g) = sum_i w_i conj(f_i) g_i approximates the L2 inner
    product of amplitude functions sampled on the points.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        wts = np.asarray(self.weights, dtype=float)
        if pts.ndim != 1 or pts.shape != wts.shape:
            raise ValueError("points and weights must be 1-d arrays of equal length")
        if pts.size < 2 or np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if np.any(wts <= 0):
            raise ValueError("grid weights must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        pts.setflags(write=False)
        wts.setflags(write=False)

    @property
    def size(self) -> int:
        return self.points.size


def trapezoid_grid(lo: float, hi: float, n: int) -> QuadratureGrid:
    """Uniform grid on [lo, hi] with trapezoidal weights."""
    if n < 2:
        raise ValueError("need at least 2 grid points")
    pts = np.linspace(lo, hi, n)
    h = pts[1] - pts[0]
    wts = np.full(n, h)
    wts[0] = wts[-1] = h / 2
    return QuadratureGrid(pts, wts)


def grid_inner(grid: QuadratureGrid, f: np.ndarray, g: np.ndarray) -> complex:
    """Quadrature inner product sum_i w_i conj(f_i) g_i.

    Real and imaginary parts are reduced separately from real arrays; every
    floating-point operation is then symmetric (or antisymmetric) under
    swapping f and g, so conjugate symmetry holds bit-exactly.
    """
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    if f.shape != (grid.size,) or g.shape != (grid.size,):
        raise ValueError(
            f"amplitude length mismatch: grid has {grid.size} points, "
            f"got {f.shape} and {g.shape}"
        )
    w = grid.weights
    re = float(np.sum(w * (f.real * g.real + f.imag * g.imag)))
    im = float(np.sum(w * (f.real * g.imag - f.imag * g.real)))
    return complex(re, im)


def grid_norm(grid: QuadratureGrid, f: np.ndarray) -> float:
    """sqrt(<f|f>) under the quadrature inner product."""
    return float(np.sqrt(grid_inner(grid, f, f).real))


def orthonormalize(grid: QuadratureGrid, vectors, drop_tol: float = 1e-10) -> np.ndarray:
    """Gram-Schmidt orthonormal basis of span(vectors) under grid_inner.

    Vectors whose residual norm falls below ``drop_tol`` (relative to the
    largest input norm) are treated as linearly dependent and dropped.
    Returns an array of shape (rank, n).
    """
    basis: list[np.ndarray] = []
    scale = max((grid_norm(grid, v) for v in vectors), default=0.0)
    if scale == 0.0:
        return np.zeros((0, grid.size), dtype=complex)
    for v in vectors:
        u = np.asarray(v, dtype=complex).copy()
        for _ in range(2):  # re-orthogonalize once for numerical safety
            for q in basis:
                u -= grid_inner(grid, q, u) * q
        nrm = grid_norm(grid, u)
        if nrm > drop_tol * scale:
            basis.append(u / nrm)
    return np.array(basis)
