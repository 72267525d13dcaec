"""Desk-scale direct linear algebra.

Sparse LU factorization (with fill-reducing ordering and partial pivoting)
for the indefinite saddle-point systems, and a self-contained symmetric
definite generalized eigensolver based on Cholesky reduction followed by the
cyclic Jacobi iteration.  The eigensolver is sized for the interface Gram
matrices of the stability bench (a few hundred unknowns); the sparse solver
handles systems up to a few tens of thousands of unknowns.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import LinAlgError

#: Relative off-diagonal Frobenius norm at which the Jacobi sweep stops.
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 40


def lu_solve(matrix, rhs):
    """Solve a square sparse system by LU with partial pivoting.

    Parameters
    ----------
    matrix : scipy sparse matrix or dense ndarray
        Square, structurally nonsingular.
    rhs : ndarray
        Right-hand side, one or more columns.

    Returns
    -------
    ndarray
        Solution with the same trailing shape as ``rhs``.

    Raises
    ------
    LinAlgError
        If the matrix is not square or is numerically singular.
    """
    if sp.issparse(matrix):
        A = matrix.tocsc()
    else:
        A = sp.csc_matrix(np.asarray(matrix, dtype=float))
    m, n = A.shape
    if m != n:
        raise LinAlgError(f"matrix is {m}x{n}, expected square")
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != n:
        raise LinAlgError(f"rhs length {rhs.shape[0]} does not match matrix size {n}")
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:  # SuperLU signals singularity this way
        raise LinAlgError(f"sparse LU factorization failed: {exc}") from exc
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise LinAlgError("sparse LU produced non-finite entries (numerically singular)")
    return x


def _cyclic_jacobi(A, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Diagonalize a symmetric matrix in place by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvectors in columns.  Stops
    when the off-diagonal Frobenius norm drops below ``tol`` times the
    Frobenius norm of the input.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    if n == 1:
        return A.diagonal().copy(), V
    scale = np.linalg.norm(A, "fro")
    if scale == 0.0:
        return np.zeros(n), V

    def _offdiag_norm(B):
        # computed entrywise: the difference ||B||_F^2 - ||diag||^2 cancels
        # catastrophically once the off-diagonal part is small
        off2 = B.copy()
        np.fill_diagonal(off2, 0.0)
        return np.linalg.norm(off2, "fro")

    # entries below this cannot push the off-diagonal norm above tol*scale
    skip = tol * scale / n
    for _ in range(max_sweeps):
        off = _offdiag_norm(A)
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.hypot(1.0, theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # rotate rows/cols p and q
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Vp = V[:, p].copy()
                Vq = V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    else:
        if _offdiag_norm(A) > 1e-10 * scale:
            raise LinAlgError("Jacobi iteration did not converge")
    return A.diagonal().copy(), V


def gen_eig_sym(K, M, vectors=False):
    """Eigenvalues of ``K x = lambda M x`` for symmetric K and SPD M.

    The problem is reduced to standard form with the Cholesky factor of M and
    diagonalized by cyclic Jacobi rotations.  Eigenvalues are returned in
    ascending order; eigenvectors (optional) are M-orthonormal columns.

    Raises
    ------
    LinAlgError
        If K is not symmetric to 1e-10 (relative) or M is not positive
        definite.
    """
    K = np.asarray(K, dtype=float)
    M = np.asarray(M, dtype=float)
    if K.shape != M.shape or K.shape[0] != K.shape[1]:
        raise LinAlgError("K and M must be square matrices of equal size")
    scale = max(np.abs(K).max(), 1.0)
    if np.abs(K - K.T).max() > 1e-10 * scale:
        raise LinAlgError("K is not symmetric")
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise LinAlgError("M is not positive definite") from exc
    # C = L^{-1} K L^{-T}, kept symmetric explicitly
    from scipy.linalg import solve_triangular

    Y = solve_triangular(L, K, lower=True)
    C = solve_triangular(L, Y.T, lower=True).T
    C = 0.5 * (C + C.T)
    w, Q = _cyclic_jacobi(C)
    order = np.argsort(w)
    w = w[order]
    if not vectors:
        return w
    X = solve_triangular(L.T, Q[:, order], lower=False)
    return w, X
