"""Conjugate-gradient type iterations and a blocked inverse-iteration eigensolver.

All routines take matrices as ``SymSparse`` or scipy sparse; right-hand sides
may be a vector or an (n, m) block, in which case the m systems are iterated
side by side with independent step lengths.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from .errors import ConvergenceError
from .fem import as_csr


@dataclass
class KrylovResult:
    x: np.ndarray
    iterations: int
    relative_residual: float
    history: list


def _colnorm(r):
    return np.sqrt(np.sum(np.abs(r) ** 2, axis=0))


def cg(A, b, tol: float = 1e-10, x0=None, maxiter: Optional[int] = None,
       precondition: bool = True, project: Optional[Callable] = None,
       sink=None, raise_on_failure: bool = True) -> KrylovResult:
    """Jacobi-preconditioned conjugate gradients for SPD (or PSD, consistent) systems.

    ``project`` is applied to every residual; it must be the orthogonal
    complement of the kernel for singular systems.  ``sink`` receives
    ``iter,residual`` CSV lines for single right-hand sides.
    """
    A = as_csr(A)
    b = np.asarray(b)
    single = b.ndim == 1
    B = b[:, None] if single else b
    n, m = B.shape
    dtype = np.result_type(A.dtype, B.dtype, float)
    X = np.zeros((n, m), dtype=dtype) if x0 is None else np.array(x0, dtype=dtype).reshape(n, m)
    maxiter = maxiter or max(10 * n, 100)
    d = A.diagonal()
    inv_d = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), 1.0) if precondition else np.ones(n)
    inv_d = inv_d[:, None]
    proj = project or (lambda r: r)

    bnorm = _colnorm(proj(B.astype(dtype)))
    bnorm = np.where(bnorm > 0, bnorm, 1.0)
    history: list = []
    if sink is not None and single:
        sink.write("iter,residual\n")
    it = 0
    for _restart in range(4):
        # restarting from the true residual removes recurrence drift
        R = proj(B - A @ X)
        res = _colnorm(R) / bnorm
        if res.max() <= tol or it >= maxiter:
            break
        Z = inv_d * R
        P = Z.copy()
        rz = np.sum(np.conj(R) * Z, axis=0).real
        while res.max() > tol and it < maxiter:
            it += 1
            AP = A @ P
            pap = np.sum(np.conj(P) * AP, axis=0).real
            active = res > tol
            alpha = np.where(active & (pap > 0), rz / np.where(pap > 0, pap, 1.0), 0.0)
            X += alpha * P
            R -= alpha * AP
            R = proj(R)
            Z = inv_d * R
            rz_new = np.sum(np.conj(R) * Z, axis=0).real
            beta = np.where(rz > 0, rz_new / np.where(rz > 0, rz, 1.0), 0.0)
            P = Z + beta * P
            rz = rz_new
            res = _colnorm(R) / bnorm
            history.append(float(res.max()))
            if sink is not None and single:
                sink.write(f"{it},{float(res[0])!r}\n")
    true_res = _colnorm(proj(B - A @ X)) / bnorm
    if true_res.max() > tol and raise_on_failure:
        raise ConvergenceError(f"no convergence: CG stopped at relative residual {true_res.max():.3e} "
                               f"after {it} iterations", history)
    x = X[:, 0] if single else X
    return KrylovResult(x, it, float(true_res.max()), history)


def cocg(A, b, tol: float = 1e-10, maxiter: Optional[int] = None, sink=None) -> KrylovResult:
    """Conjugate orthogonal CG for complex symmetric (A^T = A) systems."""
    A = as_csr(A)
    b = np.asarray(b, dtype=complex)
    n = len(b)
    maxiter = maxiter or max(20 * n, 200)
    d = A.diagonal()
    inv_d = 1.0 / np.where(np.abs(d) > 0, d, 1.0)
    x = np.zeros(n, dtype=complex)
    bnorm = np.linalg.norm(b) or 1.0
    r = b.copy()
    z = inv_d * r
    p = z.copy()
    rz = np.dot(r, z)
    res = np.linalg.norm(r) / bnorm
    history = [res]
    if sink is not None:
        sink.write("iter,residual\n")
        sink.write(f"0,{float(res)!r}\n")
    it = 0
    while res > tol and it < maxiter:
        it += 1
        Ap = A @ p
        pAp = np.dot(p, Ap)
        if pAp == 0:
            break
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = inv_d * r
        rz_new = np.dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        res = np.linalg.norm(r) / bnorm
        history.append(res)
        if sink is not None:
            sink.write(f"{it},{float(res)!r}\n")
    true_res = np.linalg.norm(b - A @ x) / bnorm
    if true_res > 10 * tol:
        raise ConvergenceError(f"no convergence: COCG stopped at relative residual {true_res:.3e} "
                               f"after {it} iterations", history)
    return KrylovResult(x, it, float(true_res), history)


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    iterations: int


def block_inverse_iteration(A, B, count: int, tol: float = 1e-8, block: Optional[int] = None,
                            deflate: Optional[np.ndarray] = None, solve: Optional[Callable] = None,
                            maxiter: int = 1000, seed: int = 0) -> EigenResult:
    """Smallest ``count`` eigenpairs of A x = nu B x for SPD A and PSD B.

    Subspace iteration X <- A^-1 B X with Rayleigh-Ritz on the block and
    B-orthogonal deflation against the columns of ``deflate``.  Residuals are
    ||A x - nu B x|| / ||x||; iteration stops when all wanted ones are <= tol.
    """
    A, B = as_csr(A), as_csr(B)
    n = A.shape[0]
    block = block or count + 4
    block = min(block, n - (0 if deflate is None else deflate.shape[1]))
    if solve is None:
        def solve(rhs):
            return cg(A, rhs, tol=1e-13, maxiter=20 * n, raise_on_failure=False).x

    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, block))

    if deflate is not None:
        Zd = np.asarray(deflate, dtype=float).reshape(n, -1)
        BZ = B @ Zd
        G = Zd.T @ BZ

        def remove(Y):
            return Y - Zd @ np.linalg.solve(G, BZ.T @ Y)
    else:
        def remove(Y):
            return Y

    X = remove(X)
    nu = np.zeros(block)
    res = np.full(block, np.inf)
    for it in range(1, maxiter + 1):
        Y = remove(solve(B @ X))
        Q, _ = np.linalg.qr(Y)
        Ar = Q.T @ (A @ Q)
        Br = Q.T @ (B @ Q)
        Ar, Br = 0.5 * (Ar + Ar.T), 0.5 * (Br + Br.T)
        nu, C = sla.eigh(Ar, Br)
        X = Q @ C
        R = A @ X - (B @ X) * nu
        res = _colnorm(R) / _colnorm(X)
        if np.all(res[:count] <= tol):
            break
    else:
        raise ConvergenceError(f"spectrum not converged: residuals {res[:count]}", list(res[:count]))
    X = X[:, :count] / np.sqrt(np.sum(X[:, :count] * (B @ X[:, :count]), axis=0))
    return EigenResult(nu[:count], X, res[:count], it)
