"""Jacobi-type dense solvers: one-sided Jacobi SVD and cyclic Jacobi eigensolver.

Both use a fixed round-robin pairing of indices, so every sweep applies the
same sequence of rotations for the same input and results are reproducible
bit for bit.  Within a round the pairs are disjoint and are rotated together.
"""
from __future__ import annotations

import numpy as np

EPS = np.finfo(float).eps
MAX_SWEEPS = 80


class ConvergenceError(RuntimeError):
    pass


def _binary_exponent(A: np.ndarray) -> int:
    # scaling by 2^-e is exact and brings max|A| into [1/2, 1): no squared
    # norm overflows and subnormal input keeps its full precision
    top = float(np.max(np.abs(A))) if A.size else 0.0
    return int(np.frexp(top)[1]) if top > 0 else 0


def round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Rounds of disjoint pairs covering every (p, q), p < q, exactly once."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        P, Q = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a >= 0 and b >= 0:
                P.append(min(a, b))
                Q.append(max(a, b))
        rounds.append((np.array(P, dtype=np.intp), np.array(Q, dtype=np.intp)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_svd(A, compute_vectors: bool = True):
    """Singular value decomposition by one-sided (Hestenes) Jacobi rotations.

    Returns ``(U, s, Vt)`` with ``s`` non-increasing and ``A = U diag(s) Vt``
    (thin form, ``k = min(m, n)`` columns), or only ``s`` when
    ``compute_vectors`` is False.  Small singular values are computed to high
    relative accuracy when A is well conditioned up to column scaling.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("expected a 2-d array")
    m, n = A.shape
    if m == 0 or n == 0:
        k = min(m, n)
        s = np.zeros(0)
        return (np.zeros((m, k)), s, np.zeros((k, n))) if compute_vectors else s
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    transposed = n > m
    e = _binary_exponent(A)
    G = np.ldexp(A.T if transposed else A, -e)
    m, n = G.shape
    V = np.eye(n)
    tol = np.sqrt(m) * EPS
    # pairs involving an underflowing column would rotate forever without progress
    negligible = np.finfo(float).tiny / EPS
    rounds = round_robin(n)
    for _ in range(MAX_SWEEPS):
        rotated = False
        for P, Q in rounds:
            if P.size == 0:
                continue
            gp, gq = G[:, P], G[:, Q]
            alpha = np.einsum("ij,ij->j", gp, gp)
            beta = np.einsum("ij,ij->j", gq, gq)
            gamma = np.einsum("ij,ij->j", gp, gq)
            act = (np.abs(gamma) > tol * np.sqrt(alpha * beta)) & (np.minimum(alpha, beta) > negligible)
            if not np.any(act):
                continue
            P, Q = P[act], Q[act]
            alpha, beta, gamma = alpha[act], beta[act], gamma[act]
            with np.errstate(over="ignore"):
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            # a rotation angle below the underflow threshold is no rotation
            keep = t != 0.0
            if not np.any(keep):
                continue
            rotated = True
            P, Q, t = P[keep], Q[keep], t[keep]
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            gp, gq = G[:, P], G[:, Q]
            G[:, P] = c * gp - s * gq
            G[:, Q] = s * gp + c * gq
            if compute_vectors:
                vp, vq = V[:, P], V[:, Q]
                V[:, P] = c * vp - s * vq
                V[:, Q] = s * vp + c * vq
        if not rotated:
            break
    else:
        raise ConvergenceError("one-sided Jacobi did not converge")
    sv = np.sqrt(np.einsum("ij,ij->j", G, G))
    order = np.argsort(-sv, kind="stable")
    sv = sv[order]
    if not compute_vectors:
        return np.ldexp(sv, e)
    G = G[:, order]
    V = V[:, order]
    U = np.zeros_like(G)
    nz = sv > 0
    U[:, nz] = G[:, nz] / sv[nz]
    U = _complete_columns(U, nz)
    sv = np.ldexp(sv, e)
    if transposed:
        return V, sv, U.T
    return U, sv, V.T


def _complete_columns(U: np.ndarray, filled: np.ndarray) -> np.ndarray:
    # zero singular values leave zero columns; fill them with an orthonormal complement
    if np.all(filled):
        return U
    m = U.shape[0]
    basis = U[:, filled]
    for j in np.nonzero(~filled)[0]:
        for e in range(m):
            v = np.zeros(m)
            v[e] = 1.0
            v -= basis @ (basis.T @ v)
            v -= basis @ (basis.T @ v)
            nv = np.linalg.norm(v)
            if nv > 1e-8:
                U[:, j] = v / nv
                basis = np.column_stack([basis, U[:, j]])
                break
    return U


def jacobi_eigh(S, tol: float = 1e-14):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, Q)`` with eigenvalues ``w`` in ascending order and
    orthonormal eigenvectors in the columns of ``Q``.  Iteration stops when
    the off-diagonal Frobenius mass falls below ``tol`` times the norm of S.
    """
    A = np.array(S, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("expected a square matrix")
    e = _binary_exponent(A)
    A = np.ldexp(A, -e)
    A = 0.5 * (A + A.T)
    Q = np.eye(n)
    norm = np.linalg.norm(A)
    if n <= 1 or norm == 0.0:
        return np.ldexp(np.diag(A), e), Q
    rounds = round_robin(n)
    for _ in range(MAX_SWEEPS):
        offdiag = A - np.diag(np.diag(A))
        if np.linalg.norm(offdiag) <= tol * norm:
            break
        for P, Q_ in rounds:
            if P.size == 0:
                continue
            apq = A[P, Q_]
            act = apq != 0.0
            if not np.any(act):
                continue
            P, R = P[act], Q_[act]
            apq = apq[act]
            with np.errstate(over="ignore"):
                tau = (A[R, R] - A[P, P]) / (2.0 * apq)
                # tau = inf gives t = 0, i.e. no rotation
                t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            ap, ar = A[:, P], A[:, R]
            A[:, P] = c * ap - s * ar
            A[:, R] = s * ap + c * ar
            ap, ar = A[P, :], A[R, :]
            A[P, :] = c[:, None] * ap - s[:, None] * ar
            A[R, :] = s[:, None] * ap + c[:, None] * ar
            qp, qr = Q[:, P], Q[:, R]
            Q[:, P] = c * qp - s * qr
            Q[:, R] = s * qp + c * qr
    else:
        raise ConvergenceError("cyclic Jacobi did not converge")
    w = np.ldexp(np.diag(A), e)
    order = np.argsort(w, kind="stable")
    return w[order], Q[:, order]
