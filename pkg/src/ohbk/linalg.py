"""Dense vector helpers and a Jacobi eigensolver for symmetric matrices.

Vectors are plain 1-D ``float64`` numpy arrays. ``SymMatrix`` keeps a full
square buffer and mirrors every write so that entry (i, j) and (j, i) always
agree bit for bit.
"""

from __future__ import annotations

import numpy as np


class DimensionError(ValueError):
    """Operands have incompatible lengths or orders."""


class ConvergenceError(ArithmeticError):
    """The eigensolver hit its sweep cap before the off-diagonal mass vanished."""

    def __init__(self, message, sweeps, off_norm, tol):
        super().__init__(message)
        self.sweeps = sweeps
        self.off_norm = off_norm
        self.tol = tol


JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 50


def as_vector(v):
    """Return ``v`` as a finite, non-empty 1-D float64 array."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"expected a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector has non-finite entries")
    return arr


def _check_same_length(u, v):
    if u.shape != v.shape:
        raise DimensionError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")


def dot(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_same_length(u, v)
    return float(np.dot(u, v))


def norm_sq(v):
    v = np.asarray(v, dtype=np.float64)
    return float(np.dot(v, v))


def axpy(alpha, x, y):
    """Return ``alpha * x + y`` as a new array."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_length(x, y)
    return alpha * x + y


class SymMatrix:
    """Symmetric matrix of order ``n`` stored as a full square buffer."""

    def __init__(self, n):
        if n < 1:
            raise DimensionError("order must be positive")
        self._a = np.zeros((n, n), dtype=np.float64)

    @classmethod
    def from_array(cls, a):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {a.shape}")
        m = cls(a.shape[0])
        # symmetrize from the upper triangle so the mirror property holds exactly
        upper = np.triu(a)
        m._a[...] = upper + np.triu(a, 1).T
        return m

    @classmethod
    def identity(cls, n, scale=1.0):
        m = cls(n)
        np.fill_diagonal(m._a, scale)
        return m

    @property
    def order(self):
        return self._a.shape[0]

    def __getitem__(self, ij):
        return float(self._a[ij])

    def __setitem__(self, ij, value):
        i, j = ij
        self._a[i, j] = value
        self._a[j, i] = value

    def to_array(self):
        """Return a copy of the full square matrix."""
        return self._a.copy()

    def trace(self):
        return float(np.trace(self._a))

    def frobenius_distance(self, other):
        b = other.to_array() if isinstance(other, SymMatrix) else np.asarray(other)
        return float(np.linalg.norm(self._a - b))

    def scale(self, factor):
        """Multiply every entry by ``factor`` in place and return ``self``."""
        self._a *= factor
        return self

    def __repr__(self):
        return f"SymMatrix(order={self.order})"


def rank1_accumulate(M, v, weight=1.0):
    """Add ``weight * v v^T`` to ``M`` in place and return ``M``."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != M.order:
        raise DimensionError(f"vector length {v.shape} does not match order {M.order}")
    if weight == 0.0:
        return M
    # outer(v, v) is exactly symmetric: each entry is the same product v_i * v_j
    M._a += weight * np.outer(v, v)
    return M


def _round_robin_pairs(n):
    """Yield ``n - 1`` (or ``n``) rounds of disjoint index pairs covering all pairs once.

    Standard circle-method tournament schedule; an odd ``n`` gets a dummy
    player whose pairings are dropped.
    """
    m = n + (n % 2)
    players = list(range(m))
    for _ in range(m - 1):
        p = []
        q = []
        for k in range(m // 2):
            i, j = players[k], players[m - 1 - k]
            if i < n and j < n:
                p.append(min(i, j))
                q.append(max(i, j))
        yield np.array(p, dtype=np.intp), np.array(q, dtype=np.intp)
        players = [players[0]] + [players[-1]] + players[1:-1]


def _off_norm(a):
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def sym_eigenvalues(M, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS, method="jacobi"):
    """All eigenvalues of a symmetric matrix, sorted ascending.

    ``method="lapack"`` delegates to ``numpy.linalg.eigvalsh``; it exists for
    large orders where the pure-numpy Jacobi sweeps get slow (order ~ 500+).

    Cyclic Jacobi in round-robin order: each round annihilates a set of
    disjoint off-diagonal pairs at once, and ``n - 1`` rounds make a sweep
    that visits every pair exactly once. Iteration stops when the
    off-diagonal Frobenius norm drops to ``tol`` times the matrix Frobenius
    norm (absolute ``tol`` for a zero matrix).

    Raises
    ------
    ConvergenceError
        If ``max_sweeps`` sweeps do not reach the tolerance.
    """
    a = M.to_array() if isinstance(M, SymMatrix) else np.array(M, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if method == "lapack":
        return np.sort(np.linalg.eigvalsh(a))
    if method != "jacobi":
        raise ValueError(f"unknown eigensolver method {method!r}")
    n = a.shape[0]
    if n == 1:
        return a[0].copy()

    scale = float(np.linalg.norm(a))
    threshold = tol * scale if scale > 0.0 else tol
    schedule = list(_round_robin_pairs(n))

    off = _off_norm(a)
    sweeps = 0
    while off > threshold:
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-diagonal norm {off:.3e} > {threshold:.3e})",
                sweeps=sweeps, off_norm=off, tol=threshold,
            )
        for p, q in schedule:
            apq = a[p, q]
            active = apq != 0.0
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            big = np.abs(theta) > 1e150
            theta_safe = np.where(big, 1.0, theta)
            t = np.sign(theta_safe) / (np.abs(theta_safe) + np.sqrt(theta_safe * theta_safe + 1.0))
            # huge theta: t ~ 1/(2 theta), avoids squaring overflow
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # A <- J^T A J, applied as two row updates: B = J^T A, then J^T B^T
            # (equal to J^T A J because A is symmetric); rows are contiguous
            for _ in range(2):
                rp = a[p, :]
                rq = a[q, :]
                a[p, :] = c[:, None] * rp - s[:, None] * rq
                a[q, :] = s[:, None] * rp + c[:, None] * rq
                a = a.T.copy()
            a[p, q] = 0.0
            a[q, p] = 0.0
        sweeps += 1
        off = _off_norm(a)

    return np.sort(np.diag(a))
