"""Complex sparse matrices and reusable direct factorizations.

Thin, immutable CSR wrapper backed by scipy.sparse for products and by
SuperLU for the one-time factorization of the time-independent operator
L1 = M + i*tau/2*(A + M_V).  Direct factorization (not Krylov) is the
point: one factorization is amortized over every time step of a run, so
the module keeps a global factorization counter that tests assert on.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import FactorizationError

_factorize_count = 0


def factorize_count():
    """Number of factorize() calls since import (instrumentation)."""
    return _factorize_count


class SparseMatrix:
    """Square sparse matrix in CSR layout with sorted, unique column indices.

    Values may be real or complex; all arithmetic that needs it promotes
    to complex128.  Instances are immutable after construction and safe
    for concurrent reads.
    """

    __slots__ = ("n", "indptr", "indices", "data", "_sp")

    def __init__(self, indptr, indices, data, n=None):
        indptr = np.asarray(indptr)
        indices = np.asarray(indices)
        data = np.asarray(data)
        if n is None:
            n = indptr.size - 1
        if indptr.size != n + 1 or indices.shape != data.shape:
            raise ValueError("inconsistent CSR arrays")
        self.n = int(n)
        self.indptr = indptr
        self.indices = indices
        self.data = data
        m = sp.csr_matrix((data, indices, indptr), shape=(self.n, self.n), copy=False)
        m.has_sorted_indices = True
        self._sp = m

    @classmethod
    def from_scipy(cls, mat):
        m = sp.csr_matrix(mat)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.indptr, m.indices, m.data, m.shape[0])

    @classmethod
    def from_dense(cls, arr):
        return cls.from_scipy(sp.csr_matrix(np.asarray(arr)))

    def to_scipy(self):
        return self._sp

    def to_dense(self):
        return self._sp.toarray()

    @property
    def nnz(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def __matmul__(self, x):
        return spmv(self, x)

    def conjugate_transpose_dot(self, x, y):
        """<x, self @ y> with the conjugation on x (sesquilinear form)."""
        return np.vdot(x, self._sp @ y)

    def __repr__(self):
        return f"SparseMatrix(n={self.n}, nnz={self.nnz}, dtype={self.dtype})"


def axpy_combine(coeffs, mats):
    """Entrywise linear combination sum_k coeffs[k] * mats[k].

    Patterns are unioned; dimensions must agree.
    """
    if len(coeffs) != len(mats) or not mats:
        raise ValueError("need matching, nonempty coefficient/matrix lists")
    n = mats[0].n
    if any(m.n != n for m in mats):
        raise ValueError("dimension mismatch in axpy_combine")
    acc = None
    for c, m in zip(coeffs, mats):
        term = m.to_scipy() * c
        acc = term if acc is None else acc + term
    return SparseMatrix.from_scipy(acc)


def spmv(mat, x):
    """Matrix-vector product."""
    x = np.asarray(x)
    if x.shape != (mat.n,):
        raise ValueError(f"vector of length {x.shape} against matrix of size {mat.n}")
    return mat.to_scipy() @ x


class Factorization:
    """Opaque LU factors of a SparseMatrix, reusable across solves.

    A factorization of a real matrix transparently solves complex
    right-hand sides by splitting them into real and imaginary parts.
    """

    __slots__ = ("n", "dtype", "_lu")

    def __init__(self, n, dtype, lu):
        self.n = n
        self.dtype = dtype
        self._lu = lu

    def solve(self, rhs):
        rhs = np.asarray(rhs)
        if rhs.shape != (self.n,):
            raise ValueError(f"rhs of length {rhs.shape} against factors of size {self.n}")
        if np.iscomplexobj(rhs) and not np.issubdtype(self.dtype, np.complexfloating):
            return self._lu.solve(np.ascontiguousarray(rhs.real)) + 1j * self._lu.solve(
                np.ascontiguousarray(rhs.imag)
            )
        return self._lu.solve(rhs.astype(self.dtype, copy=False))


def factorize(mat):
    """LU-factorize with a fill-reducing ordering; counted globally.

    Raises FactorizationError on numerically singular pivots, which in
    practice signals a misconfigured time step or mesh.
    """
    global _factorize_count
    _factorize_count += 1
    csc = mat.to_scipy().tocsc()
    try:
        lu = spla.splu(csc, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise FactorizationError(f"sparse LU failed: {exc}") from exc
    return Factorization(mat.n, mat.dtype, lu)


def solve(fact, rhs):
    """Solve with precomputed factors: residual <= 1e-12 * ||rhs|| by contract."""
    return fact.solve(rhs)
