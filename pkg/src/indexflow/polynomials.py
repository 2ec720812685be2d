"""Matrix-valued polynomials in one real variable.

Coefficients are stored in ascending powers with shape ``(deg + 1, rows, cols)``.
"""
import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import ArgumentError


class MatPoly:
    """Polynomial ``sum_j c[j] t^j`` with matrix coefficients ``c[j]``."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=complex)
        if c.ndim == 2:
            c = c[None]
        if c.ndim != 3:
            raise ArgumentError(f"coefficient array must be 3-d, got shape {c.shape}")
        # trim trailing zero coefficients but keep the constant term
        nz = np.flatnonzero(np.any(c.reshape(c.shape[0], -1) != 0, axis=1))
        deg = nz[-1] if nz.size else 0
        self.c = c[:deg + 1]

    @classmethod
    def constant(cls, M):
        return cls(np.asarray(M, dtype=complex)[None])

    @classmethod
    def zeros(cls, rows, cols=None):
        return cls(np.zeros((1, rows, rows if cols is None else cols)))

    @classmethod
    def identity(cls, n):
        return cls.constant(np.eye(n))

    @classmethod
    def monomial(cls, M, power):
        c = np.zeros((power + 1,) + np.shape(M), dtype=complex)
        c[power] = M
        return cls(c)

    @property
    def shape(self):
        return self.c.shape[1:]

    @property
    def degree(self):
        return self.c.shape[0] - 1

    def __call__(self, t):
        # Horner; ``t`` is a scalar
        out = self.c[-1].copy()
        for cj in self.c[-2::-1]:
            out = out * t + cj
        return out

    def evaluate_many(self, ts):
        """Values at an array of points, shape ``(len(ts), rows, cols)``."""
        ts = np.asarray(ts, dtype=float)
        V = np.vander(np.atleast_1d(ts), self.c.shape[0], increasing=True)
        return np.tensordot(V, self.c, axes=(1, 0))

    def deriv(self, k=1):
        if k == 0:
            return self
        if self.degree < k:
            return MatPoly(np.zeros((1,) + self.shape))
        return MatPoly(npoly.polyder(self.c, k, axis=0))

    def adjoint(self):
        return MatPoly(np.conj(np.swapaxes(self.c, 1, 2)))

    def __add__(self, other):
        if not isinstance(other, MatPoly):
            other = MatPoly.constant(np.broadcast_to(other, self.shape))
        a, b = self.c, other.c
        if a.shape[1:] != b.shape[1:]:
            raise ArgumentError("shape mismatch in polynomial sum")
        out = np.zeros((max(len(a), len(b)),) + a.shape[1:], dtype=complex)
        out[:len(a)] += a
        out[:len(b)] += b
        return MatPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return MatPoly(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        return MatPoly(self.c * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        a, b = self.c, other.c
        out = np.zeros((len(a) + len(b) - 1, a.shape[1], b.shape[2]), dtype=complex)
        for i in range(len(a)):
            out[i:i + len(b)] += np.einsum("ij,kjl->kil", a[i], b)
        return MatPoly(out)

    def integral_from_zero(self, t):
        """``int_0^t`` of the polynomial."""
        return MatPoly(npoly.polyint(self.c, 1, axis=0))(t)

    def to_list(self):
        """Nested ``[re, im]`` lists, ascending powers."""
        return [[[[float(z.real) + 0.0, float(z.imag) + 0.0] for z in row] for row in cj]
                for cj in self.c]

    @classmethod
    def from_list(cls, data):
        a = np.asarray(data, dtype=float)
        if a.ndim != 4 or a.shape[-1] != 2:
            raise ArgumentError("polynomial data must have shape (deg+1, rows, cols, 2)")
        return cls(a[..., 0] + 1j * a[..., 1])

    def allclose(self, other, tol=1e-12):
        d = self - other
        return bool(np.max(np.abs(d.c)) <= tol)

    def __repr__(self):
        return f"MatPoly(degree={self.degree}, shape={self.shape})"
