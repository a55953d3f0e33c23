"""Truncated operator power series in the perturbation strength."""

from __future__ import annotations

import math

import numpy as np

from .errors import DegreeOverflow


class OperatorPolynomial:
    """Matrix-valued polynomial sum_j c_j eps^j, truncated at max_degree.

    All arithmetic silently drops terms beyond max_degree, which is exactly
    the bookkeeping needed for order-by-order constructions.
    """

    def __init__(self, max_degree: int, coeffs=None, dim=None):
        if max_degree < 0:
            raise DegreeOverflow("negative degree")
        self.n = max_degree
        if coeffs is not None:
            coeffs = [np.asarray(c, dtype=complex) for c in coeffs]
            if len(coeffs) > max_degree + 1:
                raise DegreeOverflow(
                    f"{len(coeffs)} coefficients exceed degree {max_degree}")
            dim = coeffs[0].shape[0]
        self.dim = dim
        self.coeffs = [np.zeros((dim, dim), dtype=complex)
                       for _ in range(max_degree + 1)]
        if coeffs is not None:
            for j, c in enumerate(coeffs):
                self.coeffs[j] = c

    @classmethod
    def constant(cls, x: np.ndarray, max_degree: int) -> "OperatorPolynomial":
        p = cls(max_degree, dim=x.shape[0])
        p.coeffs[0] = np.asarray(x, dtype=complex)
        return p

    def coeff(self, j: int) -> np.ndarray:
        return self.coeffs[j] if j <= self.n else np.zeros((self.dim, self.dim), complex)

    def __add__(self, other):
        out = OperatorPolynomial(self.n, dim=self.dim)
        for j in range(self.n + 1):
            out.coeffs[j] = self.coeffs[j] + other.coeff(j)
        return out

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        out = OperatorPolynomial(self.n, dim=self.dim)
        for j in range(self.n + 1):
            out.coeffs[j] = scalar * self.coeffs[j]
        return out

    __rmul__ = __mul__

    def __matmul__(self, other):
        out = OperatorPolynomial(self.n, dim=self.dim)
        for j in range(self.n + 1):
            acc = out.coeffs[j]
            for i in range(j + 1):
                acc += self.coeffs[i] @ other.coeff(j - i)
        return out

    def commutator(self, other) -> "OperatorPolynomial":
        return (self @ other) - (other @ self)

    def shift(self, by: int) -> "OperatorPolynomial":
        """Multiply by eps^by (degree-shift, truncating the top)."""
        out = OperatorPolynomial(self.n, dim=self.dim)
        for j in range(self.n + 1 - by):
            out.coeffs[j + by] = self.coeffs[j]
        return out

    def evaluate(self, eps: float) -> np.ndarray:
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for j in range(self.n, -1, -1):
            total = total * eps + self.coeffs[j]
        return total

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(np.abs(c).max() <= tol for c in self.coeffs)


def adjoint_series(s_poly: OperatorPolynomial, x: np.ndarray,
                   n: int) -> OperatorPolynomial:
    """Truncated expansion of e^{-i eps S} X e^{+i eps S}.

    ``s_poly`` represents eps*S = sum_{j>=1} eps^j A_j, so its constant
    coefficient must vanish; then ad_{eps S}^m raises the degree by at
    least m and the series terminates at m = n:

        sum_m ((-i)^m / m!) ad_{eps S}^m (X).
    """
    if np.abs(s_poly.coeff(0)).max() > 0:
        raise DegreeOverflow("eps*S must have zero constant coefficient")
    out = OperatorPolynomial.constant(x, n)
    term = OperatorPolynomial.constant(x, n)
    for m in range(1, n + 1):
        term = s_poly.commutator(term)
        out = out + ((-1j) ** m / math.factorial(m)) * term
        if term.is_zero():
            break
    return out


def integrated_adjoint_series(s_poly: OperatorPolynomial, y_poly: OperatorPolynomial,
                              n: int) -> OperatorPolynomial:
    """Truncation of int_0^1 e^{-i lam eps S} Y e^{+i lam eps S} d lam.

    The lambda integral turns the m-th term's 1/m! into 1/(m+1)!:
        sum_m ((-i)^m / ((m+1) m!)) ad_{eps S}^m (Y).
    ``y_poly`` carries its own eps powers (e.g. eps*S-dot).
    """
    if np.abs(s_poly.coeff(0)).max() > 0:
        raise DegreeOverflow("eps*S must have zero constant coefficient")
    out = OperatorPolynomial(n, dim=y_poly.dim)
    term = y_poly
    out = out + term
    for m in range(1, n + 1):
        term = s_poly.commutator(term)
        out = out + ((-1j) ** m / ((m + 1) * math.factorial(m))) * term
        if term.is_zero():
            break
    return out
