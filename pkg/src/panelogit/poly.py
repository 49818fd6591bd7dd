"""Dense univariate polynomials with float coefficients.

A polynomial is stored as a coefficient vector ``coeffs`` with
``coeffs[k]`` multiplying ``A**k``.  Trailing zeros are trimmed on
construction, so ``degree == len(coeffs) - 1`` except for the zero
polynomial, which has ``degree == -1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["PolyA", "poly_from_linear_factors"]

_TRIM_TOL = 0.0  # exact zeros only; rounding noise is meaningful data here


def _trim(c: np.ndarray) -> np.ndarray:
    n = len(c)
    while n > 0 and c[n - 1] == _TRIM_TOL:
        n -= 1
    return c[:n]


@dataclass(frozen=True)
class PolyA:
    """Polynomial in the transformed fixed effect A."""

    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        c = _trim(np.atleast_1d(np.asarray(self.coeffs, dtype=float)).ravel())
        object.__setattr__(self, "coeffs", c)
        self.coeffs.flags.writeable = False

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, A):
        """Evaluate at scalar or array A (Horner)."""
        A = np.asarray(A, dtype=float)
        out = np.zeros_like(A)
        for c in self.coeffs[::-1]:
            out = out * A + c
        return out if out.ndim else float(out)

    def __add__(self, other: "PolyA") -> "PolyA":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = a.copy()
        out[: len(b)] += b
        return PolyA(out)

    def __sub__(self, other: "PolyA") -> "PolyA":
        return self + (other * -1.0)

    def __mul__(self, other):
        if isinstance(other, PolyA):
            if len(self.coeffs) == 0 or len(other.coeffs) == 0:
                return PolyA()
            return PolyA(np.convolve(self.coeffs, other.coeffs))
        return PolyA(self.coeffs * float(other))

    __rmul__ = __mul__

    def shift(self, k: int) -> "PolyA":
        """Multiply by A**k."""
        if len(self.coeffs) == 0:
            return self
        return PolyA(np.concatenate([np.zeros(k), self.coeffs]))

    def padded(self, length: int) -> np.ndarray:
        """Coefficients padded with zeros to ``length`` entries."""
        out = np.zeros(length)
        out[: len(self.coeffs)] = self.coeffs
        return out


def poly_from_linear_factors(multipliers) -> PolyA:
    """Expand ``prod_i (1 + m_i * A)`` by coefficient convolution."""
    c = np.array([1.0])
    for m in multipliers:
        c = np.convolve(c, [1.0, float(m)])
    return PolyA(c)
