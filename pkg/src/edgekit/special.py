"""Dense polynomials, Hermite polynomials and Gaussian primitives.

Everything downstream (correction polynomials, expansion evaluation,
quantile coupling) reduces to polynomial algebra against the standard
normal weight, so this module keeps those primitives in one place.
Hermite polynomials are the probabilists' family: He_{k+1} = x He_k - k He_{k-1}.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

__all__ = [
    "DensePolynomial",
    "hermite",
    "hermite_value",
    "normal_pdf",
    "normal_cdf",
    "gaussian_derivative",
    "gaussian_partial_moments",
]

_HERMITE_MAX = 64


@dataclass(frozen=True)
class DensePolynomial:
    """Polynomial sum_k coeffs[k] * x**k with dense ascending coefficients.

    Immutable; trailing exact zeros are stripped on construction so that
    degree == len(coeffs) - 1 always holds (the zero polynomial keeps a
    single 0.0 coefficient).
    """

    coeffs: tuple

    def __init__(self, coeffs):
        cs = [float(c) for c in coeffs]
        if not cs:
            cs = [0.0]
        while len(cs) > 1 and cs[-1] == 0.0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c in reversed(self.coeffs):
            out = out * x + c
        return out if out.ndim else float(out)

    def __add__(self, other):
        other = _as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = np.zeros(n)
        a[: len(self.coeffs)] = self.coeffs
        a[: len(other.coeffs)] += other.coeffs
        return DensePolynomial(a)

    __radd__ = __add__

    def __sub__(self, other):
        return self + _as_poly(other).scale(-1.0)

    def scale(self, c):
        return DensePolynomial([c * a for a in self.coeffs])

    def __mul__(self, other):
        if np.isscalar(other):
            return self.scale(float(other))
        other = _as_poly(other)
        return DensePolynomial(np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def compose_affine(self, a, b):
        """Return the polynomial p(a*x + b)."""
        out = DensePolynomial([0.0])
        lin = DensePolynomial([b, a])
        for c in reversed(self.coeffs):
            out = out * lin + DensePolynomial([c])
        return out

    def derivative(self):
        if len(self.coeffs) == 1:
            return DensePolynomial([0.0])
        return DensePolynomial([k * c for k, c in enumerate(self.coeffs)][1:])

    def antiderivative(self):
        return DensePolynomial([0.0] + [c / (k + 1) for k, c in enumerate(self.coeffs)])


def _as_poly(p):
    if isinstance(p, DensePolynomial):
        return p
    if np.isscalar(p):
        return DensePolynomial([float(p)])
    raise TypeError("expected DensePolynomial or scalar, got %r" % (p,))


def hermite(k):
    """Probabilists' Hermite polynomial He_k as a DensePolynomial.

    Coefficients are built with integer arithmetic before conversion to
    float, so they are exact as long as they fit a double (k <= 64 is
    supported; beyond that coefficient growth makes the dense form
    meaningless and a ValueError is raised).
    """
    if not 0 <= k <= _HERMITE_MAX:
        raise ValueError("hermite order must be in [0, %d], got %r" % (_HERMITE_MAX, k))
    hk_prev = [1]
    if k == 0:
        return DensePolynomial(hk_prev)
    hk = [0, 1]
    for j in range(1, k):
        # He_{j+1} = x He_j - j He_{j-1}, exact in int
        nxt = [0] + hk
        for i, c in enumerate(hk_prev):
            nxt[i] -= j * c
        hk_prev, hk = hk, nxt
    return DensePolynomial(hk)


def hermite_value(k, x):
    """Evaluate He_k(x) by the three-term recurrence (stable for large k)."""
    if not 0 <= k <= _HERMITE_MAX:
        raise ValueError("hermite order must be in [0, %d], got %r" % (_HERMITE_MAX, k))
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return prev if prev.ndim else float(prev)
    cur = x.copy()
    for j in range(1, k):
        prev, cur = cur, x * cur - j * prev
    return cur if cur.ndim else float(cur)


def normal_pdf(x):
    x = _check_finite(x)
    out = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
    return out if out.ndim else float(out)


def normal_cdf(x):
    """Standard normal CDF via the complementary error function.

    Accurate to ~1e-16 relative in the body and in both tails; the naive
    0.5*(1+erf) form loses the lower tail and is deliberately avoided.
    """
    x = _check_finite(x)
    out = _sp.ndtr(x)
    return out if out.ndim else float(out)


def _check_finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("argument must be finite")
    return x


def gaussian_derivative(k, x):
    """k-th derivative of the standard normal density.

    Uses phi^(k)(x) = (-1)^k He_k(x) phi(x) with He_k evaluated by
    recurrence, so no dense coefficients enter and the result stays
    accurate for k up to the hermite cap.
    """
    sign = -1.0 if k % 2 else 1.0
    x = _check_finite(x)
    out = sign * hermite_value(k, x) * normal_pdf(x)
    return out if np.ndim(out) else float(out)


def gaussian_partial_moments(kmax, a, b):
    """Partial moments M_k = int_a^b y^k phi(y) dy for k = 0..kmax.

    Stable two-term recurrence:
        M_0 = Phi(b) - Phi(a)
        M_1 = phi(a) - phi(b)
        M_k = a^{k-1} phi(a) - b^{k-1} phi(b) + (k-1) M_{k-2}
    Infinite endpoints are allowed (their boundary terms vanish).
    """
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    a = float(a)
    b = float(b)
    if not a <= b:
        raise ValueError("need a <= b, got (%g, %g)" % (a, b))
    phi_a = 0.0 if np.isinf(a) else float(normal_pdf(a))
    phi_b = 0.0 if np.isinf(b) else float(normal_pdf(b))
    cdf_a = 0.0 if a == -np.inf else 1.0 if a == np.inf else float(normal_cdf(a))
    cdf_b = 1.0 if b == np.inf else 0.0 if b == -np.inf else float(normal_cdf(b))
    out = np.empty(kmax + 1)
    out[0] = cdf_b - cdf_a
    if kmax >= 1:
        out[1] = phi_a - phi_b
    pow_a, pow_b = 1.0, 1.0
    for k in range(2, kmax + 1):
        pow_a = 0.0 if np.isinf(a) else pow_a * a
        pow_b = 0.0 if np.isinf(b) else pow_b * b
        out[k] = pow_a * phi_a - pow_b * phi_b + (k - 1) * out[k - 2]
    return out
