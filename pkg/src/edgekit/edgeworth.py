"""Higher-order Gaussian corrections for normalized sums.

The order-m approximation to the law of W = S_n/sigma_n is

    F(x) = Phi(x) - phi(x) * sum_{j=1}^{m-2} sigma_n^(-j) H_j(x)

where each correction polynomial H_j collects one power of the expansion
parameter. Its terms are indexed by multiplicity tuples (k_1, .., k_L)
with sum l*k_l = j: the tuple contributes

    [prod_l 1/(k_l! ((l+2)!)^k_l)] * [prod_l (kappa_{l+2}/sigma^2)^k_l]
        * He_{k-1},   k = sum_l (l+2) k_l = j + 2 sum_l k_l.

With j = 1 and j = 2 this reproduces the familiar skewness and kurtosis
corrections (coefficients 1/6, 1/24, 1/72).
"""

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .special import DensePolynomial, hermite, normal_cdf, normal_pdf

__all__ = [
    "enumerate_correction_tuples",
    "correction_coefficient",
    "correction_polynomial",
    "hermite_coefficients",
    "EdgeworthExpansion",
    "build_expansion",
    "expansion_from_cumulants",
    "stationary_shape_rates",
    "limit_correction_polynomial",
    "stationary_expansion",
    "coefficient_distance",
]

_ORDER_MIN = 3
_ORDER_MAX = 16
_X_CLAMP = 40.0


@lru_cache(maxsize=None)
def enumerate_correction_tuples(j):
    """Multiplicity tuples (k_1, .., k_L) with sum l*k_l = j, k_L != 0.

    Deterministic order, first coordinate greedy: j = 3 gives
    (3,), (1, 1), (0, 0, 1).
    """
    if j < 1:
        raise ValueError("weight must be at least 1")
    out = []

    def rec(part, rem, acc):
        if rem == 0:
            last = len(acc)
            while last > 0 and acc[last - 1] == 0:
                last -= 1
            out.append(tuple(acc[:last]))
            return
        if part > rem:
            return
        for cnt in range(rem // part, -1, -1):
            rec(part + 1, rem - part * cnt, acc + [cnt])

    rec(1, j, [])
    return tuple(out)


def tuple_weight(tup):
    return sum(l * k for l, k in enumerate(tup, start=1))


def tuple_hermite_order(tup):
    """k = sum (l+2) k_l = weight + 2 * count."""
    return sum((l + 2) * k for l, k in enumerate(tup, start=1))


def correction_coefficient(tup):
    """Exact combinatorial weight prod 1/(k_l! ((l+2)!)^k_l)."""
    c = Fraction(1)
    for l, k in enumerate(tup, start=1):
        c /= Fraction(math.factorial(k)) * Fraction(math.factorial(l + 2)) ** k
    return c


def correction_polynomial(j, scaled_cumulants):
    """H_j built from scaled cumulants c_l = kappa_{l+2}(S_n)/sigma_n^2.

    `scaled_cumulants[l-1]` is c_l; orders up to l = j are used.
    """
    if len(scaled_cumulants) < j:
        raise ValueError("weight %d needs scaled cumulants up to order %d" % (j, j + 2))
    acc = DensePolynomial((0.0,))
    for tup in enumerate_correction_tuples(j):
        coef = float(correction_coefficient(tup))
        for l, k in enumerate(tup, start=1):
            coef *= scaled_cumulants[l - 1] ** k
        if coef != 0.0:
            acc = acc + hermite(tuple_hermite_order(tup) - 1).scale(coef)
    return acc


def hermite_coefficients(poly):
    """Expand a polynomial over He_0, He_1, ... (exact triangular solve)."""
    residual = list(poly.coeffs)
    out = {}
    for deg in range(len(residual) - 1, -1, -1):
        c = residual[deg]
        if c == 0.0:
            continue
        out[deg] = c
        for exp, hc in enumerate(hermite(deg).coeffs):
            residual[exp] -= c * hc
    return out


class EdgeworthExpansion:
    """Order-m corrected Gaussian approximation for a normalized sum.

    Holds the correction polynomials H_1..H_{m-2} and the scale sigma_n;
    evaluation never re-derives them, so a truncation shares the exact
    coefficients of the full build.
    """

    def __init__(self, sigma, polys, name=""):
        if not sigma > 0.0:
            raise ValueError("sigma must be positive")
        order = len(polys) + 2
        if not _ORDER_MIN <= order <= _ORDER_MAX:
            raise ValueError("expansion order must be in [%d, %d]" % (_ORDER_MIN, _ORDER_MAX))
        self.sigma = float(sigma)
        self.polys = tuple(
            p if isinstance(p, DensePolynomial) else DensePolynomial(p) for p in polys
        )
        self.name = name
        x = DensePolynomial((0.0, 1.0))
        # pdf(x) = phi(x) [1 + sum_j sigma^-j (x H_j - H_j')], from
        # He_k = x He_{k-1} - He_{k-1}'
        self.density_polys = tuple(x * h - h.derivative() for h in self.polys)
        self._hermite_coefs = tuple(hermite_coefficients(d) for d in self.density_polys)

    @property
    def order(self):
        return len(self.polys) + 2

    @property
    def corrections(self):
        return len(self.polys)

    def truncated(self, r):
        """Keep only corrections of weight <= r (same coefficients)."""
        if not 1 <= r <= self.corrections:
            raise ValueError("have corrections 1..%d" % self.corrections)
        return EdgeworthExpansion(self.sigma, self.polys[:r], name=self.name)

    def correction_sum(self, x, polys):
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x)
        for j, p in enumerate(polys, start=1):
            acc += self.sigma ** (-j) * p(x)
        return acc

    def cdf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xa = np.clip(x, -_X_CLAMP, _X_CLAMP)
        out = normal_cdf(xa) - normal_pdf(xa) * self.correction_sum(xa, self.polys)
        return out if out.size > 1 else float(out[0])

    def pdf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xa = np.clip(x, -_X_CLAMP, _X_CLAMP)
        out = normal_pdf(xa) * (1.0 + self.correction_sum(xa, self.density_polys))
        return out if out.size > 1 else float(out[0])

    def charfn(self, t):
        """exp(-t^2/2) (1 + P(it)) with P read off the density polynomials."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        it = 1j * t
        acc = np.ones(t.shape, dtype=complex)
        for j, coefs in enumerate(self._hermite_coefs, start=1):
            w = self.sigma ** (-j)
            for k, b in coefs.items():
                acc += w * b * it**k
        out = np.exp(-0.5 * t**2) * acc
        return out if out.size > 1 else complex(out[0])

    def moment(self, q):
        """Exact q-th moment of the signed measure."""
        if q < 0:
            raise ValueError("moment order must be nonnegative")
        total = _gaussian_moment(q)
        for j, coefs in enumerate(self._hermite_coefs, start=1):
            w = self.sigma ** (-j)
            for k, b in coefs.items():
                total += w * b * _hermite_projection(q, k)
        return total

    # -- text record ---------------------------------------------------------

    def to_text(self):
        lines = ["order %d" % self.order, "sigma %.17e" % self.sigma]
        if self.name:
            lines.insert(0, "# %s" % self.name)
        for j, p in enumerate(self.polys, start=1):
            lines.append("poly %d %s" % (j, " ".join("%.17e" % c for c in p.coeffs)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        order = None
        sigma = None
        polys = {}
        name = ""
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                name = line[1:].strip()
                continue
            parts = line.split()
            if parts[0] == "order":
                order = int(parts[1])
            elif parts[0] == "sigma":
                sigma = float(parts[1])
            elif parts[0] == "poly":
                polys[int(parts[1])] = tuple(float(v) for v in parts[2:])
            else:
                raise ValueError("unrecognized record line %r" % line)
        if order is None or sigma is None:
            raise ValueError("record is missing order or sigma")
        if sorted(polys) != list(range(1, order - 1)):
            raise ValueError("record needs polys 1..%d" % (order - 2))
        return cls(sigma, [polys[j] for j in range(1, order - 1)], name=name)


def _gaussian_moment(q):
    if q % 2:
        return 0.0
    return float(math.factorial(q) // (2 ** (q // 2) * math.factorial(q // 2)))


def _hermite_projection(q, k):
    """int x^q He_k(x) phi(x) dx, exactly."""
    if k > q or (q - k) % 2:
        return 0.0
    s = (q - k) // 2
    return float(math.factorial(q) // (2**s * math.factorial(s)))


def build_expansion(model, n, m):
    """Order-m expansion for S_n/sigma_n from exact model cumulants."""
    if not _ORDER_MIN <= m <= _ORDER_MAX:
        raise ValueError("expansion order must be in [%d, %d]" % (_ORDER_MIN, _ORDER_MAX))
    kappas = [float(k) for k in model.cumulants(n, m)]
    return expansion_from_cumulants(kappas, name="%s n=%d" % (getattr(model, "name", "?"), n))


def expansion_from_cumulants(kappas, name=""):
    """Expansion of order m = len(kappas) from cumulants of the raw sum."""
    m = len(kappas)
    if not _ORDER_MIN <= m <= _ORDER_MAX:
        raise ValueError("need between %d and %d cumulants" % (_ORDER_MIN, _ORDER_MAX))
    sigma2 = kappas[1]
    if not sigma2 > 0.0:
        raise ValueError("second cumulant must be positive")
    sigma = math.sqrt(sigma2)
    if abs(kappas[0]) > 1e-8 * sigma:
        raise ValueError("first cumulant %g is not zero; center the sum" % kappas[0])
    scaled = [kappas[l + 1] / sigma2 for l in range(1, m - 1)]
    polys = [correction_polynomial(j, scaled) for j in range(1, m - 1)]
    return EdgeworthExpansion(sigma, polys, name=name)


# -- stationary-geometry limits ----------------------------------------------


def stationary_shape_rates(p, q):
    """Shape rates from affine cumulant growth kappa_k ~ n p_k + q_k.

    Returns (beta, alpha) with beta_l = p_{l+2}/p_2 and
    alpha_l = q_{l+2} - q_2 p_{l+2}/p_2, so that the scaled cumulant is
    exactly beta_l + alpha_l/sigma_n^2 whenever the growth is exactly
    affine. beta drives the n-free limit polynomials, alpha the 1/sigma^2
    corrections.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.size != q.size or p.size < 3:
        raise ValueError("need matching rates up to order 3 at least")
    if not p[1] > 0.0:
        raise ValueError("variance rate must be positive")
    beta = p[2:] / p[1]
    alpha = q[2:] - q[1] * p[2:] / p[1]
    return beta, alpha


def limit_correction_polynomial(j, beta):
    """Large-n limit of H_j under stationary cumulant growth."""
    return correction_polynomial(j, list(beta))


def stationary_expansion(p, q, n, m):
    """Expansion predicted by fitted affine cumulant growth at size n."""
    kappas = [n * p[k] + q[k] for k in range(m)]
    return expansion_from_cumulants(kappas, name="stationary n=%d" % n)


def coefficient_distance(a, b):
    """Max absolute coefficient difference of two polynomials."""
    ca, cb = list(a.coeffs), list(b.coeffs)
    width = max(len(ca), len(cb))
    ca += [0.0] * (width - len(ca))
    cb += [0.0] * (width - len(cb))
    return max(abs(x - y) for x, y in zip(ca, cb))
