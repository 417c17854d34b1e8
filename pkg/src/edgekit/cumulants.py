"""Cumulant calculus and log-characteristic-function diagnostics.

Everything here works on numbers or on a duck-typed model exposing
`sigma(n)`, `cumulant(n, k)`, and `charfn_deriv(n, t, k)`; no model
classes are imported, the engines live in `edgekit.models`.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "moments_to_cumulants",
    "cumulants_to_moments",
    "log_derivatives",
    "LambdaProfile",
    "log_charfn_profile",
    "DerivativeBoundReport",
    "derivative_bound_check",
    "TailIntegralReport",
    "tail_integral_check",
    "CumulantGrowthReport",
    "cumulant_growth_check",
    "StationaryFit",
    "fit_stationary",
]

# |f| below this is treated as a lost branch: the log profile stops there
_F_FLOOR = 1e-12
# beyond |t| ~ 7 the Gaussian factor is ~1e-11 and double precision noise
# overwhelms relative accuracy of the log derivatives
_T_CAP = 7.0
_JMAX_CAP = 9


def moments_to_cumulants(moments):
    """Cumulants kappa_1..kappa_K from raw moments m_1..m_K."""
    m = [float(x) for x in moments]
    kap = []
    for n in range(1, len(m) + 1):
        acc = m[n - 1]
        for j in range(1, n):
            acc -= math.comb(n - 1, j - 1) * kap[j - 1] * m[n - j - 1]
        kap.append(acc)
    return kap


def cumulants_to_moments(cumulants):
    """Raw moments m_1..m_K from cumulants kappa_1..kappa_K."""
    kap = [float(x) for x in cumulants]
    m = []
    for n in range(1, len(kap) + 1):
        acc = kap[n - 1]
        for j in range(1, n):
            acc += math.comb(n - 1, j - 1) * kap[j - 1] * m[n - j - 1]
        m.append(acc)
    return m


def log_derivatives(fder):
    """Derivatives of log f from derivatives of f.

    fder has rows f, f', .., f^(K); returns rows (log f)', .., (log f)^(K).
    Uses the Leibniz identity f^(n) = sum C(n-1,j) g^(j+1) f^(n-1-j)
    solved for the top term; the only division is by f itself.
    """
    fder = np.asarray(fder)
    kmax = fder.shape[0] - 1
    f0 = fder[0]
    if np.min(np.abs(f0)) < _F_FLOOR:
        raise ValueError("charfn magnitude below %g; shrink the t window" % _F_FLOOR)
    g = np.empty((kmax,) + fder.shape[1:], dtype=complex)
    for n in range(1, kmax + 1):
        acc = fder[n].astype(complex)
        for j in range(n - 1):
            acc -= math.comb(n - 1, j) * g[j] * fder[n - 1 - j]
        g[n - 1] = acc / f0
    return g


@dataclass(frozen=True)
class LambdaProfile:
    """Log charfn of the normalized sum, Gaussian part removed.

    lam(t) = log f_n(t) + t^2/2 where f_n(t) = charfn of S_n/sigma_n,
    with derivative rows 1..jmax; eps_effective = tmax/sigma_n.
    """

    n: int
    sigma: float
    t: np.ndarray
    lam: np.ndarray
    derivs: np.ndarray
    eps_effective: float
    clipped: bool

    def deriv(self, j):
        if not 1 <= j <= self.derivs.shape[0]:
            raise ValueError("have derivatives 1..%d" % self.derivs.shape[0])
        return self.derivs[j - 1]

    def sup_deriv(self, j):
        return float(np.max(np.abs(self.deriv(j))))


def log_charfn_profile(model, n, jmax, eps=None, npts=241, floor=None):
    """Evaluate the centered log charfn of S_n/sigma_n on a symmetric grid.

    The window is |t| <= min(eps*sigma_n, 7); it shrinks further if the
    charfn magnitude falls below the working floor, and `clipped` records
    that. The phase is unwound outward from t = 0. `floor` raises the
    magnitude floor above the default when the caller needs headroom.
    """
    if not 1 <= jmax <= _JMAX_CAP:
        raise ValueError("jmax must be in [1, %d]" % _JMAX_CAP)
    floor = _F_FLOOR if floor is None else max(float(floor), _F_FLOOR)
    sigma = model.sigma(n)
    tmax = _T_CAP if eps is None else min(eps * sigma, _T_CAP)
    if tmax <= 0.0:
        raise ValueError("empty t window")
    npts = int(npts) | 1
    t = np.linspace(-tmax, tmax, npts)
    fder = np.stack(
        [np.atleast_1d(model.charfn_deriv(n, t / sigma, k)) / sigma**k for k in range(jmax + 1)]
    )
    # keep the largest symmetric window around 0 where |f| stays workable
    mag = np.abs(fder[0])
    center = npts // 2
    hi = center
    while hi + 1 < npts and mag[hi + 1] >= floor and mag[npts - 2 - hi] >= floor:
        hi += 1
    clipped = hi < npts - 1
    sl = slice(npts - 1 - hi, hi + 1)
    t = t[sl]
    fder = fder[:, sl]
    center = t.size // 2
    phase = np.unwrap(np.angle(fder[0]))
    phase -= phase[center]
    lam = np.log(np.abs(fder[0])) + 1j * phase + 0.5 * t**2
    derivs = log_derivatives(fder)
    derivs[0] += t
    if derivs.shape[0] >= 2:
        derivs[1] += 1.0
    return LambdaProfile(
        n=n,
        sigma=sigma,
        t=t,
        lam=lam,
        derivs=derivs,
        eps_effective=float(t[-1] / sigma),
        clipped=clipped,
    )


# -- diagnostics across n ----------------------------------------------------


@dataclass(frozen=True)
class DerivativeBoundReport:
    """Scaled sup of log-charfn derivatives across sample sizes.

    values[i, j-1] = sigma_n^(j-2) * sup_t |lam^(j)| for ns[i]; the family
    looks bounded when the largest n stays within slack of the median.
    """

    ns: tuple
    jmax: int
    values: np.ndarray
    eps_effective: np.ndarray
    bounded_per_order: tuple
    bounded: bool


def derivative_bound_check(model, ns, jmax, eps=None, slack=1.5, npts=241):
    ns = tuple(int(n) for n in ns)
    # each log-derivative order divides by f once more and costs about a
    # digit of headroom, so back the magnitude floor off accordingly
    floor = _F_FLOOR * 10.0**jmax
    vals = np.empty((len(ns), jmax))
    eps_eff = np.empty(len(ns))
    for i, n in enumerate(ns):
        prof = log_charfn_profile(model, n, jmax, eps=eps, npts=npts, floor=floor)
        eps_eff[i] = prof.eps_effective
        for j in range(1, jmax + 1):
            vals[i, j - 1] = prof.sigma ** (j - 2) * prof.sup_deriv(j)
    per_order = []
    for j in range(jmax):
        med = float(np.median(vals[:, j]))
        per_order.append(bool(vals[-1, j] <= slack * med + 1e-12))
    return DerivativeBoundReport(
        ns=ns,
        jmax=jmax,
        values=vals,
        eps_effective=eps_eff,
        bounded_per_order=tuple(per_order),
        bounded=all(per_order),
    )


@dataclass(frozen=True)
class TailIntegralReport:
    """Scaled tail mass of the m-th charfn derivative across sample sizes."""

    ns: tuple
    m: int
    c: float
    big: float
    values: np.ndarray
    decrease: float
    tail_decrease: float
    vanishing: bool


def tail_integral_check(model, ns, m, c=0.5, big=8.0, points_per_unit=64.0):
    """Integrate |psi_n^(m)(t)/t| over c <= |t| <= big * sigma_n^(m-3).

    The result is scaled by sigma_n^(-2); a family whose smoothed tails
    die out keeps decreasing, while one with surviving oscillation mass
    flattens onto a plateau. The verdict asks for at least a 20 percent
    drop overall and a 5 percent drop over the final step: a plateau
    reached from above passes the first test but not the second.
    """
    ns = tuple(int(n) for n in ns)
    vals = np.empty(len(ns))
    for i, n in enumerate(ns):
        sigma = model.sigma(n)
        upper = big * sigma ** (m - 3)
        if upper <= c:
            vals[i] = 0.0
            continue
        npts = int(min(max(257, points_per_unit * (upper - c)), 20001)) | 1
        t = np.linspace(c, upper, npts)
        integrand = np.abs(np.atleast_1d(model.charfn_deriv(n, t, m))) / t
        vals[i] = 2.0 * float(np.trapezoid(integrand, t)) / sigma**2
    first, last = vals[0], vals[-1]
    decrease = 0.0 if first == 0.0 else (first - last) / first
    tail = 0.0
    if len(vals) >= 2 and vals[-2] > 0.0:
        tail = (vals[-2] - vals[-1]) / vals[-2]
    return TailIntegralReport(
        ns=ns,
        m=m,
        c=c,
        big=big,
        values=vals,
        decrease=float(decrease),
        tail_decrease=float(tail),
        vanishing=bool(decrease >= 0.20 and tail >= 0.05),
    )


@dataclass(frozen=True)
class CumulantGrowthReport:
    """Per-step cumulant rates kappa_k(S_n)/n across sample sizes."""

    ns: tuple
    kmax: int
    rates: np.ndarray
    bounded_per_order: tuple
    bounded: bool


def cumulant_growth_check(model, ns, kmax, slack=1.5):
    ns = tuple(int(n) for n in ns)
    rates = np.empty((len(ns), kmax))
    for i, n in enumerate(ns):
        kap = model.cumulants(n, kmax)
        rates[i] = np.asarray(kap, dtype=float) / n
    per_order = []
    for k in range(kmax):
        scale = float(np.max(np.abs(rates[:, k])))
        if scale <= 1e-12:
            per_order.append(True)
            continue
        med = float(np.median(np.abs(rates[:, k])))
        per_order.append(bool(abs(rates[-1, k]) <= slack * med + 1e-12))
    return CumulantGrowthReport(
        ns=ns,
        kmax=kmax,
        rates=rates,
        bounded_per_order=tuple(per_order),
        bounded=all(per_order),
    )


# -- stationary fit ----------------------------------------------------------


@dataclass(frozen=True)
class StationaryFit:
    """Affine-in-n description of cumulant growth with geometric transient.

    kappa_k(S_n) ~ n * p[k-1] + q[k-1] + O(delta^n). `accepted` is False
    when some order's residuals refuse to decay, which is the signature
    of genuinely non-stationary dynamics.
    """

    ns: tuple
    kmax: int
    p: np.ndarray
    q: np.ndarray
    residuals: np.ndarray
    delta: float
    accepted: bool
    rejected_orders: tuple

    def variance_rate(self):
        return float(self.p[1])


def fit_stationary(model, ns, kmax=4, noise_floor_rel=1e-8):
    """Fit kappa_k(S_n) = n p_k + q_k on the tail of `ns`, judge the rest.

    The line is fitted on the larger half of the sample sizes where the
    transient has died down; residuals over all of `ns` must then decay
    (last at most half the peak, log-slope clearly below zero) or sit at
    numerical noise. A fitted variance rate p_2 <= 0 raises: every later
    normalization divides by it.
    """
    ns = tuple(int(n) for n in ns)
    if len(ns) < 4:
        raise ValueError("need at least 4 sample sizes to judge a fit")
    kappas = np.empty((len(ns), kmax))
    for i, n in enumerate(ns):
        kappas[i] = np.asarray(model.cumulants(n, kmax), dtype=float)
    narr = np.asarray(ns, dtype=float)
    half = len(ns) // 2
    p = np.empty(kmax)
    q = np.empty(kmax)
    residuals = np.empty_like(kappas)
    rejected = []
    deltas = [0.0]
    for k in range(kmax):
        coef = np.polyfit(narr[half:], kappas[half:, k], 1)
        p[k], q[k] = coef[0], coef[1]
        r = kappas[:, k] - (p[k] * narr + q[k])
        residuals[:, k] = r
        floor = noise_floor_rel * max(1.0, float(np.max(np.abs(kappas[:, k]))))
        peak = float(np.max(np.abs(r)))
        if peak <= floor:
            continue
        live = np.abs(r) > floor
        if np.count_nonzero(live) >= 2:
            slope = np.polyfit(narr[live], np.log(np.abs(r[live])), 1)[0]
            delta_k = math.exp(slope)
        else:
            delta_k = 0.0
        # an oscillating series lets least squares tilt the line so that
        # late residuals look small; demand the transient be dead where
        # the line was fitted, not merely at the last point
        tail_peak = float(np.max(np.abs(r[half:])))
        decays = (
            abs(r[-1]) <= 0.5 * peak and delta_k <= 0.9 and tail_peak <= 0.25 * peak
        )
        if decays:
            deltas.append(min(delta_k, 1.0))
        else:
            rejected.append(k + 1)
    if p[1] <= 0.0:
        raise ValueError("fitted variance rate %g not positive; normalization undefined" % p[1])
    return StationaryFit(
        ns=ns,
        kmax=kmax,
        p=p,
        q=q,
        residuals=residuals,
        delta=float(max(deltas)),
        accepted=not rejected,
        rejected_orders=tuple(rejected),
    )
