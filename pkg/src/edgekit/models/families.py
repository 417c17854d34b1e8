"""Model wrappers and the builtin model registry.

A model bundles a family of partial-sum laws indexed by the number of
steps n, with caching, exact cumulants, and characteristic-function
derivatives. Two kinds exist: finite-state chains evaluated by the
lattice dynamic program, and iid sums of a piecewise-polynomial base
density evaluated by exact convolution.
"""

import math

import numpy as np

from ..cumulants import cumulants_to_moments, moments_to_cumulants
from .markov import MarkovChainSpec, exact_distribution, variance_decomposition
from .piecewise import PiecewisePolyDistribution, iid_sum

__all__ = [
    "ChainModel",
    "IIDContinuousModel",
    "builtin_model",
    "builtin_model_names",
    "decaying_observable_chain",
]


class ChainModel:
    """Partial sums of observables along a finite-state chain.

    `builder(n)` must return a MarkovChainSpec with n steps whose summed
    observable is mean zero; results are cached per n.
    """

    kind = "chain"
    is_lattice = True

    def __init__(self, name, builder, max_steps=None):
        self.name = name
        self._builder = builder
        self.max_steps = max_steps
        self._specs = {}
        self._dists = {}
        self._blockings = {}

    def spec(self, n):
        if n < 1 or (self.max_steps is not None and n > self.max_steps):
            hi = self.max_steps if self.max_steps is not None else "inf"
            raise ValueError("n=%r outside [1, %s] for model %s" % (n, hi, self.name))
        if n not in self._specs:
            spec = self._builder(n)
            if spec.n_steps != n:
                raise ValueError("builder for %s returned %d steps, wanted %d" % (self.name, spec.n_steps, n))
            self._specs[n] = spec
        return self._specs[n]

    def distribution(self, n):
        if n not in self._dists:
            self._dists[n] = exact_distribution(self.spec(n))
        return self._dists[n]

    def step(self, n):
        return self.distribution(n).step

    def sigma2(self, n):
        return self.distribution(n).variance

    def sigma(self, n):
        return math.sqrt(self.sigma2(n))

    def moment(self, n, q):
        return self.distribution(n).moment(q)

    def cumulants(self, n, kmax):
        moments = [self.moment(n, q) for q in range(1, kmax + 1)]
        return moments_to_cumulants(moments)

    def cumulant(self, n, k):
        return self.cumulants(n, k)[k - 1]

    def charfn_deriv(self, n, t, k=0):
        """Derivatives of the characteristic function of the n-step sum."""
        return self.distribution(n).charfn_deriv(t, k)

    def blocking(self, n, target=None):
        key = (n, target)
        if key not in self._blockings:
            self._blockings[key] = variance_decomposition(self.spec(n), target=target)
        return self._blockings[key]


class IIDContinuousModel:
    """Sums of iid draws from a piecewise-polynomial density.

    The base is centered on construction; cumulants of the sum follow by
    additivity, distributions by exact convolution.
    """

    kind = "iid"
    is_lattice = False

    def __init__(self, name, base, max_steps=64):
        self.name = name
        mu = base.mean
        if abs(mu) > 0.0:
            base = base.shift(-mu)
        self.base = base
        self.max_steps = max_steps
        self._dists = {1: base}
        self._base_moment_cache = {}

    def distribution(self, n):
        if not 1 <= n <= self.max_steps:
            raise ValueError("n=%r outside [1, %d] for model %s" % (n, self.max_steps, self.name))
        if n not in self._dists:
            have = max(m for m in self._dists if m <= n)
            acc = self._dists[have]
            for m in range(have + 1, n + 1):
                acc = acc.convolve(self.base)
                self._dists[m] = acc
        return self._dists[n]

    def base_moment(self, q):
        if q not in self._base_moment_cache:
            self._base_moment_cache[q] = self.base.moment(q)
        return self._base_moment_cache[q]

    def base_cumulants(self, kmax):
        return moments_to_cumulants([self.base_moment(q) for q in range(1, kmax + 1)])

    def cumulants(self, n, kmax):
        return [n * kap for kap in self.base_cumulants(kmax)]

    def cumulant(self, n, k):
        return n * self.base_cumulants(k)[k - 1]

    def sigma2(self, n):
        return self.cumulant(n, 2)

    def sigma(self, n):
        return math.sqrt(self.sigma2(n))

    def moment(self, n, q):
        return cumulants_to_moments(self.cumulants(n, q))[q - 1]

    def charfn_deriv(self, n, t, k=0):
        """Derivatives of psi^n via a product-rule ladder on psi.

        No logarithms, so zeros of psi on the t grid are harmless.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        base = np.stack([np.atleast_1d(self.base.charfn_deriv(t, j)) for j in range(k + 1)])
        cur = base
        binom = [[math.comb(kk, j) for j in range(kk + 1)] for kk in range(k + 1)]
        for _ in range(n - 1):
            nxt = np.empty_like(cur)
            for kk in range(k + 1):
                acc = np.zeros(t.shape, dtype=complex)
                for j in range(kk + 1):
                    acc += binom[kk][j] * cur[j] * base[kk - j]
                nxt[kk] = acc
            cur = nxt
        out = cur[k]
        return out if out.size > 1 else complex(out[0])


# -- builders ----------------------------------------------------------------


def _centered_builder(make_spec):
    """Wrap a spec builder so every step observable has exact mean zero."""

    def build(n):
        spec = make_spec(n)
        means = spec.step_means()
        if np.max(np.abs(means)) == 0.0:
            return spec
        observables = tuple(
            f - mu if mu != 0.0 else f for f, mu in zip(spec.observables, means)
        )
        return MarkovChainSpec(spec.initial, spec.kernels, observables, name=spec.name)

    return build


def decaying_observable_chain(name, kernel, amplitudes, initial=None):
    """Chain with observables a_j * s(X_{j+1}), s = +1 on state 0, -1 elsewhere.

    `amplitudes(j)` gives the step-j amplitude (steps numbered from 1).
    The sign pattern keeps every partial sum on a lattice whenever the
    amplitudes do; means are centered exactly by construction wrapper.
    """
    kernel = np.asarray(kernel, dtype=float)
    nstates = kernel.shape[0]
    signs = -np.ones(nstates)
    signs[0] = 1.0
    if initial is None:
        initial = np.full(nstates, 1.0 / nstates)

    def make(n):
        observables = []
        kernels = (kernel,) * n
        for j in range(1, n + 1):
            observables.append(np.tile(amplitudes(j) * signs, (nstates, 1)))
        return MarkovChainSpec(initial, kernels, tuple(observables), name=name)

    return ChainModel(name, _centered_builder(make))


def _staircase_amplitude(beta):
    """Power-of-two staircase tracking j^(-beta) within a factor of 2.

    Dyadic amplitudes keep every partial sum on an exact lattice the
    dynamic program can enumerate; a genuine power law would force an
    astronomically fine common lattice.
    """

    def amp(j):
        return 2.0 ** (-math.floor(beta * math.log2(j))) if j > 1 else 1.0

    return amp


def _rademacher_model():
    kernel = np.array([[0.5, 0.5], [0.5, 0.5]])
    values = np.array([[1.0, -1.0], [1.0, -1.0]])
    initial = np.array([0.5, 0.5])

    def make(n):
        return MarkovChainSpec.homogeneous(initial, kernel, values, n, name="rademacher")

    return ChainModel("rademacher", make)


def _elliptic2_model():
    # stationary for this kernel: (0.6, 0.4); observable reads the target
    # state indicator, centered to mean zero
    kernel = np.array([[0.8, 0.2], [0.3, 0.7]])
    initial = np.array([0.6, 0.4])
    values = np.array([[-0.4, 0.6], [-0.4, 0.6]])

    def make(n):
        return MarkovChainSpec.homogeneous(initial, kernel, values, n, name="elliptic2")

    return ChainModel("elliptic2", make)


def _symmetric2_model():
    kernel = np.array([[0.65, 0.35], [0.35, 0.65]])
    return decaying_observable_chain("symmetric2", kernel, _staircase_amplitude(0.5))


def _flip2_model():
    # period-2 kernels: genuinely inhomogeneous, so single-geometry
    # stationary fits must be rejected
    k_a = np.array([[0.9, 0.1], [0.2, 0.8]])
    k_b = np.array([[0.3, 0.7], [0.6, 0.4]])
    values = np.array([[1.0, -1.0], [1.0, -1.0]])
    initial = np.array([0.5, 0.5])

    def make(n):
        kernels = tuple(k_a if j % 2 == 0 else k_b for j in range(n))
        return MarkovChainSpec(initial, kernels, (values,) * n, name="flip2")

    return ChainModel("flip2", _centered_builder(make))


def _uniform_model():
    return IIDContinuousModel("uniform", PiecewisePolyDistribution.uniform(-1.0, 1.0))


_BUILTINS = {
    "rademacher": _rademacher_model,
    "uniform": _uniform_model,
    "elliptic2": _elliptic2_model,
    "symmetric2": _symmetric2_model,
    "flip2": _flip2_model,
}


def builtin_model_names():
    return sorted(_BUILTINS) + ["decay:<beta>"]


def builtin_model(token):
    """Look up a builtin model by name; fresh instance each call."""
    if token in _BUILTINS:
        return _BUILTINS[token]()
    if token.startswith("decay:"):
        try:
            beta = float(token.split(":", 1)[1])
        except ValueError:
            raise ValueError("malformed decay model token %r" % token) from None
        if not 0.0 <= beta < 0.5:
            raise ValueError("decay exponent must satisfy 0 <= beta < 1/2, got %r" % beta)
        kernel = np.array([[0.65, 0.35], [0.35, 0.65]])
        return decaying_observable_chain("decay:%g" % beta, kernel, _staircase_amplitude(beta))
    raise ValueError("unknown model %r; builtins: %s" % (token, ", ".join(builtin_model_names())))
