"""Finite-state inhomogeneous Markov chains with additive functionals.

The central object is the exact distribution of the centered functional

    S_n = sum_j (f_j(X_j, X_{j+1}) - E f_j(X_j, X_{j+1}))

computed by dynamic programming over (state, lattice cell). Everything
is deterministic; the only approximation is the snap of observable
values to a common arithmetic lattice, which is validated to 1e-9.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .lattice import LatticeDistribution

__all__ = [
    "MarkovChainSpec",
    "EllipticityReport",
    "PsiMixingResult",
    "BlockingReport",
    "EcdfSummary",
    "exact_distribution",
    "enumerate_distribution",
    "ellipticity_check",
    "psi_mixing_coefficient",
    "variance_profile",
    "variance_decomposition",
    "monte_carlo_ecdf",
    "load_chain_spec",
    "save_chain_spec",
]

_ROW_TOL = 1e-12
_SNAP_DENOM = 10**6
_SNAP_TOL = 1e-9
# pruning is off by default: dropped tail cells carry value^2-weighted
# moment error far above their mass (1e-9 at n=512 for unit-range steps)
_PRUNE_TOL = 0.0
_PSI_EXACT_CAP = 12


@dataclass(frozen=True)
class MarkovChainSpec:
    """Time-inhomogeneous chain on finite state spaces with observables.

    kernels[j] maps states at time j to states at time j+1 and must be
    row-stochastic; observables[j] has the same shape and holds the
    per-transition values f_j(x, y). Homogeneous chains are built by
    repeating one kernel/observable reference, so memory stays flat.
    """

    initial: np.ndarray
    kernels: tuple
    observables: tuple
    name: str = ""

    def __init__(self, initial, kernels, observables, name=""):
        initial = np.asarray(initial, dtype=float)
        kernels = tuple(np.asarray(k, dtype=float) for k in kernels)
        observables = tuple(np.asarray(f, dtype=float) for f in observables)
        if len(kernels) == 0:
            raise ValueError("need at least one step")
        if len(kernels) != len(observables):
            raise ValueError(
                "%d kernels but %d observables" % (len(kernels), len(observables))
            )
        if initial.ndim != 1:
            raise ValueError("initial law must be a vector")
        if abs(initial.sum() - 1.0) > _ROW_TOL or initial.min() < -1e-15:
            raise ValueError("initial law must be a probability vector")
        size = initial.size
        for j, (k, f) in enumerate(zip(kernels, observables)):
            if k.ndim != 2 or k.shape[0] != size:
                raise ValueError("kernel %d has shape %r, expected %d rows" % (j, k.shape, size))
            if f.shape != k.shape:
                raise ValueError("observable %d shape %r != kernel shape %r" % (j, f.shape, k.shape))
            rows = k.sum(axis=1)
            if np.max(np.abs(rows - 1.0)) > _ROW_TOL or k.min() < -1e-15:
                raise ValueError("kernel %d is not row-stochastic within 1e-12" % j)
            size = k.shape[1]
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "kernels", kernels)
        object.__setattr__(self, "observables", observables)
        object.__setattr__(self, "name", name)

    @property
    def n_steps(self):
        return len(self.kernels)

    @property
    def state_counts(self):
        return [self.initial.size] + [k.shape[1] for k in self.kernels]

    @classmethod
    def homogeneous(cls, initial, kernel, observable, n, name=""):
        kernel = np.asarray(kernel, dtype=float)
        observable = np.asarray(observable, dtype=float)
        return cls(initial, (kernel,) * n, (observable,) * n, name=name)

    def prefix(self, n):
        """The chain restricted to its first n steps."""
        if not 1 <= n <= self.n_steps:
            raise ValueError("prefix length %r outside [1, %d]" % (n, self.n_steps))
        return MarkovChainSpec(
            self.initial, self.kernels[:n], self.observables[:n], name=self.name
        )

    def marginals(self):
        """Law of X_j for j = 0..n."""
        out = [self.initial]
        nu = self.initial
        for k in self.kernels:
            nu = nu @ k
            out.append(nu)
        return out

    def step_means(self):
        """E f_j(X_j, X_{j+1}) for each step, exactly."""
        margs = self.marginals()
        return np.array(
            [
                float(margs[j] @ (k * f) @ np.ones(k.shape[1]))
                for j, (k, f) in enumerate(zip(self.kernels, self.observables))
            ]
        )


# -- lattice snap ------------------------------------------------------------


def _common_lattice(observables):
    """Common step d and per-step integer shifts for all observable values.

    Values within each step are taken relative to that step's minimum, so
    only differences need to be commensurable; the per-step base offsets are
    carried in float. Returns (d, bases, shift_arrays).
    """
    diffs = []
    bases = []
    for f in observables:
        base = float(f.min())
        bases.append(base)
        diffs.append(f - base)
    flat = np.concatenate([d.ravel() for d in diffs])
    nonzero = flat[np.abs(flat) > _SNAP_TOL]
    if nonzero.size == 0:
        return 0.0, bases, [np.zeros_like(d, dtype=np.int64) for d in diffs]
    step = Fraction(0)
    for v in np.unique(nonzero):
        fr = Fraction(float(v)).limit_denominator(_SNAP_DENOM)
        if abs(float(fr) - float(v)) > _SNAP_TOL:
            raise ValueError(
                "observable difference %r does not lie on a rational lattice "
                "(denominator cap %d, tolerance %g)" % (float(v), _SNAP_DENOM, _SNAP_TOL)
            )
        step = fr if step == 0 else Fraction(
            math.gcd(step.numerator * fr.denominator, fr.numerator * step.denominator),
            step.denominator * fr.denominator,
        )
    d = float(step)
    shifts = []
    for darr in diffs:
        k = np.rint(darr / d)
        if np.max(np.abs(darr - k * d)) > _SNAP_TOL:
            raise ValueError("observable values fail the lattice snap at step %g" % d)
        shifts.append(k.astype(np.int64))
    return d, bases, shifts


# -- exact engines -----------------------------------------------------------


def exact_distribution(spec, prune_tol=_PRUNE_TOL):
    """Exact law of the centered functional S_n as a LatticeDistribution.

    DP over (state, lattice cell); cells with mass below prune_tol are
    dropped with accounting, and the total pruned mass must stay below
    1e-12 or the run aborts. The result has mean 0 within 1e-10.
    """
    dist, _ = _run_dp(spec, prune_tol=prune_tol, want_profile=False)
    return dist


def variance_profile(spec, prune_tol=_PRUNE_TOL):
    """Var(S_k) for k = 1..n from one DP sweep (index 0 holds 0.0)."""
    _, prof = _run_dp(spec, prune_tol=prune_tol, want_profile=True)
    return prof


def _run_dp(spec, prune_tol, want_profile):
    d, bases, shifts = _common_lattice(spec.observables)
    means = spec.step_means()
    if d == 0.0:
        # degenerate: S_n is a.s. the constant sum(bases) - sum(means) = 0
        dist = LatticeDistribution(0.0, 1.0, [1.0])
        prof = np.zeros(spec.n_steps + 1)
        return dist, prof
    table = spec.initial[:, None].copy()
    pruned = 0.0
    offset = 0.0  # value of cell 0 for the running uncentered lattice sum
    prof = np.zeros(spec.n_steps + 1) if want_profile else None
    for j, kernel in enumerate(spec.kernels):
        table = _dp_step(table, kernel, shifts[j])
        if prune_tol > 0.0:
            small = (table > 0.0) & (table < prune_tol)
            if small.any():
                pruned += float(table[small].sum())
                table[small] = 0.0
        offset += bases[j] - means[j]
        if want_profile:
            m = table.sum(axis=0)
            vals = offset + d * np.arange(table.shape[1])
            tot = m.sum()
            mu = float(m @ vals) / tot
            prof[j + 1] = float(m @ (vals - mu) ** 2) / tot
    if pruned > 1e-12:
        raise ValueError("pruned mass %g exceeds the 1e-12 audit budget" % pruned)
    masses = table.sum(axis=0)
    nz = np.nonzero(masses)[0]
    lo, hi_nz = int(nz[0]), int(nz[-1])
    dist = LatticeDistribution(offset + d * lo, d, masses[lo : hi_nz + 1])
    dist.pruned_mass = pruned
    if abs(dist.mean) > 1e-10:
        raise ValueError("centered functional has mean %g, expected 0" % dist.mean)
    return dist, prof


def _dp_step(table, kernel, shifts):
    hi = table.shape[1]
    width = int(shifts.max())
    new = np.zeros((kernel.shape[1], hi + width))
    for x in range(kernel.shape[0]):
        row = table[x]
        if not row.any():
            continue
        for y in range(kernel.shape[1]):
            p = kernel[x, y]
            if p == 0.0:
                continue
            s = int(shifts[x, y])
            new[y, s : s + hi] += p * row
    return new


def enumerate_distribution(spec):
    """Brute-force path enumeration oracle (small chains only).

    Returns sorted (value, probability) pairs of the centered functional,
    merging values that agree within 1e-11.
    """
    sizes = spec.state_counts
    n = spec.n_steps
    if np.prod([float(s) for s in sizes]) > 5e5:
        raise ValueError("path enumeration is for small chains only")
    means = spec.step_means()
    acc = {}

    def walk(j, x, prob, total):
        if prob == 0.0:
            return
        if j == n:
            acc[total] = acc.get(total, 0.0) + prob
            return
        k = spec.kernels[j]
        f = spec.observables[j]
        for y in range(k.shape[1]):
            walk(j + 1, y, prob * k[x, y], total + f[x, y] - means[j])

    for x0 in range(sizes[0]):
        walk(0, x0, float(spec.initial[x0]), 0.0)
    vals = sorted(acc)
    merged = []
    for v in vals:
        if merged and abs(v - merged[-1][0]) <= 1e-11:
            merged[-1] = (merged[-1][0], merged[-1][1] + acc[v])
        else:
            merged.append((v, acc[v]))
    return merged


# -- structural checks -------------------------------------------------------


@dataclass(frozen=True)
class EllipticityReport:
    """Uniform ellipticity of the kernels w.r.t. uniform reference measures.

    sup_density is the largest one-step transition density, min_two_step the
    smallest two-step density; the chain is elliptic when densities are
    bounded above and two-step densities are bounded below by eps > 0.
    """

    sup_density: float
    min_two_step: float
    eps_upper: float  # largest eps compatible with the density upper bound
    elliptic: bool
    worst_step: int

    @property
    def eps(self):
        return min(self.eps_upper, self.min_two_step)


def ellipticity_check(spec):
    # densities w.r.t. the uniform law on each state space
    sup_d = 0.0
    for k in spec.kernels:
        sup_d = max(sup_d, float(k.max()) * k.shape[1])
    min_two = np.inf
    worst = 0
    for j in range(spec.n_steps - 1):
        k1, k2 = spec.kernels[j], spec.kernels[j + 1]
        mid = k1.shape[1]
        # two-step density of X_{j+2} given X_j w.r.t. uniform on its space
        dens = (k1 * mid) @ (k2 * k2.shape[1]) / mid
        m = float(dens.min())
        if m < min_two:
            min_two, worst = m, j
    if spec.n_steps == 1:
        min_two = float((spec.kernels[0] * spec.kernels[0].shape[1]).min())
    return EllipticityReport(
        sup_density=sup_d,
        min_two_step=min_two,
        eps_upper=1.0 / sup_d,
        elliptic=bool(min_two > 0.0),
        worst_step=worst,
    )


@dataclass(frozen=True)
class PsiMixingResult:
    value: float
    exact: bool
    note: str = ""


def psi_mixing_coefficient(spec, j, gap=1):
    """psi-mixing coefficient between sigma(X_j) and sigma(X_{j+gap}).

        psi = sup_{A,B} | P(A and B) / (P(A) P(B)) - 1 |

    over events with positive probability. Exact subset enumeration up to
    12 states per side; larger spaces fall back to single atoms, which
    only bounds psi from below (flagged in the result).
    """
    if gap < 1:
        raise ValueError("gap must be >= 1")
    if not 0 <= j <= spec.n_steps - gap:
        raise ValueError("no pair (X_%d, X_%d) in this chain" % (j, j + gap))
    margs = spec.marginals()
    px = margs[j]
    trans = spec.kernels[j]
    for step in range(j + 1, j + gap):
        trans = trans @ spec.kernels[step]
    joint = px[:, None] * trans
    py = joint.sum(axis=0)
    a, b = joint.shape
    if max(a, b) <= _PSI_EXACT_CAP:
        ua = _subset_indicators(a)
        ub = _subset_indicators(b)
        pa = ua @ px
        pb = ub @ py
        keep_b = pb > 0.0
        val = 0.0
        # chunk over A-subsets to keep the P(A and B) matrix small
        for lo in range(0, ua.shape[0], 1024):
            rows = slice(lo, lo + 1024)
            pab = ua[rows] @ joint @ ub[keep_b].T
            pa_rows = pa[rows]
            keep_a = pa_rows > 0.0
            if not keep_a.any():
                continue
            ratio = pab[keep_a] / np.outer(pa_rows[keep_a], pb[keep_b])
            val = max(val, float(np.max(np.abs(ratio - 1.0))))
        return PsiMixingResult(value=val, exact=True)
    ok = np.outer(px > 0.0, py > 0.0)
    ratio = joint[ok] / np.outer(px, py)[ok]
    return PsiMixingResult(
        value=float(np.max(np.abs(ratio - 1.0))),
        exact=False,
        note="atom pairs only (state space above the exact-enumeration cap); lower bound",
    )


def _subset_indicators(n):
    masks = np.arange(1, 2**n, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(float)


# -- variance blocking -------------------------------------------------------


@dataclass(frozen=True)
class BlockingReport:
    """Greedy partition of steps into intervals of variance in [A, 2A].

    a[k] is the variance captured by complete blocks within the first k
    steps, b[k] = Var(S_k) - a[k] the boundary remainder. The greedy
    construction makes a monotone whenever the target A dominates the
    step-to-step covariance scale; `a_monotone` records the check.
    """

    target: float
    blocks: tuple  # (start, end) step index pairs, inclusive, 0-based
    block_variances: tuple
    sigma2: np.ndarray  # Var(S_k), k = 0..n
    a: np.ndarray
    b: np.ndarray
    overshoot: float
    a_monotone: bool


def variance_decomposition(spec, target=None, prune_tol=_PRUNE_TOL):
    sigma2 = variance_profile(spec, prune_tol=prune_tol)
    if sigma2[-1] <= 0.0:
        raise ValueError("degenerate functional: Var(S_n) = 0")
    step_vars = _step_variances(spec)
    if target is None:
        target = 4.0 * float(np.max(step_vars)) + 1.0
    if target <= 0.0:
        raise ValueError("blocking target must be positive")
    lattice = _common_lattice(spec.observables)
    means = spec.step_means()
    margs = spec.marginals()
    blocks = []
    block_vars = []
    start = 0
    n = spec.n_steps
    while start < n:
        end, var = _greedy_block_end(spec, margs[start], start, target, lattice, means)
        if var is None:  # tail too small to reach the target: stays in b
            break
        blocks.append((start, end))
        block_vars.append(var)
        start = end + 1
    overshoot = max([v - 2.0 * target for v in block_vars], default=0.0)
    a = np.zeros(n + 1)
    b = np.zeros(n + 1)
    ends = [e for (_, e) in blocks]
    acc = 0.0
    bi = 0
    for k in range(1, n + 1):
        while bi < len(ends) and ends[bi] <= k - 1:
            acc = sigma2[ends[bi] + 1]
            bi += 1
        a[k] = acc
        b[k] = sigma2[k] - acc
    return BlockingReport(
        target=float(target),
        blocks=tuple(blocks),
        block_variances=tuple(block_vars),
        sigma2=sigma2,
        a=a,
        b=b,
        overshoot=float(max(0.0, overshoot)),
        a_monotone=bool(np.all(np.diff(a) >= -1e-12)),
    )


def _step_variances(spec):
    margs = spec.marginals()
    out = []
    for j, (k, f) in enumerate(zip(spec.kernels, spec.observables)):
        mu = float(margs[j] @ (k * f) @ np.ones(k.shape[1]))
        m2 = float(margs[j] @ (k * (f - mu) ** 2) @ np.ones(k.shape[1]))
        out.append(m2)
    return np.array(out)


def _greedy_block_end(spec, start_law, start, target, lattice, means):
    """Extend a block from `start` until its own variance reaches the target.

    The block sum keeps the global per-step centering, so block variances
    refer to the same functional the chain-level decomposition uses.
    """
    d, bases, shifts = lattice
    table = start_law[:, None].copy()
    offset = 0.0
    for j in range(start, spec.n_steps):
        table = _dp_step(table, spec.kernels[j], shifts[j])
        offset += bases[j] - means[j]
        m = table.sum(axis=0)
        vals = offset + d * np.arange(table.shape[1])
        mu = float(m @ vals)
        var = float(m @ (vals - mu) ** 2)
        if var >= target:
            return j, var
    return None, None


# -- simulation --------------------------------------------------------------


@dataclass(frozen=True)
class EcdfSummary:
    """Sorted sample of the centered functional with a DKW band.

    The band halfwidth is sqrt(log(2/delta) / (2 samples)) at delta = 0.01,
    a uniform 99% confidence envelope for the true CDF.
    """

    values: np.ndarray
    samples: int
    seed: int
    halfwidth: float
    delta: float = 0.01

    def cdf(self, x):
        idx = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right")
        out = idx / self.samples
        return out if np.ndim(out) else float(out)

    def band(self, x):
        c = self.cdf(x)
        return np.clip(c - self.halfwidth, 0.0, 1.0), np.clip(c + self.halfwidth, 0.0, 1.0)


def monte_carlo_ecdf(spec, samples, seed, delta=0.01):
    """Sample the centered functional with the counter-based Philox generator.

    Fully reproducible: (seed, samples) determines the data stream
    bit-for-bit regardless of platform.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    means = spec.step_means()
    state = rng.choice(spec.initial.size, size=samples, p=spec.initial)
    total = np.zeros(samples)
    for j, (k, f) in enumerate(zip(spec.kernels, spec.observables)):
        cum = np.cumsum(k, axis=1)
        u = rng.random(samples)
        nxt = (u[:, None] > cum[state]).sum(axis=1)
        total += f[state, nxt] - means[j]
        state = nxt
    # accumulated float fuzz would put samples a hair off the exact atoms,
    # which breaks CDF comparisons at lattice points; snap back
    d, bases, _ = _common_lattice(spec.observables)
    if d > 0.0:
        origin = float(np.sum(bases) - np.sum(means))
        total = origin + d * np.rint((total - origin) / d)
    total.sort()
    return EcdfSummary(
        values=total,
        samples=samples,
        seed=int(seed),
        halfwidth=float(np.sqrt(np.log(2.0 / delta) / (2.0 * samples))),
        delta=delta,
    )


# -- chain spec files --------------------------------------------------------


def load_chain_spec(path):
    """Read a chain description file.

    Sections: [meta] (name, steps), [initial] (one probability row), then
    [kernel.J] / [observable.J] blocks holding row-major matrices, each
    optionally followed by `repeat = R` to stand for R consecutive steps.
    """
    sections = _read_sections(path)
    meta = dict(sections.get("meta", []))
    if "initial" not in sections:
        raise ValueError("chain file is missing the [initial] section")
    _, rows = _parse_rows(sections["initial"])
    if len(rows) != 1:
        raise ValueError("[initial] must hold exactly one probability row")
    initial = np.array(rows[0])
    kernels = _collect_matrices(sections, "kernel")
    observables = _collect_matrices(sections, "observable")
    steps = int(meta.get("steps", len(kernels)))
    if len(kernels) != steps or len(observables) != steps:
        raise ValueError(
            "expected %d steps, found %d kernels and %d observables"
            % (steps, len(kernels), len(observables))
        )
    return MarkovChainSpec(
        initial, tuple(kernels), tuple(observables), name=meta.get("name", "")
    )


def save_chain_spec(spec, path):
    lines = ["[meta]"]
    if spec.name:
        lines.append("name = %s" % spec.name)
    lines.append("steps = %d" % spec.n_steps)
    lines.append("")
    lines.append("[initial]")
    lines.append(" ".join("%.17g" % v for v in spec.initial))
    groups = _group_repeats(list(zip(spec.kernels, spec.observables)))
    idx = 1
    for (kernel, obs), count in groups:
        for tag, mat in (("kernel", kernel), ("observable", obs)):
            lines.append("")
            lines.append("[%s.%d]" % (tag, idx))
            for row in mat:
                lines.append(" ".join("%.17g" % v for v in row))
            if count > 1:
                lines.append("repeat = %d" % count)
        idx += count
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _group_repeats(pairs):
    out = []
    for kernel, obs in pairs:
        if out and out[-1][0][0] is kernel and out[-1][0][1] is obs:
            out[-1][1] += 1
        else:
            out.append([(kernel, obs), 1])
    return [(pair, count) for pair, count in out]


def _read_sections(path):
    sections = {}
    current = None
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip().lower()
                sections.setdefault(current, [])
            elif current is None:
                raise ValueError("content before the first section header: %r" % line)
            elif "=" in line:
                key, val = (s.strip() for s in line.split("=", 1))
                sections[current].append((key.lower(), val))
            else:
                sections[current].append((None, line))
    return sections


def _parse_rows(entries):
    """Split section entries into (key/value pairs, matrix rows)."""
    kv = []
    rows = []
    for key, val in entries:
        if key is None:
            rows.append([float(tok) for tok in val.replace(",", " ").split()])
        else:
            kv.append((key, val))
    return kv, rows


def _collect_matrices(sections, tag):
    indexed = []
    for name, entries in sections.items():
        if not name.startswith(tag + "."):
            continue
        idx = int(name.split(".", 1)[1])
        kv, rows = _parse_rows(entries)
        repeat = int(dict(kv).get("repeat", 1))
        if repeat < 1:
            raise ValueError("repeat must be >= 1 in [%s]" % name)
        if not rows:
            raise ValueError("[%s] holds no matrix rows" % name)
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("ragged matrix in [%s]" % name)
        indexed.append((idx, np.asarray(rows, dtype=float), repeat))
    indexed.sort(key=lambda item: item[0])
    out = []
    expect = 1
    for idx, mat, repeat in indexed:
        if idx != expect:
            raise ValueError(
                "%s sections must be consecutive; got index %d, expected %d"
                % (tag, idx, expect)
            )
        out.extend([mat] * repeat)  # shared reference: repeat groups survive a save
        expect = idx + repeat
    return out
