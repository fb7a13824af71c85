"""Finite-truncation checks of the spectral non-degeneracy hypotheses.

Every check quantifies over mode indices up to an explicit ``index_bound``
and treats a pairing or gap difference as "zero" when its magnitude is at
most the report's tolerance.  Reports are deterministic: violation lists
are produced in lexicographic index order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ResourceError
from .spectral import build_basis

COUPLING_TOL = 1e-8
GAP_TOL = 1e-6
MAX_QUAD_TUPLES = 25_000


@dataclass(frozen=True)
class ConditionReport:
    condition_id: str
    index_bound: int
    tolerance: float
    violations: tuple

    @property
    def passed(self):
        return not self.violations

    def to_json_dict(self):
        return {
            "condition_id": self.condition_id,
            "index_bound": self.index_bound,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "violations": [
                {"indices": list(idx), "value": val} for idx, val in self.violations
            ],
        }


def _require_bound(basis, index_bound):
    if index_bound < 1:
        raise InputError(f"index_bound must be >= 1, got {index_bound}")
    if index_bound > basis.truncation:
        raise InputError(
            f"index_bound {index_bound} exceeds basis truncation {basis.truncation}")


def check_condition_p(basis, index_bound, coupling_tol=COUPLING_TOL, gap_tol=GAP_TOL):
    """Non-vanishing couplings to the ground mode, and non-repeated gaps.

    Returns (coupling report, gap report).  The coupling report lists modes
    j <= N with |B_1j| <= coupling_tol.  The gap report scans triples
    (j, p, q) with j != 1 and {1, j} != {p, q} for
    |(lam_1 - lam_j) - (lam_p - lam_q)| <= gap_tol.
    """
    _require_bound(basis, index_bound)
    n = index_bound
    b_row = basis.coupling[0, :n]
    coupling_viols = tuple(
        ((j,), float(b_row[j - 1])) for j in range(1, n + 1)
        if abs(b_row[j - 1]) <= coupling_tol
    )
    coupling = ConditionReport("coupling_nonvanishing", n, coupling_tol, coupling_viols)

    lam = basis.eigenvalues[:n]
    # vectorized scan: diff[j,p,q] = (lam_1 - lam_j) - (lam_p - lam_q)
    jj = (lam[0] - lam)[1:, None, None]
    pq = (lam[:, None] - lam[None, :])[None, :, :]
    hits = np.argwhere(np.abs(jj - pq) <= gap_tol)
    gap_viols = []
    for aj, ap, aq in hits:
        j, p, q = int(aj) + 2, int(ap) + 1, int(aq) + 1
        if {1, j} == {p, q}:
            continue
        value = float((lam[0] - lam[j - 1]) - (lam[p - 1] - lam[q - 1]))
        gap_viols.append(((j, p, q), value))
    gap_viols.sort(key=lambda item: item[0])
    gap = ConditionReport("gap_condition", n, gap_tol, tuple(gap_viols))
    return coupling, gap


def check_alpha_admissible(basis, alpha, index_bound, tol=COUPLING_TOL):
    """Exclude Lyapunov weights that silence an excited mode.

    For j in 2..N the weight alpha is inadmissible when the coefficient
    B_j1 * (alpha * lam_j^2 + 1) vanishes; those modes would be invisible
    to the ground-mode feedback.  Magnitudes are compared against tol
    scaled by the amplification factor 1 + |alpha| lam_j^2, so quadrature
    noise in a structurally zero coupling is not promoted above tolerance
    by a large eigenvalue.
    """
    _require_bound(basis, index_bound)
    lam = basis.eigenvalues
    col = basis.coupling[:, 0]
    viols = []
    for j in range(2, index_bound + 1):
        value = col[j - 1] * (alpha * lam[j - 1] ** 2 + 1.0)
        if abs(value) <= tol * (1.0 + abs(alpha) * lam[j - 1] ** 2):
            viols.append(((j,), float(value)))
    return ConditionReport("alpha_admissible", index_bound, tol, tuple(viols))


def check_condition_2p(basis, q_samples, index_bound,
                       coupling_tol=COUPLING_TOL, gap_tol=GAP_TOL,
                       max_tuples=MAX_QUAD_TUPLES):
    """Quartic-pairing and four-term-gap checks for the cubic equation.

    Report (i) scans all quadruples (i, j, p, q) with indices <= N for
    |<Q e_i e_j, e_p e_q>| <= coupling_tol.  Report (ii) groups the sums
    lam_i - lam_j + lam_p - lam_q by value and lists pairs of quadruples
    A, A' whose sums agree within gap_tol, whose index multisets differ,
    and where at least one of the two has plus-multiset {i, p} different
    from minus-multiset {j, q}.  Both sides are read as multisets.
    """
    _require_bound(basis, index_bound)
    n = index_bound
    if n ** 4 > max_tuples:
        raise ResourceError(f"{n ** 4} quadruples exceed the cap {max_tuples}")
    q = np.asarray(q_samples, dtype=float)
    if q.shape != (basis.grid.n_points,):
        raise InputError(f"q_samples must have length {basis.grid.n_points}")

    e = basis.eigenfunctions[:, :n]
    h = basis.grid.spacing
    # pairings[i,j,p,q] = h * sum_x q * e_i e_j e_p e_q
    pair = np.einsum("xa,xb->xab", e, e)
    quad = h * np.einsum("xab,xcd->abcd", pair * q[:, None, None], pair, optimize=True)
    viols = []
    for idx in np.argwhere(np.abs(quad) <= coupling_tol):
        i, j, p, r = (int(a) + 1 for a in idx)
        viols.append(((i, j, p, r), float(quad[tuple(idx)])))
    pairing = ConditionReport("nonlinear_coupling", n, coupling_tol, tuple(viols))

    lam = basis.eigenvalues[:n]
    sums = (lam[:, None, None, None] - lam[None, :, None, None]
            + lam[None, None, :, None] - lam[None, None, None, :]).ravel()
    tuples = np.stack(np.unravel_index(np.arange(n ** 4), (n,) * 4), axis=1) + 1
    order = np.argsort(sums, kind="stable")
    sums_sorted = sums[order]
    tuples_sorted = tuples[order]
    gap_viols = []
    start = 0
    for stop in range(1, len(sums_sorted) + 1):
        if stop < len(sums_sorted) and sums_sorted[stop] - sums_sorted[stop - 1] <= gap_tol:
            continue
        if stop - start > 1:
            _collect_gap_pairs(tuples_sorted[start:stop], sums_sorted[start:stop],
                               gap_tol, gap_viols)
        start = stop
    gap_viols.sort(key=lambda item: item[0])
    gap = ConditionReport("nonlinear_gap", n, gap_tol, tuple(gap_viols))
    return pairing, gap


def _collect_gap_pairs(tuples, sums, tol, out):
    def plus_minus_differ(t):
        return sorted((t[0], t[2])) != sorted((t[1], t[3]))

    multisets = [tuple(sorted(t)) for t in tuples]
    unconstrained = [plus_minus_differ(t) for t in tuples]
    for a in range(len(tuples)):
        for b in range(a + 1, len(tuples)):
            if abs(sums[a] - sums[b]) > tol:
                continue
            if multisets[a] == multisets[b]:
                continue
            if not (unconstrained[a] or unconstrained[b]):
                continue
            first, second = sorted((tuple(int(x) for x in tuples[a]),
                                    tuple(int(x) for x in tuples[b])))
            out.append((first + second, float(abs(sums[a] - sums[b]))))


def exponential_coefficient(samples, frequencies, n, horizon):
    """Average out one coefficient of f(t) = sum_j c_j exp(i r_j t).

    ``samples`` holds f on a uniform grid over [0, horizon] (endpoints
    included); ``n`` is the 1-based index into ``frequencies``.  Returns
    the trapezoid value of (1/T) int f(t) exp(-i r_n t) dt, which converges
    to c_n at rate O(1 / (T * min gap)).
    """
    f = np.asarray(samples)
    r = np.asarray(frequencies, dtype=float)
    if f.ndim != 1 or f.shape[0] < 2:
        raise InputError("samples must be a 1-D series with at least two points")
    if not 1 <= n <= r.shape[0]:
        raise InputError(f"frequency index {n} outside 1..{r.shape[0]}")
    if horizon <= 0:
        raise InputError("horizon must be positive")
    if r.shape[0] > 1:
        gaps = np.abs(r[:, None] - r[None, :])[np.triu_indices(r.shape[0], 1)]
        if gaps.min() == 0.0:
            raise InputError("frequencies must be pairwise distinct")
    t = np.linspace(0.0, horizon, f.shape[0])
    integrand = f * np.exp(-1j * r[n - 1] * t)
    return complex(np.trapezoid(integrand, t) / horizon)


@dataclass(frozen=True)
class GenericityScan:
    samples: int
    passed: int
    failures: tuple  # (sample index, coupling passed, gap passed)

    @property
    def pass_rate(self):
        if self.samples == 0:
            return None
        return self.passed / self.samples

    def to_json_dict(self):
        return {
            "samples": self.samples,
            "passed": self.passed,
            "pass_rate": self.pass_rate,
            "failures": [
                {"sample": i, "coupling_passed": cp, "gap_passed": gp}
                for i, cp, gp in self.failures
            ],
        }


def cosine_sum_sampler(grid, k_max=5, amplitude=5.0):
    """Random potential family V(x) = sum_{k<=k_max} a_k cos(k pi x / L)."""
    x = grid.nodes() / grid.length

    def draw(rng):
        a = rng.uniform(-amplitude, amplitude, size=k_max)
        k = np.arange(1, k_max + 1)
        return (a[None, :] * np.cos(np.pi * np.outer(x, k))).sum(axis=1)

    return draw


def genericity_scan(grid, v_sampler, q_samples, truncation, sample_count,
                    index_bound, coupling_tol=COUPLING_TOL, gap_tol=GAP_TOL,
                    rng_seed=0):
    """Empirical pass rate of the ground-mode conditions over a potential family."""
    from .spectral import PotentialPair

    rng = np.random.default_rng(np.random.SeedSequence(rng_seed))
    passed = 0
    failures = []
    for i in range(sample_count):
        v = v_sampler(rng)
        basis = build_basis(grid, PotentialPair(v, q_samples), truncation)
        coupling, gap = check_condition_p(basis, index_bound, coupling_tol, gap_tol)
        if coupling.passed and gap.passed:
            passed += 1
        else:
            failures.append((i, coupling.passed, gap.passed))
    return GenericityScan(sample_count, passed, tuple(failures))
