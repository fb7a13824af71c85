"""Discrete eigenbasis of -d^2/dx^2 + V on an interval with Dirichlet ends.

The operator is discretized by second-order central differences on the
uniform interior nodes of the interval, giving a symmetric tridiagonal
matrix whose lowest eigenpairs form the working basis.  All inner products
are spacing-weighted dot products (the trapezoid rule, since boundary
values vanish), so eigenvectors are orthonormal in exact arithmetic and
quadrature-normalized eigenfunctions differ from them only by 1/sqrt(h).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import InputError, ResolutionError

MIN_GRID_POINTS = 16


@dataclass(frozen=True)
class Grid:
    """Uniform interior nodes x_i = i * spacing of the interval (0, length)."""

    n_points: int
    length: float = 1.0

    def __post_init__(self):
        if self.n_points < MIN_GRID_POINTS:
            raise InputError(f"n_points must be >= {MIN_GRID_POINTS}, got {self.n_points}")
        if not (np.isfinite(self.length) and self.length > 0):
            raise InputError(f"length must be a positive real, got {self.length}")

    @property
    def spacing(self):
        return self.length / (self.n_points + 1)

    def nodes(self):
        return self.spacing * np.arange(1, self.n_points + 1)

    def refined(self):
        """Grid whose spacing is exactly half of this one's."""
        return Grid(2 * self.n_points + 1, self.length)


@dataclass(frozen=True)
class PotentialPair:
    """Samples of the static potential V and the control profile Q at the nodes."""

    v_samples: np.ndarray
    q_samples: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v_samples, dtype=float)
        q = np.asarray(self.q_samples, dtype=float)
        if v.ndim != 1 or q.ndim != 1 or v.shape != q.shape:
            raise InputError("v_samples and q_samples must be equal-length vectors")
        if not (np.isfinite(v).all() and np.isfinite(q).all()):
            raise InputError("potential samples must be finite")
        object.__setattr__(self, "v_samples", v)
        object.__setattr__(self, "q_samples", q)


@dataclass(frozen=True)
class SpectralBasis:
    """Truncated eigenpairs plus the control coupling matrix.

    eigenfunctions holds one column per mode, quadrature-normalized
    (spacing * sum(e_j * e_k) = delta_jk) with the first nonzero sample
    positive.  norm_scale holds the Dirichlet-Laplacian eigenvalues of the
    same grid, the V-independent weights of the discrete Sobolev norms.
    """

    grid: Grid
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    coupling: np.ndarray
    norm_scale: np.ndarray

    @property
    def truncation(self):
        return self.eigenvalues.shape[0]


def dirichlet_scale(grid, m):
    """Lowest m eigenvalues of the discrete Dirichlet Laplacian (closed form)."""
    h = grid.spacing
    j = np.arange(1, m + 1)
    return 2.0 / h ** 2 * (1.0 - np.cos(j * np.pi * h / grid.length))


def _tridiagonal(grid, v_samples):
    h = grid.spacing
    diag = 2.0 / h ** 2 + v_samples
    off = np.full(grid.n_points - 1, -1.0 / h ** 2)
    return diag, off


def _fix_signs(vectors):
    # first nonzero sample positive, for reproducible coupling signs
    for k in range(vectors.shape[1]):
        nz = np.flatnonzero(np.abs(vectors[:, k]) > 1e-12)
        if nz.size and vectors[nz[0], k] < 0:
            vectors[:, k] = -vectors[:, k]
    return vectors


def build_basis(grid, potentials, truncation):
    """Lowest ``truncation`` eigenpairs of the discretized -d2/dx2 + V.

    Eigenfunctions are quadrature-normalized with the first nonzero sample
    positive; the coupling matrix B_jk = <Q e_k, e_j> is symmetrized exactly.
    """
    if truncation < 1:
        raise InputError(f"truncation must be >= 1, got {truncation}")
    if truncation > grid.n_points // 4:
        raise ResolutionError(
            f"truncation {truncation} too large for {grid.n_points} grid points "
            f"(limit {grid.n_points // 4})")
    v = potentials.v_samples
    if v.shape[0] != grid.n_points:
        raise InputError(f"potential sampled on {v.shape[0]} nodes, grid has {grid.n_points}")
    diag, off = _tridiagonal(grid, v)
    lam, vec = eigh_tridiagonal(diag, off, select="i", select_range=(0, truncation - 1))
    if not np.all(np.diff(lam) > 0):
        raise InputError("computed spectrum is not strictly increasing")
    h = grid.spacing
    funcs = _fix_signs(vec / np.sqrt(h * np.sum(vec ** 2, axis=0)))
    coupling = _assemble_coupling(funcs, potentials.q_samples, h)
    return SpectralBasis(
        grid=grid,
        eigenvalues=lam,
        eigenfunctions=funcs,
        coupling=coupling,
        norm_scale=dirichlet_scale(grid, truncation),
    )


def _assemble_coupling(funcs, q_samples, spacing):
    b = spacing * (funcs.T * q_samples) @ funcs
    return 0.5 * (b + b.T)


def coupling_matrix(basis, q_samples):
    """B_jk = <Q e_k, e_j> under the grid quadrature, exactly symmetric."""
    q = np.asarray(q_samples, dtype=float)
    if q.shape != (basis.grid.n_points,):
        raise InputError(f"q_samples must have length {basis.grid.n_points}")
    if not np.isfinite(q).all():
        raise InputError("q_samples must be finite")
    return _assemble_coupling(basis.eigenfunctions, q, basis.grid.spacing)


def sobolev_norm(coeffs, s, basis):
    """Discrete Sobolev norm (sum_j mu_j^s |c_j|^2)^(1/2).

    mu_j is the V-independent Dirichlet-Laplacian scale, positive for
    every mode, so negative orders are well-defined.  Works on a single
    coefficient vector or on a stack with modes along the last axis.
    """
    c = np.asarray(coeffs)
    if c.shape[-1] != basis.truncation:
        raise InputError(f"coefficient vector has {c.shape[-1]} modes, basis {basis.truncation}")
    if s == 0:
        return np.sqrt(np.sum(np.abs(c) ** 2, axis=-1))
    return np.sqrt(np.sum(basis.norm_scale ** s * np.abs(c) ** 2, axis=-1))


def project(basis, grid_samples):
    """Coefficients <z, e_j> of a grid-sampled function."""
    z = np.asarray(grid_samples)
    if z.shape[0] != basis.grid.n_points:
        raise InputError(f"grid sample vector has length {z.shape[0]}, "
                         f"grid has {basis.grid.n_points}")
    return basis.grid.spacing * (basis.eigenfunctions.T @ z)


def synthesize(basis, coeffs):
    """Grid samples of sum_j c_j e_j."""
    c = np.asarray(coeffs)
    if c.shape[0] != basis.truncation:
        raise InputError(f"coefficient vector has length {c.shape[0]}, "
                         f"basis truncation is {basis.truncation}")
    return basis.eigenfunctions @ c


def eigenvalue_derivative(basis, sigma_samples, j):
    """First-order derivative <sigma, e_j^2> of lambda_j under V -> V + tau*sigma.

    ``j`` is 1-based.
    """
    sig = np.asarray(sigma_samples, dtype=float)
    if sig.shape != (basis.grid.n_points,):
        raise InputError(f"sigma_samples must have length {basis.grid.n_points}")
    if not 1 <= j <= basis.truncation:
        raise InputError(f"mode index {j} outside 1..{basis.truncation}")
    e = basis.eigenfunctions[:, j - 1]
    return float(basis.grid.spacing * np.sum(sig * e * e))


def refined_eigenvalues(grid, v_func, truncation, levels=2):
    """Mesh-refinement eigenvalue estimates via Richardson extrapolation.

    Builds the spectrum on ``levels + 1`` grids whose spacings halve exactly
    and cancels the leading h^2 error pairwise.  Returns the list of
    extrapolants (one per adjacent pair), finest last; successive entries
    agreeing is the convergence certificate of the second-order scheme.
    """
    grids = [grid]
    for _ in range(levels):
        grids.append(grids[-1].refined())
    spectra = []
    for g in grids:
        diag, off = _tridiagonal(g, v_func(g.nodes()))
        spectra.append(eigh_tridiagonal(
            diag, off, select="i", select_range=(0, truncation - 1), eigvals_only=True))
    return [(4.0 * fine - coarse) / 3.0 for coarse, fine in zip(spectra, spectra[1:])]


def basis_state(truncation, j):
    """Coefficient vector of the j-th eigenstate (1-based)."""
    if not 1 <= j <= truncation:
        raise InputError(f"mode index {j} outside 1..{truncation}")
    c = np.zeros(truncation, dtype=complex)
    c[j - 1] = 1.0
    return c


def random_unit_state(rng, truncation, smooth=False, scale=None):
    """Random unit coefficient vector; ``smooth`` damps mode j by its scale.

    With ``smooth`` the coefficients are divided by the Dirichlet-Laplacian
    eigenvalues (``scale``), giving states of moderate H^2 norm.
    """
    c = rng.standard_normal(truncation) + 1j * rng.standard_normal(truncation)
    if smooth:
        if scale is None:
            raise InputError("smooth sampling needs the norm scale")
        c = c / scale
    return c / np.linalg.norm(c)
