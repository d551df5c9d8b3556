"""Eigensolution and spectrum-derived curves.

Everything here works on sorted eigenvalues and orthonormal eigenvectors of a
:class:`~esqpt.models.RealSymmetricOperator`: smoothed level densities,
Hellmann-Feynman slopes and curvatures, smoothed level flow, Peres lattices,
observable densities, the single-parameter quantum metric, density
convolution, and level counting for matrices too large to diagonalize.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .models import RealSymmetricOperator

RESIDUAL_BOUND = 1e-9
ORTHOGONALITY_BOUND = 1e-10
FLOW_FLOOR = 1e-6


class EigensolverError(RuntimeError):
    pass


class GridTooCoarseError(ValueError):
    pass


class BasisMismatchError(ValueError):
    pass


class NearDegeneracyWarning(UserWarning):
    pass


@dataclass
class SpectrumBundle:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    model: object = None
    lam: float | None = None
    basis: object = None

    @property
    def dim(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class SmoothingKernel:
    """Unit-normalized broadening: Gaussian (sigma) or Cauchy (half-width gamma)."""

    kind: str
    width: float

    def __post_init__(self):
        if self.kind not in ("gaussian", "cauchy"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if not self.width > 0:
            raise ValueError("kernel width must be positive")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        w = self.width
        if self.kind == "gaussian":
            return np.exp(-0.5 * (x / w) ** 2) / (w * np.sqrt(2 * np.pi))
        return (w / np.pi) / (x * x + w * w)

    def derivative(self, x: np.ndarray) -> np.ndarray:
        w = self.width
        if self.kind == "gaussian":
            return -x / (w * w) * self(x)
        return -2 * x * (w / np.pi) / (x * x + w * w) ** 2


@dataclass
class DensityCurve:
    """Values sampled on a uniform energy grid."""

    energies: np.ndarray
    values: np.ndarray
    kernel: SmoothingKernel | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.energies = np.asarray(self.energies, dtype=float)
        self.values = np.asarray(self.values)
        if self.energies.ndim != 1 or self.energies.size < 2:
            raise ValueError("energy grid must be one-dimensional with >= 2 points")
        steps = np.diff(self.energies)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ValueError("energy grid must be uniform")

    @property
    def spacing(self) -> float:
        return float(self.energies[1] - self.energies[0])

    def derivative(self, order: int = 1) -> np.ndarray:
        out = self.values
        for _ in range(order):
            out = np.gradient(out, self.spacing, axis=-1, edge_order=2)
        return out

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.energies))

    def __sub__(self, other: "DensityCurve") -> "DensityCurve":
        if not np.array_equal(self.energies, other.energies):
            raise ValueError("curves live on different grids")
        return DensityCurve(self.energies, self.values - other.values, self.kernel)


@dataclass
class PeresLattice:
    energies: np.ndarray
    expectations: np.ndarray
    observable: str = "A"


# ---------------------------------------------------------------------------
# diagonalization


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def diagonalize(H: RealSymmetricOperator, model=None, lam=None, validate: bool = True
                ) -> SpectrumBundle:
    """Full eigendecomposition with the largest-magnitude component made positive."""
    dense = np.array(H.to_dense())
    try:
        values, vectors = scipy.linalg.eigh(dense, driver="evd")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise EigensolverError(str(exc)) from exc
    vectors = _fix_signs(vectors)
    if validate:
        check_bundle(dense, values, vectors)
    return SpectrumBundle(values, vectors, model, lam, H.basis)


def check_bundle(dense: np.ndarray, values: np.ndarray, vectors: np.ndarray) -> None:
    scale = max(np.max(np.abs(values)), 1.0) if values.size else 1.0
    residual = np.max(np.linalg.norm(dense @ vectors - vectors * values, axis=0))
    if residual > RESIDUAL_BOUND * scale:
        raise EigensolverError(f"eigen-residual {residual:.3e} above bound")
    overlap = vectors.T @ vectors
    overlap[np.diag_indices_from(overlap)] -= 1.0
    if np.max(np.abs(overlap)) > ORTHOGONALITY_BOUND:
        raise EigensolverError("eigenvectors not orthonormal within bound")


def eigenvalues(H: RealSymmetricOperator) -> np.ndarray:
    try:
        return scipy.linalg.eigvalsh(np.array(H.to_dense()))
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise EigensolverError(str(exc)) from exc


def lowest_levels(H: RealSymmetricOperator, count: int = 1, vectors: bool = False):
    """Lowest eigenpairs through a banded solver when the bandwidth is small."""
    bw = H.bandwidth()
    top = min(count, H.dim) - 1
    if bw < H.dim // 4:
        low = H.lower
        band = np.zeros((bw + 1, H.dim))
        for d in range(bw + 1):
            band[d, : H.dim - d] = np.diagonal(low, -d)
        result = scipy.linalg.eig_banded(band, lower=True, select="i", select_range=(0, top),
                                         eigvals_only=not vectors)
    else:
        result = scipy.linalg.eigh(np.array(H.to_dense()), subset_by_index=[0, top],
                                   eigvals_only=not vectors)
    if vectors:
        values, vecs = result
        return values, _fix_signs(vecs)
    return result


# ---------------------------------------------------------------------------
# densities


def median_spacing(levels: np.ndarray, window: tuple | None = None) -> float:
    levels = np.sort(np.asarray(levels, dtype=float))
    if window is not None:
        levels = levels[(levels >= window[0]) & (levels <= window[1])]
    gaps = np.diff(levels)
    if gaps.size == 0:
        return 1.0
    return float(np.median(gaps))


def default_kernel(levels: np.ndarray, window: tuple | None = None) -> SmoothingKernel:
    """Gaussian with sigma = 5x the median level spacing."""
    spacing = median_spacing(levels, window)
    if spacing <= 0:
        levels = np.unique(np.round(np.asarray(levels), 12))
        spacing = median_spacing(levels, window)
    return SmoothingKernel("gaussian", 5.0 * spacing)


def energy_grid(levels: np.ndarray, kernel: SmoothingKernel, margin: float = 6.0,
                points_per_width: int = 8) -> np.ndarray:
    lo = float(np.min(levels)) - margin * kernel.width
    hi = float(np.max(levels)) + margin * kernel.width
    n = int(np.ceil((hi - lo) / kernel.width * points_per_width)) + 1
    return np.linspace(lo, hi, n)


def _levels_of(source) -> np.ndarray:
    if isinstance(source, SpectrumBundle):
        return source.eigenvalues
    return np.asarray(source, dtype=float)


def _check_grid(grid: np.ndarray, kernel: SmoothingKernel) -> None:
    step = grid[1] - grid[0]
    if step > kernel.width / 4 * (1 + 1e-12):
        raise GridTooCoarseError(
            f"grid spacing {step:.3g} exceeds a quarter of the kernel width {kernel.width:.3g}")


def weighted_density(levels, weights, kernel: SmoothingKernel, grid: np.ndarray,
                     chunk: int = 2048) -> np.ndarray:
    """sum_i weights_i * kernel(E - E_i) on the grid."""
    levels = np.asarray(levels, dtype=float)
    weights = np.asarray(weights)
    out = np.zeros(grid.shape, dtype=np.result_type(weights, float))
    for start in range(0, levels.size, chunk):
        sl = slice(start, start + chunk)
        out += kernel(grid[:, None] - levels[None, sl]) @ weights[sl]
    return out


def smoothed_level_density(source, kernel: SmoothingKernel | None = None,
                           grid: np.ndarray | None = None) -> DensityCurve:
    levels = _levels_of(source)
    kernel = kernel or default_kernel(levels)
    grid = energy_grid(levels, kernel) if grid is None else np.asarray(grid, dtype=float)
    _check_grid(grid, kernel)
    values = weighted_density(levels, np.ones(levels.size), kernel, grid)
    return DensityCurve(grid, values, kernel, {"levels": int(levels.size)})


def expectation_values(bundle: SpectrumBundle, A: RealSymmetricOperator) -> np.ndarray:
    vecs = bundle.eigenvectors
    if vecs is None:
        raise ValueError("bundle carries no eigenvectors")
    if A.dim != vecs.shape[0]:
        raise BasisMismatchError("operator and spectrum live in different bases")
    return np.einsum("ij,ij->j", vecs, A.to_dense() @ vecs)


def matrix_in_eigenbasis(bundle: SpectrumBundle, A: RealSymmetricOperator) -> np.ndarray:
    if A.dim != bundle.eigenvectors.shape[0]:
        raise BasisMismatchError("operator and spectrum live in different bases")
    vecs = bundle.eigenvectors
    return vecs.T @ (A.to_dense() @ vecs)


def level_slopes(bundle: SpectrumBundle, dH: RealSymmetricOperator) -> np.ndarray:
    """Hellmann-Feynman slopes dE_i/dlam = <i|dH/dlam|i>."""
    return expectation_values(bundle, dH)


def level_curvatures(bundle: SpectrumBundle, dH: RealSymmetricOperator,
                     gap_floor: float = 1e-12) -> np.ndarray:
    """d^2E_i/dlam^2 = 2 sum_k |<k|dH|i>|^2 / (E_i - E_k) for H linear in lam."""
    m = matrix_in_eigenbasis(bundle, dH)
    gaps = bundle.eigenvalues[:, None] - bundle.eigenvalues[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(np.abs(gaps) > gap_floor, m * m / gaps, 0.0)
    return 2.0 * terms.sum(axis=1)


@dataclass
class FlowResult:
    lams: np.ndarray
    energies: np.ndarray
    density: np.ndarray
    flow: np.ndarray
    rate: np.ndarray
    kernel: SmoothingKernel


def smoothed_flow(lams, levels, slopes, kernel: SmoothingKernel, grid: np.ndarray,
                  floor: float = FLOW_FLOOR) -> FlowResult:
    """Smoothed density and flow j(lam, E) = sum_i slope_i kernel(E - E_i(lam)).

    ``levels`` and ``slopes`` are sequences (one array per lam).  The flow
    rate j/rho is NaN wherever rho < floor * max(rho).
    """
    grid = np.asarray(grid, dtype=float)
    _check_grid(grid, kernel)
    rho = np.array([weighted_density(e, np.ones(len(e)), kernel, grid) for e in levels])
    flow = np.array([weighted_density(e, s, kernel, grid) for e, s in zip(levels, slopes)])
    mask = rho < floor * rho.max()
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.where(mask, np.nan, flow / np.where(mask, 1.0, rho))
    return FlowResult(np.asarray(lams, dtype=float), grid, rho, flow, rate, kernel)


def continuity_residual(result: FlowResult) -> float:
    """max |d rho/d lam + d j/d E| at interior grid points, centered differences."""
    dl = np.diff(result.lams)
    if not np.allclose(dl, dl[0]):
        raise ValueError("lam grid must be uniform")
    d_rho = (result.density[2:] - result.density[:-2]) / (2 * dl[0])
    d_flow = np.gradient(result.flow, result.energies[1] - result.energies[0], axis=1)[1:-1]
    return float(np.max(np.abs(d_rho + d_flow)[:, 1:-1]))


def peres_lattice(bundle: SpectrumBundle, A: RealSymmetricOperator, name: str = "A"
                  ) -> PeresLattice:
    return PeresLattice(bundle.eigenvalues.copy(), expectation_values(bundle, A), name)


def observable_density(bundle: SpectrumBundle, A: RealSymmetricOperator,
                       kernel: SmoothingKernel, grid: np.ndarray) -> DensityCurve:
    grid = np.asarray(grid, dtype=float)
    _check_grid(grid, kernel)
    values = weighted_density(bundle.eigenvalues, expectation_values(bundle, A), kernel, grid)
    return DensityCurve(grid, values, kernel)


def lattice_slope(lattice: PeresLattice, window: int = 11) -> tuple[np.ndarray, np.ndarray]:
    """Local linear-fit slope d<A>/dE over `window` consecutive levels."""
    e, a = lattice.energies, lattice.expectations
    half = window // 2
    centers, slopes = [], []
    for i in range(half, e.size - half):
        sl = slice(i - half, i + half + 1)
        slopes.append(np.polyfit(e[sl], a[sl], 1)[0])
        centers.append(e[i])
    return np.array(centers), np.array(slopes)


def geometric_tensor(bundle: SpectrumBundle, dH: RealSymmetricOperator,
                     levels=None, degeneracy_tol: float = 1e-8) -> np.ndarray:
    """g_i = sum_{k != i} |<k|dH|i>|^2 / (E_k - E_i)^2 for each requested level."""
    m = matrix_in_eigenbasis(bundle, dH)
    e = bundle.eigenvalues
    idx = np.arange(e.size) if levels is None else np.atleast_1d(levels)
    out = np.empty(idx.size)
    for n, i in enumerate(idx):
        gaps = e - e[i]
        gaps[i] = np.inf
        if np.min(np.abs(gaps)) < degeneracy_tol:
            warnings.warn(f"level {i} is nearly degenerate; metric unreliable",
                          NearDegeneracyWarning, stacklevel=2)
        out[n] = np.sum(m[:, i] ** 2 / gaps ** 2)
    return out


def fidelity_loss(vec_a: np.ndarray, vec_b: np.ndarray) -> float:
    """1 - |<a|b>|^2."""
    return float(1.0 - np.dot(vec_a, vec_b) ** 2)


def convolve_densities(rho1: DensityCurve, rho2: DensityCurve) -> DensityCurve:
    """rho(E) = integral rho1(E1) rho2(E - E1) dE1 on the common spacing."""
    h1, h2 = rho1.spacing, rho2.spacing
    if not np.isclose(h1, h2, rtol=1e-9, atol=0):
        raise ValueError("curves have incompatible grid spacings")
    values = h1 * np.convolve(rho1.values, rho2.values)
    start = rho1.energies[0] + rho2.energies[0]
    grid = start + h1 * np.arange(values.size)
    return DensityCurve(grid, values, None)


def oscillatory_density(exact: DensityCurve, smooth: DensityCurve) -> DensityCurve:
    return exact - smooth


# ---------------------------------------------------------------------------
# level counting by inertia


def count_below_block_tridiagonal(diag_blocks, off_blocks, energies) -> np.ndarray:
    """Number of eigenvalues below each energy for a block-tridiagonal matrix.

    Uses the block LDL^T recursion S_0 = D_0 - E, S_{n+1} = D_{n+1} - E -
    B_n S_n^{-1} B_n^T and Sylvester's law of inertia: the count equals the
    total number of negative eigenvalues of the Schur complements S_n.
    ``off_blocks[n]`` maps block n to block n+1.
    """
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    counts = np.zeros(energies.size, dtype=np.int64)
    coupled = inv_vals = None
    for n, d in enumerate(diag_blocks):
        d = np.diag(d) if np.ndim(d) == 1 else np.asarray(d)
        s = np.broadcast_to(d, (energies.size,) + d.shape).copy()
        s[:, np.arange(d.shape[0]), np.arange(d.shape[0])] -= energies[:, None]
        if coupled is not None:
            # B S^{-1} B^T with S^{-1} = U diag(1/s) U^T and C = B U
            s -= (coupled * inv_vals[:, None, :]) @ coupled.transpose(0, 2, 1)
        vals, vecs = np.linalg.eigh(s)
        # an exactly singular pivot is nudged, as in Sturm-sequence bisection
        tiny = 1e-13 * max(1.0, float(np.max(np.abs(vals))))
        vals = np.where(np.abs(vals) < tiny, tiny, vals)
        counts += np.sum(vals < 0, axis=1)
        if n < len(off_blocks):
            coupled = np.asarray(off_blocks[n]) @ vecs
            inv_vals = 1.0 / vals
    return counts


def density_from_counts(grid: np.ndarray, counts: np.ndarray, kernel: SmoothingKernel,
                        out_grid: np.ndarray) -> DensityCurve:
    """Smoothed density from a staircase sampled on a fine grid.

    Levels between grid[k] and grid[k+1] are placed at the bin midpoint,
    accurate to O(step^2 / width^2).
    """
    mids = 0.5 * (grid[1:] + grid[:-1])
    weights = np.diff(counts).astype(float)
    keep = weights != 0
    values = weighted_density(mids[keep], weights[keep], kernel, out_grid)
    return DensityCurve(out_grid, values, kernel)


class CountingConvergenceError(RuntimeError):
    pass


def windowed_density_by_counting(block_builder, center: float, kernel: SmoothingKernel,
                                 n_max: int, half_width: float = 4.0, steps_per_width: int = 5,
                                 grow: float = 1.25, n_max_ceiling: int = 20000) -> DensityCurve:
    """Smoothed density on [center - 4 width, center + 4 width] from level counts.

    ``block_builder(n_max)`` returns the (diagonal, coupling) blocks of a
    truncated block-tridiagonal Hamiltonian.  Counts are taken on a grid of
    spacing width/5 reaching 2x further than the output window, and the
    truncation is accepted once raising it by ``grow`` leaves the count at
    the top of that range unchanged.
    """
    w = kernel.width
    step = w / steps_per_width
    reach = 2 * half_width
    n_side = int(round(reach * steps_per_width))
    energies = center + step * np.arange(-n_side, n_side + 1)
    top = energies[-1:]
    while True:
        diag, off = block_builder(n_max)
        bigger = int(np.ceil(n_max * grow))
        d2, o2 = block_builder(bigger)
        if count_below_block_tridiagonal(diag, off, top)[0] == \
                count_below_block_tridiagonal(d2, o2, top)[0]:
            break
        n_max = bigger
        if n_max > n_max_ceiling:
            raise CountingConvergenceError("level count not converged below the cutoff ceiling")
    counts = count_below_block_tridiagonal(diag, off, energies)
    n_out = int(round(half_width * steps_per_width * 4))
    out = center + (step / 4) * np.arange(-n_out, n_out + 1)
    curve = density_from_counts(energies, counts, kernel, out)
    curve.meta.update({"n_max": n_max, "counts": counts, "count_grid": energies})
    return curve
