"""Van Hove analysis of the one-dimensional Bose-Hubbard chain.

Non-interacting bosons in a chain with dispersion E(k) = eps - 2 tau cos k.
The n-particle density of states is the n-fold Brillouin-zone integral of
delta(E - sum_l E(k_l)), estimated on a product grid of quasimomenta (n <= 3)
or by Monte Carlo (n >= 4).  Finite chains are diagonalized exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import BoseHubbardChain, build_bose_hubbard
from .spectral import DensityCurve, SmoothingKernel, SpectrumBundle, eigenvalues, \
    smoothed_level_density

OVERTONE_GAP_FACTOR = 5.0


@dataclass(frozen=True)
class DispersionSpec:
    eps: float
    tau: float
    n: int
    dim: int = 1

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("hopping must be nonnegative")
        if self.n < 0:
            raise ValueError("particle number must be nonnegative")

    @property
    def band_edges(self) -> tuple[float, float]:
        return self.n * (self.eps - 2 * self.tau), self.n * (self.eps + 2 * self.tau)

    def energy(self, k: np.ndarray) -> np.ndarray:
        return self.eps - 2 * self.tau * np.cos(k)


def _histogram_density(samples_iter, grid: np.ndarray, total: int) -> np.ndarray:
    step = grid[1] - grid[0]
    edges = np.concatenate([grid - step / 2, [grid[-1] + step / 2]])
    counts = np.zeros(grid.size)
    for chunk in samples_iter:
        counts += np.histogram(chunk, bins=edges)[0]
    return counts / (total * step)


def dos_from_dispersion(spec: DispersionSpec, grid: np.ndarray, n_k: int | None = None,
                        n_samples: int = 10_000_000, seed: int = 0):
    """Normalized n-particle density of states on a uniform grid of bin centers.

    Quasimomenta sit at the midpoints of n_k equal cells of [-pi, pi).  The
    n = 0 case is a single level at zero and is returned as a one-level
    spectrum.
    """
    if spec.n == 0:
        return SpectrumBundle(np.zeros(1), None)
    grid = np.asarray(grid, dtype=float)
    if spec.n <= 3:
        n_k = n_k or {1: 2_000_000, 2: 6000, 3: 400}[spec.n]
        k = -np.pi + (np.arange(n_k) + 0.5) * (2 * np.pi / n_k)
        e1 = spec.energy(k)

        def chunks():
            if spec.n == 1:
                yield e1
            elif spec.n == 2:
                for s in range(0, n_k, 256):
                    yield (e1[s:s + 256, None] + e1[None, :]).ravel()
            else:
                pair = (e1[:, None] + e1[None, :]).ravel()
                for a in e1:
                    yield pair + a

        values = _histogram_density(chunks(), grid, n_k ** spec.n)
        method = f"product grid n_k={n_k}"
    else:
        rng = np.random.default_rng(seed)

        def chunks():
            left = n_samples
            while left:
                m = min(left, 1_000_000)
                yield spec.energy(rng.uniform(-np.pi, np.pi, (m, spec.n))).sum(axis=1)
                left -= m

        values = _histogram_density(chunks(), grid, n_samples)
        method = f"monte carlo n={n_samples} seed={seed}"
    return DensityCurve(grid, values, None, {"method": method, "n": spec.n})


def single_particle_dos(spec: DispersionSpec, energies: np.ndarray) -> np.ndarray:
    """Closed form 1 / (pi sqrt((2 tau)^2 - (E - eps)^2)) inside the band."""
    x = (2 * spec.tau) ** 2 - (np.asarray(energies) - spec.eps) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, 1.0 / (np.pi * np.sqrt(x)), 0.0)


def edge_exponent(curve: DensityCurve, edge: float, d_min: float, d_max: float,
                  side: int = 1) -> float:
    """Slope of log(DOS) vs log(distance) for grid points within [d_min, d_max] of an edge.

    ``side`` = +1 looks inside a lower edge, -1 inside an upper edge.
    """
    d = side * (curve.energies - edge)
    keep = (d >= d_min) & (d <= d_max) & (curve.values > 0)
    if keep.sum() < 3:
        raise ValueError("too few grid points in the fit window")
    return float(np.polyfit(np.log(d[keep]), np.log(curve.values[keep]), 1)[0])


def center_peak(spec: DispersionSpec, bin_width: float, n_k: int | None = None) -> float:
    """Histogram value of the bin centered on the band center n * eps."""
    center = spec.n * spec.eps
    grid = center + bin_width * np.arange(-2, 3)
    return float(dos_from_dispersion(spec, grid, n_k=n_k).values[2])


def smooth_curve(curve: DensityCurve, kernel: SmoothingKernel) -> DensityCurve:
    """Convolve a gridded density with a kernel (zero outside the grid)."""
    step = curve.spacing
    offsets = curve.energies - curve.energies[curve.energies.size // 2]
    weights = kernel(offsets) * step
    values = np.convolve(curve.values, weights, mode="same")
    return DensityCurve(curve.energies, values, kernel, dict(curve.meta))


def block_dispersion_l1(levels: np.ndarray, spec: DispersionSpec, kernel: SmoothingKernel,
                        grid: np.ndarray) -> float:
    """L1 distance between the per-level smoothed exact density and the
    equally smoothed continuum density."""
    exact = smoothed_level_density(levels, kernel, grid).values / len(levels)
    continuum = smooth_curve(dos_from_dispersion(spec, grid), kernel).values
    return float(np.sum(np.abs(exact - continuum)) * (grid[1] - grid[0]))


# ---------------------------------------------------------------------------
# finite chains


@dataclass
class BandReport:
    n: int
    eigenvalues: np.ndarray
    clusters: list            # list of (E_low, E_high, count)
    gap_threshold: float

    def to_dict(self) -> dict:
        return {"n": self.n, "levels": int(self.eigenvalues.size),
                "gap_threshold": self.gap_threshold,
                "gap_factor": OVERTONE_GAP_FACTOR,
                "clusters": [{"E_low": lo, "E_high": hi, "count": c}
                             for lo, hi, c in self.clusters]}


def split_clusters(levels: np.ndarray, factor: float = OVERTONE_GAP_FACTOR):
    levels = np.sort(np.asarray(levels, dtype=float))
    if levels.size < 2:
        return [(float(levels[0]), float(levels[0]), int(levels.size))], 0.0
    gaps = np.diff(levels)
    threshold = factor * float(np.median(gaps))
    cuts = np.nonzero(gaps > threshold)[0]
    bounds = np.concatenate([[0], cuts + 1, [levels.size]])
    clusters = [(float(levels[a]), float(levels[b - 1]), int(b - a))
                for a, b in zip(bounds[:-1], bounds[1:])]
    return clusters, threshold


def finite_chain_bands(spec: BoseHubbardChain, particle_numbers=None) -> dict[int, BandReport]:
    """Exact spectra of an open chain for each particle-number block.

    Blocks with n >= 2 are split into clusters wherever a gap exceeds 5x the
    median level spacing of that block.
    """
    ns = [spec.n_bosons] if particle_numbers is None else list(particle_numbers)
    out = {}
    for n in ns:
        block = BoseHubbardChain(spec.n_sites, n, spec.eps, spec.tau, spec.U)
        levels = eigenvalues(build_bose_hubbard(block))
        clusters, thr = split_clusters(levels) if n >= 2 else \
            ([(float(levels.min()), float(levels.max()), int(levels.size))], 0.0)
        out[n] = BandReport(n, levels, clusters, thr)
    return out


def open_chain_levels(n_sites: int, eps: float, tau: float) -> np.ndarray:
    """Single-particle levels eps - 2 tau cos(k pi / (N + 1)), k = 1..N."""
    k = np.arange(1, n_sites + 1)
    return eps - 2 * tau * np.cos(k * np.pi / (n_sites + 1))
