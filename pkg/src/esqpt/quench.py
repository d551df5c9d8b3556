"""Quench diagnostics: strength function, survival amplitude, OTOC, decoherence, Husimi maps.

A quench prepares an eigenstate of H(lam_in) and lets it evolve under
H(lam_fi).  Everything is computed in the eigenbasis of the final
Hamiltonian with hbar = 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .models import RealSymmetricOperator, split_lambda
from .spectral import (DensityCurve, SmoothingKernel, SpectrumBundle, default_kernel,
                       diagonalize, energy_grid, weighted_density)


@dataclass
class QuenchSetup:
    initial: SpectrumBundle
    final: SpectrumBundle
    lam_in: float
    lam_fi: float
    state_index: int = 0
    perturbation: RealSymmetricOperator | None = None   # dH/dlam

    @property
    def delta_lam(self) -> float:
        return self.lam_fi - self.lam_in

    @property
    def initial_state(self) -> np.ndarray:
        return self.initial.eigenvectors[:, self.state_index]

    @classmethod
    def from_model(cls, spec, lam_in: float, lam_fi: float, state_index: int = 0,
                   block=None) -> "QuenchSetup":
        """Both Hamiltonians H0 + lam V share the basis of ``spec``."""
        H0, V = split_lambda(spec, block)
        initial = diagonalize(H0 + lam_in * V, spec, lam_in)
        final = diagonalize(H0 + lam_fi * V, spec, lam_fi)
        return cls(initial, final, lam_in, lam_fi, state_index, V)

    @classmethod
    def from_operators(cls, H_in: RealSymmetricOperator, H_fi: RealSymmetricOperator,
                       state_index: int = 0, lam_in: float = 0.0, lam_fi: float = 1.0
                       ) -> "QuenchSetup":
        if H_in.dim != H_fi.dim:
            raise ValueError("initial and final Hamiltonians live in different bases")
        V = (1.0 / (lam_fi - lam_in)) * (H_fi - H_in) if lam_fi != lam_in else None
        return cls(diagonalize(H_in), diagonalize(H_fi), lam_in, lam_fi, state_index, V)


@dataclass
class OverlapSet:
    weights: np.ndarray
    energies: np.ndarray

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def mean(self) -> float:
        return float(self.weights @ self.energies)

    @property
    def variance(self) -> float:
        mu = self.mean
        return float(self.weights @ (self.energies - mu) ** 2)

    @property
    def participation_ratio(self) -> float:
        return float(1.0 / np.sum(self.weights ** 2))


def overlaps(setup: QuenchSetup, state: np.ndarray | None = None) -> OverlapSet:
    psi = setup.initial_state if state is None else state
    amp = setup.final.eigenvectors.T @ psi
    return OverlapSet(np.abs(amp) ** 2, setup.final.eigenvalues)


def strength_function(setup: QuenchSetup, kernel: SmoothingKernel | None = None,
                      grid: np.ndarray | None = None) -> tuple[OverlapSet, DensityCurve]:
    """W(E) = sum_i w_i kernel(E - E_i) over the final spectrum."""
    ov = overlaps(setup)
    kernel = kernel or default_kernel(ov.energies)
    grid = energy_grid(ov.energies, kernel) if grid is None else np.asarray(grid, dtype=float)
    return ov, DensityCurve(grid, weighted_density(ov.energies, ov.weights, kernel, grid), kernel)


def autocorrelation(ov: OverlapSet, kernel: SmoothingKernel, eps_grid: np.ndarray
                    ) -> DensityCurve:
    """R(eps) = sum_{i,k} w_i w_k kernel(eps - E_i + E_k)."""
    eps_grid = np.asarray(eps_grid, dtype=float)
    diffs = (ov.energies[:, None] - ov.energies[None, :]).ravel()
    pair = np.outer(ov.weights, ov.weights).ravel()
    keep = pair > 1e-300
    return DensityCurve(eps_grid, weighted_density(diffs[keep], pair[keep], kernel, eps_grid),
                        kernel)


def survival_amplitude(ov: OverlapSet, times: np.ndarray, chunk: int = 512) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    out = np.empty(times.size, dtype=complex)
    for s in range(0, times.size, chunk):
        t = times[s:s + chunk]
        out[s:s + chunk] = np.exp(-1j * np.outer(t, ov.energies)) @ ov.weights
    return out


def survival_probability(ov: OverlapSet, times: np.ndarray) -> np.ndarray:
    """P(t) = |sum_i w_i exp(-i E_i t)|^2."""
    return np.abs(survival_amplitude(ov, times)) ** 2


def long_time_average(ov: OverlapSet, degeneracy_tol: float = 1e-10) -> float:
    """Infinite-time mean of P(t); exact degeneracies merge their weights."""
    order = np.argsort(ov.energies)
    e, w = ov.energies[order], ov.weights[order]
    groups = np.concatenate([[0], np.cumsum(np.diff(e) > degeneracy_tol)])
    merged = np.bincount(groups, weights=w)
    return float(np.sum(merged ** 2))


def quench_moments(setup: QuenchSetup) -> dict:
    """Energy moments of the strength function and their perturbation predictions.

    With H_fi = H_in + dlam V and psi an eigenstate of H_in,
    mean(W) - E_in = dlam <V> and var(W) = dlam^2 var(V).
    """
    ov = overlaps(setup)
    psi = setup.initial_state
    V = setup.perturbation.to_dense()
    v_mean = float(psi @ V @ psi)
    v_var = float(psi @ V @ (V @ psi)) - v_mean ** 2
    e_in = float(setup.initial.eigenvalues[setup.state_index])
    dl = setup.delta_lam
    return {"mean_shift": ov.mean - e_in, "predicted_shift": dl * v_mean,
            "variance": ov.variance, "predicted_variance": dl * dl * v_var}


def find_revivals(times: np.ndarray, probability: np.ndarray, average: float,
                  factor: float = 3.0) -> np.ndarray:
    """Times of local maxima of P(t) exceeding ``factor`` x its long-time average."""
    p = np.asarray(probability)
    peak = (p[1:-1] > p[:-2]) & (p[1:-1] >= p[2:]) & (p[1:-1] > factor * average)
    return np.asarray(times)[1:-1][peak]


def decay_time(times: np.ndarray, probability: np.ndarray, level: float = np.exp(-1)) -> float:
    """First time P(t) drops below ``level``."""
    below = np.nonzero(np.asarray(probability) < level)[0]
    return float(times[below[0]]) if below.size else float("inf")


# ---------------------------------------------------------------------------
# correlators


def _evolution_parts(H: RealSymmetricOperator):
    values, vectors = np.linalg.eigh(np.array(H.to_dense()))
    return values, vectors


def otoc(state: np.ndarray, A, B, H: RealSymmetricOperator, times: np.ndarray) -> np.ndarray:
    """O(t) = <psi| B(t)^dag A^dag B(t) A |psi> with B(t) = e^{iHt} B e^{-iHt}."""
    e, vecs = _evolution_parts(H)
    a = _dense(A)
    b_eig = vecs.T @ _dense(B) @ vecs
    psi = np.asarray(state, dtype=complex)
    a_psi = a @ psi
    out = np.empty(len(times), dtype=complex)
    for k, t in enumerate(times):
        phase = np.exp(1j * e * t)
        bt = vecs @ (phase[:, None] * b_eig * phase.conj()[None, :]) @ vecs.T
        # <psi| Bt^dag A^dag Bt A |psi> = (A Bt psi)^dag (Bt A psi)
        ket = bt @ a_psi
        bra = a @ (bt @ psi)
        out[k] = np.vdot(bra, ket)
    return out


def _dense(op) -> np.ndarray:
    return op.to_dense() if isinstance(op, RealSymmetricOperator) else np.asarray(op)


def decoherence_factor(state: np.ndarray, H0: RealSymmetricOperator, H1: RealSymmetricOperator,
                       times: np.ndarray) -> np.ndarray:
    """R(t) = <psi| e^{i H0 t} e^{-i H1 t} |psi>."""
    e0, v0 = _evolution_parts(H0)
    e1, v1 = _evolution_parts(H1)
    psi = np.asarray(state, dtype=complex)
    c0 = v0.T @ psi
    c1 = v1.T @ psi
    cross = v0.T @ v1
    out = np.empty(len(times), dtype=complex)
    for k, t in enumerate(times):
        left = np.exp(-1j * e0 * t) * c0          # (e^{-i H0 t} psi) in H0 basis
        right = cross @ (np.exp(-1j * e1 * t) * c1)
        out[k] = np.vdot(left, right)
    return out


def evolve(state: np.ndarray, bundle: SpectrumBundle, t: float) -> np.ndarray:
    c = bundle.eigenvectors.T @ state
    return bundle.eigenvectors @ (np.exp(-1j * bundle.eigenvalues * t) * c)


# ---------------------------------------------------------------------------
# Husimi distribution on the Bloch sphere


def spin_coherent_state(j: float, theta: float, phi: float) -> np.ndarray:
    """|theta, phi> in the ascending m basis; theta = 0 is the north pole m = +j."""
    two_j = int(round(2 * j))
    k = np.arange(two_j + 1)                      # k = j + m
    with np.errstate(divide="ignore"):
        log_c = np.log(np.cos(theta / 2)) if np.cos(theta / 2) != 0 else -np.inf
        log_s = np.log(np.sin(theta / 2)) if np.sin(theta / 2) != 0 else -np.inf
    log_binom = gammaln(two_j + 1) - gammaln(k + 1) - gammaln(two_j - k + 1)
    with np.errstate(invalid="ignore"):
        logs = 0.5 * log_binom + np.where(k > 0, k * log_c, 0.0) + \
            np.where(two_j - k > 0, (two_j - k) * log_s, 0.0)
    m = k - j
    return np.exp(logs) * np.exp(-1j * m * phi)


@dataclass
class SphereGrid:
    thetas: np.ndarray
    phis: np.ndarray
    weights: np.ndarray     # quadrature weights of sin(theta) dtheta dphi, shape (n_theta, n_phi)


def sphere_grid(j: float, oversample: int = 1) -> SphereGrid:
    """Gauss-Legendre nodes in cos(theta) and uniform phi, exact for the Husimi of spin j."""
    n_theta = oversample * (int(round(2 * j)) + 2)
    n_phi = oversample * (2 * int(round(2 * j)) + 2)
    z, wz = np.polynomial.legendre.leggauss(n_theta)
    thetas = np.arccos(z[::-1])
    wz = wz[::-1]
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    weights = np.outer(wz, np.full(n_phi, 2 * np.pi / n_phi))
    return SphereGrid(thetas, phis, weights)


def husimi_snapshot(state: np.ndarray, j: float, thetas: np.ndarray, phis: np.ndarray
                    ) -> np.ndarray:
    """Q(theta, phi) = (2j+1)/(4 pi) |<theta, phi|psi>|^2 on the product grid."""
    two_j = int(round(2 * j))
    k = np.arange(two_j + 1)
    m = k - j
    log_binom = gammaln(two_j + 1) - gammaln(k + 1) - gammaln(two_j - k + 1)
    half = np.asarray(thetas, dtype=float)[:, None] / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        # a zero power of cos or sin contributes 1 even at the poles
        log_cos = np.where(k[None, :] > 0, k[None, :] * np.log(np.cos(half)), 0.0)
        log_sin = np.where((two_j - k)[None, :] > 0,
                           (two_j - k)[None, :] * np.log(np.sin(half)), 0.0)
    log_amp = 0.5 * log_binom[None, :] + log_cos + log_sin
    radial = np.exp(log_amp) * np.asarray(state)[None, :]          # (n_theta, dim)
    # <theta,phi|psi> = sum_m radial_m e^{+i m phi}
    phase = np.exp(1j * np.outer(m, np.asarray(phis, dtype=float)))
    amp = radial @ phase
    return (two_j + 1) / (4 * np.pi) * np.abs(amp) ** 2


def husimi_on_sphere(state: np.ndarray, j: float, grid: SphereGrid | None = None
                     ) -> tuple[SphereGrid, np.ndarray]:
    grid = grid or sphere_grid(j)
    return grid, husimi_snapshot(state, j, grid.thetas, grid.phis)


def cap_mass(grid: SphereGrid, husimi: np.ndarray, theta0: float, phi0: float,
             radius: float) -> float:
    """Husimi probability within great-circle distance ``radius`` of (theta0, phi0)."""
    th = grid.thetas[:, None]
    ph = grid.phis[None, :]
    cos_d = np.cos(th) * np.cos(theta0) + np.sin(th) * np.sin(theta0) * np.cos(ph - phi0)
    inside = cos_d >= np.cos(radius)
    return float(np.sum(grid.weights * husimi * inside))
