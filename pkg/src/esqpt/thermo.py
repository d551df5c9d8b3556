"""Canonical and microcanonical thermodynamics (k_B = 1).

Sources are either a discrete spectrum (array or SpectrumBundle) or a
level-density curve.  Exponentials are always shifted by the lowest energy.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import DensityCurve, SpectrumBundle


class ZeroDensityError(ValueError):
    pass


@dataclass
class ThermalState:
    T: float
    log_Z: float
    mean_energy: float
    energy_variance: float
    entropy: float
    heat_capacity: float
    probabilities: np.ndarray | None = None

    @property
    def Z(self) -> float:
        return float(np.exp(self.log_Z))

    @property
    def free_energy(self) -> float:
        return -self.T * self.log_Z


def _check_temperatures(temps) -> np.ndarray:
    temps = np.atleast_1d(np.asarray(temps, dtype=float))
    if np.any(~(temps > 0)):
        raise ValueError("temperatures must be positive")
    return temps


def _discrete_state(levels: np.ndarray, T: float) -> ThermalState:
    e0 = levels.min()
    x = -(levels - e0) / T
    w = np.exp(x)
    z_shift = w.sum()
    p = w / z_shift
    mean = float(p @ levels)
    var = float(p @ (levels - mean) ** 2)
    log_z = float(np.log(z_shift) - e0 / T)
    entropy = mean / T + log_z
    return ThermalState(T, log_z, mean, var, entropy, var / (T * T), p)


def _density_state(curve: DensityCurve, T: float) -> ThermalState:
    e = curve.energies
    rho = np.clip(curve.values, 0.0, None)
    e0 = e[0]
    w = rho * np.exp(-(e - e0) / T)
    z_shift = np.trapezoid(w, e)
    if not z_shift > 0:
        raise ZeroDensityError("density vanishes on the whole grid")
    mean = float(np.trapezoid(w * e, e) / z_shift)
    var = float(np.trapezoid(w * (e - mean) ** 2, e) / z_shift)
    log_z = float(np.log(z_shift) - e0 / T)
    return ThermalState(T, log_z, mean, var, mean / T + log_z, var / (T * T))


def canonical(source, temps) -> list[ThermalState]:
    temps = _check_temperatures(temps)
    if isinstance(source, DensityCurve):
        return [_density_state(source, T) for T in temps]
    levels = source.eigenvalues if isinstance(source, SpectrumBundle) else \
        np.asarray(source, dtype=float)
    return [_discrete_state(levels, T) for T in temps]


def thermal_distribution(curve: DensityCurve, T: float) -> DensityCurve:
    """w_T(E) = rho(E) exp(-E/T) / Z, normalized on the curve grid."""
    if not T > 0:
        raise ValueError("temperature must be positive")
    e = curve.energies
    w = np.clip(curve.values, 0.0, None) * np.exp(-(e - e[0]) / T)
    return DensityCurve(e, w / np.trapezoid(w, e), curve.kernel, {"T": T})


def discrete_entropy(state: ThermalState) -> float:
    p = state.probabilities
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def canonical_caloric(source, temps) -> tuple[np.ndarray, np.ndarray]:
    temps = _check_temperatures(temps)
    return temps, np.array([s.mean_energy for s in canonical(source, temps)])


# ---------------------------------------------------------------------------
# free energy vs control parameter


def free_energy(levels, T: float) -> float:
    return _discrete_state(np.asarray(levels, dtype=float), T).free_energy


def free_energy_lambda_derivatives(levels, slopes, curvatures, T: float) -> tuple[float, float]:
    """dF/dlam = <E'>_T and d2F/dlam2 = <E''>_T - var_T(E')/T at one lam."""
    state = _discrete_state(np.asarray(levels, dtype=float), T)
    p = state.probabilities
    slopes = np.asarray(slopes)
    mean_slope = float(p @ slopes)
    var_slope = float(p @ (slopes - mean_slope) ** 2)
    return mean_slope, float(p @ np.asarray(curvatures)) - var_slope / T


def curvatures_from_slopes(lams: np.ndarray, slopes: np.ndarray) -> np.ndarray:
    """d2E_i/dlam2 by centered differences of slopes along a uniform lam grid.

    ``slopes`` has shape (n_lam, n_levels) with levels tracked by index.
    """
    return np.gradient(np.asarray(slopes), np.asarray(lams), axis=0, edge_order=2)


# ---------------------------------------------------------------------------
# microcanonical


@dataclass
class MicrocanonicalResult:
    energies: np.ndarray
    beta: np.ndarray                      # d ln rho / dE
    temperature: np.ndarray               # 1 / beta, NaN where undefined
    heat_capacity: np.ndarray             # dE/dT along the curve, NaN where undefined
    undefined: np.ndarray                 # mask: beta <= 0 or excluded singular window
    branches: dict = field(default_factory=dict)   # T -> list of root energies

    def negative_capacity_stretches(self) -> list[tuple[float, float]]:
        neg = (self.heat_capacity < 0) & ~self.undefined
        return _runs(self.energies, neg)

    def multivalued_temperatures(self) -> list[float]:
        return [T for T, roots in self.branches.items() if len(roots) > 1]


def _runs(x, mask) -> list[tuple[float, float]]:
    out, start = [], None
    for k, flag in enumerate(mask):
        if flag and start is None:
            start = k
        if not flag and start is not None:
            out.append((float(x[start]), float(x[k - 1])))
            start = None
    if start is not None:
        out.append((float(x[start]), float(x[-1])))
    return out


def microcanonical(curve: DensityCurve, temps=None, singular_energies=(),
                   exclusion: float = 0.0, stencil: int = 1) -> MicrocanonicalResult:
    """Microcanonical temperature, heat capacity and caloric branches.

    beta(E) = d ln rho/dE uses centered differences over ``stencil`` grid
    steps.  Windows of half-width ``exclusion`` around ``singular_energies``
    are flagged undefined.  For each T the roots of beta(E) = 1/T are
    bracketed by sign changes and located by linear interpolation.
    """
    e = curve.energies
    rho = np.asarray(curve.values, dtype=float)
    if np.any(~(rho > 0)):
        raise ZeroDensityError("density must be positive on the analysis window")
    log_rho = np.log(rho)
    h = curve.spacing * stencil
    beta = np.full(e.size, np.nan)
    beta[stencil:-stencil] = (log_rho[2 * stencil:] - log_rho[:-2 * stencil]) / (2 * h)
    dbeta = np.full(e.size, np.nan)
    dbeta[stencil:-stencil] = (beta[2 * stencil:] - beta[:-2 * stencil]) / (2 * h)
    undefined = ~np.isfinite(beta) | (beta <= 0)
    for ec in singular_energies:
        undefined |= np.abs(e - ec) < exclusion
    with np.errstate(divide="ignore", invalid="ignore"):
        temperature = np.where(undefined, np.nan, 1.0 / beta)
        # C = dE/dT with T = 1/beta(E)  ->  C = -beta^2 / beta'
        capacity = np.where(undefined | ~np.isfinite(dbeta), np.nan, -beta ** 2 / dbeta)
    branches = {}
    if temps is not None:
        for T in _check_temperatures(temps):
            g = np.where(undefined, np.nan, beta - 1.0 / T)
            roots = []
            for k in range(e.size - 1):
                a, b = g[k], g[k + 1]
                if np.isfinite(a) and np.isfinite(b) and a * b < 0:
                    roots.append(float(e[k] + (e[k + 1] - e[k]) * a / (a - b)))
            branches[float(T)] = roots
    return MicrocanonicalResult(e, beta, temperature, capacity, undefined, branches)


def connect_branches(branches: dict, max_jump: float) -> list[list[tuple[float, float]]]:
    """Chain (T, E) roots into continuous branches by nearest-energy matching."""
    chains: list[list[tuple[float, float]]] = []
    open_chains: list[list[tuple[float, float]]] = []
    for T in sorted(branches):
        roots = list(branches[T])
        next_open = []
        for chain in open_chains:
            if not roots:
                chains.append(chain)
                continue
            last = chain[-1][1]
            k = int(np.argmin([abs(r - last) for r in roots]))
            if abs(roots[k] - last) <= max_jump:
                chain.append((T, roots.pop(k)))
                next_open.append(chain)
            else:
                chains.append(chain)
        for r in roots:
            next_open.append([(T, r)])
        open_chains = next_open
    return chains + open_chains


def thermal_modes(dist: DensityCurve) -> list[float]:
    """Energies of local maxima of a thermal distribution."""
    v = dist.values
    peak = (v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:])
    return [float(x) for x in dist.energies[1:-1][peak]]


def _max_curvature(f, t_lo: float, t_hi: float, n: int, shifts: int) -> float:
    """max |f''| estimated by second differences, over grids shifted by h/shifts."""
    h = (t_hi - t_lo) / (n - 1)
    best = 0.0
    for s in range(shifts):
        t = t_lo + s * h / shifts + h * np.arange(n - 1)
        best = max(best, float(np.max(np.abs(np.diff(f(t), 2)))) / (h * h))
    return best


def smoothness_ratio(f, t_lo: float, t_hi: float, n: int = 100, shifts: int = 4) -> float:
    """Growth of the estimated max |f''| when the grid spacing is halved.

    A function with a bounded second derivative gives a ratio near 1 once the
    grid resolves it; a kink doubles the estimate with each halving and a
    divergence grows it faster.
    """
    coarse = _max_curvature(f, t_lo, t_hi, n, shifts)
    fine = _max_curvature(f, t_lo, t_hi, 2 * n - 1, shifts)
    return fine / coarse if coarse > 0 else float("inf")


# ---------------------------------------------------------------------------
# Dicke critical temperatures


def dicke_critical_temperatures(omega: float, omega0: float, lam: float, delta: float) -> dict:
    """T = omega0 / (2 artanh(lam_x^2 / lam^2)) for lam above lam_x in {lam_c, lam_0}."""
    if omega <= 0 or omega0 <= 0 or lam <= 0:
        raise ValueError("parameters must be positive")
    root = np.sqrt(omega * omega0)
    out = {}
    for name, crit in (("T_c", root / (1.0 + delta)),
                       ("T_0", root / (1.0 - delta) if delta < 1 else np.inf)):
        if np.isfinite(crit) and lam > crit:
            out[name] = float(omega0 / (2.0 * np.arctanh(crit * crit / (lam * lam))))
        else:
            out[name] = None
    return out
