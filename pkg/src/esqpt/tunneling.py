"""One-dimensional scattering through a finite-range potential (hbar = 1).

Left incidence: psi = e^{ikx} + alpha e^{-ikx} for x < a and psi = beta e^{ikx}
for x > b with k = sqrt(2 m E).  The stationary equation is integrated from
b back to a for all energies at once; matching at a gives alpha and beta.
The complex phase is Phi = -i ln beta and the complex time delay is its
energy derivative.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.integrate
import scipy.optimize


class PhaseUnwrapError(ValueError):
    pass


class TurningPointError(RuntimeError):
    pass


class IntegrationError(RuntimeError):
    pass


@dataclass
class PotentialSpec:
    potential: Callable[[np.ndarray], np.ndarray]
    a: float
    b: float
    mass: float = 1.0
    breakpoints: tuple = ()          # interior points where V may jump
    name: str = "custom"
    edge_tol: float = 1e-8

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("support must satisfy a < b")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        ends = np.abs(self.potential(np.array([self.a, self.b])))
        if np.any(ends > self.edge_tol):
            raise ValueError("potential does not vanish at the support ends")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.a) & (x <= self.b)
        return np.where(inside, self.potential(x), 0.0)


def free_potential(length: float = 1.0, mass: float = 1.0) -> PotentialSpec:
    return PotentialSpec(lambda x: np.zeros_like(np.asarray(x, dtype=float)), 0.0, length,
                         mass, name="free")


def square_barrier(height: float, width: float, mass: float = 1.0) -> PotentialSpec:
    """V = height on (0, width); the support includes a zero-potential margin on each side."""
    margin = 0.1 * width

    def potential(x):
        x = np.asarray(x, dtype=float)
        return np.where((x > 0) & (x < width), height, 0.0)

    return PotentialSpec(potential, -margin, width + margin, mass, breakpoints=(0.0, width),
                         name="square")


def eckart_barrier(height: float, width: float, mass: float = 1.0,
                   cutoff: float = 20.0) -> PotentialSpec:
    """V = height sech^2(x / width), truncated at |x| = cutoff * width."""

    def potential(x):
        return height / np.cosh(np.asarray(x, dtype=float) / width) ** 2

    return PotentialSpec(potential, -cutoff * width, cutoff * width, mass, name="eckart")


DOUBLE_BARRIER_COEFFICIENTS = (1.0, 0.3, 0.5)


def double_barrier(coefficients=DOUBLE_BARRIER_COEFFICIENTS, mass: float = 100.0,
                   threshold: float = 1e-8) -> PotentialSpec:
    """V = (c0 + c1 x + c2 x^2) exp(-x^2/10) with support trimmed where |V| < threshold."""
    c0, c1, c2 = coefficients

    def potential(x):
        x = np.asarray(x, dtype=float)
        return (c0 + c1 * x + c2 * x * x) * np.exp(-x * x / 10.0)

    xs = np.linspace(-40, 40, 80001)
    big = np.nonzero(np.abs(potential(xs)) >= threshold)[0]
    a = scipy.optimize.brentq(lambda x: abs(potential(x)) - threshold, xs[big[0]] - 1e-3,
                              xs[big[0]])
    b = scipy.optimize.brentq(lambda x: abs(potential(x)) - threshold, xs[big[-1]],
                              xs[big[-1]] + 1e-3)
    return PotentialSpec(potential, a, b, mass, name="double-barrier",
                         edge_tol=1.01 * threshold)


def potential_stationary_points(spec: PotentialSpec, n_grid: int = 20001) -> list[tuple]:
    """(x, V(x), second derivative sign) for interior stationary points of V."""
    xs = np.linspace(spec.a, spec.b, n_grid)
    v = spec(xs)
    dv = np.gradient(v, xs)
    out = []
    for k in range(1, n_grid - 2):
        if dv[k] == 0 or dv[k] * dv[k + 1] < 0:
            x = scipy.optimize.brentq(
                lambda y: float(np.gradient(spec(np.array([y - 1e-6, y, y + 1e-6])),
                                            1e-6)[1]), xs[k], xs[k + 1])
            if abs(spec(np.array([x]))[0]) > 10 * spec.edge_tol:
                curv = spec(np.array([x + 1e-4]))[0] + spec(np.array([x - 1e-4]))[0] \
                    - 2 * spec(np.array([x]))[0]
                out.append((float(x), float(spec(np.array([x]))[0]), int(np.sign(curv))))
    return out


# ---------------------------------------------------------------------------
# exact transmission


@dataclass
class ScatteringResult:
    """Scattering data on an ascending energy grid (energies may carry +i eps)."""

    energies: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    phase: np.ndarray            # Phi = -i ln beta, real part unwrapped
    eps: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def transmission(self) -> np.ndarray:
        return np.abs(self.beta) ** 2

    @property
    def reflection(self) -> np.ndarray:
        return np.abs(self.alpha) ** 2

    def flux_defect(self) -> np.ndarray:
        return np.abs(self.transmission + self.reflection - 1.0)


def _integrate(spec: PotentialSpec, energies: np.ndarray, rtol: float, atol: float):
    """psi(a), psi'(a) for all energies from psi = e^{ikx} at b."""
    m = spec.mass
    k = np.sqrt(2 * m * energies.astype(complex))
    y = np.concatenate([np.exp(1j * k * spec.b), 1j * k * np.exp(1j * k * spec.b)])
    n = energies.size
    two_m = 2 * m
    e_c = energies.astype(complex)

    def rhs(x, state):
        psi, dpsi = state[:n], state[n:]
        return np.concatenate([dpsi, two_m * (spec.potential(np.array(x)) - e_c) * psi])

    cuts = sorted({spec.b, spec.a, *[p for p in spec.breakpoints if spec.a < p < spec.b]},
                  reverse=True)
    steps = 0
    for x_hi, x_lo in zip(cuts[:-1], cuts[1:]):
        sol = scipy.integrate.solve_ivp(rhs, (x_hi, x_lo), y, method="DOP853", rtol=rtol,
                                        atol=atol)
        if not sol.success:
            raise IntegrationError(sol.message)
        y = sol.y[:, -1]
        steps += sol.t.size
    return k, y[:n], y[n:], steps


def _solve(spec: PotentialSpec, energies: np.ndarray, rtol: float, atol: float):
    k, psi, dpsi, steps = _integrate(spec, energies, rtol, atol)
    right = 0.5 * (psi + dpsi / (1j * k)) * np.exp(-1j * k * spec.a)
    left = 0.5 * (psi - dpsi / (1j * k)) * np.exp(1j * k * spec.a)
    return 1.0 / right, left / right, steps


def transmit(spec: PotentialSpec, energies, eps: float = 0.0, rtol: float = 1e-12,
             atol: float = 1e-14, max_refine: int = 12) -> ScatteringResult:
    """Exact alpha, beta at E + i eps on an ascending grid of E > 0.

    The argument of beta is unwrapped along the grid; wherever adjacent
    points differ by more than pi/4 the interval is bisected so the branch
    follows the phase continuously.
    """
    e = np.asarray(energies, dtype=float)
    if np.any(e <= 0):
        raise ValueError("energies must be positive")
    if np.any(np.diff(e) <= 0):
        raise ValueError("energy grid must be ascending")
    z = e + 1j * eps
    beta, alpha, steps = _solve(spec, z, rtol, atol)
    arg = np.angle(beta)
    refined = 0

    def track(e_lo, e_hi, arg_lo, angle_hi, depth):
        """Branch of angle_hi continuous with arg_lo, bisecting until steps < pi/4."""
        nonlocal refined
        candidate = arg_lo + np.angle(np.exp(1j * (angle_hi - arg_lo)))
        if abs(candidate - arg_lo) < np.pi / 4:
            return candidate
        if depth >= max_refine:
            raise PhaseUnwrapError("phase cannot be tracked; refine the energy grid")
        refined += 1
        e_mid = 0.5 * (e_lo + e_hi)
        b_mid, _, _ = _solve(spec, np.array([e_mid + 1j * eps]), rtol, atol)
        arg_mid = track(e_lo, e_mid, arg_lo, float(np.angle(b_mid[0])), depth + 1)
        return track(e_mid, e_hi, arg_mid, angle_hi, depth + 1)

    for idx in range(1, e.size):
        arg[idx] = track(e[idx - 1], e[idx], arg[idx - 1], arg[idx], 0)
    phase = arg - 1j * np.log(np.abs(beta))
    return ScatteringResult(e, alpha, beta, phase, eps, {"ode_steps": steps, "refined": refined})


def complex_time_delay(result: ScatteringResult) -> tuple[np.ndarray, np.ndarray]:
    """(Delta t, Delta rho = Delta t / pi) from centered differences of Phi."""
    if np.any(np.abs(np.diff(result.phase.real)) > np.pi):
        raise PhaseUnwrapError("phase jumps by more than pi between grid points; refine the grid")
    delay = np.gradient(result.phase, result.energies, edge_order=2)
    return delay, delay / np.pi


# ---------------------------------------------------------------------------
# WKB times


def turning_points(spec: PotentialSpec, energy: float, n_grid: int = 20001) -> np.ndarray:
    xs = np.linspace(spec.a, spec.b, n_grid)
    g = spec(xs) - energy
    roots = []
    for k in np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]:
        try:
            roots.append(scipy.optimize.brentq(lambda x: float(spec(np.array(x)) - energy),
                                               xs[k], xs[k + 1], xtol=1e-14))
        except ValueError as exc:
            raise TurningPointError(str(exc)) from exc
    return np.array(roots)


def _segment_time(spec: PotentialSpec, energy: float, lo: float, hi: float, sign: int) -> float:
    """integral of sqrt(m / (2 sign (E - V))) over [lo, hi].

    The map x = lo + (hi - lo)(1 - cos u)/2 gives dx ~ sqrt(x - lo) near
    each end, which cancels the inverse square root at a turning point.
    """
    m = spec.mass
    half = 0.5 * (hi - lo)

    def integrand(u):
        x = lo + half * (1.0 - np.cos(u))
        gap = sign * (energy - float(spec(np.array(x))))
        if gap <= 0:
            return 0.0
        return np.sqrt(m / (2.0 * gap)) * half * np.sin(u)

    value, _ = scipy.integrate.quad(integrand, 0.0, np.pi, limit=400, epsabs=1e-12,
                                    epsrel=1e-10)
    return value


def wkb_times(spec: PotentialSpec, energies) -> dict:
    """t_plus - t_zero (allowed regions) and t_minus (forbidden regions) per energy."""
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    t_rel = np.empty(energies.size)
    t_minus = np.empty(energies.size)
    for n, e in enumerate(energies):
        if e <= 0:
            raise ValueError("energies must be positive")
        cuts = np.concatenate([[spec.a], turning_points(spec, e), [spec.b]])
        plus = minus = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            mid = float(spec(np.array(0.5 * (lo + hi))))
            if mid <= e:
                plus += _segment_time(spec, e, lo, hi, +1)
            else:
                minus += _segment_time(spec, e, lo, hi, -1)
        t_rel[n] = plus - np.sqrt(spec.mass / (2 * e)) * (spec.b - spec.a)
        t_minus[n] = minus
    return {"t_plus_minus_t_zero": t_rel, "t_minus": t_minus}


# ---------------------------------------------------------------------------
# closed forms


def square_barrier_transmission(E, height: float, width: float, mass: float = 1.0):
    E = np.asarray(E, dtype=float)
    out = np.empty_like(E)
    below, above = E < height, E > height
    kappa = np.sqrt(2 * mass * (height - E[below]))
    out[below] = 1.0 / (1.0 + height ** 2 * np.sinh(kappa * width) ** 2
                        / (4 * E[below] * (height - E[below])))
    kq = np.sqrt(2 * mass * (E[above] - height))
    out[above] = 1.0 / (1.0 + height ** 2 * np.sin(kq * width) ** 2
                        / (4 * E[above] * (E[above] - height)))
    at = ~(below | above)
    out[at] = 1.0 / (1.0 + mass * height * width ** 2 / 2.0)
    return out


def eckart_transmission(E, height: float, width: float, mass: float = 1.0):
    """Transmission through height * sech^2(x / width)."""
    E = np.asarray(E, dtype=float)
    k = np.sqrt(2 * mass * E)
    s = np.sinh(np.pi * k * width) ** 2
    disc = 8 * mass * height * width ** 2 - 1.0
    if disc >= 0:
        c = np.cosh(0.5 * np.pi * np.sqrt(disc)) ** 2
    else:
        c = np.cos(0.5 * np.pi * np.sqrt(-disc)) ** 2
    return s / (s + c)


def relative_l1(exact: np.ndarray, approx: np.ndarray, mask: np.ndarray | None = None) -> float:
    if mask is None:
        mask = np.ones(exact.shape, dtype=bool)
    return float(np.sum(np.abs(exact - approx)[mask]) / np.sum(np.abs(approx)[mask]))
