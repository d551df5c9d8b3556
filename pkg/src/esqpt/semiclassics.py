"""Classical limits, Weyl-law densities, stationary points and their classification.

Phase-space coordinates are flat arrays x of length 2f.  Quasispin degrees of
freedom use the canonical pair (Q, P) with

    x = Q sqrt(1 - rho^2/4),  y = +-P sqrt(1 - rho^2/4),  z = +-(rho^2/2 - 1),

rho^2 = Q^2 + P^2 <= 4, which is regular at the pole sitting at the origin
("south" chart: z = rho^2/2 - 1; "north" chart: z = 1 - rho^2/2).  Energies of
the collective models are expressed per constituent pair, i.e. divided by j.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.optimize

from .models import CustomPotential, ExtendedDicke, Lipkin
from .spectral import DensityCurve


class ChartBoundaryError(ValueError):
    pass


class InsufficientSamplesError(RuntimeError):
    pass


class EmptyShellError(RuntimeError):
    pass


@dataclass
class ClassicalSystem:
    f: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    bounds: np.ndarray                     # (2f, 2) sampling / search box
    hbar: np.ndarray                       # effective hbar per degree of freedom
    name: str = ""
    chart: str = "plane"
    embed: Callable[[np.ndarray], np.ndarray] | None = None
    in_domain: Callable[[np.ndarray], np.ndarray] | None = None
    domain_volume: float | None = None     # phase-space volume of the chart domain
    sampler: Callable | None = None        # uniform sampler over the chart domain
    standard_form: tuple | None = None     # (mass, potential, potential_gradient)
    on_rim: Callable[[np.ndarray], bool] | None = None
    energy_scale: float = 1.0


@dataclass
class StationaryPoint:
    x: np.ndarray
    energy: float
    hessian_eigenvalues: np.ndarray
    index: int
    degenerate: bool
    on_boundary: bool = False
    gradient_norm: float = 0.0

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "E_c": self.energy, "r": self.index,
                "degenerate": self.degenerate, "on_boundary": self.on_boundary,
                "hessian_eigenvalues": self.hessian_eigenvalues.tolist()}


@dataclass
class SingularityPrediction:
    order: int | None
    shape: str
    sign: int = 0
    exponent: float | None = None
    detail: str = ""


# ---------------------------------------------------------------------------
# quasispin chart


@dataclass(frozen=True)
class _SpinChart:
    """Map (Q, P) -> (x, y, z) on the unit sphere with first and second derivatives."""

    pole: str = "south"

    @property
    def sy(self) -> float:
        return 1.0 if self.pole == "south" else -1.0

    @property
    def sz(self) -> float:
        return 1.0 if self.pole == "south" else -1.0

    def check(self, Q, P):
        rho2 = Q * Q + P * P
        if np.any(rho2 > 4.0):
            raise ChartBoundaryError("point outside the quasispin chart (zeta beyond [-1, 1])")
        return rho2

    def coords(self, Q, P):
        rho2 = self.check(Q, P)
        r = np.sqrt(np.maximum(1.0 - rho2 / 4.0, 0.0))
        return Q * r, self.sy * P * r, self.sz * (rho2 / 2.0 - 1.0)

    def jacobian(self, Q, P):
        """d(x, y, z)/d(Q, P) as a (3, 2) array."""
        rho2 = self.check(Q, P)
        r = np.sqrt(1.0 - rho2 / 4.0)
        r1 = -1.0 / (8.0 * r)
        jx = [r + 2 * Q * Q * r1, 2 * Q * P * r1]
        jy = [2 * Q * P * r1, r + 2 * P * P * r1]
        return np.array([jx, [self.sy * v for v in jy], [self.sz * Q, self.sz * P]])

    def second(self, Q, P):
        """Second derivatives: array (3, 2, 2)."""
        rho2 = self.check(Q, P)
        r = np.sqrt(1.0 - rho2 / 4.0)
        r1 = -1.0 / (8.0 * r)
        r2 = -1.0 / (64.0 * r ** 3)
        hx = np.array([[6 * Q * r1 + 4 * Q ** 3 * r2, 2 * P * r1 + 4 * Q * Q * P * r2],
                       [2 * P * r1 + 4 * Q * Q * P * r2, 2 * Q * r1 + 4 * Q * P * P * r2]])
        hy = np.array([[2 * P * r1 + 4 * P * Q * Q * r2, 2 * Q * r1 + 4 * P * P * Q * r2],
                       [2 * Q * r1 + 4 * P * P * Q * r2, 6 * P * r1 + 4 * P ** 3 * r2]])
        return np.array([hx, self.sy * hy, self.sz * np.eye(2)])


def _disk_sampler(n_spin: int, field_box: np.ndarray | None):
    """Uniform sampler over (disk of radius 2)^n_spin x field box."""

    def sample(rng: np.random.Generator, n: int) -> np.ndarray:
        cols = []
        if field_box is not None:
            for lo, hi in field_box:
                cols.append(rng.uniform(lo, hi, n))
        for _ in range(n_spin):
            radius = 2.0 * np.sqrt(rng.uniform(0.0, 1.0, n))
            angle = rng.uniform(0.0, 2 * np.pi, n)
            cols.append(radius * np.cos(angle))
            cols.append(radius * np.sin(angle))
        return np.column_stack(cols)

    return sample


def _ambient_system(f, spin_slice, spin_chart, ambient, ambient_grad, ambient_hess, to_ambient_dim,
                    other_slice, **kwargs) -> ClassicalSystem:
    """Wrap a function of (field coords..., x, y, z) into a canonical chart system.

    ``spin_slice`` indexes (Q, P) in the chart vector; ``other_slice`` the
    remaining canonical coordinates passed through unchanged.
    """

    def lift(X):
        X = np.asarray(X, dtype=float)
        Q, P = X[..., spin_slice.start], X[..., spin_slice.start + 1]
        x, y, z = spin_chart.coords(Q, P)
        rest = X[..., other_slice]
        return np.concatenate([rest, np.stack([x, y, z], axis=-1)], axis=-1)

    def evaluate(X):
        return ambient(lift(X))

    def gradient(X):
        X = np.asarray(X, dtype=float)
        u = lift(X)
        gu = ambient_grad(u)
        n_rest = other_slice.stop - other_slice.start
        jac = spin_chart.jacobian(X[spin_slice.start], X[spin_slice.start + 1])
        g = np.zeros(2 * f)
        g[other_slice] = gu[:n_rest]
        g[spin_slice] = gu[n_rest:] @ jac
        return g

    def hessian(X):
        X = np.asarray(X, dtype=float)
        u = lift(X)
        gu = ambient_grad(u)
        hu = ambient_hess(u)
        n_rest = other_slice.stop - other_slice.start
        Q, P = X[spin_slice.start], X[spin_slice.start + 1]
        jac = spin_chart.jacobian(Q, P)
        sec = spin_chart.second(Q, P)
        # full Jacobian of u w.r.t. chart coordinates (rest pass through)
        big = np.zeros((n_rest + 3, 2 * f))
        big[:n_rest, other_slice] = np.eye(n_rest)
        big[n_rest:, spin_slice] = jac
        hess = big.T @ hu @ big
        hess[spin_slice, spin_slice] += np.einsum("k,kab->ab", gu[n_rest:], sec)
        return 0.5 * (hess + hess.T)

    def embed(X):
        return lift(X)

    def in_domain(X):
        X = np.asarray(X, dtype=float)
        Q, P = X[..., spin_slice.start], X[..., spin_slice.start + 1]
        return Q * Q + P * P <= 4.0

    def on_rim(X):
        Q, P = X[spin_slice.start], X[spin_slice.start + 1]
        return bool(Q * Q + P * P > 4.0 - 1e-6)

    return ClassicalSystem(f=f, evaluate=evaluate, gradient=gradient, hessian=hessian,
                           embed=embed, in_domain=in_domain, on_rim=on_rim, **kwargs)


def classical_lipkin(lam: float, chi: float = 0.0, pole: str = "south",
                     j: float | None = None) -> ClassicalSystem:
    """h = z - (lam/2) [x + chi (z + 1)]^2 on the Bloch sphere (energy per j)."""
    chart = _SpinChart(pole)
    hbar = 1.0 / np.sqrt(j * (j + 1)) if j else 0.0

    def ambient(u):
        x, z = u[..., 0], u[..., 2]
        s = x + chi * (z + 1.0)
        return z - 0.5 * lam * s * s

    def ambient_grad(u):
        x, z = u[0], u[2]
        s = x + chi * (z + 1.0)
        return np.array([-lam * s, 0.0, 1.0 - lam * chi * s])

    def ambient_hess(u):
        return -lam * np.array([[1.0, 0.0, chi], [0.0, 0.0, 0.0], [chi, 0.0, chi * chi]])

    return _ambient_system(1, slice(0, 2), chart, ambient, ambient_grad, ambient_hess, 3,
                           slice(0, 0), bounds=np.array([[-2.0, 2.0], [-2.0, 2.0]]),
                           hbar=np.array([hbar]), name=f"lipkin-{pole}", chart=f"bloch-{pole}",
                           domain_volume=4 * np.pi, sampler=_disk_sampler(1, None))


def dicke_field_extent(omega, omega0, lam, delta, e_max) -> float:
    """Half-width of a field box containing every point with h <= e_max."""
    # h >= omega q^2/2 - lam (1+delta) |q| - omega0 (worst case in the atom)
    c = lam * (1.0 + max(delta, 0.0))
    return (c + np.sqrt(c * c + 2 * omega * (e_max + omega0))) / omega


def classical_dicke(omega: float, omega0: float, lam: float, delta: float,
                    pole: str = "south", j: float | None = None, eta: float | None = None,
                    e_max: float = 2.0, box_scale: float = 1.5) -> ClassicalSystem:
    """h = omega (q^2+p^2)/2 + omega0 z + lam [(1+delta) q x - (1-delta) p y].

    Chart vector: (q, p, Q, P).  The field box is 1.5x the turning region at
    ``e_max``.  ``eta`` sets the field hbar (default sqrt(j(j+1))).
    """
    chart = _SpinChart(pole)
    a, b = lam * (1.0 + delta), lam * (1.0 - delta)

    def ambient(u):
        q, p, x, y, z = (u[..., k] for k in range(5))
        return 0.5 * omega * (q * q + p * p) + omega0 * z + a * q * x - b * p * y

    def ambient_grad(u):
        q, p, x, y, z = u
        return np.array([omega * q + a * x, omega * p - b * y, a * q, -b * p, omega0])

    def ambient_hess(u):
        h = np.zeros((5, 5))
        h[0, 0] = h[1, 1] = omega
        h[0, 2] = h[2, 0] = a
        h[1, 3] = h[3, 1] = -b
        return h

    half = box_scale * dicke_field_extent(omega, omega0, lam, delta, e_max)
    field_box = np.array([[-half, half], [-half, half]])
    bounds = np.vstack([field_box, [[-2.0, 2.0], [-2.0, 2.0]]])
    if j:
        hbar_atom = 1.0 / np.sqrt(j * (j + 1))
        hbar_field = 1.0 / (eta if eta else np.sqrt(j * (j + 1)))
        hbar = np.array([hbar_field, hbar_atom])
    else:
        hbar = np.zeros(2)
    return _ambient_system(2, slice(2, 4), chart, ambient, ambient_grad, ambient_hess, 5,
                           slice(0, 2), bounds=bounds, hbar=hbar, name=f"dicke-{pole}",
                           chart=f"plane x bloch-{pole}",
                           domain_volume=(2 * half) ** 2 * 4 * np.pi,
                           sampler=_disk_sampler(1, field_box))


# ---------------------------------------------------------------------------
# standard-form polynomial systems


class Polynomial:
    """Multivariate polynomial with vectorized value, gradient and Hessian."""

    def __init__(self, terms):
        self.terms = [(np.asarray(e, dtype=int), float(c)) for e, c in terms]
        self.dim = len(self.terms[0][0]) if self.terms else 0

    def __call__(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape[:-1])
        for e, c in self.terms:
            out = out + c * np.prod(q ** e, axis=-1)
        return out

    def _monomial_derivative(self, q, e, which):
        factor = 1.0
        e = e.copy()
        for k in which:
            if e[k] == 0:
                return np.zeros(q.shape[:-1])
            factor *= e[k]
            e[k] -= 1
        return factor * np.prod(q ** e, axis=-1)

    def gradient(self, q):
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape)
        for e, c in self.terms:
            for k in range(self.dim):
                out[..., k] += c * self._monomial_derivative(q, e, (k,))
        return out

    def hessian(self, q):
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape + (self.dim,))
        for e, c in self.terms:
            for k in range(self.dim):
                for l in range(k, self.dim):
                    v = c * self._monomial_derivative(q, e, (k, l))
                    out[..., k, l] += v
                    if l != k:
                        out[..., l, k] += v
        return out


def toy_potential_thermal() -> CustomPotential:
    """-2|q|^2 + q1/5 + 2 q2/5 + 3 q3/5 + sum q^4 with unit mass."""
    terms = []
    for k, c in enumerate((0.2, 0.4, 0.6)):
        e = [0, 0, 0]
        e[k] = 4
        terms.append((tuple(e), 1.0))
        e[k] = 2
        terms.append((tuple(e), -2.0))
        e[k] = 1
        terms.append((tuple(e), c))
    return CustomPotential(3, tuple(terms), 1.0)


def toy_potential_flow(lam: float) -> CustomPotential:
    """-2|q|^2 + q1/4 + q2/2 + (3/4 + lam) q3 + sum q^4."""
    terms = []
    for k, c in enumerate((0.25, 0.5, 0.75 + lam)):
        e = [0, 0, 0]
        e[k] = 4
        terms.append((tuple(e), 1.0))
        e[k] = 2
        terms.append((tuple(e), -2.0))
        e[k] = 1
        terms.append((tuple(e), c))
    return CustomPotential(3, tuple(terms), 1.0)


def classical_standard(spec: CustomPotential, q_box: float = 2.5, e_max: float = 2.0,
                       hbar: float = 1.0) -> ClassicalSystem:
    """H = |p|^2/(2M) + V(q); chart vector (q_1..q_f, p_1..p_f)."""
    f, mass = spec.f, spec.mass
    V = Polynomial(spec.terms)

    def evaluate(X):
        X = np.asarray(X, dtype=float)
        q, p = X[..., :f], X[..., f:]
        return 0.5 * np.sum(p * p, axis=-1) / mass + V(q)

    def gradient(X):
        X = np.asarray(X, dtype=float)
        return np.concatenate([V.gradient(X[:f]), X[f:] / mass])

    def hessian(X):
        X = np.asarray(X, dtype=float)
        h = np.zeros((2 * f, 2 * f))
        h[:f, :f] = V.hessian(X[:f])
        h[f:, f:] = np.eye(f) / mass
        return h

    vmin_guess = -abs(sum(c for _, c in spec.terms)) - 10.0
    p_half = np.sqrt(2 * mass * max(e_max - vmin_guess, 1.0))
    bounds = np.array([[-q_box, q_box]] * f + [[-p_half, p_half]] * f)
    return ClassicalSystem(f=f, evaluate=evaluate, gradient=gradient, hessian=hessian,
                           bounds=bounds, hbar=np.full(f, hbar), name="standard-form",
                           chart="plane", embed=lambda X: np.asarray(X, dtype=float),
                           domain_volume=float(np.prod(bounds[:, 1] - bounds[:, 0])),
                           standard_form=(mass, V, V.gradient))


def classical_1d(potential: Callable, potential_grad: Callable, potential_hess: Callable,
                 mass: float = 1.0, q_box: float = 3.0) -> ClassicalSystem:
    """H = p^2/(2M) + V(q) for scalar callables V, V', V''."""

    def evaluate(X):
        X = np.asarray(X, dtype=float)
        return 0.5 * X[..., 1] ** 2 / mass + potential(X[..., 0])

    def gradient(X):
        return np.array([potential_grad(X[0]), X[1] / mass])

    def hessian(X):
        return np.array([[potential_hess(X[0]), 0.0], [0.0, 1.0 / mass]])

    bounds = np.array([[-q_box, q_box], [-q_box, q_box]])
    return ClassicalSystem(1, evaluate, gradient, hessian, bounds, np.ones(1), name="1d",
                           embed=lambda X: np.asarray(X, dtype=float),
                           domain_volume=float(np.prod(bounds[:, 1] - bounds[:, 0])))


def classical_limit(spec, e_max: float = 2.0) -> list[ClassicalSystem]:
    """Chart systems covering the classical phase space of a model spec."""
    if isinstance(spec, Lipkin):
        j = spec.N / 2
        return [classical_lipkin(spec.lam, spec.chi, pole, j) for pole in ("south", "north")]
    if isinstance(spec, ExtendedDicke):
        j = spec.N / 2
        return [classical_dicke(spec.omega, spec.omega0, spec.lam, spec.delta, pole, j,
                                e_max=e_max) for pole in ("south", "north")]
    if isinstance(spec, CustomPotential):
        return [classical_standard(spec, e_max=e_max)]
    raise ValueError(f"no classical limit implemented for {type(spec).__name__}")


# ---------------------------------------------------------------------------
# Weyl density


def _five_point_derivative(values: np.ndarray, step: float) -> np.ndarray:
    """Smooth noise-robust differentiator: [2(f1 - f-1) + (f2 - f-2)] / (8 h)."""
    out = np.gradient(values, step, edge_order=2)
    out[2:-2] = (2 * (values[3:-1] - values[1:-3]) + (values[4:] - values[:-4])) / (8 * step)
    return out


def _chunk_generators(seed: int, n_samples: int, chunk: int):
    """Independent generators per fixed-size chunk, reproducible for (seed, chunk)."""
    n_chunks = -(-n_samples // chunk)
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [min(chunk, n_samples - k * chunk) for k in range(n_chunks)]
    return [(np.random.default_rng(s), n) for s, n in zip(seqs, sizes)]


def _ball_volume(f: int) -> float:
    from math import gamma, pi

    return pi ** (f / 2) / gamma(f / 2 + 1)


def _cell(sys: ClassicalSystem, hbar) -> float:
    hb = np.asarray(sys.hbar if hbar is None else hbar, dtype=float)
    hb = np.broadcast_to(hb, (sys.f,))
    return float(np.prod(2 * np.pi * hb))


def cumulative_volume(sys: ClassicalSystem, grid: np.ndarray, n_samples: int, seed: int,
                      chunk: int = 1_000_000, n_batches: int = 8, threads: int = 1):
    """Monte-Carlo phase-space volume Omega(E) = vol{H <= E} on the grid.

    Returns (mean, per-batch estimates).  Standard-form systems integrate
    the momenta analytically: Omega = int d^f q  V_f (2M (E - V))^{f/2}.
    """
    grid = np.asarray(grid, dtype=float)
    gens = _chunk_generators(seed, n_samples, chunk)

    def work(item):
        rng, n = item
        if sys.standard_form is not None:
            mass, V, _ = sys.standard_form
            f = sys.f
            q = np.column_stack([rng.uniform(lo, hi, n) for lo, hi in sys.bounds[:f]])
            v = np.sort(V(q))
            vol_q = float(np.prod(sys.bounds[:f, 1] - sys.bounds[:f, 0]))
            # sum_k (E - v_k)_+^{f/2} via sorted values and prefix moments
            out = np.zeros(grid.size)
            cut = np.searchsorted(v, grid, side="right")
            for i, (e, c) in enumerate(zip(grid, cut)):
                if c:
                    out[i] = np.sum((e - v[:c]) ** (f / 2))
            return out * _ball_volume(f) * (2 * mass) ** (f / 2) * vol_q / n, n
        x = sys.sampler(rng, n) if sys.sampler is not None else np.column_stack(
            [rng.uniform(lo, hi, n) for lo, hi in sys.bounds])
        h = np.sort(sys.evaluate(x))
        frac = np.searchsorted(h, grid, side="right") / n
        vol = sys.domain_volume
        return frac * vol, n

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(work, gens))
    else:
        results = [work(g) for g in gens]
    # fixed-order reduction into batches: identical for any thread count
    batches = np.array_split(np.arange(len(results)), min(n_batches, len(results)))
    per_batch = []
    for idx in batches:
        tot = sum(results[i][1] for i in idx)
        per_batch.append(sum(results[i][0] * results[i][1] for i in idx) / tot)
    per_batch = np.array(per_batch)
    weights = np.array([sum(results[i][1] for i in idx) for idx in batches], dtype=float)
    mean = weights @ per_batch / weights.sum()
    return mean, per_batch


def weyl_density(sys: ClassicalSystem, grid: np.ndarray, n_samples: int, seed: int,
                 hbar=None, chunk: int = 1_000_000, rel_tol: float | None = None,
                 threads: int = 1) -> DensityCurve:
    """rho(E) = d/dE [Omega(E) / (2 pi hbar)^f] by Monte Carlo.

    The cumulative volume is checked to be nondecreasing before a 5-point
    differentiator is applied.  ``meta['error']`` holds the batch standard
    error; a median relative error above ``rel_tol`` raises.
    """
    grid = np.asarray(grid, dtype=float)
    step = grid[1] - grid[0]
    omega, batches = cumulative_volume(sys, grid, n_samples, seed, chunk, threads=threads)
    if np.any(np.diff(omega) < -1e-12 * max(1.0, abs(omega).max())):
        raise RuntimeError("Monte-Carlo cumulative volume is not monotone")
    cell = _cell(sys, hbar)
    rho = _five_point_derivative(omega, step) / cell
    per_batch = np.array([_five_point_derivative(b, step) / cell for b in batches])
    if len(per_batch) > 1:
        err = per_batch.std(axis=0, ddof=1) / np.sqrt(len(per_batch))
    else:
        err = np.full(grid.size, np.nan)
    if rel_tol is not None:
        live = rho > 0.05 * rho.max()
        rel = np.median(err[live] / rho[live])
        if not rel <= rel_tol:
            raise InsufficientSamplesError(f"median relative error {rel:.3g} above {rel_tol}")
    return DensityCurve(grid, rho, None, {"error": err, "omega": omega / cell,
                                          "n_samples": n_samples, "seed": seed})


def microcanonical_observable_average(sys: ClassicalSystem, observable: Callable,
                                      grid: np.ndarray, n_samples: int, seed: int,
                                      shell: float | None = None,
                                      chunk: int = 1_000_000) -> DensityCurve:
    """a(E) = <A>_{|H - E| < shell/2} from uniform phase-space samples."""
    grid = np.asarray(grid, dtype=float)
    shell = shell or 2 * (grid[1] - grid[0])
    num = np.zeros(grid.size)
    den = np.zeros(grid.size)
    for rng, n in _chunk_generators(seed, n_samples, chunk):
        x = sys.sampler(rng, n) if sys.sampler is not None else np.column_stack(
            [rng.uniform(lo, hi, n) for lo, hi in sys.bounds])
        h = sys.evaluate(x)
        a = observable(x)
        order = np.argsort(h)
        h, a = h[order], a[order]
        csum = np.concatenate([[0.0], np.cumsum(a)])
        lo = np.searchsorted(h, grid - shell / 2)
        hi = np.searchsorted(h, grid + shell / 2)
        num += csum[hi] - csum[lo]
        den += hi - lo
    if np.any(den == 0):
        raise EmptyShellError("energy shell without samples; widen the shell or add samples")
    return DensityCurve(grid, num / den, None, {"counts": den})


# ---------------------------------------------------------------------------
# stationary points


def _newton_polish(sys, x, tol, max_iter=60):
    for _ in range(max_iter):
        if not np.all(np.isfinite(x)):
            break
        try:
            g = sys.gradient(x)
            h = sys.hessian(x)
        except ChartBoundaryError:
            break
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
            break
        if np.linalg.norm(g) < tol:
            break
        step = np.linalg.lstsq(h, g, rcond=1e-14)[0]
        trial = x - step
        if sys.in_domain is not None and not sys.in_domain(trial):
            break
        x = trial
    return x


def find_stationary_points(systems, n_seeds: int = 200, seed: int = 0,
                           merge_tol: float = 1e-6, degeneracy_tol: float = 1e-6,
                           grad_tol: float = 1e-9) -> list[StationaryPoint]:
    """Multistart search for grad H = 0.

    Seeds are drawn uniformly in each chart's box; 0.5 |grad H|^2 is
    minimized by BFGS and then polished by Newton steps.  Points from several
    charts of one phase space are merged through their ambient embedding.
    """
    if isinstance(systems, ClassicalSystem):
        systems = [systems]
    rng = np.random.default_rng(seed)
    multi_chart = len(systems) > 1
    found: list[tuple[np.ndarray, StationaryPoint]] = []
    for sys in systems:
        scale = sys.energy_scale
        tol = grad_tol * scale

        def objective(x, sys=sys):
            if sys.in_domain is not None and not sys.in_domain(x):
                return 1e12, np.zeros_like(x)
            try:
                g = sys.gradient(x)
                h = sys.hessian(x)
            except (ChartBoundaryError, FloatingPointError):
                return 1e12, np.zeros_like(x)
            return 0.5 * float(g @ g), h @ g

        lo, hi = sys.bounds[:, 0], sys.bounds[:, 1]
        for _ in range(n_seeds):
            x0 = rng.uniform(lo, hi)
            if sys.in_domain is not None and not sys.in_domain(x0):
                continue
            with np.errstate(all="ignore"):
                res = scipy.optimize.minimize(objective, x0, jac=True, method="BFGS",
                                              options={"gtol": 1e-12, "maxiter": 400})
                x = _newton_polish(sys, res.x, tol)
            if sys.in_domain is not None and not sys.in_domain(x):
                continue
            # a chart rim is a single point covered regularly by another chart
            if multi_chart and sys.on_rim is not None and sys.on_rim(x):
                continue
            try:
                g = sys.gradient(x)
            except ChartBoundaryError:
                continue
            if not np.all(np.isfinite(g)) or np.linalg.norm(g) >= tol:
                continue
            amb = sys.embed(x) if sys.embed is not None else x
            if any(np.linalg.norm(amb - a) < merge_tol for a, _ in found):
                continue
            mu = np.linalg.eigvalsh(sys.hessian(x))
            big = np.max(np.abs(mu))
            point = StationaryPoint(
                x=x, energy=float(sys.evaluate(x)), hessian_eigenvalues=mu,
                index=int(np.sum(mu < -degeneracy_tol * big)),
                degenerate=bool(np.any(np.abs(mu) < degeneracy_tol * big)),
                on_boundary=bool(sys.on_rim(x)) if sys.on_rim is not None else False,
                gradient_norm=float(np.linalg.norm(g)))
            found.append((amb, point))
    points = [p for _, p in found]
    points.sort(key=lambda p: (p.energy, p.index))
    return points


# ---------------------------------------------------------------------------
# classification


def classify(point: StationaryPoint, f: int, phase_dim: int | None = None,
             separable_orders: Sequence[int] | None = None) -> SingularityPrediction:
    """Predicted non-analyticity of the smoothed level density at E_c.

    ``phase_dim`` defaults to 2f.  For an even dimension 2g the singularity
    sits in derivative g-1: a step with sign (-1)^{r/2} for even r, a
    logarithm -(-1)^{(r+1)/2} ln|E-E_c| ... reported as an upward (towards
    +infinity) or downward divergence.  For an odd dimension 2g-1 it is an
    inverse square root in derivative g-1 on the right (even r) or left
    (odd r) side.  Degenerate minima with separable leading orders K give
    rho ~ (E - E_c)^L with L = sum 1/K - 1.
    """
    d = 2 * f if phase_dim is None else phase_dim
    if point.on_boundary:
        return SingularityPrediction(None, "unclassified", detail="boundary point")
    if point.degenerate:
        if separable_orders is None:
            return SingularityPrediction(None, "unclassified",
                                         detail="degenerate point without separable form")
        L = sum(1.0 / k for k in separable_orders) - 1.0
        return SingularityPrediction(0, "power-law", 1, L)
    r = point.index
    if d % 2 == 0:
        g = d // 2
        if r % 2 == 0:
            sign = (-1) ** (r // 2)
            return SingularityPrediction(g - 1, "upward step" if sign > 0 else "downward step",
                                         sign)
        # coefficient of ln|E - E_c| is (-1)^{(r+1)/2}; divergence direction is its negative
        coeff = (-1) ** ((r + 1) // 2)
        return SingularityPrediction(g - 1, "upward log" if coeff < 0 else "downward log",
                                     -coeff)
    g = (d + 1) // 2
    if r % 2 == 0:
        return SingularityPrediction(g - 1, "inverse-sqrt-right", (-1) ** (r // 2))
    return SingularityPrediction(g - 1, "inverse-sqrt-left", (-1) ** ((r - 1) // 2))


def classify_index(f: int, r: int, phase_dim: int | None = None) -> SingularityPrediction:
    point = StationaryPoint(np.zeros(2 * f), 0.0, np.ones(2 * f), r, False)
    return classify(point, f, phase_dim)


# ---------------------------------------------------------------------------
# critical couplings


def critical_couplings_dicke(omega: float, omega0: float, delta: float) -> dict:
    if omega <= 0 or omega0 <= 0 or not 0 <= delta <= 1:
        raise ValueError("need omega, omega0 > 0 and delta in [0, 1]")
    root = np.sqrt(omega * omega0)
    lam0 = np.inf if delta == 1 else root / (1.0 - delta)
    return {"lam_c": root / (1.0 + delta), "lam_0": lam0}


def critical_coupling_lipkin(chi: float) -> float:
    return 1.0 / (1.0 + chi * chi)


def lipkin_stationary_energies(lam: float) -> dict:
    """chi = 0 closed forms (per j): poles and the broken-phase minima."""
    out = {"south": -1.0, "north": 1.0}
    if lam > 1:
        out["minimum"] = -0.5 * (lam + 1.0 / lam)
    return out
