"""Independent reference computations used as second routes in the tests.

Nothing here imports the package's numerical code; each oracle rebuilds its
quantity from first principles (tensor products, determinants, closed forms).
"""
from __future__ import annotations

from functools import reduce

import numpy as np
from scipy.signal import fftconvolve

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
I2 = np.eye(2)


def _site_op(op, site, n):
    return reduce(np.kron, [op if k == site else I2 for k in range(n)])


def collective_pauli(n: int):
    """Jx, Jz summed over n qubits as 2^n x 2^n matrices."""
    jx = sum(_site_op(SX, k, n) for k in range(n)) / 2
    jz = sum(_site_op(SZ, k, n) for k in range(n)) / 2
    return jx, jz


def symmetric_projector(n: int) -> np.ndarray:
    """Orthonormal basis of the j = n/2 multiplet, obtained by lowering |all up>."""
    top = np.zeros(2 ** n)
    top[0] = 1.0          # every qubit in the +1 eigenstate of sigma_z
    sm = np.array([[0.0, 0.0], [1.0, 0.0]])
    jminus = sum(_site_op(sm, k, n) for k in range(n))
    vecs = [top]
    for _ in range(n):
        v = jminus @ vecs[-1]
        vecs.append(v / np.linalg.norm(v))
    return np.column_stack(vecs[::-1])     # ascending m


def lipkin_tensor_spectrum(n: int, lam: float, chi: float) -> np.ndarray:
    jx, jz = collective_pauli(n)
    A = jx + chi * (jz + 0.5 * n * np.eye(2 ** n))
    H = jz - (lam / n) * (A @ A)
    P = symmetric_projector(n)
    return np.linalg.eigvalsh(P.T @ H @ P)


def char_poly_roots(a: np.ndarray) -> np.ndarray:
    """Eigenvalues from the characteristic polynomial by cofactor expansion.

    Coefficients are obtained by evaluating det(x I - A) through Laplace
    expansion at dim+1 points and interpolating, then rooted with numpy.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]

    def det(m):
        if m.shape[0] == 1:
            return m[0, 0]
        total = 0.0
        for c in range(m.shape[0]):
            if m[0, c] == 0.0:
                continue
            minor = np.delete(np.delete(m, 0, axis=0), c, axis=1)
            total += (-1) ** c * m[0, c] * det(minor)
        return total

    xs = np.arange(n + 1, dtype=float) - n / 2
    ys = [det(x * np.eye(n) - a) for x in xs]
    coeffs = np.polyfit(xs, ys, n)
    return np.sort(np.roots(coeffs).real)


def dicke_kron(N: int, n_max: int, omega, omega0, lam, delta) -> np.ndarray:
    """Dicke Hamiltonian as field (x) spin Kronecker products."""
    j = N / 2
    m = np.arange(-j, j + 1)
    jp = np.diag(np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1)), -1)
    jm = jp.T
    jz = np.diag(m)
    b = np.diag(np.sqrt(np.arange(1, n_max + 1)), 1)
    bd = b.T
    nb = bd @ b
    one_f = np.eye(n_max + 1)
    one_s = np.eye(m.size)
    H = omega * np.kron(nb, one_s) + omega0 * np.kron(one_f, jz)
    H += lam / np.sqrt(N) * (np.kron(bd, jm) + np.kron(b, jp)
                             + delta * (np.kron(bd, jp) + np.kron(b, jm)))
    return H


def schwinger_lipkin(N: int, lam: float, chi: float) -> tuple[np.ndarray, np.ndarray]:
    """Lipkin Hamiltonian from two boson modes (a = upper, c = lower level).

    Returns (H, m) where m = (n_a - n_c)/2 labels the rows.
    """
    states = [(na, N - na) for na in range(N + 1)]
    m = np.array([(na - nc) / 2 for na, nc in states])
    dim = len(states)
    jplus = np.zeros((dim, dim))
    for i, (na, nc) in enumerate(states):
        if nc > 0:
            k = states.index((na + 1, nc - 1))
            jplus[k, i] = np.sqrt((na + 1) * nc)
    jx = 0.5 * (jplus + jplus.T)
    jz = np.diag(m)
    A = jx + chi * (jz + 0.5 * N * np.eye(dim))
    return jz - (lam / N) * (A @ A), m


def schottky_capacity(T, gap):
    x = gap / np.asarray(T, dtype=float)
    return x * x * np.exp(x) / (1.0 + np.exp(x)) ** 2


def two_level_metric(lam):
    """Ground-state metric of H = lam sigma_z + sigma_x."""
    return 0.25 / (1.0 + lam * lam) ** 2


def square_barrier_t(E, V0, w, m=1.0):
    E = np.asarray(E, dtype=float)
    out = np.empty_like(E)
    below = E < V0
    k2 = 2 * m * (V0 - E[below])
    kappa = np.sqrt(k2)
    out[below] = 1.0 / (1.0 + V0 ** 2 * np.sinh(kappa * w) ** 2 / (4 * E[below] * (V0 - E[below])))
    above = ~below
    q = np.sqrt(2 * m * (E[above] - V0))
    with np.errstate(invalid="ignore", divide="ignore"):
        out[above] = 1.0 / (1.0 + V0 ** 2 * np.sin(q * w) ** 2 / (4 * E[above] * (E[above] - V0)))
    return out


def eckart_t(E, V0, a, m=1.0):
    """Transmission of V0 / cosh^2(x/a) (symmetric Eckart barrier)."""
    E = np.asarray(E, dtype=float)
    k = np.sqrt(2 * m * E)
    s = 8 * m * V0 * a * a - 1.0
    arg = np.pi * np.sqrt(np.abs(s)) / 2
    denom_extra = np.cosh(arg) ** 2 if s > 0 else np.cos(arg) ** 2
    sh = np.sinh(np.pi * k * a) ** 2
    return sh / (sh + denom_extra)


def separable_toy_density(coeffs, energies, h=2e-5, q_max=2.2, n_q=400001, e_lo=-2.0,
                          e_span=5.0, mass=1.0) -> np.ndarray:
    """Weyl density of sum_k p_k^2/2M + q_k^4 - 2 q_k^2 + c_k q_k by 1D convolution.

    Each 1D density is the energy derivative of (1/pi) int sqrt(2M(e - v)) dq;
    the three are convolved as bin masses on a common energy grid.
    """
    q = np.linspace(-q_max, q_max, n_q)
    dq = q[1] - q[0]
    e = e_lo + h * np.arange(int(e_span / h))
    masses = []
    for c in coeffs:
        v = q ** 4 - 2 * q ** 2 + c * q
        hist = np.histogram(v, bins=np.append(e, e[-1] + h) - h / 2)[0] * dq
        kern = np.sqrt(2 * mass * np.arange(e.size) * h) / np.pi
        area = fftconvolve(hist, kern)[: e.size]
        masses.append(np.diff(area))
    total = masses[0]
    for mk in masses[1:]:
        total = fftconvolve(total, mk)
    grid = len(coeffs) * e_lo + h * np.arange(total.size) + 1.5 * h
    return np.interp(energies, grid, total / h)


def cosine_band_dos(E, eps, tau):
    x = (2 * tau) ** 2 - (np.asarray(E) - eps) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, 1.0 / (np.pi * np.sqrt(np.abs(x))), 0.0)
