"""Bases, model specifications and real-symmetric Hamiltonian builders.

All quantum operators are dense real symmetric matrices with hbar = 1.
Hamiltonians that depend linearly on a control parameter are assembled as
``H0 + lam * V`` so that the coupling operator ``V = dH/dlam`` is available
exactly (see :func:`split_lambda`).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Union

import numpy as np

DEFAULT_DIM_CEILING = 20000


class BasisTooLargeError(ValueError):
    """Requested basis exceeds the configured dimension ceiling."""


class CutoffConvergenceError(RuntimeError):
    """Boson truncation did not converge below the dimension ceiling."""


# ---------------------------------------------------------------------------
# bases


@dataclass(frozen=True)
class QuasispinBasis:
    """States |j, m> with m = -j, ..., +j in ascending order."""

    j: Fraction

    def __post_init__(self):
        two_j = 2 * float(self.j)
        j = Fraction(round(two_j), 2)
        if two_j < 0 or abs(two_j - round(two_j)) > 1e-12:
            raise ValueError(f"2j must be a nonnegative integer, got j={self.j}")
        object.__setattr__(self, "j", j)

    @classmethod
    def from_size(cls, n: int) -> "QuasispinBasis":
        return cls(Fraction(n, 2))

    @property
    def dim(self) -> int:
        return int(2 * self.j) + 1

    @property
    def m_values(self) -> np.ndarray:
        return np.arange(self.dim, dtype=float) - float(self.j)


@dataclass(frozen=True)
class BosonBasis:
    n_max: int
    converged: bool = False

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError("n_max must be nonnegative")

    @property
    def dim(self) -> int:
        return self.n_max + 1


@dataclass(frozen=True)
class ProductBasis:
    """Field x quasispin states ordered n_b major, m minor.

    ``block`` is ``None``, ``("parity", +1 | -1)`` or ``("M", M)``.
    ``states`` holds one row (n_b, m) per basis vector.
    """

    atom: QuasispinBasis
    field: BosonBasis | None
    block: tuple | None
    states: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class OccupationBasis:
    """Fixed-particle-number Fock states in lexicographic order."""

    n_sites: int
    n_bosons: int
    states: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)


# ---------------------------------------------------------------------------
# operators


class RealSymmetricOperator:
    """Dense real symmetric matrix stored through its lower triangle.

    The full matrix is rebuilt as ``L + L.T - diag(L)`` so it is exactly
    symmetric regardless of how the entries were accumulated.
    """

    __slots__ = ("lower", "basis", "_dense")

    def __init__(self, lower: np.ndarray, basis=None):
        lower = np.tril(np.asarray(lower, dtype=float))
        if lower.ndim != 2 or lower.shape[0] != lower.shape[1]:
            raise ValueError("operator must be square")
        if not np.all(np.isfinite(lower)):
            raise ValueError("operator has non-finite entries")
        self.lower = lower
        self.basis = basis
        self._dense = None

    @classmethod
    def from_dense(cls, a: np.ndarray, basis=None) -> "RealSymmetricOperator":
        return cls(np.tril(a), basis)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def to_dense(self) -> np.ndarray:
        if self._dense is None:
            low = self.lower
            dense = low + low.T
            dense[np.diag_indices_from(dense)] -= np.diag(low)
            dense.setflags(write=False)
            self._dense = dense
        return self._dense

    def bandwidth(self) -> int:
        rows, cols = np.nonzero(self.lower)
        return int((rows - cols).max()) if rows.size else 0

    def __add__(self, other: "RealSymmetricOperator") -> "RealSymmetricOperator":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return RealSymmetricOperator(self.lower + other.lower, self.basis)

    def __sub__(self, other: "RealSymmetricOperator") -> "RealSymmetricOperator":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "RealSymmetricOperator":
        return RealSymmetricOperator(float(scalar) * self.lower, self.basis)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return self.to_dense() @ other

    def __repr__(self):
        return f"RealSymmetricOperator(dim={self.dim})"


def _from_entries(dim, rows, cols, vals, basis) -> RealSymmetricOperator:
    """Accumulate entries given anywhere in the matrix into the lower triangle."""
    rows = np.asarray(rows, dtype=int)
    cols = np.asarray(cols, dtype=int)
    r = np.maximum(rows, cols)
    c = np.minimum(rows, cols)
    lower = np.zeros((dim, dim))
    np.add.at(lower, (r, c), vals)
    return RealSymmetricOperator(lower, basis)


# ---------------------------------------------------------------------------
# model specifications


@dataclass(frozen=True)
class Lipkin:
    N: int
    lam: float
    chi: float = 0.0
    kind: str = field(default="lipkin", init=False)

    def __post_init__(self):
        if int(self.N) != self.N or self.N <= 0:
            raise ValueError("Lipkin requires N > 0")
        _finite(lam=self.lam, chi=self.chi)


@dataclass(frozen=True)
class ExtendedDicke:
    N: int
    omega: float
    omega0: float
    lam: float
    delta: float = 0.0
    n_max: int | None = None
    kind: str = field(default="dicke", init=False)

    def __post_init__(self):
        if int(self.N) != self.N or self.N <= 0:
            raise ValueError("Dicke requires N > 0")
        _finite(omega=self.omega, omega0=self.omega0, lam=self.lam, delta=self.delta)
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if self.n_max is not None and self.n_max < 0:
            raise ValueError("n_max must be nonnegative")


@dataclass(frozen=True)
class TavisCummingsBlock:
    N: int
    omega: float
    omega0: float
    lam: float
    M: int
    kind: str = field(default="tc_block", init=False)

    def __post_init__(self):
        if int(self.N) != self.N or self.N <= 0:
            raise ValueError("Tavis-Cummings block requires N > 0")
        if self.M < 0:
            raise ValueError("M must be nonnegative")
        _finite(omega=self.omega, omega0=self.omega0, lam=self.lam)


@dataclass(frozen=True)
class TwoSiteBoseHubbard:
    N: int
    eps_plus: float
    eps_minus: float
    tau: float
    U: float
    kind: str = field(default="bh_two_site", init=False)

    def __post_init__(self):
        if int(self.N) != self.N or self.N <= 0:
            raise ValueError("two-site Bose-Hubbard requires N > 0")
        _finite(eps_plus=self.eps_plus, eps_minus=self.eps_minus, tau=self.tau, U=self.U)


@dataclass(frozen=True)
class BoseHubbardChain:
    n_sites: int
    n_bosons: int
    eps: float
    tau: float
    U: float
    kind: str = field(default="bh_chain", init=False)

    def __post_init__(self):
        if self.n_sites <= 0 or self.n_bosons < 0:
            raise ValueError("chain needs n_sites > 0 and n_bosons >= 0")
        _finite(eps=self.eps, tau=self.tau, U=self.U)


@dataclass(frozen=True)
class CustomPotential:
    """Standard-form classical system H = |p|^2 / (2 mass) + V(q).

    ``terms`` lists (exponents, coefficient) monomials of the polynomial V.
    """

    f: int
    terms: tuple
    mass: float = 1.0
    kind: str = field(default="custom", init=False)

    def __post_init__(self):
        if self.f <= 0 or self.mass <= 0:
            raise ValueError("need f > 0 and mass > 0")
        terms = tuple((tuple(int(e) for e in exps), float(c)) for exps, c in self.terms)
        for exps, _ in terms:
            if len(exps) != self.f or min(exps) < 0:
                raise ValueError(f"bad monomial exponents {exps}")
        object.__setattr__(self, "terms", terms)


ModelSpec = Union[Lipkin, ExtendedDicke, TavisCummingsBlock, TwoSiteBoseHubbard,
                  BoseHubbardChain, CustomPotential]

_KINDS = {cls.__dataclass_fields__["kind"].default: cls
          for cls in (Lipkin, ExtendedDicke, TavisCummingsBlock, TwoSiteBoseHubbard,
                      BoseHubbardChain, CustomPotential)}


def _finite(**values):
    for name, v in values.items():
        if not np.isfinite(v):
            raise ValueError(f"{name} must be finite")


def model_from_dict(data: dict) -> ModelSpec:
    data = dict(data)
    kind = data.pop("kind")
    cls = _KINDS[kind]
    if cls is CustomPotential:
        data["terms"] = tuple((tuple(t[0]), t[1]) for t in data["terms"])
    return cls(**data)


def model_to_dict(spec: ModelSpec) -> dict:
    out = {"kind": spec.kind}
    for name in spec.__dataclass_fields__:
        if name != "kind":
            value = getattr(spec, name)
            if name == "terms":
                value = [[list(e), c] for e, c in value]
            out[name] = value
    return out


# ---------------------------------------------------------------------------
# quasispin operators


def ladder_coefficients(j: float, m: np.ndarray, sign: int) -> np.ndarray:
    """<m +- 1| J_+- |m> = sqrt(j(j+1) - m(m +- 1)), clipped at the chain ends."""
    return np.sqrt(np.maximum(j * (j + 1) - m * (m + sign), 0.0))


def build_quasispin_ops(basis: QuasispinBasis) -> dict:
    """Jz, Jx as symmetric operators and J+, J- as plain real matrices."""
    j = float(basis.j)
    m = basis.m_values
    dim = basis.dim
    jz = RealSymmetricOperator(np.diag(m), basis)
    jplus = np.zeros((dim, dim))
    up = ladder_coefficients(j, m[:-1], +1)
    jplus[np.arange(1, dim), np.arange(dim - 1)] = up
    jminus = jplus.T.copy()
    jx = RealSymmetricOperator.from_dense(0.5 * (jplus + jminus), basis)
    return {"Jz": jz, "Jx": jx, "Jplus": jplus, "Jminus": jminus,
            "JplusJminus": RealSymmetricOperator.from_dense(jplus @ jminus, basis),
            "JminusJplus": RealSymmetricOperator.from_dense(jminus @ jplus, basis)}


# ---------------------------------------------------------------------------
# Lipkin


def _lipkin_parts(spec: Lipkin, block: str | None = None):
    basis = QuasispinBasis.from_size(spec.N)
    ops = build_quasispin_ops(basis)
    jz = ops["Jz"].to_dense()
    shifted = ops["Jx"].to_dense() + spec.chi * (jz + 0.5 * spec.N * np.eye(basis.dim))
    coupling = -(shifted @ shifted) / spec.N
    h0 = jz
    if block is not None:
        if spec.chi != 0:
            raise ValueError("parity blocks exist only for chi = 0")
        k = np.arange(basis.dim)
        keep = k % 2 == (0 if block in ("+", "even", 1) else 1)
        h0 = h0[np.ix_(keep, keep)]
        coupling = coupling[np.ix_(keep, keep)]
    return (RealSymmetricOperator.from_dense(h0, basis),
            RealSymmetricOperator.from_dense(coupling, basis))


def build_lipkin(spec: Lipkin, block: str | None = None) -> RealSymmetricOperator:
    """H = Jz - (lam/N) [Jx + chi (Jz + N/2)]^2 in the |j, m> basis.

    For chi = 0 an optional parity block ("+" or "-", by parity of m + j)
    may be requested.
    """
    if spec.lam < 0:
        raise ValueError("Lipkin coupling must be nonnegative")
    h0, v = _lipkin_parts(spec, block)
    return h0 + spec.lam * v


def build_lipkin_simple(N: int, A: float, B: float) -> RealSymmetricOperator:
    """H = B Jz - (A/N) Jx^2 + A/4."""
    basis = QuasispinBasis.from_size(N)
    ops = build_quasispin_ops(basis)
    jx = ops["Jx"].to_dense()
    h = B * ops["Jz"].to_dense() - (A / N) * (jx @ jx) + 0.25 * A * np.eye(basis.dim)
    return RealSymmetricOperator.from_dense(h, basis)


# ---------------------------------------------------------------------------
# Dicke and Tavis-Cummings


def dicke_basis(N: int, n_max: int, block=None, converged: bool = False) -> ProductBasis:
    atom = QuasispinBasis.from_size(N)
    n = np.repeat(np.arange(n_max + 1), atom.dim)
    k = np.tile(np.arange(atom.dim), n_max + 1)
    keep = np.ones(n.size, dtype=bool)
    label = None
    if block is not None:
        sign = _parity_sign(block)
        keep = (n + k) % 2 == (0 if sign > 0 else 1)
        label = ("parity", sign)
    states = np.column_stack([n[keep], k[keep] - float(atom.j)])
    return ProductBasis(atom, BosonBasis(n_max, converged), label, states)


def _parity_sign(block) -> int:
    if block in ("+", "even", 1, +1):
        return 1
    if block in ("-", "odd", -1):
        return -1
    raise ValueError(f"unknown parity label {block!r}")


def _dicke_parts(spec: ExtendedDicke, n_max: int, block=None, converged=False):
    basis = dicke_basis(spec.N, n_max, block, converged)
    j = float(basis.atom.j)
    n = basis.states[:, 0].astype(int)
    m = basis.states[:, 1]
    dim = basis.dim
    index = {(int(a), float(b)): i for i, (a, b) in enumerate(zip(n, m))}
    h0 = np.diag(spec.omega * n + spec.omega0 * m)
    rows, cols, vals = [], [], []
    scale = 1.0 / np.sqrt(spec.N)
    for i in range(dim):
        if n[i] >= n_max:
            continue
        bose = np.sqrt(n[i] + 1.0)
        # b^dag J-  and  delta b^dag J+
        for dm, weight in ((-1, 1.0), (+1, spec.delta)):
            if weight == 0.0:
                continue
            target = index.get((int(n[i]) + 1, m[i] + dm))
            if target is None:
                continue
            amp = bose * ladder_coefficients(j, np.array([m[i]]), dm)[0]
            rows.append(target)
            cols.append(i)
            vals.append(scale * weight * amp)
    v = _from_entries(dim, rows, cols, vals, basis)
    return RealSymmetricOperator.from_dense(h0, basis), v


def build_dicke(spec: ExtendedDicke, block=None, n_levels: int | None = None,
                ceiling: int = DEFAULT_DIM_CEILING) -> RealSymmetricOperator:
    """H = w b^dag b + w0 Jz + (lam/sqrt N)(b^dag J- + b J+ + d b^dag J+ + d b J-).

    ``block`` selects a parity sector ("+" or "-") or the full space (None).
    When ``spec.n_max`` is None the boson cutoff is chosen by
    :func:`converge_dicke_cutoff` for the lowest ``n_levels`` levels.
    """
    if spec.n_max is None:
        n_max, _ = converge_dicke_cutoff(spec, block, n_levels or (spec.N + 1), ceiling=ceiling)
        converged = True
    else:
        n_max, converged = spec.n_max, False
    if _dicke_dim(spec.N, n_max, block) > ceiling:
        raise BasisTooLargeError("Dicke basis exceeds the dimension ceiling")
    h0, v = _dicke_parts(spec, n_max, block, converged)
    return h0 + spec.lam * v


def _dicke_dim(N, n_max, block):
    full = (n_max + 1) * (N + 1)
    return full if block is None else (full + 1) // 2


def converge_dicke_cutoff(spec: ExtendedDicke, block, n_levels: int, tol: float = 1e-8,
                          start: int | None = None, ceiling: int = DEFAULT_DIM_CEILING):
    """Double n_max until the n_levels-th eigenvalue moves by < tol * span.

    Returns (n_max, history) where history lists (n_max, E_top) pairs.
    """
    from .spectral import lowest_levels

    n_max = start if start is not None else max(8, 2 * n_levels // (spec.N + 1) + 8)
    history = []
    previous = None
    while True:
        if _dicke_dim(spec.N, n_max, block) > ceiling:
            raise CutoffConvergenceError(
                f"boson cutoff not converged below dimension ceiling {ceiling} "
                f"(history: {history})")
        if block is None:
            h0, v = _dicke_parts(spec, n_max, block)
            top = min(n_levels, h0.dim) - 1
            vals = lowest_levels(h0 + spec.lam * v, top + 1)
        else:
            h0, v = dicke_sparse_parts(spec, block, n_max)
            top = min(n_levels, h0.shape[0]) - 1
            vals = sparse_lowest_levels(h0 + spec.lam * v, top + 1)
        history.append((n_max, float(vals[-1])))
        if previous is not None and top == previous[0]:
            span = max(vals[-1] - vals[0], 1.0)
            if abs(vals[-1] - previous[1]) < tol * span:
                return n_max, history
        previous = (top, vals[-1])
        n_max *= 2


def dicke_lambda_parts(spec: ExtendedDicke, block=None):
    if spec.n_max is None:
        raise ValueError("set n_max explicitly to split the Dicke Hamiltonian")
    return _dicke_parts(spec, spec.n_max, block)


def dicke_block_tridiagonal(spec: ExtendedDicke, parity: int, n_max: int):
    """Per-boson-number blocks of a Dicke parity sector.

    Returns (diagonal_blocks, coupling_blocks) where coupling_blocks[n] maps
    the n-boson states to the (n+1)-boson states.  The parity sector with
    n_b major ordering is block tridiagonal in n_b.
    """
    j = spec.N / 2.0
    sign = _parity_sign(parity)
    scale = spec.lam / np.sqrt(spec.N)
    ks = [np.array([k for k in range(spec.N + 1) if (n + k) % 2 == (0 if sign > 0 else 1)])
          for n in range(n_max + 1)]
    diag = [spec.omega * n + spec.omega0 * (k - j) for n, k in enumerate(ks)]
    off = []
    for n in range(n_max):
        src, dst = ks[n], ks[n + 1]
        block = np.zeros((dst.size, src.size))
        pos = {int(k): i for i, k in enumerate(dst)}
        for c, k in enumerate(src):
            m = k - j
            for dm, weight in ((-1, 1.0), (+1, spec.delta)):
                r = pos.get(int(k + dm))
                if r is None or weight == 0.0:
                    continue
                block[r, c] += scale * weight * np.sqrt(n + 1.0) * ladder_coefficients(
                    j, np.array([m]), dm)[0]
        off.append(block)
    return diag, off


def dicke_sparse_parts(spec: ExtendedDicke, parity, n_max: int):
    """Sparse (H0, V) of one Dicke parity sector in boson-number-major order."""
    import scipy.sparse as sparse

    diag, off = dicke_block_tridiagonal(replace(spec, lam=1.0), _parity_sign(parity), n_max)
    h0 = sparse.diags(np.concatenate(diag)).tocsr()
    sizes = [d.size for d in diag]
    starts = np.concatenate([[0], np.cumsum(sizes)])
    dim = int(starts[-1])
    rows, cols, vals = [], [], []
    for n, block in enumerate(off):
        r, c = np.nonzero(block)
        rows.append(r + starts[n + 1])
        cols.append(c + starts[n])
        vals.append(block[r, c])
    rows, cols, vals = (np.concatenate(a) for a in (rows, cols, vals))
    v = sparse.coo_matrix((np.concatenate([vals, vals]),
                           (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
                          shape=(dim, dim)).tocsr()
    return h0, v


def sparse_lowest_levels(h, count: int) -> np.ndarray:
    """Lowest eigenvalues of a sparse symmetric matrix (Lanczos, dense fallback)."""
    from scipy.sparse.linalg import eigsh

    dim = h.shape[0]
    if dim <= 400 or count >= dim // 4:
        return np.linalg.eigvalsh(h.toarray())[:count]
    vals = eigsh(h, k=count, which="SA", tol=1e-13, return_eigenvectors=False)
    return np.sort(vals)


def tc_basis(N: int, M: int) -> ProductBasis:
    atom = QuasispinBasis.from_size(N)
    k_max = min(M, N)
    # n_b = M - k, ascending n_b means descending k
    k = np.arange(k_max, -1, -1)
    states = np.column_stack([M - k, k - float(atom.j)])
    return ProductBasis(atom, None, ("M", M), states)


def _tc_parts(spec: TavisCummingsBlock):
    basis = tc_basis(spec.N, spec.M)
    j = float(basis.atom.j)
    n = basis.states[:, 0]
    m = basis.states[:, 1]
    h0 = np.diag(spec.omega * n + spec.omega0 * m)
    dim = basis.dim
    # state i+1 has one more boson and m lowered by one
    amp = np.sqrt(n[:-1] + 1.0) * ladder_coefficients(j, m[:-1], -1) / np.sqrt(spec.N)
    v = np.zeros((dim, dim))
    v[np.arange(1, dim), np.arange(dim - 1)] = amp
    return RealSymmetricOperator.from_dense(h0, basis), RealSymmetricOperator(v, basis)


def build_tc_block(spec: TavisCummingsBlock) -> RealSymmetricOperator:
    """delta = 0 Dicke Hamiltonian restricted to fixed M = n_b + m + j."""
    h0, v = _tc_parts(spec)
    return h0 + spec.lam * v


def excitation_number(basis: ProductBasis) -> RealSymmetricOperator:
    j = float(basis.atom.j)
    return RealSymmetricOperator(np.diag(basis.states[:, 0] + basis.states[:, 1] + j), basis)


def parity_operator(basis: ProductBasis) -> RealSymmetricOperator:
    j = float(basis.atom.j)
    exponent = np.rint(basis.states[:, 0] + basis.states[:, 1] + j).astype(int)
    return RealSymmetricOperator(np.diag((-1.0) ** exponent), basis)


# ---------------------------------------------------------------------------
# Bose-Hubbard


def occupation_basis(n_sites: int, n_bosons: int, ceiling: int = DEFAULT_DIM_CEILING):
    from math import comb

    dim = comb(n_bosons + n_sites - 1, n_bosons)
    if dim > ceiling:
        raise BasisTooLargeError(f"basis dimension {dim} exceeds ceiling {ceiling}")
    states = []
    for sites in itertools.combinations_with_replacement(range(n_sites), n_bosons):
        occ = np.bincount(np.asarray(sites, dtype=int), minlength=n_sites)
        states.append(occ)
    states = np.array(sorted(map(tuple, states)), dtype=int).reshape(dim, n_sites)
    return OccupationBasis(n_sites, n_bosons, states)


def _hopping_matrix(basis: OccupationBasis, bonds) -> RealSymmetricOperator:
    index = {tuple(s): i for i, s in enumerate(basis.states)}
    rows, cols, vals = [], [], []
    for i, s in enumerate(basis.states):
        for a, b in bonds:
            if s[b] == 0:
                continue
            t = s.copy()
            t[b] -= 1
            t[a] += 1
            rows.append(index[tuple(t)])
            cols.append(i)
            vals.append(np.sqrt((s[a] + 1.0) * s[b]))
    # each unordered pair appears twice (a<-b and b<-a); keep one orientation
    rows = np.asarray(rows, dtype=int)
    cols = np.asarray(cols, dtype=int)
    vals = np.asarray(vals, dtype=float)
    lower = rows > cols
    return _from_entries(basis.dim, rows[lower], cols[lower], vals[lower], basis)


def build_bose_hubbard(spec: TwoSiteBoseHubbard | BoseHubbardChain,
                       ceiling: int = DEFAULT_DIM_CEILING) -> RealSymmetricOperator:
    """Fixed-particle-number Bose-Hubbard Hamiltonian.

    Two-site: eps+ n+ + eps- n- - tau (b+^dag b- + h.c.) + (U/N) sum n(n-1).
    Chain:    eps sum n_i - tau sum_<i,i+1> (hops) + (U/2) sum n_i(n_i - 1)
    with open (Dirichlet) ends.
    """
    if isinstance(spec, TwoSiteBoseHubbard):
        basis = occupation_basis(2, spec.N, ceiling)
        occ = basis.states.astype(float)
        diag = (spec.eps_plus * occ[:, 0] + spec.eps_minus * occ[:, 1]
                + (spec.U / spec.N) * (occ * (occ - 1)).sum(axis=1))
        hop = _hopping_matrix(basis, [(0, 1), (1, 0)])
    elif isinstance(spec, BoseHubbardChain):
        basis = occupation_basis(spec.n_sites, spec.n_bosons, ceiling)
        occ = basis.states.astype(float)
        diag = spec.eps * occ.sum(axis=1) + 0.5 * spec.U * (occ * (occ - 1)).sum(axis=1)
        bonds = [(i, i + 1) for i in range(spec.n_sites - 1)]
        bonds += [(b, a) for a, b in bonds]
        hop = _hopping_matrix(basis, bonds)
    else:
        raise TypeError(f"not a Bose-Hubbard spec: {spec!r}")
    return RealSymmetricOperator(np.diag(diag), basis) + (-spec.tau) * hop


# ---------------------------------------------------------------------------
# generic helpers


def split_lambda(spec: ModelSpec, block=None):
    """Return (H0, V) with H(lam) = H0 + lam * V for lam-linear models."""
    if isinstance(spec, Lipkin):
        return _lipkin_parts(spec, block)
    if isinstance(spec, ExtendedDicke):
        return dicke_lambda_parts(spec, block)
    if isinstance(spec, TavisCummingsBlock):
        return _tc_parts(spec)
    raise TypeError(f"{type(spec).__name__} has no linear control parameter")


def build(spec: ModelSpec, block=None) -> RealSymmetricOperator:
    if isinstance(spec, Lipkin):
        return build_lipkin(spec, block)
    if isinstance(spec, ExtendedDicke):
        return build_dicke(spec, block)
    if isinstance(spec, TavisCummingsBlock):
        return build_tc_block(spec)
    if isinstance(spec, (TwoSiteBoseHubbard, BoseHubbardChain)):
        return build_bose_hubbard(spec)
    raise TypeError(f"no quantum Hamiltonian for {type(spec).__name__}")
