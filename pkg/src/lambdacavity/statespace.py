"""Labeled bases, state vectors and sparse operators.

Every basis used in the package is described by its embedding into the
product space ``atom1 x atom2 x pump x Stokes``, where the pump mode holds
at most one photon and the Stokes field holds at most one photon in one of
``n_stokes_modes`` modes.  Product states are addressed arithmetically, so
the embedding of a reduced basis stays O(N) even for large baths.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import ConfigError, InvariantViolation

LEVELS = (1, 2, 3)
HERMITIAN_TOL = 1e-12
MAX_FULL_MODES = 4
SQRT2 = float(np.sqrt(2.0))
INV_SQRT2 = 1.0 / SQRT2


@dataclass(frozen=True)
class BasisLabel:
    """Product state ``|atom1, atom2> |n_pump> |stokes>``.

    ``stokes`` is ``None`` for the Stokes vacuum, otherwise the index of the
    single occupied Stokes mode.
    """

    atom1: int
    atom2: int
    n_pump: int
    stokes: int | None = None

    def __post_init__(self):
        if self.atom1 not in LEVELS or self.atom2 not in LEVELS:
            raise ValueError(f"atomic levels must be in {LEVELS}")
        if self.n_pump not in (0, 1):
            raise ValueError("pump occupation must be 0 or 1")
        if self.stokes is not None and self.stokes < 0:
            raise ValueError("Stokes mode index must be non-negative")

    def __str__(self):
        field = "0S" if self.stokes is None else f"1S{self.stokes}"
        return f"|{self.atom1},{self.atom2}>|{self.n_pump}P>|{field}>"


class ProductSpace:
    """Index arithmetic for the truncated product space with ``n`` Stokes modes."""

    def __init__(self, n_stokes_modes: int):
        if n_stokes_modes < 0:
            raise ConfigError("n_stokes_modes must be >= 0")
        self.n_stokes_modes = n_stokes_modes
        self.shape = (3, 3, 2, n_stokes_modes + 1)
        self.dim = int(np.prod(self.shape))

    def index(self, atom1, atom2, n_pump, stokes=None):
        """Flat index of product states; ``stokes`` may be None or an array (-1 = vacuum)."""
        if stokes is None:
            occ = 0
        else:
            occ = np.asarray(stokes) + 1
        return np.ravel_multi_index(
            (np.asarray(atom1) - 1, np.asarray(atom2) - 1, np.asarray(n_pump), occ), self.shape
        )

    @cached_property
    def labels(self) -> np.ndarray:
        """Integer array (dim, 4): atom1, atom2, n_pump, stokes (-1 for vacuum)."""
        a1, a2, n, s = np.unravel_index(np.arange(self.dim), self.shape)
        return np.stack([a1 + 1, a2 + 1, n, s - 1], axis=1)

    def label(self, i: int) -> BasisLabel:
        a1, a2, n, s = (int(v) for v in self.labels[i])
        return BasisLabel(a1, a2, n, None if s < 0 else s)

    def _map(self, rows, cols, values=None):
        values = np.ones(len(rows)) if values is None else values
        return sparse.csr_matrix(
            (np.asarray(values, dtype=complex), (rows, cols)), shape=(self.dim, self.dim)
        )

    def transition(self, atom: int, i: int, j: int) -> sparse.csr_matrix:
        """``R_ij(atom) = |i><j|`` on the given atom."""
        lab = self.labels
        col = np.flatnonzero(lab[:, atom - 1] == j)
        new = lab[col].copy()
        new[:, atom - 1] = i
        row = self.index(new[:, 0], new[:, 1], new[:, 2], new[:, 3])
        return self._map(row, col)

    def pump_lower(self) -> sparse.csr_matrix:
        lab = self.labels
        col = np.flatnonzero(lab[:, 2] == 1)
        row = self.index(lab[col, 0], lab[col, 1], 0, lab[col, 3])
        return self._map(row, col)

    def stokes_lower(self, mode: int | None = None) -> sparse.csr_matrix:
        """Annihilate a Stokes photon in ``mode`` (all modes summed when None)."""
        lab = self.labels
        if mode is None:
            col = np.flatnonzero(lab[:, 3] >= 0)
        else:
            col = np.flatnonzero(lab[:, 3] == mode)
        row = self.index(lab[col, 0], lab[col, 1], lab[col, 2], -1)
        return self._map(row, col)

    def diagonal(self, values) -> sparse.csr_matrix:
        return sparse.diags(np.asarray(values, dtype=complex), format="csr")


@dataclass(frozen=True, eq=False)
class Basis:
    """Ordered orthonormal basis given by its embedding into product space.

    ``embedding`` has shape ``(product_dim, dim)``; column ``j`` is the
    expansion of basis vector ``j`` over product labels.
    """

    kind: str
    names: tuple[str, ...]
    n_stokes_modes: int
    embedding: sparse.csc_matrix

    def __post_init__(self):
        emb = sparse.csc_matrix(self.embedding, dtype=complex)
        if emb.shape != (ProductSpace(self.n_stokes_modes).dim, len(self.names)):
            raise ValueError("embedding shape does not match basis names / product space")
        object.__setattr__(self, "embedding", emb)

    @property
    def dim(self) -> int:
        return len(self.names)

    def __len__(self):
        return self.dim

    @cached_property
    def _lookup(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def index(self, name: str) -> int:
        try:
            return self._lookup[name]
        except KeyError:
            raise KeyError(f"{name!r} not in {self.kind} basis") from None

    def __contains__(self, name):
        return name in self._lookup

    @cached_property
    def product_space(self) -> ProductSpace:
        return ProductSpace(self.n_stokes_modes)

    def compress(self, product_matrix) -> sparse.csr_matrix:
        """Matrix elements ``<b_i| M |b_j>`` of a product-space operator."""
        v = self.embedding
        return sparse.csr_matrix(v.conj().T @ product_matrix @ v)

    def orthonormality_error(self) -> float:
        g = (self.embedding.conj().T @ self.embedding).toarray()
        return float(np.abs(g - np.eye(self.dim)).max()) if self.dim else 0.0


def _columns_to_embedding(space: ProductSpace, columns) -> sparse.csc_matrix:
    """Build an embedding from a list of ``[(coeff, (a1, a2, n, s)), ...]`` columns."""
    rows, cols, vals = [], [], []
    for j, terms in enumerate(columns):
        for coeff, (a1, a2, n, s) in terms:
            rows.append(int(space.index(a1, a2, n, -1 if s is None else s)))
            cols.append(j)
            vals.append(coeff)
    return sparse.csc_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(space.dim, len(columns)))


def _pair(a, b, n_pump, stokes, sign=1.0):
    """Terms of ``(|a,b> + sign |b,a>)/sqrt2`` with the given field state."""
    return [(INV_SQRT2, (a, b, n_pump, stokes)), (sign * INV_SQRT2, (b, a, n_pump, stokes))]


PSI1 = [(1.0, (1, 1, 1, None))]


def _stokes_pair_block(space: ProductSpace, sign: float) -> sparse.csc_matrix:
    """Embedding columns ``(|1,3> + sign|3,1>)/sqrt2 |0P>|1Sk>`` for all k (vectorised)."""
    n = space.n_stokes_modes
    k = np.arange(n)
    r1 = space.index(np.full(n, 1), np.full(n, 3), np.zeros(n, int), k)
    r2 = space.index(np.full(n, 3), np.full(n, 1), np.zeros(n, int), k)
    rows = np.concatenate([r1, r2])
    cols = np.concatenate([k, k])
    vals = np.concatenate([np.full(n, INV_SQRT2), np.full(n, sign * INV_SQRT2)])
    return sparse.csc_matrix((vals.astype(complex), (rows, cols)), shape=(space.dim, n))


def build_reduced_basis(n_stokes_modes: int) -> Basis:
    """Symmetric sector ``{psi1, psi2+, psi3k+}``, ordered psi1, psi2, psi3_0, psi3_1, ..."""
    if n_stokes_modes < 0:
        raise ConfigError("n_stokes_modes must be >= 0")
    space = ProductSpace(n_stokes_modes)
    head = _columns_to_embedding(space, [PSI1, _pair(1, 2, 0, None)])
    emb = sparse.hstack([head, _stokes_pair_block(space, +1.0)], format="csc")
    names = ("psi1", "psi2", *(f"psi3_{k}" for k in range(n_stokes_modes)))
    return Basis("reduced", names, n_stokes_modes, emb)


def build_antisymmetric_basis(n_stokes_modes: int) -> Basis:
    """The antisymmetric partners ``{psi2-, psi3k-}``; used only to test decoupling."""
    space = ProductSpace(n_stokes_modes)
    head = _columns_to_embedding(space, [_pair(1, 2, 0, None, sign=-1.0)])
    emb = sparse.hstack([head, _stokes_pair_block(space, -1.0)], format="csc")
    names = ("psi2-", *(f"psi3-_{k}" for k in range(n_stokes_modes)))
    return Basis("antisymmetric", names, n_stokes_modes, emb)


def build_full_basis(n_stokes_modes: int) -> Basis:
    """Complete product basis with at most one pump and one Stokes photon (oracle scale)."""
    if n_stokes_modes < 0:
        raise ConfigError("n_stokes_modes must be >= 0")
    if n_stokes_modes > MAX_FULL_MODES:
        raise ConfigError(f"full basis limited to {MAX_FULL_MODES} Stokes modes (oracle use only)")
    space = ProductSpace(n_stokes_modes)
    names = tuple(str(space.label(i)) for i in range(space.dim))
    return Basis("full", names, n_stokes_modes, sparse.identity(space.dim, format="csc"))


def build_sector_basis() -> Basis:
    """Single-Stokes-mode sector ``{psi1, psi2, psi3, psi4}`` including the photon-free entangled state."""
    space = ProductSpace(1)
    cols = [PSI1, _pair(1, 2, 0, None), _pair(1, 3, 0, 0), _pair(1, 3, 0, None)]
    return Basis("sector", ("psi1", "psi2", "psi3", "psi4"), 1, _columns_to_embedding(space, cols))


def build_effective_basis(n_stokes_modes: int = 1, include_psi4: bool = False) -> Basis:
    """Level-2-free basis of the two-photon model: psi1, psi3 (or psi3_k), optionally psi4."""
    if n_stokes_modes < 1:
        raise ConfigError("effective basis needs at least one Stokes mode")
    space = ProductSpace(n_stokes_modes)
    blocks = [_columns_to_embedding(space, [PSI1]), _stokes_pair_block(space, +1.0)]
    if n_stokes_modes == 1:
        names = ["psi1", "psi3"]
    else:
        names = ["psi1", *(f"psi3_{k}" for k in range(n_stokes_modes))]
    if include_psi4:
        blocks.append(_columns_to_embedding(space, [_pair(1, 3, 0, None)]))
        names.append("psi4")
    return Basis("effective", tuple(names), n_stokes_modes, sparse.hstack(blocks, format="csc"))


def derived_basis(parent: Basis, vectors: np.ndarray, names, kind: str = "derived") -> Basis:
    """Basis whose vectors are the columns of ``vectors`` written in ``parent`` coordinates."""
    emb = parent.embedding @ sparse.csc_matrix(np.asarray(vectors, dtype=complex))
    return Basis(kind, tuple(names), parent.n_stokes_modes, emb)


def hermiticity_error(m) -> float:
    d = m - m.conj().T
    if sparse.issparse(d):
        return float(abs(d).max()) if d.nnz else 0.0
    return float(np.abs(d).max()) if d.size else 0.0


@dataclass(frozen=True, eq=False)
class StateVector:
    basis: Basis
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (self.basis.dim,):
            raise ValueError("amplitude vector does not match basis dimension")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def norm(self) -> float:
        """Squared norm; never renormalised."""
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def __getitem__(self, name: str) -> complex:
        return complex(self.amplitudes[self.basis.index(name)])

    def vdot(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_product(self) -> np.ndarray:
        return self.basis.embedding @ self.amplitudes

    def in_basis(self, target: Basis) -> "StateVector":
        """Project onto another basis over the same product space."""
        if target.n_stokes_modes != self.basis.n_stokes_modes:
            raise ValueError("bases live in different product spaces")
        return StateVector(target, target.embedding.conj().T @ self.to_product())


def basis_state(basis: Basis, name: str) -> StateVector:
    amp = np.zeros(basis.dim, dtype=complex)
    amp[basis.index(name)] = 1.0
    return StateVector(basis, amp)


@dataclass(frozen=True, eq=False)
class Operator:
    """Sparse complex matrix on a basis; Hermiticity is asserted on construction."""

    matrix: sparse.csr_matrix
    basis: Basis
    hermitian: bool = False

    def __post_init__(self):
        m = sparse.csr_matrix(self.matrix, dtype=complex)
        m.eliminate_zeros()
        if m.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(f"operator shape {m.shape} does not match basis dimension {self.basis.dim}")
        if self.hermitian:
            err = hermiticity_error(m)
            if err >= HERMITIAN_TOL:
                raise ValueError(f"operator flagged Hermitian but max|H - H^dag| = {err:.3e}")
        object.__setattr__(self, "matrix", m)

    @property
    def dimension(self) -> int:
        return self.basis.dim

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.basis, self.hermitian)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            _same_basis(self, other)
            return Operator(self.matrix @ other.matrix, self.basis)
        if isinstance(other, StateVector):
            return StateVector(self.basis, self.matrix @ other.amplitudes)
        return self.matrix @ other

    def __add__(self, other: "Operator") -> "Operator":
        _same_basis(self, other)
        return Operator(self.matrix + other.matrix, self.basis, self.hermitian and other.hermitian)

    def __sub__(self, other: "Operator") -> "Operator":
        _same_basis(self, other)
        return Operator(self.matrix - other.matrix, self.basis, self.hermitian and other.hermitian)

    def scaled(self, c: complex) -> "Operator":
        return Operator(c * self.matrix, self.basis, self.hermitian and np.isreal(c))

    def expectation(self, state: StateVector) -> complex:
        return complex(np.vdot(state.amplitudes, self.matrix @ state.amplitudes))


def _same_basis(a: Operator, b: Operator):
    if a.basis is not b.basis and a.basis.names != b.basis.names:
        raise ValueError("operators act on different bases")


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def max_abs(op: Operator) -> float:
    m = op.matrix
    return float(abs(m).max()) if m.nnz else 0.0


def transition_operator(atom_index: int, i: int, j: int, basis: Basis) -> Operator:
    """``R_ij(f) = |i_f><j_f|`` in ``basis`` (compressed onto the basis span)."""
    if atom_index not in (1, 2):
        raise ValueError("atom_index must be 1 or 2")
    if i not in LEVELS or j not in LEVELS:
        raise ValueError(f"levels must be in {LEVELS}")
    space = basis.product_space
    return Operator(basis.compress(space.transition(atom_index, i, j)), basis, hermitian=(i == j))


def pump_annihilation(basis: Basis) -> Operator:
    return Operator(basis.compress(basis.product_space.pump_lower()), basis)


def stokes_annihilation(basis: Basis, mode: int | None = None) -> Operator:
    """``a_Sk`` for one mode, or the sum over all modes when ``mode`` is None."""
    return Operator(basis.compress(basis.product_space.stokes_lower(mode)), basis)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    basis: Basis
    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        if d.shape != (self.basis.dim, self.basis.dim):
            raise ValueError("density matrix does not match basis dimension")
        object.__setattr__(self, "data", d)

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        return cls(state.basis, np.outer(state.amplitudes, state.amplitudes.conj()))

    @property
    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def hermiticity_error(self) -> float:
        return hermiticity_error(self.data)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T)).min())

    def element(self, row: str, col: str | None = None) -> complex:
        col = row if col is None else col
        return complex(self.data[self.basis.index(row), self.basis.index(col)])

    def check(self, herm_tol=1e-10, trace_tol=1e-8, eig_tol=1e-8):
        """Raise InvariantViolation unless Hermitian, unit-trace and positive within budgets."""
        if self.hermiticity_error() > herm_tol:
            raise InvariantViolation(f"density matrix non-Hermitian: {self.hermiticity_error():.3e}")
        if abs(self.trace - 1.0) > trace_tol:
            raise InvariantViolation(f"trace drift {self.trace - 1.0:.3e}")
        if self.min_eigenvalue() < -eig_tol:
            raise InvariantViolation(f"negative eigenvalue {self.min_eigenvalue():.3e}")
