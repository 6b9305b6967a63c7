"""Dense Hermitian operator algebra on bipartite spaces.

Operators are plain ``numpy`` arrays of shape ``(D, D)``.  Composite basis
index ``(i, j)`` maps to ``i * d2 + j`` (zero based).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

HERMITIAN_TOL = 1e-12
DERIVED_TOL = 1e-10


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class NotHermitianError(ValueError):
    """Input deviates from Hermiticity beyond tolerance."""


@dataclass(frozen=True)
class BipartiteDims:
    d1: int
    d2: int

    def __post_init__(self):
        if self.d1 < 1 or self.d2 < 1:
            raise DimensionError(f"local dimensions must be positive, got {self.d1}x{self.d2}")

    @property
    def D(self) -> int:
        return self.d1 * self.d2


@dataclass(frozen=True)
class ProductVector:
    """Local unit vectors ``a`` (first party) and ``b`` (second party)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        for name, v in (("a", self.a), ("b", self.b)):
            if abs(np.linalg.norm(v) - 1.0) > HERMITIAN_TOL:
                raise ValueError(f"product factor {name} is not normalized")

    @property
    def dims(self) -> BipartiteDims:
        return BipartiteDims(len(self.a), len(self.b))

    def ket(self) -> np.ndarray:
        return np.kron(self.a, self.b)


def check_hermitian(A: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] < 2:
        raise DimensionError("operator dimension must be at least 2")
    if not np.allclose(A, A.conj().T, rtol=0.0, atol=tol):
        raise NotHermitianError(
            f"matrix is not Hermitian (max deviation {np.max(np.abs(A - A.conj().T)):.3g})"
        )
    return A


def check_density(rho: np.ndarray, tol: float = DERIVED_TOL) -> np.ndarray:
    """Raise unless ``rho`` is a unit-trace positive semidefinite Hermitian matrix."""
    rho = check_hermitian(rho, tol)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix trace is {tr!r}, expected 1")
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {lo:.3g}")
    return rho


def _same_shape(A, B):
    if np.shape(A) != np.shape(B):
        raise DimensionError(f"shape mismatch: {np.shape(A)} vs {np.shape(B)}")


def hs_inner(A: np.ndarray, B: np.ndarray) -> float:
    """Hilbert-Schmidt inner product ``tr(A B)`` of two Hermitian operators."""
    _same_shape(A, B)
    # tr(AB) = sum_ij A_ij B_ji = sum_ij conj(A_ji) B_ji for Hermitian A
    return float(np.vdot(A, B).real)


def hs_norm(A: np.ndarray) -> float:
    return float(np.sqrt(max(hs_inner(A, A), 0.0)))


def hs_distance(A: np.ndarray, B: np.ndarray) -> float:
    _same_shape(A, B)
    return hs_norm(np.asarray(A) - np.asarray(B))


def product_projector(p: ProductVector) -> np.ndarray:
    psi = p.ket()
    return np.outer(psi, psi.conj())


def partial_transpose(A: np.ndarray, dims: BipartiteDims) -> np.ndarray:
    """Transpose on the second tensor factor."""
    A = np.asarray(A)
    if A.shape != (dims.D, dims.D):
        raise DimensionError(f"operator of shape {A.shape} does not act on {dims.d1}x{dims.d2}")
    T = A.reshape(dims.d1, dims.d2, dims.d1, dims.d2)
    return T.transpose(0, 3, 2, 1).reshape(dims.D, dims.D)


def eig_hermitian(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition with eigenvalues in descending order.

    Returns ``(w, V)`` where column ``V[:, k]`` belongs to ``w[k]``.
    """
    A = check_hermitian(A, DERIVED_TOL)
    w, V = np.linalg.eigh(A)
    return w[::-1].copy(), V[:, ::-1].copy()


def min_eigenvalue(A: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(A)[0])


def traceless_part(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A)
    n = A.shape[0]
    return A - (np.trace(A) / n) * np.eye(n, dtype=A.dtype)


def random_local_state(d: int, real_only: bool, rng: np.random.Generator) -> np.ndarray:
    """Unitarily (or orthogonally, when ``real_only``) invariant random unit vector."""
    if d < 2:
        raise DimensionError("local dimension must be at least 2")
    if real_only:
        v = rng.standard_normal(d).astype(complex)
    else:
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_product(dims: BipartiteDims, real_only: bool, rng: np.random.Generator) -> ProductVector:
    return ProductVector(
        random_local_state(dims.d1, real_only, rng),
        random_local_state(dims.d2, real_only, rng),
    )


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


# -- serialization ---------------------------------------------------------


def format_matrix(A: np.ndarray) -> str:
    A = np.asarray(A, dtype=complex)
    lines = [str(A.shape[0])]
    for row in A:
        lines.append(" ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix text")
    try:
        n = int(lines[0])
    except ValueError:
        raise ValueError(f"bad matrix header {lines[0]!r}") from None
    if len(lines) != n + 1:
        raise ValueError(f"expected {n} matrix rows, found {len(lines) - 1}")
    A = np.empty((n, n), dtype=complex)
    for i, ln in enumerate(lines[1:]):
        entries = ln.split()
        if len(entries) != n:
            raise ValueError(f"row {i} has {len(entries)} entries, expected {n}")
        for j, e in enumerate(entries):
            re, im = e.split(",")
            A[i, j] = complex(float(re), float(im))
    return A


def save_matrix(path, A: np.ndarray) -> None:
    Path(path).write_text(format_matrix(A))


def load_matrix(path) -> np.ndarray:
    return parse_matrix(Path(path).read_text())
