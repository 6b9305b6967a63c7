"""Entanglement witnesses from a separable approximant and for UPB states.

Convention: a witness ``W`` has ``tr(W sigma) >= 0`` on every separable
``sigma`` and detects ``rho0`` when ``tr(W rho0) < 0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gilbert import seesaw_max
from .hermitian import (
    BipartiteDims,
    ProductVector,
    hs_inner,
    hs_norm,
    product_projector,
    random_product,
    save_matrix,
    traceless_part,
)
from .tiles import UpbState

VALID_TOL = 1e-10
SATURATION_TOL = 1e-9
DEGENERATE_TOL = 1e-8


@dataclass
class WitnessReport:
    W: np.ndarray = field(repr=False)
    lam: float
    saturator: ProductVector = field(repr=False)
    value_on_rho0: float
    valid: bool
    hyperplane_distance: float
    kind: str

    def metadata(self, layout: str = "", seed: int | None = None) -> dict:
        return {
            "layout": layout,
            "kind": self.kind,
            "lambda": self.lam,
            "value_on_rho0": self.value_on_rho0,
            "hyperplane_distance": self.hyperplane_distance,
            "valid": self.valid,
            "seed": seed,
        }

    def save(self, stem, layout: str = "", seed: int | None = None) -> None:
        """Write ``<stem>.txt`` (operator) and ``<stem>.json`` (metadata)."""
        stem = str(stem)
        save_matrix(stem + ".txt", self.W)
        Path(stem + ".json").write_text(
            json.dumps(self.metadata(layout, seed), sort_keys=True, indent=1) + "\n"
        )


def lambda_max(
    M: np.ndarray, dims: BipartiteDims, restarts: int, rng: np.random.Generator, iters: int = 200
) -> tuple[float, ProductVector]:
    """Largest ``<a,b|M|a,b>`` found by multi-start seesaw.

    This is a lower bound on the true product-state maximum.  Ties keep the
    earliest restart.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best, arg = -math.inf, None
    for _ in range(restarts):
        value, p = seesaw_max(M, random_product(dims, False, rng), iters)
        if value > best:
            best, arg = value, p
    return best, arg


def hyperplane_distance(W: np.ndarray, rho0: np.ndarray, saturator: ProductVector) -> float:
    """Hilbert-Schmidt distance from ``rho0`` to the hyperplane ``tr(W x) = 0``.

    The hyperplane is anchored at the saturating product state.
    """
    sigma = product_projector(saturator)
    if abs(hs_inner(W, sigma)) > SATURATION_TOL:
        raise ValueError(f"saturator misses the hyperplane by {hs_inner(W, sigma):.3g}")
    M = traceless_part(W)
    norm = hs_norm(M)
    if norm < 1e-12:
        raise ValueError("witness has no traceless part; hyperplane undefined")
    return abs(hs_inner(M, rho0 - sigma)) / norm


def gilbert_witness(
    rho0: np.ndarray, rho1: np.ndarray, dims: BipartiteDims, restarts: int, rng: np.random.Generator
) -> WitnessReport:
    """Witness ``W = rho1 - rho0 - lam * I`` from a separable approximant ``rho1``.

    ``lam`` is the smallest product-state mean of ``rho1 - rho0``, found as
    minus the largest mean of ``rho0 - rho1``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    rho1 = np.asarray(rho1, dtype=complex)
    top, sat = lambda_max(rho0 - rho1, dims, restarts, rng)
    lam = -top
    W = rho1 - rho0 - lam * np.eye(dims.D)
    value = hs_inner(W, rho0)
    if hs_norm(rho1 - rho0) < DEGENERATE_TOL:
        return WitnessReport(W, lam, sat, value, False, 0.0, "gilbert")
    dist = hyperplane_distance(W, rho0, sat)
    return WitnessReport(W, lam, sat, value, value < -VALID_TOL, dist, "gilbert")


def bgr_witness(s: UpbState, restarts: int, rng: np.random.Generator) -> WitnessReport:
    """``W = lam * I - rho0`` with ``lam`` the largest product-state mean of ``rho0``."""
    dims = s.layout.dims
    lam, sat = lambda_max(s.rho, dims, restarts, rng)
    W = lam * np.eye(dims.D) - s.rho
    value = hs_inner(W, s.rho)
    dist = hyperplane_distance(W, s.rho, sat)
    return WitnessReport(W, lam, sat, value, value < -VALID_TOL, dist, "bgr")


def audit_min(W: np.ndarray, dims: BipartiteDims, samples: int, rng: np.random.Generator,
              batch: int = 20000) -> float:
    """Smallest ``tr(W sigma)`` over random (Haar) product states."""
    T = np.asarray(W).reshape(dims.d1, dims.d2, dims.d1, dims.d2)
    lo = math.inf
    done = 0
    while done < samples:
        n = min(batch, samples - done)
        a = rng.standard_normal((n, dims.d1)) + 1j * rng.standard_normal((n, dims.d1))
        b = rng.standard_normal((n, dims.d2)) + 1j * rng.standard_normal((n, dims.d2))
        a /= np.linalg.norm(a, axis=1, keepdims=True)
        b /= np.linalg.norm(b, axis=1, keepdims=True)
        vals = np.einsum("ni,nj,ijkl,nk,nl->n", a.conj(), b.conj(), T, a, b, optimize=True).real
        lo = min(lo, float(vals.min()))
        done += n
    return lo


def negative_eigenspace_overlap(W: np.ndarray, support: np.ndarray) -> tuple[int, float]:
    """Count of negative eigenvalues of the traceless part of ``W`` and their
    overlap with the range of the projector ``support``.

    The overlap is ``tr(P_neg P_supp) / dim(P_neg)``, the mean squared cosine of
    the principal angles; it equals 1 iff the negative eigenspace lies in the
    support.
    """
    w, V = np.linalg.eigh(traceless_part(W))
    neg = V[:, w < 0]
    k = neg.shape[1]
    if k == 0:
        return 0, 0.0
    return k, float(np.trace(neg.conj().T @ support @ neg).real / k)
