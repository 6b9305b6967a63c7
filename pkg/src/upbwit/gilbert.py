"""Gilbert's algorithm for the Hilbert-Schmidt closest separable state.

The separable approximant ``rho1`` starts at the maximally mixed state and is
moved along the segment towards a product state whenever that decreases its
distance to the reference ``rho0``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import lapack

from .hermitian import (
    BipartiteDims,
    ProductVector,
    format_matrix,
    hs_inner,
    make_rng,
    parse_matrix,
    product_projector,
    random_product,
)

CHECKPOINT_VERSION = 1
DEGENERATE_TOL = 1e-15
MONOTONE_SLACK = 1e-14
STALL_TOL = 1e-12
# squared distance at the floating-point floor counts as an exact hit
EXACT_TOL = 1e-24


class NumericalFault(RuntimeError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class GilbertConfig:
    max_corrections: int = 4000
    max_trials: int = 10**9
    max_seconds: float = math.inf
    log_every: int = 50
    seesaw_iters: int = 200
    real_only: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.max_corrections <= 0 or self.max_trials <= 0 or self.max_seconds <= 0:
            raise ValueError("halt limits must be positive")
        if self.log_every < 1 or self.seesaw_iters < 1:
            raise ValueError("log_every and seesaw_iters must be >= 1")


@dataclass
class GilbertTrace:
    points: list[tuple[int, float]] = field(default_factory=list)
    trials_used: int = 0
    corrections_done: int = 0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["correction", "squared_distance"])
            for c, d2 in self.points:
                w.writerow([c, repr(float(d2))])

    @property
    def corrections(self) -> np.ndarray:
        return np.array([c for c, _ in self.points], dtype=float)

    @property
    def squared_distances(self) -> np.ndarray:
        return np.array([d2 for _, d2 in self.points], dtype=float)


@dataclass
class GilbertState:
    rho0: np.ndarray
    rho1: np.ndarray
    dims: BipartiteDims
    rng: np.random.Generator
    trace: GilbertTrace = field(default_factory=GilbertTrace)
    halt_reason: str = ""

    @property
    def squared_distance(self) -> float:
        diff = self.rho0 - self.rho1
        return hs_inner(diff, diff)

    @property
    def distance(self) -> float:
        return math.sqrt(max(self.squared_distance, 0.0))


def seesaw_max(
    M: np.ndarray, start: ProductVector, iters: int = 200, real: bool = False
) -> tuple[float, ProductVector]:
    """Alternating maximization of ``<a,b|M|a,b>`` over product vectors.

    With ``b`` fixed, the best ``a`` is the top eigenvector of the reduced
    operator on the first factor, and vice versa.  The returned value never
    decreases across half-steps.
    """
    d1, d2 = len(start.a), len(start.b)
    # X[(i,k),(j,l)] = M[(i,j),(k,l)], so both reduced operators are mat-vecs
    X = np.asarray(M).reshape(d1, d2, d1, d2).transpose(0, 2, 1, 3).reshape(d1 * d1, d2 * d2)
    if real:
        X = np.ascontiguousarray(X.real)
        a, b = start.a.real, start.b.real
        eigh = lapack.dsyevd
    else:
        X = np.ascontiguousarray(X)
        a, b = start.a, start.b
        eigh = lapack.zheevd
    value = -math.inf
    for _ in range(iters):
        OA = (X @ np.outer(b.conj(), b).ravel()).reshape(d1, d1)
        w, V, _ = eigh(OA)
        a = V[:, -1]
        OB = (np.outer(a.conj(), a).ravel() @ X).reshape(d2, d2)
        w, V, _ = eigh(OB)
        b = V[:, -1]
        new = float(w[-1])
        if new - value < STALL_TOL:
            value = max(value, new)
            break
        value = new
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return value, ProductVector(a.astype(complex), b.astype(complex))


def propose_trial(state: GilbertState, cfg: GilbertConfig) -> ProductVector | None:
    """One trial: random start, local maximization, acceptance test.

    Always consumes one trial from the budget.
    """
    state.trace.trials_used += 1
    start = random_product(state.dims, cfg.real_only, state.rng)
    M = state.rho0 - state.rho1
    value, p = seesaw_max(M, start, cfg.seesaw_iters, real=cfg.real_only)
    # tr[(rho0 - rho1)(rho2 - rho1)] with rho2 = |p><p|
    if value - hs_inner(M, state.rho1) <= 0:
        return None
    return p


def line_minimize(
    rho0: np.ndarray, rho1: np.ndarray, rho2: np.ndarray
) -> tuple[float, np.ndarray] | None:
    """Closest point to ``rho0`` on the segment from ``rho1`` to ``rho2``.

    Returns ``None`` for a degenerate segment.
    """
    step = rho2 - rho1
    den = hs_inner(step, step)
    if den < DEGENERATE_TOL:
        return None
    t = hs_inner(rho0 - rho1, step) / den
    t = min(max(t, 0.0), 1.0)
    return t, rho1 + t * step


def initial_state(rho0: np.ndarray, dims: BipartiteDims, seed: int) -> GilbertState:
    D = dims.D
    rho1 = np.eye(D, dtype=complex) / D
    return GilbertState(np.asarray(rho0, dtype=complex), rho1, dims, make_rng(seed))


def run(
    rho0: np.ndarray,
    dims: BipartiteDims,
    cfg: GilbertConfig,
    state: GilbertState | None = None,
    on_log=None,
) -> GilbertState:
    """Run (or resume) the Gilbert loop until a halt condition triggers.

    ``cfg.max_corrections`` and ``cfg.max_trials`` are totals, so a resumed
    state only performs the remaining work.
    """
    if state is None:
        state = initial_state(rho0, dims, cfg.seed)
    tr = state.trace
    # a trailing off-grid point only marks where the previous run halted
    if tr.points and tr.points[-1][0] % cfg.log_every != 0:
        tr.points.pop()
    d2 = state.squared_distance
    t0 = time.monotonic()
    while True:
        if d2 <= EXACT_TOL:
            state.halt_reason = "exact"
            break
        if tr.corrections_done >= cfg.max_corrections:
            state.halt_reason = "corrections"
            break
        if tr.trials_used >= cfg.max_trials:
            state.halt_reason = "trials"
            break
        if time.monotonic() - t0 >= cfg.max_seconds:
            state.halt_reason = "seconds"
            break
        p = propose_trial(state, cfg)
        if p is None:
            continue
        step = line_minimize(state.rho0, state.rho1, product_projector(p))
        if step is None:
            continue
        _, new_rho1 = step
        new_d2 = hs_inner(state.rho0 - new_rho1, state.rho0 - new_rho1)
        if new_d2 > d2 + MONOTONE_SLACK:
            raise NumericalFault(f"distance increased from {d2!r} to {new_d2!r}")
        state.rho1 = new_rho1
        d2 = new_d2
        tr.corrections_done += 1
        if tr.corrections_done % cfg.log_every == 0:
            tr.points.append((tr.corrections_done, d2))
            if on_log is not None:
                on_log(state)
    if not tr.points or tr.points[-1][0] != tr.corrections_done:
        tr.points.append((tr.corrections_done, d2))
    return state


# -- checkpoints -----------------------------------------------------------


def content_hash(A: np.ndarray) -> str:
    return hashlib.sha256(format_matrix(A).encode()).hexdigest()


def checkpoint_save(state: GilbertState, path, layout: str = "") -> None:
    header = {
        "version": CHECKPOINT_VERSION,
        "layout": layout,
        "d1": state.dims.d1,
        "d2": state.dims.d2,
        "rho0_sha256": content_hash(state.rho0),
        "corrections": state.trace.corrections_done,
        "trials": state.trace.trials_used,
        "halt_reason": state.halt_reason,
        "rng": state.rng.bit_generator.state,
        "trace": [[c, repr(float(d2))] for c, d2 in state.trace.points],
    }
    text = "# upbwit gilbert checkpoint\n" + json.dumps(header, sort_keys=True) + "\n"
    text += format_matrix(state.rho1)
    Path(path).write_text(text)


def checkpoint_load(path, rho0: np.ndarray) -> tuple[GilbertState, str]:
    """Load a checkpoint written for ``rho0``; returns the state and layout name."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(lines) < 3 or not lines[0].startswith("# upbwit gilbert checkpoint"):
        raise CheckpointError(f"{path}: not a gilbert checkpoint")
    try:
        header = json.loads(lines[1])
        if header["version"] != CHECKPOINT_VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {header['version']}")
        rho1 = parse_matrix("\n".join(lines[2:]))
        dims = BipartiteDims(int(header["d1"]), int(header["d2"]))
        rng = np.random.Generator(np.random.PCG64())
        rng.bit_generator.state = header["rng"]
        trace = GilbertTrace(
            points=[(int(c), float(d2)) for c, d2 in header["trace"]],
            trials_used=int(header["trials"]),
            corrections_done=int(header["corrections"]),
        )
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: malformed checkpoint ({exc})") from exc
    rho0 = np.asarray(rho0, dtype=complex)
    if header["rho0_sha256"] != content_hash(rho0):
        raise CheckpointError(f"{path}: checkpoint belongs to a different reference state")
    if rho1.shape != (dims.D, dims.D):
        raise CheckpointError(f"{path}: rho1 shape {rho1.shape} does not match {dims.d1}x{dims.d2}")
    state = GilbertState(rho0, rho1, dims, rng, trace, header.get("halt_reason", ""))
    return state, header.get("layout", "")
