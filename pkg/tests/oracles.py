"""Reference computations that share no code path with the package."""

import numpy as np
from scipy.optimize import minimize


def product_expectations(M, d1, d2, a, b):
    T = M.reshape(d1, d2, d1, d2)
    return np.einsum("ni,nj,ijkl,nk,nl->n", a.conj(), b.conj(), T, a, b, optimize=True).real


def random_product_batch(rng, n, d1, d2):
    a = rng.standard_normal((n, d1)) + 1j * rng.standard_normal((n, d1))
    b = rng.standard_normal((n, d2)) + 1j * rng.standard_normal((n, d2))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    return a, b


def sampled_product_max(M, d1, d2, samples, rng, batch=50_000, keep=10):
    """Best values over random product states plus the ``keep`` best samples."""
    best_vals = np.full(keep, -np.inf)
    best_a = np.zeros((keep, d1), complex)
    best_b = np.zeros((keep, d2), complex)
    done = 0
    while done < samples:
        n = min(batch, samples - done)
        a, b = random_product_batch(rng, n, d1, d2)
        v = product_expectations(M, d1, d2, a, b)
        vals = np.concatenate([best_vals, v])
        idx = np.argsort(vals)[-keep:]
        best_a = np.concatenate([best_a, a])[idx]
        best_b = np.concatenate([best_b, b])[idx]
        best_vals = vals[idx]
        done += n
    return best_vals, best_a, best_b


def polished_product_max(M, d1, d2, samples, rng):
    """Random sampling followed by quasi-Newton polishing of the best samples."""
    vals, A, B = sampled_product_max(M, d1, d2, samples, rng)

    def neg(x):
        a = x[:d1] + 1j * x[d1 : 2 * d1]
        b = x[2 * d1 : 2 * d1 + d2] + 1j * x[2 * d1 + d2 :]
        a = a / np.linalg.norm(a)
        b = b / np.linalg.norm(b)
        psi = np.kron(a, b)
        return -float(np.vdot(psi, M @ psi).real)

    best = vals.max()
    for a, b in zip(A, B):
        x0 = np.concatenate([a.real, a.imag, b.real, b.imag])
        res = minimize(neg, x0, method="BFGS", options={"gtol": 1e-12})
        best = max(best, -res.fun)
    return float(vals.max()), float(best)


def random_density(rng, n, rank=None):
    rank = rank or n
    G = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real
