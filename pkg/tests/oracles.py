"""Brute-force reference implementations, used only by the tests.

Everything here favors obviousness over speed and shares no code with the
package: operators stay matrices, inner products are literal traces,
Heisenberg evolution goes through a dense matrix exponential, and the
short-time expansion is generated term by term from the amplitude
recursion.  Disagreement between these and the package is a bug in one of
the two.
"""

import numpy as np
import scipy.linalg


def random_hermitian(rng, dim, scale=1.0):
    x = rng.normal(size=(dim, dim), scale=scale)
    y = rng.normal(size=(dim, dim), scale=scale)
    m = x + 1j * y
    return 0.5 * (m + m.conj().T)


def random_real_symmetric(rng, dim, scale=1.0):
    x = rng.normal(size=(dim, dim), scale=scale)
    return 0.5 * (x + x.T)


def trace_product(A, B, nu0):
    """<A|B> = nu0 Tr(A^dag B), literally."""
    return nu0 * np.trace(A.conj().T @ B)


def thermal_trace_product(H, beta, A, B):
    """Tr(rho^(1/2) A^dag rho^(1/2) B) with rho = e^(-beta H) / Z."""
    half = scipy.linalg.expm(-0.5 * beta * H)
    Z = np.trace(scipy.linalg.expm(-beta * H))
    return np.trace(half @ A.conj().T @ half @ B) / Z


def gram_schmidt_lanczos(H, O, product, max_steps=200, halt_tol=1e-10):
    """Matrix-space Lanczos with full Gram-Schmidt at every step.

    product(A, B) is the inner product to use.  Returns (b, ops) with ops
    the orthonormal operator basis as a list of matrices.
    """

    def liouville(A):
        return H @ A - A @ H

    norm0 = np.sqrt(product(O, O).real)
    ops = [O / norm0]
    b = []
    scale0 = float(np.max(np.abs(np.linalg.eigvalsh(H))))
    for _ in range(max_steps):
        w = liouville(ops[-1])
        for _ in range(2):
            for q in ops:
                w = w - product(q, w) * q
        bn = np.sqrt(max(product(w, w).real, 0.0))
        ref = b[0] if b else 2.0 * max(scale0, 1.0)
        if bn <= halt_tol * ref:
            break
        b.append(bn)
        ops.append(w / bn)
    return np.asarray(b), ops


def dense_heisenberg(H, O, t):
    """O(t) = e^{iHt} O e^{-iHt} via dense exponentials."""
    U = scipy.linalg.expm(1j * t * H)
    return U @ O @ U.conj().T


def superoperator_heisenberg(H, O, t):
    """Same evolution through the vectorized commutator superoperator."""
    d = H.shape[0]
    L = np.kron(np.eye(d), H) - np.kron(H.T, np.eye(d))
    vec = O.ravel(order="F")
    out = scipy.linalg.expm(1j * t * L) @ vec
    return out.reshape((d, d), order="F")


def amplitude_series(b, order):
    """Taylor coefficients a[n, k] of phi_n(t) = sum_k a[n, k] t^k.

    Generated directly from d/dt phi_n = b_n phi_{n-1} - b_{n+1} phi_{n+1}
    on the finite chain b (b_{N} = 0 past the end).
    """
    b = np.asarray(b, dtype=np.float64)
    n_sites = b.size + 1
    a = np.zeros((n_sites, order + 1))
    a[0, 0] = 1.0
    for k in range(order):
        for n in range(n_sites):
            acc = 0.0
            if n >= 1:
                acc += b[n - 1] * a[n - 1, k]
            if n + 1 < n_sites:
                acc -= b[n] * a[n + 1, k]
            a[n, k + 1] = acc / (k + 1)
    return a


def complexity_series(b, order=8):
    """Taylor coefficients c[m] of K(t) = sum_m c[m] t^m (odd ones vanish)."""
    a = amplitude_series(b, order)
    n_sites = a.shape[0]
    c = np.zeros(order + 1)
    for m in range(order + 1):
        for n in range(1, n_sites):
            c[m] += n * sum(a[n, j] * a[n, m - j] for j in range(m + 1))
    return c
