"""Independent dense-algebra oracles shared by the test modules.

Everything here is built from first principles (explicit circulant
matrices, direct summation, dense linear solves) so the FFT-based
implementations are checked against a genuinely different computation
path.
"""
import numpy as np


def dense_circulant(base):
    """Dense matrix of the 2-D circulant map with the given base plane.

    Entry ((m, n), (p, q)) = base[(m - p) mod M, (n - q) mod N]; applying it
    to a raveled plane performs 2-D circular convolution.
    """
    m, n = base.shape
    size = m * n
    mat = np.zeros((size, size))
    for i in range(size):
        mi, ni = divmod(i, n)
        for j in range(size):
            mj, nj = divmod(j, n)
            mat[i, j] = base[(mi - mj) % m, (ni - nj) % n]
    return mat


def dense_dcf_solve(x, y, c, lam):
    """Solve the dual-filter stationarity system with dense circulants.

    ((1/2 lam) * sum_d S(x_c,d) S(x_c,d)^T + I/2) u = y
    """
    d, m, n = x.shape
    size = m * n
    quad = np.zeros((size, size))
    for ch in range(d):
        s = dense_circulant(c * x[ch])
        quad += s @ s.T
    a = quad / (2.0 * lam) + 0.5 * np.eye(size)
    return np.linalg.solve(a, y.ravel()).reshape(m, n)


def correlation_matrix(u, shape):
    """Dense matrix A with A @ p.ravel() = (S(p)^T u).ravel().

    Built column by column from the circulant definition, so it stays
    independent of any Fourier identity.
    """
    m, n = shape
    size = m * n
    a = np.zeros((size, size))
    for l in range(size):
        e = np.zeros(size)
        e[l] = 1.0
        a[:, l] = dense_circulant(e.reshape(m, n)).T @ u.ravel()
    return a


def dense_p_solve(u, zc, y2, mu, lam):
    """Dense normal-equation solve of the auxiliary-variable subproblem.

    Per channel: (A^T A / (2 lam) + mu I) p = mu zc - y2, where
    A p = S(p)^T u.
    """
    k = zc.shape[0]
    m, n = u.shape
    a = correlation_matrix(u, (m, n))
    quad = a.T @ a / (2.0 * lam) + mu * np.eye(m * n)
    out = np.empty_like(zc)
    for ch in range(k):
        rhs = mu * zc[ch] - y2[ch]
        out[ch] = np.linalg.solve(quad, rhs)
    return out


def dense_u_solve(p, y, lam):
    """Dense solve of the filter subproblem on auxiliary planes p (k, M*N)."""
    k = p.shape[0]
    m, n = y.shape
    size = m * n
    quad = np.zeros((size, size))
    for ch in range(k):
        s = dense_circulant(p[ch].reshape(m, n))
        quad += s @ s.T
    a = quad / (2.0 * lam) + 0.5 * np.eye(size)
    return np.linalg.solve(a, y.ravel()).reshape(m, n)


def dense_code_solve(X, B, L, c_flat, p, Y1, y2, mu, gamma):
    """Exact minimizer of the code subproblem via a dense Kronecker solve.

    min_Z (mu/2)||X - BZ + Y1/mu||_F^2 + (mu/2)||p - Z_c + y2/mu||^2
          + gamma tr(Z L Z^T)
    """
    kk = B.shape[1]
    n = X.shape[1]
    t = (
        mu * np.kron(np.eye(n), B.T @ B)
        + mu * np.kron(np.diag(c_flat**2), np.eye(kk))
        + 2.0 * gamma * np.kron(L.T, np.eye(kk))
    )
    rhs = mu * (B.T @ (X + Y1 / mu)) + mu * ((p + y2 / mu) * c_flat[None, :])
    sol = np.linalg.solve(t, rhs.ravel(order="F"))
    return sol.reshape((kk, n), order="F")


def feasible_instance(rng, shape=(8, 8), d=4, k=2):
    """Random joint-solver instance with X exactly in the span of B.

    The coding constraint X = B Z is infeasible for generic X when k < D,
    so behavioural tests draw X = B Z_true.
    """
    m, n = shape
    b = rng.standard_normal((d, k))
    b /= np.linalg.norm(b, axis=0)
    z_true = rng.standard_normal((k, m * n))
    x = b @ z_true
    return x, b, z_true
